//! Ranking systems from multi-task benchmarks with missing evaluations.
//!
//! Every task (or task instance) induces a partial ranking of the systems it
//! scored. Each partial ranking is turned into a matrix of pairwise win
//! probabilities averaged over all of its compatible completions, the
//! matrices are summed, and the systems are ranked by Borda count. The
//! pairwise pipeline is generic over [`Scalar`], so it runs in `f64`, `f32`
//! or exactly over big rationals.
//!
//! ```
//! use borda_impute::{sigma_l_task, ScoreTable};
//!
//! let table = ScoreTable::from_rows(vec![
//!     vec![Some(0.9), Some(0.7)],
//!     vec![Some(0.8), None],
//!     vec![None, Some(0.6)],
//! ])
//! .unwrap();
//! let agg = sigma_l_task::<f64>(&table).unwrap();
//! assert_eq!(agg.ranking.ordering_indices(), vec![0, 1, 2]);
//! ```

pub mod aggregation;
pub mod combinatorics;
pub mod confidence;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod matrix;
pub mod model;
pub mod scalar;
pub mod synthetic;

pub use aggregation::{
    aggregate, borda_from_matrix, borda_on_rankings, instance_accumulation, sigma_2l, sigma_l_instance, sigma_l_task,
    sigma_mu_instance, sigma_mu_task, task_accumulation, Aggregate, Method, Scores,
};
pub use combinatorics::{
    enumerate_compatible, p_closed_form, p_closed_form_f64, p_unobserved_beats_observed, sample_compatible,
    shuffle_count, total_compatible, variation_count, PTable, PValue,
};
pub use confidence::{
    confidence_report, hoeffding_halfwidth, significance_heatmap, ConfidenceReport, Sidedness, Verdict,
};
pub use error::{Error, Result};
pub use evaluation::{agreement_analysis, kendall_tau, robustness_curve, topk_same};
pub use matrix::{accumulate, matrix_from_partial, matrix_from_partial_oracle, AccumulatedMatrix, PairwiseMatrix};
pub use model::{Dataset, Level, PartialRanking, Ranking, ScoreTable, ScoreTensor, SystemId};
pub use scalar::Scalar;
pub use synthetic::{corrupt_missing_instance, corrupt_missing_task, generate_gumbel, scale_task, GumbelConfig};

pub use num_rational::BigRational;

/// Pairwise matrix in double precision.
pub type Matrix = PairwiseMatrix<f64>;
/// Pairwise matrix over exact rationals.
pub type ExactMatrix = PairwiseMatrix<BigRational>;
/// Accumulation in double precision.
pub type Accumulated = AccumulatedMatrix<f64>;
/// Accumulation over exact rationals.
pub type ExactAccumulated = AccumulatedMatrix<BigRational>;
