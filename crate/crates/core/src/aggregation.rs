//! Final rankings from benchmark scores.
//!
//! * `sigma-l`: sum the unit matrices of every task (or task-instance) and
//!   rank by row sums.
//! * `sigma-2l`: rank each task from its instance matrices, then Borda-count
//!   the per-task rankings.
//! * `mean`: average the available scores, ignoring missing cells.
//!
//! All ties resolve by ascending system id.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::matrix::AccumulatedMatrix;
use crate::model::{Dataset, Ranking, ScoreTable, ScoreTensor, SystemId};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "sigma-l")]
    SigmaL,
    #[serde(rename = "sigma-2l")]
    Sigma2L,
    #[serde(rename = "mean")]
    Mean,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::SigmaL, Method::Sigma2L, Method::Mean];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::SigmaL => "sigma-l",
            Method::Sigma2L => "sigma-2l",
            Method::Mean => "mean",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigma-l" | "sigma_l" | "l" => Ok(Method::SigmaL),
            "sigma-2l" | "sigma_2l" | "2l" => Ok(Method::Sigma2L),
            "mean" | "sigma-mu" | "mu" => Ok(Method::Mean),
            other => Err(validation(format!("unknown method {other:?}"))),
        }
    }
}

/// Per-system totals behind an aggregated ranking.
#[derive(Clone, Debug, PartialEq)]
pub enum Scores {
    /// Row sums of the accumulated matrix (higher is better).
    Borda(Vec<f64>),
    /// Sums of per-task rank positions (lower is better).
    RankSums(Vec<u64>),
    /// Mean available score; `None` for systems with no score at all.
    Means(Vec<Option<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub ranking: Ranking,
    pub scores: Scores,
    /// Systems with no present score anywhere in the input.
    pub unobserved: Vec<SystemId>,
}

fn sort_descending<S: PartialOrd>(scores: &[S]) -> Ranking {
    Ranking::sorted_by(scores.len(), |a, b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal))
}

/// Borda count on an accumulated matrix: rank by accumulated wins.
pub fn borda_from_matrix<S: Scalar>(acc: &AccumulatedMatrix<S>) -> Ranking {
    sort_descending(&acc.borda_scores())
}

/// Borda count on complete rankings: rank by summed positions, ascending.
pub fn borda_on_rankings(rankings: &[Ranking]) -> Result<Ranking> {
    Ok(rank_sums(rankings)?.0)
}

fn rank_sums(rankings: &[Ranking]) -> Result<(Ranking, Vec<u64>)> {
    let first = rankings.first().ok_or_else(|| validation("no rankings to aggregate"))?;
    let n = first.len();
    if rankings.iter().any(|r| r.len() != n) {
        return Err(validation("rankings over different universes"));
    }
    let mut sums = vec![0u64; n];
    for r in rankings {
        for (sum, &rank) in sums.iter_mut().zip(r.ranks()) {
            *sum += rank as u64;
        }
    }
    let ranking = Ranking::sorted_by(n, |a, b| sums[a].cmp(&sums[b]));
    Ok((ranking, sums))
}

fn unobserved_in_table(table: &ScoreTable) -> Vec<SystemId> {
    (0..table.n_systems()).filter(|&n| table.system_scores(n).iter().all(Option::is_none)).map(SystemId).collect()
}

fn unobserved_in_tensor(tensor: &ScoreTensor) -> Vec<SystemId> {
    (0..tensor.n_systems())
        .filter(|&n| (0..tensor.n_tasks()).all(|t| !tensor.pair_observed(n, t)))
        .map(SystemId)
        .collect()
}

fn borda_aggregate<S: Scalar>(acc: &AccumulatedMatrix<S>, unobserved: Vec<SystemId>) -> Aggregate {
    let scores = acc.borda_scores();
    Aggregate {
        method: Method::SigmaL,
        ranking: sort_descending(&scores),
        scores: Scores::Borda(scores.iter().map(Scalar::to_f64).collect()),
        unobserved,
    }
}

/// Task-level accumulation: one unit per task.
pub fn task_accumulation<S: Scalar>(table: &ScoreTable) -> Result<AccumulatedMatrix<S>> {
    let mut acc = AccumulatedMatrix::new(table.n_systems());
    for t in 0..table.n_tasks() {
        acc.add_partial(&table.task_partial(t)?)?;
    }
    Ok(acc)
}

/// Instance-level accumulation: one unit per `(task, instance)`.
pub fn instance_accumulation<S: Scalar>(tensor: &ScoreTensor) -> Result<AccumulatedMatrix<S>> {
    let mut acc = AccumulatedMatrix::new(tensor.n_systems());
    for t in 0..tensor.n_tasks() {
        add_task_instances(&mut acc, tensor, t)?;
    }
    Ok(acc)
}

fn add_task_instances<S: Scalar>(acc: &mut AccumulatedMatrix<S>, tensor: &ScoreTensor, task: usize) -> Result<()> {
    for k in 0..tensor.instances(task) {
        acc.add_partial(&tensor.instance_partial(task, k)?)?;
    }
    Ok(())
}

pub fn sigma_l_task<S: Scalar>(table: &ScoreTable) -> Result<Aggregate> {
    Ok(borda_aggregate(&task_accumulation::<S>(table)?, unobserved_in_table(table)))
}

pub fn sigma_l_instance<S: Scalar>(tensor: &ScoreTensor) -> Result<Aggregate> {
    Ok(borda_aggregate(&instance_accumulation::<S>(tensor)?, unobserved_in_tensor(tensor)))
}

/// Two-level aggregation: a Borda ranking per task, then Borda over tasks.
///
/// Tasks without instances carry no information and are skipped.
pub fn sigma_2l<S: Scalar>(tensor: &ScoreTensor) -> Result<Aggregate> {
    let n = tensor.n_systems();
    let mut per_task = Vec::with_capacity(tensor.n_tasks());
    for t in 0..tensor.n_tasks() {
        if tensor.instances(t) == 0 {
            continue;
        }
        let mut acc = AccumulatedMatrix::<S>::new(n);
        add_task_instances(&mut acc, tensor, t)?;
        per_task.push(borda_from_matrix(&acc));
    }
    let (ranking, sums) = if per_task.is_empty() { (Ranking::identity(n), vec![0; n]) } else { rank_sums(&per_task)? };
    Ok(Aggregate {
        method: Method::Sigma2L,
        ranking,
        scores: Scores::RankSums(sums),
        unobserved: unobserved_in_tensor(tensor),
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn mean_aggregate(means: Vec<Option<f64>>) -> Aggregate {
    let ranking = Ranking::sorted_by(means.len(), |a, b| match (means[a], means[b]) {
        (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(Ordering::Equal),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    });
    let unobserved = means.iter().enumerate().filter(|(_, m)| m.is_none()).map(|(n, _)| SystemId(n)).collect();
    Aggregate { method: Method::Mean, ranking, scores: Scores::Means(means), unobserved }
}

/// Mean of each system's present task scores; systems with none sink to the bottom.
pub fn sigma_mu_task(table: &ScoreTable) -> Aggregate {
    let means = (0..table.n_systems()).map(|n| mean(table.system_scores(n).iter().flatten().copied())).collect();
    mean_aggregate(means)
}

/// Mean over tasks of the per-task instance mean, over present cells only.
pub fn sigma_mu_instance(tensor: &ScoreTensor) -> Aggregate {
    let means = (0..tensor.n_systems())
        .map(|n| {
            mean(
                (0..tensor.n_tasks())
                    .filter_map(|t| mean((0..tensor.instances(t)).filter_map(|k| tensor.get(n, t, k)))),
            )
        })
        .collect();
    mean_aggregate(means)
}

/// Runs `method` at the granularity of `data`.
pub fn aggregate<S: Scalar>(method: Method, data: &Dataset) -> Result<Aggregate> {
    match (method, data) {
        (Method::SigmaL, Dataset::Task(t)) => sigma_l_task::<S>(t),
        (Method::SigmaL, Dataset::Instance(t)) => sigma_l_instance::<S>(t),
        (Method::Sigma2L, Dataset::Instance(t)) => sigma_2l::<S>(t),
        (Method::Sigma2L, Dataset::Task(_)) => Err(validation("sigma-2l needs instance-level scores")),
        (Method::Mean, Dataset::Task(t)) => Ok(sigma_mu_task(t)),
        (Method::Mean, Dataset::Instance(t)) => Ok(sigma_mu_instance(t)),
    }
}
