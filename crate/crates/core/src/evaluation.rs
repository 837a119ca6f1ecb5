//! Ranking comparison metrics and the robustness / agreement experiments.
//!
//! Every repeat of an experiment draws its randomness from a seed derived
//! from `(base_seed, eta index, repeat)`. Each repeat also relabels the
//! systems by a random permutation before aggregating, so that ties (which
//! the aggregators break by ascending id) are broken at random across
//! repeats instead of always favouring low ids. The reference ranking of a
//! repeat is computed under the same relabeling, so `eta = 0` still yields
//! `tau = 1` exactly.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aggregation::{aggregate, Method};
use crate::confidence::{confidence_report, Sidedness};
use crate::error::{validation, Result};
use crate::matrix::AccumulatedMatrix;
use crate::model::{Dataset, Level, Ranking};
use crate::synthetic::{corrupt_missing, generate_gumbel, GumbelConfig};

/// Kendall tau-a between two rankings of the same systems.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<f64> {
    let n = a.len();
    if n != b.len() {
        return Err(validation("rankings over different universes"));
    }
    if n < 2 {
        return Err(validation("kendall tau needs at least two systems"));
    }
    // Positions in `b` listed in `a`'s order; discordant pairs are inversions.
    let mut seq: Vec<usize> = a.ordering().iter().map(|&id| b.rank_of(id)).collect();
    let mut buf = vec![0; n];
    let discordant = count_inversions(&mut seq, &mut buf);
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((pairs - 2.0 * discordant as f64) / pairs)
}

fn count_inversions(seq: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(left, bl) + count_inversions(right, br)
    };
    let (mut i, mut j, mut out) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            buf[out] = seq[i];
            i += 1;
        } else {
            buf[out] = seq[j];
            count += (mid - i) as u64;
            j += 1;
        }
        out += 1;
    }
    buf[out..out + mid - i].copy_from_slice(&seq[i..mid]);
    out += mid - i;
    buf[out..out + n - j].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    count
}

/// True iff the first `k` systems of both rankings form the same set.
pub fn topk_same(a: &Ranking, b: &Ranking, k: usize) -> Result<bool> {
    let n = a.len();
    if n != b.len() {
        return Err(validation("rankings over different universes"));
    }
    if k == 0 || k > n {
        return Err(validation(format!("top-k needs 1 <= k <= {n}, got {k}")));
    }
    let mut top_a: Vec<_> = a.ordering()[..k].to_vec();
    let mut top_b: Vec<_> = b.ordering()[..k].to_vec();
    top_a.sort_unstable();
    top_b.sort_unstable();
    Ok(top_a == top_b)
}

/// SplitMix64 finaliser.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of one repeat, a pure function of its coordinates.
pub fn derive_seed(base: u64, eta_index: usize, repeat: usize) -> u64 {
    mix(mix(mix(base) ^ eta_index as u64) ^ repeat as u64)
}

fn check_methods(data: &Dataset, methods: &[Method]) -> Result<()> {
    if methods.is_empty() {
        return Err(validation("no methods requested"));
    }
    if data.level() == Level::Task && methods.contains(&Method::Sigma2L) {
        return Err(validation("sigma-2l needs instance-level scores"));
    }
    if data.n_systems() < 2 {
        return Err(validation("experiments need at least two systems"));
    }
    Ok(())
}

fn check_etas(etas: &[f64]) -> Result<()> {
    match etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        Some(e) => Err(validation(format!("eta must lie in [0, 1], got {e}"))),
        None => Ok(()),
    }
}

/// Rankings produced in one repeat: per method, (full data, corrupted data).
struct Trial {
    eta_index: usize,
    repeat: usize,
    rankings: Vec<(Ranking, Ranking)>,
}

fn run_trials(data: &Dataset, methods: &[Method], etas: &[f64], repeats: usize, base_seed: u64) -> Result<Vec<Trial>> {
    check_methods(data, methods)?;
    check_etas(etas)?;
    let jobs: Vec<(usize, usize)> = (0..etas.len()).flat_map(|e| (0..repeats).map(move |r| (e, r))).collect();
    jobs.into_par_iter()
        .map(|(eta_index, repeat)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base_seed, eta_index, repeat));
            let mut relabel: Vec<usize> = (0..data.n_systems()).collect();
            relabel.shuffle(&mut rng);
            let corruption_seed = rng.next_u64();
            let full = data.relabel_systems(&relabel)?;
            let corrupted = corrupt_missing(&full, etas[eta_index], corruption_seed)?;
            let rankings = methods
                .iter()
                .map(|&m| Ok((aggregate::<f64>(m, &full)?.ranking, aggregate::<f64>(m, &corrupted)?.ranking)))
                .collect::<Result<_>>()?;
            Ok(Trial { eta_index, repeat, rankings })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessSample {
    pub eta: f64,
    pub repeat: usize,
    pub method: Method,
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaSummary {
    pub eta: f64,
    pub method: Method,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for a single repeat.
    pub std: f64,
    pub repeats: usize,
}

impl EtaSummary {
    pub fn standard_error(&self) -> f64 {
        self.std / (self.repeats as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessCurve {
    pub samples: Vec<RobustnessSample>,
    pub summary: Vec<EtaSummary>,
}

impl RobustnessCurve {
    pub fn summary_for(&self, method: Method, eta: f64) -> Option<&EtaSummary> {
        self.summary.iter().find(|s| s.method == method && s.eta == eta)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Kendall tau between each method's ranking before and after removing a
/// share `eta` of the data, for every `eta` and repeat.
pub fn robustness_curve(
    data: &Dataset,
    methods: &[Method],
    etas: &[f64],
    repeats: usize,
    base_seed: u64,
) -> Result<RobustnessCurve> {
    let trials = run_trials(data, methods, etas, repeats, base_seed)?;
    let mut samples = Vec::with_capacity(trials.len() * methods.len());
    for trial in &trials {
        for (&method, (full, corrupted)) in methods.iter().zip(&trial.rankings) {
            samples.push(RobustnessSample {
                eta: etas[trial.eta_index],
                repeat: trial.repeat,
                method,
                tau: kendall_tau(full, corrupted)?,
            });
        }
    }
    let mut summary = Vec::new();
    for &eta in etas {
        for &method in methods {
            let taus: Vec<f64> = samples.iter().filter(|s| s.eta == eta && s.method == method).map(|s| s.tau).collect();
            if taus.is_empty() {
                continue;
            }
            let (mean, std) = mean_std(&taus);
            summary.push(EtaSummary { eta, method, mean, std, repeats: taus.len() });
        }
    }
    Ok(RobustnessCurve { samples, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementRow {
    pub eta: f64,
    pub repeat: usize,
    pub method_a: Method,
    pub method_b: Method,
    pub tau: f64,
    pub top1_same: bool,
    pub top3_same: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementSummary {
    pub eta: f64,
    pub method_a: Method,
    pub method_b: Method,
    pub mean_tau: f64,
    pub top1_rate: f64,
    pub top3_rate: f64,
    pub repeats: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Agreement {
    pub rows: Vec<AgreementRow>,
    pub summary: Vec<AgreementSummary>,
}

/// Compares every pair of methods (by list position) on the same corrupted
/// data. Top-3 falls back to the whole ranking when fewer than three systems.
pub fn agreement_analysis(
    data: &Dataset,
    methods: &[Method],
    etas: &[f64],
    repeats: usize,
    base_seed: u64,
) -> Result<Agreement> {
    let trials = run_trials(data, methods, etas, repeats, base_seed)?;
    let top3 = data.n_systems().min(3);
    let mut rows = Vec::new();
    for trial in &trials {
        for a in 0..methods.len() {
            for b in a + 1..methods.len() {
                let (ra, rb) = (&trial.rankings[a].1, &trial.rankings[b].1);
                rows.push(AgreementRow {
                    eta: etas[trial.eta_index],
                    repeat: trial.repeat,
                    method_a: methods[a],
                    method_b: methods[b],
                    tau: kendall_tau(ra, rb)?,
                    top1_same: topk_same(ra, rb, 1)?,
                    top3_same: topk_same(ra, rb, top3)?,
                });
            }
        }
    }
    let mut summary = Vec::new();
    for &eta in etas {
        for a in 0..methods.len() {
            for b in a + 1..methods.len() {
                let group: Vec<&AgreementRow> = rows
                    .iter()
                    .filter(|r| r.eta == eta && r.method_a == methods[a] && r.method_b == methods[b])
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let count = group.len() as f64;
                let rate = |f: fn(&AgreementRow) -> bool| group.iter().filter(|r| f(r)).count() as f64 / count;
                summary.push(AgreementSummary {
                    eta,
                    method_a: methods[a],
                    method_b: methods[b],
                    mean_tau: group.iter().map(|r| r.tau).sum::<f64>() / count,
                    top1_rate: rate(|r| r.top1_same),
                    top3_rate: rate(|r| r.top3_same),
                    repeats: group.len(),
                });
            }
        }
    }
    Ok(Agreement { rows, summary })
}

/// Number of system pairs whose interval excludes 1/2 after the first
/// `m` instances, for each `m` in `units`, on one synthetic Gumbel task.
pub fn decided_pairs_curve(cfg: &GumbelConfig, units: &[usize], delta: f64) -> Result<Vec<(usize, usize)>> {
    let max_units = units.iter().copied().max().unwrap_or(0);
    let tensor = generate_gumbel(&GumbelConfig { tasks: 1, instances: max_units.max(1), ..cfg.clone() })?;
    let mut sorted: Vec<usize> = units.to_vec();
    sorted.sort_unstable();
    let mut acc = AccumulatedMatrix::<f64>::new(cfg.systems);
    let mut added = 0;
    let mut out = Vec::with_capacity(sorted.len());
    for m in sorted {
        while added < m {
            acc.add_partial(&tensor.instance_partial(0, added)?)?;
            added += 1;
        }
        let decided = if m == 0 { 0 } else { confidence_report(&acc, delta, Sidedness::OneSided)?.decided() };
        out.push((m, decided));
    }
    Ok(out)
}
