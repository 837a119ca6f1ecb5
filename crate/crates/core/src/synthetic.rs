//! Synthetic benchmarks and corruptions.
//!
//! Scores follow `s[n, t, k] = phi * n + G` with `G` a Gumbel(0, beta) draw,
//! independent across systems, tasks and instances. With `phi > 0` higher ids
//! are better on average; `phi = 0` makes every system identical in law.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::model::{Dataset, ScoreTable, ScoreTensor};

fn default_beta() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GumbelConfig {
    pub systems: usize,
    pub tasks: usize,
    pub instances: usize,
    pub phi: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GumbelConfig {
    pub fn new(systems: usize, tasks: usize, instances: usize, phi: f64, seed: u64) -> Self {
        Self { systems, tasks, instances, phi, beta: 1.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.systems == 0 || self.tasks == 0 || self.instances == 0 {
            return Err(validation("systems, tasks and instances must all be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return Err(validation(format!("phi must lie in [0, 1], got {}", self.phi)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(validation(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Inverse-CDF draw from Gumbel(`location`, `scale`).
pub fn sample_gumbel<R: Rng + ?Sized>(rng: &mut R, location: f64, scale: f64) -> f64 {
    // Open interval: 0 and 1 would give infinities.
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    location - scale * (-u.ln()).ln()
}

pub fn generate_gumbel(cfg: &GumbelConfig) -> Result<ScoreTensor> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tensor = ScoreTensor::new(cfg.systems, vec![cfg.instances; cfg.tasks]);
    for n in 0..cfg.systems {
        let centre = cfg.phi * n as f64;
        for t in 0..cfg.tasks {
            for k in 0..cfg.instances {
                tensor.set(n, t, k, Some(sample_gumbel(&mut rng, centre, cfg.beta)));
            }
        }
    }
    Ok(tensor)
}

/// `round(eta * cells)`, clamped to `[0, cells]`.
pub fn removal_count(eta: f64, cells: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(validation(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(((eta * cells as f64).round() as usize).min(cells))
}

/// Indices of `count` distinct `(system, task)` cells, as `system * T + task`.
fn pick_cells(n_systems: usize, n_tasks: usize, eta: f64, seed: u64) -> Result<Vec<usize>> {
    let cells = n_systems * n_tasks;
    let count = removal_count(eta, cells)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, cells, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Blanks `round(eta * N * T)` distinct cells chosen uniformly at random.
pub fn corrupt_missing_task(table: &ScoreTable, eta: f64, seed: u64) -> Result<ScoreTable> {
    let mut out = table.clone();
    for cell in pick_cells(table.n_systems(), table.n_tasks(), eta, seed)? {
        out.set(cell / table.n_tasks(), cell % table.n_tasks(), None);
    }
    Ok(out)
}

/// Blanks every instance of `round(eta * N * T)` distinct `(system, task)` pairs.
pub fn corrupt_missing_instance(tensor: &ScoreTensor, eta: f64, seed: u64) -> Result<ScoreTensor> {
    let mut out = tensor.clone();
    let t = tensor.n_tasks();
    for cell in pick_cells(tensor.n_systems(), t, eta, seed)? {
        out.remove_pair(cell / t, cell % t);
    }
    Ok(out)
}

/// Applies the removal rule matching the data's granularity.
pub fn corrupt_missing(data: &Dataset, eta: f64, seed: u64) -> Result<Dataset> {
    Ok(match data {
        Dataset::Task(t) => Dataset::Task(corrupt_missing_task(t, eta, seed)?),
        Dataset::Instance(t) => Dataset::Instance(corrupt_missing_instance(t, eta, seed)?),
    })
}

/// Multiplies every present score of `task` by `lambda`.
pub fn scale_task(data: &Dataset, task: usize, lambda: f64) -> Result<Dataset> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(validation(format!("lambda must be positive, got {lambda}")));
    }
    if task >= data.n_tasks() {
        return Err(validation(format!("task {task} out of range for {} tasks", data.n_tasks())));
    }
    let mut out = data.clone();
    out.map_task(task, |v| v * lambda);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{sigma_l_task, sigma_mu_task};

    #[test]
    fn generation_is_deterministic() {
        let cfg = GumbelConfig::new(5, 3, 4, 0.5, 42);
        let a = generate_gumbel(&cfg).unwrap();
        let b = generate_gumbel(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_gumbel(&GumbelConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.present_cells(), 60);
    }

    #[test]
    fn config_validation() {
        assert!(GumbelConfig::new(0, 1, 1, 0.5, 0).validate().is_err());
        assert!(GumbelConfig::new(2, 1, 1, 1.5, 0).validate().is_err());
        assert!(GumbelConfig { beta: 0.0, ..GumbelConfig::new(2, 1, 1, 0.5, 0) }.validate().is_err());
    }

    #[test]
    fn gumbel_difference_mean_is_phi() {
        // The difference of two unit-scale Gumbels with centres phi apart is
        // logistic with mean phi and variance pi^2/3.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        let phi = 0.7;
        let diffs: Vec<f64> =
            (0..draws).map(|_| sample_gumbel(&mut rng, phi, 1.0) - sample_gumbel(&mut rng, 0.0, 1.0)).collect();
        let mean = diffs.iter().sum::<f64>() / draws as f64;
        let se = (std::f64::consts::PI.powi(2) / 3.0 / draws as f64).sqrt();
        assert!((mean - phi).abs() < 3.0 * se, "mean {mean}");
        let wins = diffs.iter().filter(|d| **d > 0.0).count() as f64 / draws as f64;
        assert!(wins >= 0.5);
    }

    #[test]
    fn task_removal_counts() {
        let table = ScoreTable::from_complete(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(corrupt_missing_task(&table, 0.0, 1).unwrap(), table);
        assert_eq!(corrupt_missing_task(&table, 1.0, 1).unwrap().present_cells(), 0);
        assert_eq!(corrupt_missing_task(&table, 0.5, 1).unwrap().present_cells(), 2);
        assert!(corrupt_missing_task(&table, 1.5, 1).is_err());
        assert_eq!(corrupt_missing_task(&table, 0.5, 9).unwrap(), corrupt_missing_task(&table, 0.5, 9).unwrap());
    }

    #[test]
    fn instance_removal_blanks_whole_pairs() {
        let tensor = generate_gumbel(&GumbelConfig::new(4, 4, 3, 0.2, 1)).unwrap();
        let out = corrupt_missing_instance(&tensor, 0.25, 2).unwrap();
        let removed: Vec<(usize, usize)> =
            (0..4).flat_map(|n| (0..4).map(move |t| (n, t))).filter(|&(n, t)| !out.pair_observed(n, t)).collect();
        assert_eq!(removed.len(), 4);
        for (n, t) in removed {
            for k in 0..3 {
                assert!(out.instance_partial(t, k).unwrap().positions()[n].is_none());
            }
        }
        assert_eq!(out.present_cells(), (16 - 4) * 3);
        assert_eq!(corrupt_missing_instance(&tensor, 0.0, 2).unwrap(), tensor);
    }

    #[test]
    fn removal_rounding() {
        assert_eq!(removal_count(0.45, 40).unwrap(), 18);
        assert_eq!(removal_count(0.125, 4).unwrap(), 1);
        assert_eq!(removal_count(1.0, 7).unwrap(), 7);
    }

    #[test]
    fn scaling() {
        let table = ScoreTable::from_complete(&[vec![1.0, 0.0], vec![0.9, 5.0]]).unwrap();
        let data = Dataset::Task(table.clone());
        assert_eq!(scale_task(&data, 0, 1.0).unwrap(), data);
        assert!(scale_task(&data, 0, 0.0).is_err());
        assert!(scale_task(&data, 0, -2.0).is_err());
        assert!(scale_task(&data, 5, 2.0).is_err());

        let Dataset::Task(scaled) = scale_task(&data, 0, 100.0).unwrap() else { unreachable!() };
        assert_eq!(scaled.get(0, 0), Some(100.0));
        assert_eq!(scaled.get(1, 1), Some(5.0));
        // means: 0.5 vs 2.95 before, 50 vs 47.5 after
        assert_eq!(sigma_mu_task(&table).ranking.ordering_indices(), vec![1, 0]);
        assert_eq!(sigma_mu_task(&scaled).ranking.ordering_indices(), vec![0, 1]);
        assert_eq!(sigma_l_task::<f64>(&table).unwrap().ranking, sigma_l_task::<f64>(&scaled).unwrap().ranking);
    }

    #[test]
    fn huge_scaling_keeps_partials() {
        let tensor = generate_gumbel(&GumbelConfig::new(6, 2, 5, 0.3, 8)).unwrap();
        let Dataset::Instance(scaled) = scale_task(&Dataset::Instance(tensor.clone()), 1, 1000.0).unwrap() else {
            unreachable!()
        };
        for t in 0..2 {
            for k in 0..5 {
                assert_eq!(tensor.instance_partial(t, k).unwrap(), scaled.instance_partial(t, k).unwrap());
            }
        }
    }
}
