//! Cross-entropy method over the box [-1, 1]^d.

use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CemConfig {
    pub population: usize,
    pub iterations: usize,
    pub elites: usize,
    /// Floor on the refitted standard deviation.
    pub min_std: f64,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig { population: 64, iterations: 2, elites: 6, min_std: 1e-3 }
    }
}

impl CemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.elites == 0 || self.elites > self.population {
            return Err(Error::config(format!(
                "CEM needs iterations >= 1 and 1 <= elites <= population, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CemResult {
    pub action: Vec<f64>,
    pub score: f64,
    /// Best score seen in each iteration; nondecreasing.
    pub best_per_iteration: Vec<f64>,
}

fn truncated_normal(mean: f64, std: f64, rng: &mut Rng) -> f64 {
    for _ in 0..64 {
        let z: f64 = rng.sample(StandardNormal);
        let x = mean + std * z;
        if (-1.0..=1.0).contains(&x) {
            return x;
        }
    }
    mean.clamp(-1.0, 1.0)
}

/// Maximizes a scalar function of one action.
pub fn cem_maximize(mut q: impl FnMut(&[f64]) -> f64, action_dim: usize, config: &CemConfig, rng: &mut Rng) -> Result<CemResult> {
    let mut results = cem_maximize_batch(
        |actions| Ok(actions.rows().into_iter().map(|a| q(a.as_slice().unwrap())).collect()),
        1,
        action_dim,
        config,
        rng,
    )?;
    Ok(results.pop().unwrap())
}

/// Runs `batch` independent maximizations with one scoring call per
/// iteration. `score` receives `batch * population` rows, problem `b` owning
/// rows `b * population .. (b + 1) * population`.
///
/// The first iteration samples uniformly; later ones sample a truncated
/// Gaussian fitted to the elites and carry the incumbent best over, so the
/// per-iteration best is monotone.
pub fn cem_maximize_batch(
    mut score: impl FnMut(&Array2<f64>) -> Result<Array1<f64>>,
    batch: usize,
    action_dim: usize,
    config: &CemConfig,
    rng: &mut Rng,
) -> Result<Vec<CemResult>> {
    config.validate()?;
    if action_dim == 0 {
        return Err(Error::config("CEM needs a positive action dimension"));
    }
    let n = config.population;
    let mut mean = vec![vec![0.0; action_dim]; batch];
    let mut std = vec![vec![1.0; action_dim]; batch];
    let mut best: Vec<Option<(Vec<f64>, f64)>> = vec![None; batch];
    let mut history = vec![Vec::with_capacity(config.iterations); batch];
    let mut candidates = Array2::<f64>::zeros((batch * n, action_dim));

    for iter in 0..config.iterations {
        for b in 0..batch {
            for i in 0..n {
                let mut row = candidates.row_mut(b * n + i);
                match (&best[b], iter, i) {
                    (_, 0, _) => row.iter_mut().for_each(|v| *v = rng.random_range(-1.0..=1.0)),
                    (Some((a, _)), _, 0) => row.iter_mut().zip(a).for_each(|(v, x)| *v = *x),
                    _ => {
                        for (j, v) in row.iter_mut().enumerate() {
                            *v = truncated_normal(mean[b][j], std[b][j], rng);
                        }
                    }
                }
            }
        }
        let scores = score(&candidates)?;
        if scores.len() != batch * n {
            return Err(Error::Shape(format!("CEM scorer returned {} values for {} candidates", scores.len(), batch * n)));
        }
        for b in 0..batch {
            let s = |i: usize| {
                let v = scores[b * n + i];
                if v.is_nan() { f64::NEG_INFINITY } else { v }
            };
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&x, &y| s(y).total_cmp(&s(x)));
            let top = order[0];
            if best[b].as_ref().is_none_or(|(_, v)| s(top) > *v) {
                best[b] = Some((candidates.row(b * n + top).to_vec(), s(top)));
            }
            history[b].push(best[b].as_ref().unwrap().1);
            let elites = &order[..config.elites];
            for j in 0..action_dim {
                let m = elites.iter().map(|&i| candidates[[b * n + i, j]]).sum::<f64>() / elites.len() as f64;
                let var = elites.iter().map(|&i| (candidates[[b * n + i, j]] - m).powi(2)).sum::<f64>() / elites.len() as f64;
                mean[b][j] = m;
                std[b][j] = var.sqrt().max(config.min_std);
            }
        }
    }
    Ok(best
        .into_iter()
        .zip(history)
        .map(|(b, h)| {
            let (action, score) = b.unwrap();
            CemResult { action, score, best_per_iteration: h }
        })
        .collect())
}
