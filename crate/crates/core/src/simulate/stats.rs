use serde::Serialize;

use super::Ensemble;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionedStats {
    /// `⟨ζ, u⟩ / mean⟨ζ, u⟩` over surviving, uncapped trajectories.
    pub values: Vec<f64>,
    pub survivors: usize,
    pub survival_frequency: f64,
    /// Mean of `⟨ζ, u⟩` before normalization.
    pub raw_mean: f64,
}

/// Survivor sizes projected on `u` and normalized by their sample mean.
pub fn conditioned_stats(ensemble: &Ensemble, u: &[f64]) -> Result<ConditionedStats> {
    if u.len() != ensemble.d() || u.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::domain("conditioning weights must be a strictly positive d-vector"));
    }
    let raw: Vec<f64> = ensemble
        .trajectories
        .iter()
        .filter(|t| t.survived && !t.capped)
        .map(|t| t.state.iter().zip(u).map(|(&z, &w)| z as f64 * w).sum())
        .collect();
    if raw.is_empty() {
        return Err(Error::EmptyConditioning);
    }
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(ConditionedStats {
        survivors: raw.len(),
        survival_frequency: ensemble.survival_frequency(),
        raw_mean: mean,
        values: raw.into_iter().map(|x| x / mean).collect(),
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and Exp(1).
pub fn ks_exponential(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("ks_exponential needs at least one sample"));
    }
    if samples.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::domain("ks_exponential needs nonnegative samples"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = -(-x).exp_m1();
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max))
}

/// Sample mean and covariance of the terminal states, with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleMoments {
    pub reps: usize,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    /// Standard error of each covariance entry from the fourth central moments.
    pub cov_se: Vec<Vec<f64>>,
}

pub fn sample_moments(ensemble: &Ensemble) -> Result<SampleMoments> {
    let reps = ensemble.reps();
    if reps < 2 {
        return Err(Error::domain("sample moments need at least two trajectories"));
    }
    let d = ensemble.d();
    let r = reps as f64;
    let mut mean = vec![0.0; d];
    for t in &ensemble.trajectories {
        for (m, &z) in mean.iter_mut().zip(&t.state) {
            *m += z as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    let mut cov = Matrix::zeros(d, d);
    let mut fourth = Matrix::zeros(d, d);
    for t in &ensemble.trajectories {
        let c: Vec<f64> = t.state.iter().zip(&mean).map(|(&z, m)| z as f64 - m).collect();
        for i in 0..d {
            for k in 0..d {
                cov[(i, k)] += c[i] * c[k];
                fourth[(i, k)] += (c[i] * c[k]).powi(2);
            }
        }
    }
    let cov_biased = &cov / r;
    let cov = cov / (r - 1.0);
    let cov_se = Matrix::from_fn(d, d, |i, k| {
        ((fourth[(i, k)] / r - cov_biased[(i, k)].powi(2)).max(0.0) / r).sqrt()
    });
    let mean_se = (0..d).map(|i| (cov[(i, i)] / r).sqrt()).collect();
    let rows = |m: &Matrix| (0..d).map(|i| m.row(i).iter().copied().collect()).collect();
    Ok(SampleMoments { reps, mean, mean_se, cov: rows(&cov), cov_se: rows(&cov_se) })
}
