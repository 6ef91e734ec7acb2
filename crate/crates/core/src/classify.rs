//! Survival / extinction trichotomy.
//!
//! Every [`BranchingModel`] is eventually periodic, so the verdict is decided
//! exactly from the Perron root `ρ` of the product of mean matrices over one
//! period of the tail. The tail-increment ratios of `Ξ_n` and `Λ_nΞ_n` at the
//! requested horizon are reported alongside, with a verdict of their own.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::genfun::series_table;
use crate::linalg::{perron, Matrix};
use crate::model::{validate_model, BranchingModel, ValidationThresholds};
use crate::spectral::eigen_sequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Survives,
    ExtinctExponentialLimit,
    ExtinctNoExponentialLimit,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassifyThresholds {
    /// `|ln ρ|` at or below this counts as critical.
    pub crit_tol: f64,
    /// A tail-increment ratio below this reads as a convergent series.
    pub convergent_ratio: f64,
    /// A tail-increment ratio above this reads as a divergent series.
    pub divergent_ratio: f64,
    /// Accuracy requested from the eigenvector sweep.
    pub eigen_tol: f64,
    pub validation: ValidationThresholds,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        Self {
            crit_tol: 1e-9,
            convergent_ratio: 0.01,
            divergent_ratio: 0.1,
            eigen_tol: 1e-10,
            validation: ValidationThresholds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionSummary {
    pub assumption1: bool,
    pub assumption2: bool,
    pub assumption3: bool,
    pub eps0: f64,
    pub k0: f64,
    pub min_factorial_moment: f64,
    pub uniformly_critical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    /// Verdict from the per-period factor, never inconclusive.
    pub exact_verdict: Verdict,
    /// Verdict read off the tail-increment ratios at the horizon.
    pub heuristic_verdict: Verdict,
    pub horizon: usize,
    pub preperiod: usize,
    pub period: usize,
    /// `ln ρ`, with `ρ` the growth of `Λ` over one period.
    pub log_rho: f64,
    pub rho: f64,
    /// `(Ξ_N − Ξ_{N/2}) / Ξ_N`
    pub xi_tail_ratio: f64,
    /// The same ratio for `Λ_nΞ_n`.
    pub lambda_xi_tail_ratio: f64,
    pub xi: f64,
    pub log_xi: f64,
    pub log_lambda_xi: f64,
    pub log_gamma: f64,
    /// `Γ_N / Ξ_N`, bounded above and below when the series are comparable.
    pub gamma_xi_ratio: f64,
    /// True when the heuristic agrees with the exact verdict or is inconclusive.
    pub consistent: bool,
    pub assumptions: AssumptionSummary,
    pub thresholds: ClassifyThresholds,
}

/// `ln` of the Perron root of `M_{t0, t0+p}`.
pub fn log_period_factor(model: &BranchingModel) -> f64 {
    let (t0, p) = model.eventual_period();
    let d = model.d();
    let mut prod = Matrix::identity(d, d);
    let mut log_scale = 0.0;
    for n in t0..t0 + p {
        prod *= model.mean_matrix(n);
        let mx = prod.max();
        prod /= mx;
        log_scale += mx.ln();
    }
    log_scale + perron(&prod).0.ln()
}

fn tail_ratio(log_half: f64, log_full: f64) -> f64 {
    -(log_half - log_full).exp_m1()
}

pub fn classify(
    model: &BranchingModel,
    horizon: usize,
    thresholds: ClassifyThresholds,
    exec: Exec,
) -> Result<ClassificationReport> {
    if horizon < 2 {
        return Err(Error::domain("classification horizon must be at least 2"));
    }
    let report = validate_model(model, horizon, thresholds.validation)?;
    report.require(&[1, 2, 3])?;

    let (t0, p) = model.eventual_period();
    let log_rho = log_period_factor(model);
    let exact = if log_rho.abs() <= thresholds.crit_tol {
        Verdict::ExtinctExponentialLimit
    } else if log_rho > 0.0 {
        Verdict::Survives
    } else {
        Verdict::ExtinctNoExponentialLimit
    };

    let eigs = eigen_sequence(model, horizon, None, thresholds.eigen_tol)?;
    let table = series_table(model, &eigs, horizon, exec)?;
    let (half, full) = (&table.rows[horizon / 2], &table.rows[horizon]);
    let xi_ratio = tail_ratio(half.log_xi, full.log_xi);
    let lx_half = half.log_xi + half.log_lambda;
    let lx_full = full.log_xi + full.log_lambda;
    let lx_ratio = tail_ratio(lx_half, lx_full);

    let heuristic = if xi_ratio < thresholds.convergent_ratio {
        Verdict::Survives
    } else if xi_ratio <= thresholds.divergent_ratio {
        Verdict::Inconclusive
    } else if lx_ratio < thresholds.convergent_ratio {
        Verdict::ExtinctNoExponentialLimit
    } else if lx_ratio > thresholds.divergent_ratio {
        Verdict::ExtinctExponentialLimit
    } else {
        Verdict::Inconclusive
    };

    Ok(ClassificationReport {
        verdict: exact,
        exact_verdict: exact,
        heuristic_verdict: heuristic,
        horizon,
        preperiod: t0,
        period: p,
        log_rho,
        rho: log_rho.exp(),
        xi_tail_ratio: xi_ratio,
        lambda_xi_tail_ratio: lx_ratio,
        xi: full.xi,
        log_xi: full.log_xi,
        log_lambda_xi: lx_full,
        log_gamma: full.log_gamma,
        gamma_xi_ratio: (full.log_gamma - full.log_xi).exp(),
        consistent: heuristic == exact || heuristic == Verdict::Inconclusive,
        assumptions: AssumptionSummary {
            assumption1: report.assumption1.pass,
            assumption2: report.assumption2.pass,
            assumption3: report.assumption3.pass,
            eps0: report.eps0,
            k0: report.k0,
            min_factorial_moment: report.min_factorial_moment,
            uniformly_critical: report.uniform_criticality.within_bound,
        },
        thresholds,
    })
}
