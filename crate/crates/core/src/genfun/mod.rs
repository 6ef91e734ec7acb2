//! Composition of generating functions and the survival series.
//!
//! Survival probabilities are propagated as `w = 1 − s` rather than `s`, so
//! they keep full relative precision when they are tiny. Once `‖w‖` drops
//! below `e^{-650}` the update switches to its second-order expansion around
//! `s = 1`, which is exact to far below double precision there.

mod series;

pub use series::{
    alpha_xi_envelope, growth_bounds, survival_gamma_ratio, conditioned_mean_ratio, series_table, AlphaEnvelope,
    GrowthBounds, SeriesRow, SeriesTable,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{dot, mat_vec, Matrix};
use crate::model::{check_unit_cube, BranchingModel};

const LINEAR_REGIME: f64 = -650.0;

/// `f_{k,n}(s) = g_k ∘ ⋯ ∘ g_{n−1}(s)`.
pub fn compose_pgf(model: &BranchingModel, k: usize, n: usize, s: &[f64]) -> Result<Vec<f64>> {
    if k > n {
        return Err(Error::domain(format!("compose_pgf needs k ≤ n, got k={k} n={n}")));
    }
    check_unit_cube(s, model.d())?;
    let mut cur = s.to_vec();
    for m in (k..n).rev() {
        cur = model.pgf_unchecked(m, &cur);
        cur.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    }
    Ok(cur)
}

/// Mean matrix and Hessians at `1` per canonical generation.
pub(crate) struct StepCache {
    means: Vec<Matrix>,
    hessians: Vec<Vec<Matrix>>,
}

impl StepCache {
    pub(crate) fn new(model: &BranchingModel) -> Self {
        let ones = vec![1.0; model.d()];
        let len = model.explicit_len();
        Self {
            means: (0..len).map(|n| model.mean_matrix(n)).collect(),
            hessians: (0..len)
                .map(|n| model.laws_at(n).iter().map(|l| l.hessian_unchecked(&ones)).collect())
                .collect(),
        }
    }
}

/// `1 − s` held as `exp(log_scale) · dir` with `‖dir‖₁ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Complement {
    pub log_scale: f64,
    pub dir: Vec<f64>,
}

impl Complement {
    pub(crate) fn from_gap(w: &[f64]) -> Self {
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            Self { log_scale: total.ln(), dir: w.iter().map(|x| x / total).collect() }
        } else {
            Self { log_scale: f64::NEG_INFINITY, dir: vec![0.0; w.len()] }
        }
    }

    /// `w ← 1 − g_m(1 − w)`.
    pub(crate) fn step(&mut self, model: &BranchingModel, cache: &StepCache, m: usize) {
        if self.log_scale == f64::NEG_INFINITY {
            return;
        }
        let next: Vec<f64> = if self.log_scale > LINEAR_REGIME {
            let scale = self.log_scale.exp();
            let w: Vec<f64> = self.dir.iter().map(|x| x * scale).collect();
            model.laws_at(m).iter().map(|l| l.complement(&w).max(0.0)).collect()
        } else {
            // scaled by exp(-log_scale)
            let c = model.canonical_index(m);
            let lin = mat_vec(&cache.means[c], &self.dir);
            let scale = self.log_scale.exp();
            cache.hessians[c]
                .iter()
                .zip(lin)
                .map(|(h, a)| {
                    let q = dot(&self.dir, &mat_vec(h, &self.dir));
                    (a - 0.5 * scale * q).max(0.0)
                })
                .collect()
        };
        let total: f64 = next.iter().sum();
        if total > 0.0 {
            let base = if self.log_scale > LINEAR_REGIME { 0.0 } else { self.log_scale };
            self.log_scale = base + total.ln();
            self.dir = next.into_iter().map(|x| x / total).collect();
        } else {
            self.log_scale = f64::NEG_INFINITY;
            self.dir.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub(crate) fn component_ln(&self, j: usize) -> f64 {
        self.log_scale + self.dir[j].ln()
    }

    /// `ln ⟨w, u⟩`
    pub(crate) fn dot_ln(&self, u: &[f64]) -> f64 {
        self.log_scale + dot(&self.dir, u).ln()
    }
}

/// `1 − f_{k,n}(1 − w)` for `w = 1 − s`.
pub(crate) fn complement_between(
    model: &BranchingModel,
    cache: &StepCache,
    k: usize,
    n: usize,
    w: &[f64],
) -> Complement {
    let mut c = Complement::from_gap(w);
    for m in (k..n).rev() {
        c.step(model, cache, m);
    }
    c
}

/// `1 − f_{0,n}(1 − w)` for every `n ≤ horizon`.
///
/// Past the preperiod the composition for generation `t0 + qp + r` reuses
/// the one for `t0 + (q−1)p + r`, performing the same operations in the same
/// order as the direct iteration, so both give bitwise equal results.
pub(crate) fn complement_curve(
    model: &BranchingModel,
    cache: &StepCache,
    w: &[f64],
    horizon: usize,
    exec: Exec,
) -> Vec<Complement> {
    let (t0, p) = model.eventual_period();
    let mut states: Vec<Option<Complement>> = vec![None; horizon + 1];
    let direct_end = t0.min(horizon + 1);
    let direct = exec.map_indexed(direct_end, |n| complement_between(model, cache, 0, n, w));
    for (n, c) in direct.into_iter().enumerate() {
        states[n] = Some(c);
    }
    if horizon >= t0 {
        let residues = p.min(horizon - t0 + 1);
        let chains = exec.map_indexed(residues, |r| {
            let mut inner = complement_between(model, cache, t0, t0 + r, w);
            let mut out = Vec::new();
            let mut n = t0 + r;
            while n <= horizon {
                let mut full = inner.clone();
                for m in (0..t0).rev() {
                    full.step(model, cache, m);
                }
                out.push((n, full));
                for m in (t0..t0 + p).rev() {
                    inner.step(model, cache, m);
                }
                n += p;
            }
            out
        });
        for (n, c) in chains.into_iter().flatten() {
            states[n] = Some(c);
        }
    }
    states.into_iter().map(|c| c.expect("every generation filled")).collect()
}

/// `P(Z_n ≠ 0 | Z_0 = e_j)` for `n ≤ horizon`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtinctionCurve {
    pub horizon: usize,
    /// `survival[n][j]`
    pub survival: Vec<Vec<f64>>,
    pub log_survival: Vec<Vec<f64>>,
}

impl ExtinctionCurve {
    /// `f_{0,n}^j(0)`
    pub fn extinction(&self, n: usize, j: usize) -> f64 {
        1.0 - self.survival[n][j]
    }
}

/// Survival curves by backward iteration from `s = 0`.
pub fn extinction_curve(model: &BranchingModel, horizon: usize, exec: Exec) -> Result<ExtinctionCurve> {
    if horizon == 0 {
        return Err(Error::domain("extinction_curve needs horizon ≥ 1"));
    }
    let d = model.d();
    let cache = StepCache::new(model);
    let states = complement_curve(model, &cache, &vec![1.0; d], horizon, exec);
    let mut survival = Vec::with_capacity(horizon + 1);
    let mut log_survival = Vec::with_capacity(horizon + 1);
    for c in states {
        let scale = c.log_scale.exp();
        survival.push(c.dir.iter().map(|x| (x * scale).min(1.0)).collect());
        log_survival.push((0..d).map(|j| c.component_ln(j).min(0.0)).collect());
    }
    Ok(ExtinctionCurve { horizon, survival, log_survival })
}

/// `α(n, s)` together with its logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Alpha {
    pub value: f64,
    pub ln: f64,
}

/// `α(n,s) = ⟨1 − f_{0,n}(s), u_0⟩^{-1} − (Λ̃_n ⟨1 − s, u_n⟩)^{-1}`.
pub fn alpha_eval(
    model: &BranchingModel,
    eigs: &crate::spectral::EigenSequence,
    n: usize,
    s: &[f64],
) -> Result<Alpha> {
    check_unit_cube(s, model.d())?;
    if s.iter().all(|&x| x == 1.0) {
        return Err(Error::domain("α(n, s) is undefined at s = 1"));
    }
    if n > eigs.horizon {
        return Err(Error::HorizonMismatch { needed: n, available: eigs.horizon });
    }
    let cache = StepCache::new(model);
    let gap: Vec<f64> = s.iter().map(|x| 1.0 - x).collect();
    let c = complement_between(model, &cache, 0, n, &gap);
    let a = c.dot_ln(&eigs.u0);
    let b = eigs.log_lambda_tilde_prod[n] + dot(&gap, &eigs.u[n]).ln();
    Ok(alpha_from_logs(a, b))
}

/// `e^{−a} − e^{−b}` in overflow-safe form.
pub(crate) fn alpha_from_logs(a: f64, b: f64) -> Alpha {
    let ln = if a < b { -a + (-(a - b).exp_m1()).ln() } else { f64::NEG_INFINITY };
    let value = if a < b { (-a).exp() * -(a - b).exp_m1() } else { (-a).exp() - (-b).exp() };
    Alpha { value, ln }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::spectral::eigen_sequence;

    #[test]
    fn compose_examples() {
        let m = critical();
        assert_eq!(compose_pgf(&m, 3, 3, &[0.3]).unwrap(), vec![0.3]);
        assert_eq!(compose_pgf(&m, 0, 1, &[0.0]).unwrap(), vec![0.5]);
        assert_eq!(compose_pgf(&m, 0, 2, &[0.0]).unwrap(), vec![0.625]);
        assert_eq!(compose_pgf(&m, 0, 7, &[1.0]).unwrap(), vec![1.0]);
        assert!(compose_pgf(&m, 0, 2, &[1.5]).is_err());
        assert!(compose_pgf(&m, 2, 1, &[0.5]).is_err());
    }

    #[test]
    fn critical_survival() {
        let c = extinction_curve(&critical(), 6, Exec::Serial).unwrap();
        assert_eq!(c.survival[0], vec![1.0]);
        assert_eq!(c.survival[1], vec![0.5]);
        assert!((c.survival[2][0] - 0.375).abs() < 1e-15);
        for n in 1..=6 {
            let f = compose_pgf(&critical(), 0, n, &[0.0]).unwrap()[0];
            assert!((c.survival[n][0] - (1.0 - f)).abs() < 1e-14);
        }
    }

    #[test]
    fn periodic_reuse_matches_direct_iteration() {
        let m = BranchingModel::new(
            1,
            vec![
                crate::model::Epoch { start: 0, laws: vec![uni(&[(0, 0.3), (2, 0.7)])] },
                crate::model::Epoch { start: 2, laws: vec![uni(&[(0, 0.5), (3, 0.5)])] },
                crate::model::Epoch { start: 3, laws: vec![uni(&[(0, 0.6), (2, 0.4)])] },
                crate::model::Epoch { start: 4, laws: vec![uni(&[(0, 0.55), (2, 0.45)])] },
            ],
            crate::model::Tail::Periodic { period: 3 },
        )
        .unwrap();
        let c = extinction_curve(&m, 40, Exec::Parallel).unwrap();
        let cache = StepCache::new(&m);
        for n in 0..=40 {
            let direct = complement_between(&m, &cache, 0, n, &[1.0]);
            assert_eq!(c.log_survival[n][0], direct.component_ln(0).min(0.0));
        }
        assert_eq!(c, extinction_curve(&m, 40, Exec::Serial).unwrap());
    }

    #[test]
    fn subcritical_log_survival_far_below_underflow() {
        let c = extinction_curve(&subcritical(), 5000, Exec::Serial).unwrap();
        // P(Z_n ≠ 0) ~ c·0.8ⁿ; the log decrements settle on ln 0.8
        let step = c.log_survival[5000][0] - c.log_survival[4999][0];
        assert!((step - 0.8f64.ln()).abs() < 1e-9);
        assert_eq!(c.survival[5000][0], 0.0);
        assert!(c.log_survival[5000][0] < -1100.0);
    }

    #[test]
    fn alpha_critical_hand_value() {
        let m = critical();
        let e = eigen_sequence(&m, 10, None, 1e-12).unwrap();
        let a = alpha_eval(&m, &e, 1, &[0.0]).unwrap();
        assert!((a.value - 1.0).abs() < 1e-14);
        assert!(a.ln.abs() < 1e-14);
        assert!(alpha_eval(&m, &e, 1, &[1.0]).is_err());
        assert!(alpha_eval(&m, &e, 11, &[0.0]).is_err());
    }
}
