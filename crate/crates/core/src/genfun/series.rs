//! `Ξ_n`, `Γ_n`, `α(n, 0)` and the convergence diagnostics built on them.

use serde::Serialize;

use super::{alpha_from_logs, complement_curve, extinction_curve, Alpha, ExtinctionCurve, StepCache};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{dot, mat_t_vec, mat_vec, normalize, LogSum};
use crate::model::BranchingModel;
use crate::spectral::{fmt, EigenSequence};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub n: usize,
    pub xi: f64,
    pub log_xi: f64,
    pub gamma: f64,
    pub log_gamma: f64,
    pub log_lambda: f64,
    pub survival: Vec<f64>,
    pub log_survival: Vec<f64>,
    pub alpha0: f64,
    pub log_alpha0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesTable {
    pub horizon: usize,
    pub rows: Vec<SeriesRow>,
}

impl SeriesTable {
    pub fn csv_header(&self, d: usize) -> Vec<String> {
        let mut h: Vec<String> = ["n", "Xi", "Gamma", "log_Lambda"].map(String::from).into();
        h.extend((1..=d).map(|j| format!("surv_{j}")));
        h.push("alpha0".into());
        h.extend(["log_Xi", "log_Gamma"].map(String::from));
        h.extend((1..=d).map(|j| format!("log_surv_{j}")));
        h.push("log_alpha0".into());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![r.n.to_string(), fmt(r.xi), fmt(r.gamma), fmt(r.log_lambda)];
                row.extend(r.survival.iter().map(|x| fmt(*x)));
                row.push(fmt(r.alpha0));
                row.extend([fmt(r.log_xi), fmt(r.log_gamma)]);
                row.extend(r.log_survival.iter().map(|x| fmt(*x)));
                row.push(fmt(r.log_alpha0));
                row
            })
            .collect()
    }
}

/// `ln` of the `k`-th term of `Γ`.
fn gamma_term_ln(model: &BranchingModel, cache: &StepCache, eigs: &EigenSequence, k: usize) -> f64 {
    let c = model.canonical_index(k);
    let v1 = &eigs.v[k + 1];
    let quad: f64 = cache.hessians[c]
        .iter()
        .zip(&eigs.u[k])
        .map(|(h, uj)| uj * dot(v1, &mat_vec(h, v1)))
        .sum();
    0.5f64.ln() - eigs.lambda[k].ln() - eigs.log_lambda_tilde_prod[k + 1] + quad.ln()
        - dot(v1, &eigs.u[k + 1]).ln()
        - dot(&eigs.v[k], &eigs.u[k]).ln()
}

fn log_dot_exp(logs: &[f64], weights: &[f64]) -> f64 {
    let mut s = LogSum::new();
    for (l, w) in logs.iter().zip(weights) {
        s.add_ln(l + w.ln());
    }
    s.ln()
}

/// Tabulates the series for `n ≤ horizon`.
pub fn series_table(
    model: &BranchingModel,
    eigs: &EigenSequence,
    horizon: usize,
    exec: Exec,
) -> Result<SeriesTable> {
    if horizon > eigs.horizon {
        return Err(Error::HorizonMismatch { needed: horizon, available: eigs.horizon });
    }
    let curve = extinction_curve(model, horizon.max(1), exec)?;
    let cache = StepCache::new(model);
    let mut xi = LogSum::new();
    let mut gamma = LogSum::new();
    let mut rows = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        if n > 0 {
            xi.add_ln(-eigs.log_lambda_prod[n]);
            gamma.add_ln(gamma_term_ln(model, &cache, eigs, n - 1));
        }
        let a = log_dot_exp(&curve.log_survival[n], &eigs.u0);
        let Alpha { value, ln } = alpha_from_logs(a, eigs.log_lambda_tilde_prod[n]);
        rows.push(SeriesRow {
            n,
            xi: xi.value(),
            log_xi: xi.ln(),
            gamma: gamma.value(),
            log_gamma: gamma.ln(),
            log_lambda: eigs.log_lambda_prod[n],
            survival: curve.survival[n].clone(),
            log_survival: curve.log_survival[n].clone(),
            alpha0: value,
            log_alpha0: ln,
        });
    }
    Ok(SeriesTable { horizon, rows })
}

/// `ln P(Z_n ≠ 0)` for an initial population from per-type log-survival.
fn ln_survival_from(initial: &[u64], log_surv: &[f64]) -> f64 {
    if log_surv.iter().any(|&l| l > -700.0) {
        let t: f64 = initial
            .iter()
            .zip(log_surv)
            .map(|(&z, &l)| z as f64 * (-l.exp()).ln_1p())
            .sum();
        (-t.exp_m1()).ln()
    } else {
        let mut s = LogSum::new();
        for (&z, &l) in initial.iter().zip(log_surv) {
            if z > 0 {
                s.add_ln((z as f64).ln() + l);
            }
        }
        s.ln()
    }
}

/// `ln` of `M_{0,n}ᵀ z` held as (direction, log scale) for every `n ≤ horizon`.
fn mean_path(model: &BranchingModel, z: &[f64], horizon: usize) -> Vec<(Vec<f64>, f64)> {
    let mut dir = z.to_vec();
    let mut log_scale = normalize(&mut dir).ln();
    let mut out = Vec::with_capacity(horizon + 1);
    out.push((dir.clone(), log_scale));
    for n in 0..horizon {
        dir = mat_t_vec(&model.mean_matrix(n), &dir);
        log_scale += normalize(&mut dir).ln();
        out.push((dir.clone(), log_scale));
    }
    out
}

/// Envelopes of `E‖Z_n‖ / Λ_n` and `P(Z_n ≠ 0) Ξ_n` over `1 ≤ n ≤ N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthBounds {
    pub initial: Vec<u64>,
    pub mean_ratio: Vec<f64>,
    pub survival_xi: Vec<f64>,
    /// Smallest `C` with both sequences inside `[1/C, C]`.
    pub c: f64,
}

pub fn growth_bounds(
    model: &BranchingModel,
    eigs: &EigenSequence,
    table: &SeriesTable,
    initial: &[u64],
) -> Result<GrowthBounds> {
    if initial.len() != model.d() || initial.iter().all(|&z| z == 0) {
        return Err(Error::domain("initial population must be a nonzero d-vector"));
    }
    let z: Vec<f64> = initial.iter().map(|&x| x as f64).collect();
    let path = mean_path(model, &z, table.horizon);
    let mut mean_ratio = Vec::with_capacity(table.horizon);
    let mut survival_xi = Vec::with_capacity(table.horizon);
    for row in &table.rows[1..] {
        let n = row.n;
        mean_ratio.push((path[n].1 - eigs.log_lambda_prod[n]).exp());
        survival_xi.push((ln_survival_from(initial, &row.log_survival) + row.log_xi).exp());
    }
    let c = mean_ratio
        .iter()
        .chain(&survival_xi)
        .map(|&x| x.max(1.0 / x))
        .fold(1.0, f64::max);
    Ok(GrowthBounds { initial: initial.to_vec(), mean_ratio, survival_xi, c })
}

/// `P(Z_n ≠ 0 | e_j) Γ_n ⟨v_0,u_0⟩ / v_0(j)` for `1 ≤ n ≤ N`.
pub fn survival_gamma_ratio(eigs: &EigenSequence, table: &SeriesTable, j: usize) -> Vec<f64> {
    let shift = dot(&eigs.v[0], &eigs.u0).ln() - eigs.v[0][j].ln();
    table.rows[1..]
        .iter()
        .map(|r| (r.log_survival[j] + r.log_gamma + shift).exp())
        .collect()
}

/// `Λ̃_n Γ_n P(Z_n ≠ 0 | e_j) ⟨u_n,u_n⟩ / E⟨Z_n, u_n⟩` for `1 ≤ n ≤ N`.
pub fn conditioned_mean_ratio(
    model: &BranchingModel,
    eigs: &EigenSequence,
    table: &SeriesTable,
    j: usize,
) -> Vec<f64> {
    let mut e = vec![0.0; model.d()];
    e[j] = 1.0;
    let path = mean_path(model, &e, table.horizon);
    table.rows[1..]
        .iter()
        .map(|r| {
            let n = r.n;
            let u = &eigs.u[n];
            let mean_ln = path[n].1 + dot(&path[n].0, u).ln();
            (eigs.log_lambda_tilde_prod[n] + r.log_gamma + r.log_survival[j] + dot(u, u).ln() - mean_ln)
                .exp()
        })
        .collect()
}

/// Range of `α(n,s)/Ξ_n` over `1 ≤ n ≤ N` for one grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaEnvelope {
    pub s: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub c: f64,
}

/// `α(n,s)/Ξ_n` envelopes for every `s` in `grid^d`, skipping `s = 1`.
pub fn alpha_xi_envelope(
    model: &BranchingModel,
    eigs: &EigenSequence,
    table: &SeriesTable,
    grid: &[f64],
    exec: Exec,
) -> Result<Vec<AlphaEnvelope>> {
    let d = model.d();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..d {
        points = points
            .into_iter()
            .flat_map(|p| grid.iter().map(move |&g| [p.clone(), vec![g]].concat()))
            .collect();
    }
    points.retain(|p| p.iter().any(|&x| x != 1.0));
    for p in &points {
        crate::model::check_unit_cube(p, d)?;
    }
    let cache = StepCache::new(model);
    let horizon = table.horizon;
    Ok(exec.map_indexed(points.len(), |i| {
        let s = &points[i];
        let gap: Vec<f64> = s.iter().map(|x| 1.0 - x).collect();
        let curve = complement_curve(model, &cache, &gap, horizon, Exec::Serial);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for n in 1..=horizon {
            let b = eigs.log_lambda_tilde_prod[n] + dot(&gap, &eigs.u[n]).ln();
            let alpha = alpha_from_logs(curve[n].dot_ln(&eigs.u0), b);
            let r = (alpha.ln - table.rows[n].log_xi).exp();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        AlphaEnvelope { s: s.clone(), min_ratio: lo, max_ratio: hi, c: hi.max(1.0 / lo) }
    }))
}

impl ExtinctionCurve {
    /// `P(Z_n ≠ 0)` for an arbitrary initial population.
    pub fn survival_from(&self, n: usize, initial: &[u64]) -> f64 {
        ln_survival_from(initial, &self.log_survival[n]).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::spectral::eigen_sequence;

    fn table(m: &BranchingModel, n: usize) -> (EigenSequence, SeriesTable) {
        let e = eigen_sequence(m, n, None, 1e-12).unwrap();
        let t = series_table(m, &e, n, Exec::Serial).unwrap();
        (e, t)
    }

    #[test]
    fn critical_series() {
        let (_, t) = table(&critical(), 50);
        for r in &t.rows {
            assert!((r.xi - r.n as f64).abs() < 1e-12);
            assert!((r.gamma - r.n as f64 / 2.0).abs() < 1e-12);
        }
        assert!((t.rows[1].alpha0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_series() {
        let (_, t) = table(&supercritical(), 40);
        for r in &t.rows {
            let closed = 2.0 * (1.0 - (2.0f64 / 3.0).powi(r.n as i32));
            assert!((r.xi - closed).abs() < 1e-12);
        }
        let (e, t) = table(&subcritical(), 40);
        for r in &t.rows {
            let n = r.n as i32;
            let xi = 5.0 * (1.25f64.powi(n) - 1.0);
            assert!((r.xi - xi).abs() < 1e-12 * xi.max(1.0));
            let lx = e.big_lambda(r.n) * r.xi;
            assert!((lx - 5.0 * (1.0 - 0.8f64.powi(n))).abs() < 1e-12);
        }
    }

    #[test]
    fn horizon_mismatch() {
        let e = eigen_sequence(&critical(), 5, None, 1e-12).unwrap();
        assert!(matches!(
            series_table(&critical(), &e, 6, Exec::Serial),
            Err(Error::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn diagnostics_on_the_two_type_model() {
        let m = critical_two_type();
        let (e, t) = table(&m, 400);
        let bounds = growth_bounds(&m, &e, &t, &[1, 2]).unwrap();
        assert!(bounds.c.is_finite() && bounds.c < 10.0);
        for j in 0..2 {
            let c = survival_gamma_ratio(&e, &t, j);
            assert!((c.last().unwrap() - 1.0).abs() < 0.05);
            let z = conditioned_mean_ratio(&m, &e, &t, j);
            assert!((z.last().unwrap() - 1.0).abs() < 0.05);
        }
        let env = alpha_xi_envelope(&m, &e, &t, &[0.0, 0.5], Exec::Parallel).unwrap();
        assert_eq!(env.len(), 4);
        assert!(env.iter().all(|a| a.min_ratio > 0.0 && a.c.is_finite()));
    }

    #[test]
    fn survival_from_population() {
        let c = extinction_curve(&critical(), 3, Exec::Serial).unwrap();
        let p = c.survival_from(2, &[3]);
        assert!((p - (1.0 - 0.625f64.powi(3))).abs() < 1e-14);
    }
}
