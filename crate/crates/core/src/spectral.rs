//! Generalized Perron-Frobenius data for products of time-dependent mean matrices.
//!
//! Right vectors `v_n` come from a backward sweep `v̂_n ∝ A_n v̂_{n+1}`
//! started far enough beyond the horizon that the Birkhoff contraction
//! certifies the requested accuracy. Left vectors `u_n` follow exactly from
//! `u_{n+1} = A_nᵀ u_n / λ̃_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{dot, l1, mat_t_vec, mat_vec, normalize, Matrix};
use crate::model::BranchingModel;

/// Largest look-ahead the certificate may demand.
pub const MAX_LOOKAHEAD: usize = 1_000_000;

/// `ln(max v_i/u_i) − ln(min v_i/u_i)`.
pub fn hilbert_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() || u.is_empty() {
        return Err(Error::domain("hilbert_distance needs two vectors of equal positive length"));
    }
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (&a, &b) in u.iter().zip(v) {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain("hilbert_distance needs strictly positive components"));
        }
        let r = b.ln() - a.ln();
        hi = hi.max(r);
        lo = lo.min(r);
    }
    Ok(hi - lo)
}

/// Projective diameter of the image cone of a strictly positive matrix,
/// `max ln(A_ik A_jl / (A_jk A_il))`.
pub fn projective_diameter(a: &Matrix) -> f64 {
    let (r, c) = a.shape();
    let mut best = 0.0f64;
    for k in 0..c {
        for l in 0..c {
            for i in 0..r {
                for j in 0..r {
                    let x = a[(i, k)].ln() + a[(j, l)].ln() - a[(j, k)].ln() - a[(i, l)].ln();
                    best = best.max(x);
                }
            }
        }
    }
    best
}

/// `M_{k,n} = A_k ⋯ A_{n−1}`.
pub fn product_matrix(model: &BranchingModel, k: usize, n: usize) -> Result<Matrix> {
    if k > n {
        return Err(Error::domain(format!("product_matrix needs k ≤ n, got k={k} n={n}")));
    }
    let d = model.d();
    Ok((k..n).fold(Matrix::identity(d, d), |acc, m| acc * model.mean_matrix(m)))
}

/// Certified Hilbert-metric error `2 ln R · tanh(ln R / 2)^{k−1}` after `k` steps.
pub fn contraction_bound(cone_ratio: f64, k: usize) -> f64 {
    let lr = cone_ratio.ln();
    if k == 0 {
        return f64::INFINITY;
    }
    2.0 * lr * (lr / 2.0).tanh().powi((k - 1).min(i32::MAX as usize) as i32)
}

/// Smallest look-ahead whose certified ℓ¹ error `e^{ε_k} − 1` is at most `tol`.
pub fn required_lookahead(cone_ratio: f64, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let target = tol.ln_1p();
    let lr = cone_ratio.ln();
    if lr <= 0.0 {
        return Ok(1);
    }
    let rate = (lr / 2.0).tanh().ln();
    // 2 lnR · tanh^{k−1} ≤ target
    let steps = ((target / (2.0 * lr)).ln() / rate).ceil().max(0.0);
    let mut k = 1 + steps as usize;
    while k > 1 && contraction_bound(cone_ratio, k - 1) <= target {
        k -= 1;
    }
    while contraction_bound(cone_ratio, k) > target {
        k += 1;
        if k > MAX_LOOKAHEAD {
            break;
        }
    }
    if k > MAX_LOOKAHEAD {
        return Err(Error::SupportCap { what: "eigenvector look-ahead".into(), cap: MAX_LOOKAHEAD });
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenSequence {
    pub horizon: usize,
    pub tol: f64,
    /// Look-ahead used past the horizon.
    pub lookahead: usize,
    /// `R = √K₀/ε₀` over the generations the sweep touched.
    pub cone_ratio: f64,
    /// Smallest component of any `v_n` or `u_n`.
    pub eps_bar: f64,
    pub u0: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub lambda_tilde: Vec<f64>,
    /// `ln Λ_n`, `n = 0..=N`
    pub log_lambda_prod: Vec<f64>,
    /// `ln Λ̃_n`, `n = 0..=N`
    pub log_lambda_tilde_prod: Vec<f64>,
    /// Certified `‖v̂_n − v_n‖` per `n`.
    pub alignment_error: Vec<f64>,
}

impl EigenSequence {
    pub fn d(&self) -> usize {
        self.u0.len()
    }

    /// `Λ_n`
    pub fn big_lambda(&self, n: usize) -> f64 {
        self.log_lambda_prod[n].exp()
    }

    /// `Λ̃_n`
    pub fn big_lambda_tilde(&self, n: usize) -> f64 {
        self.log_lambda_tilde_prod[n].exp()
    }

    /// `⟨v_n, u_n⟩ Λ̃_n / Λ_n`, constant in `n`.
    pub fn duality(&self, n: usize) -> f64 {
        dot(&self.v[n], &self.u[n]) * (self.log_lambda_tilde_prod[n] - self.log_lambda_prod[n]).exp()
    }

    /// `‖A_{n−1} v_n − λ_{n−1} v_{n−1}‖` for `1 ≤ n ≤ N`.
    pub fn eigen_residual(&self, model: &BranchingModel, n: usize) -> f64 {
        let av = mat_vec(&model.mean_matrix(n - 1), &self.v[n]);
        av.iter()
            .zip(&self.v[n - 1])
            .map(|(a, b)| (a - self.lambda[n - 1] * b).abs())
            .sum()
    }

    /// Column names of the tabular export.
    pub fn csv_header(&self) -> Vec<String> {
        let d = self.d();
        let mut h: Vec<String> = ["n", "lambda", "lambda_tilde", "log_Lambda", "log_Lambda_tilde"]
            .map(String::from)
            .into();
        h.extend((1..=d).map(|i| format!("v_{i}")));
        h.extend((1..=d).map(|i| format!("u_{i}")));
        h.push("alignment_error".into());
        h
    }

    /// One row per `n ≤ N`; `λ_N`, `λ̃_N` are blank.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        (0..=self.horizon)
            .map(|n| {
                let opt = |xs: &[f64]| xs.get(n).map(|x| fmt(*x)).unwrap_or_default();
                let mut row = vec![
                    n.to_string(),
                    opt(&self.lambda),
                    opt(&self.lambda_tilde),
                    fmt(self.log_lambda_prod[n]),
                    fmt(self.log_lambda_tilde_prod[n]),
                ];
                row.extend(self.v[n].iter().map(|x| fmt(*x)));
                row.extend(self.u[n].iter().map(|x| fmt(*x)));
                row.push(fmt(self.alignment_error[n]));
                row
            })
            .collect()
    }
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Smallest `P(X(i) ≥ 2)` and largest `E‖X‖²` over generations `n < end`.
fn cone_constants(model: &BranchingModel, end: usize) -> (f64, String, f64) {
    let mut eps = (f64::INFINITY, String::new());
    let mut k0 = 0.0f64;
    for n in 0..end.min(model.explicit_len()) {
        for (j, law) in model.laws_at(n).iter().enumerate() {
            k0 = k0.max(law.second_moment());
            for i in 0..model.d() {
                let p = law.prob_at_least_two(i);
                if p < eps.0 {
                    eps = (p, format!("n={n} parent={} child={}", j + 1, i + 1));
                }
            }
        }
    }
    (eps.0, eps.1, k0)
}

/// Builds `v_n, u_n, λ_n, λ̃_n` for `n ≤ horizon`.
///
/// `u0` defaults to the uniform vector and is rescaled to unit ℓ¹ norm.
pub fn eigen_sequence(
    model: &BranchingModel,
    horizon: usize,
    u0: Option<&[f64]>,
    tol: f64,
) -> Result<EigenSequence> {
    let d = model.d();
    let mut u_start = match u0 {
        Some(u) => u.to_vec(),
        None => vec![1.0 / d as f64; d],
    };
    if u_start.len() != d || u_start.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::domain(format!("u0 must be a strictly positive {d}-vector")));
    }
    normalize(&mut u_start);

    // the look-ahead depends on R, which depends on the window it spans
    let mut k = 1;
    let mut cone_ratio;
    loop {
        let (eps, worst, k0) = cone_constants(model, horizon + k);
        if !(eps > 0.0) {
            return Err(Error::AssumptionFailed { assumption: 1, cell: format!("{worst} (achieved {eps})") });
        }
        if !k0.is_finite() {
            return Err(Error::AssumptionFailed { assumption: 3, cell: "second moment not finite".into() });
        }
        cone_ratio = k0.sqrt() / eps;
        let needed = required_lookahead(cone_ratio, tol)?;
        if needed <= k {
            break;
        }
        k = needed;
    }

    let end = horizon + k;
    let mut v = vec![Vec::new(); horizon + 1];
    let mut lambda = vec![0.0; horizon];
    let mut cur = vec![1.0 / d as f64; d];
    for m in (0..end).rev() {
        let mut next = mat_vec(&model.mean_matrix(m), &cur);
        let norm = normalize(&mut next);
        cur = next;
        if m < horizon {
            lambda[m] = norm;
        }
        if m <= horizon {
            v[m] = cur.clone();
        }
    }

    let mut u = Vec::with_capacity(horizon + 1);
    let mut lambda_tilde = Vec::with_capacity(horizon);
    u.push(u_start.clone());
    let mut cur = u_start.clone();
    for n in 0..horizon {
        let mut next = mat_t_vec(&model.mean_matrix(n), &cur);
        lambda_tilde.push(normalize(&mut next));
        cur = next;
        u.push(cur.clone());
    }

    let log_prod = |xs: &[f64]| {
        let mut out = Vec::with_capacity(xs.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for x in xs {
            acc += x.ln();
            out.push(acc);
        }
        out
    };
    let eps_bar = v
        .iter()
        .chain(&u)
        .flat_map(|x| x.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let alignment_error = (0..=horizon)
        .map(|n| contraction_bound(cone_ratio, end - n).exp_m1())
        .collect();
    Ok(EigenSequence {
        horizon,
        tol,
        lookahead: k,
        cone_ratio,
        eps_bar,
        u0: u_start,
        log_lambda_prod: log_prod(&lambda),
        log_lambda_tilde_prod: log_prod(&lambda_tilde),
        v,
        u,
        lambda,
        lambda_tilde,
        alignment_error,
    })
}

/// Envelope of `M_{k,n}(j,i) Λ_k / Λ_n` over `0 ≤ k < n ≤ N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioBand {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max(max_ratio, 1/min_ratio)`
    pub k: f64,
}

pub fn ratio_band(model: &BranchingModel, eigs: &EigenSequence, exec: Exec) -> RatioBand {
    let n_max = eigs.horizon;
    let d = model.d();
    let mats: Vec<Matrix> = (0..n_max)
        .map(|n| model.mean_matrix(n) / eigs.lambda[n])
        .collect();
    let per_start = exec.map_indexed(n_max, |k| {
        let mut r = Matrix::identity(d, d);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for a in &mats[k..] {
            r *= a;
            lo = lo.min(r.min());
            hi = hi.max(r.max());
        }
        (lo, hi)
    });
    let (lo, hi) = per_start
        .into_iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), (c, e)| (a.min(c), b.max(e)));
    RatioBand { min_ratio: lo, max_ratio: hi, k: hi.max(1.0 / lo) }
}

/// `max_i |x_i / v_n(i) − 1|` for `x` the normalized `M_{n,n+k} w`.
pub fn alignment_deviation(
    model: &BranchingModel,
    eigs: &EigenSequence,
    n: usize,
    k: usize,
    w: &[f64],
) -> Result<f64> {
    if n > eigs.horizon {
        return Err(Error::HorizonMismatch { needed: n, available: eigs.horizon });
    }
    if w.len() != model.d() || w.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::domain("alignment vector must be strictly positive"));
    }
    let mut x = w.to_vec();
    for m in (n..n + k).rev() {
        x = mat_vec(&model.mean_matrix(m), &x);
        normalize(&mut x);
    }
    let s = l1(&x);
    Ok(x.iter()
        .zip(&eigs.v[n])
        .map(|(a, b)| (a / s / b - 1.0).abs())
        .fold(0.0, f64::max))
}
