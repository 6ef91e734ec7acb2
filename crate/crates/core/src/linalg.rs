//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// ℓ¹ norm, the vector norm used throughout the crate.
pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scales `v` to unit ℓ¹ norm in place and returns the old norm.
pub fn normalize(v: &mut [f64]) -> f64 {
    let n = l1(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

pub fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    let d = m.nrows();
    (0..d)
        .map(|j| (0..m.ncols()).map(|i| m[(j, i)] * v[i]).sum())
        .collect()
}

pub fn mat_t_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    let d = m.ncols();
    (0..d)
        .map(|i| (0..m.nrows()).map(|j| m[(j, i)] * v[j]).sum())
        .collect()
}

/// Perron root and ℓ¹-normalized right/left Perron vectors of a matrix with
/// strictly positive entries, by power iteration.
pub fn perron(m: &Matrix) -> (f64, Vec<f64>, Vec<f64>) {
    let d = m.nrows();
    let mut right = vec![1.0 / d as f64; d];
    let mut left = right.clone();
    let mut root = 0.0;
    for _ in 0..100_000 {
        let mut next = mat_vec(m, &right);
        root = normalize(&mut next);
        let change = l1(&next.iter().zip(&right).map(|(a, b)| a - b).collect::<Vec<_>>());
        right = next;
        let mut next_left = mat_t_vec(m, &left);
        normalize(&mut next_left);
        let change_left =
            l1(&next_left.iter().zip(&left).map(|(a, b)| a - b).collect::<Vec<_>>());
        left = next_left;
        if change < 1e-16 && change_left < 1e-16 {
            break;
        }
    }
    (root, right, left)
}

/// Compensated sum of positive terms supplied as logarithms.
///
/// Holds `exp(log_scale) * (sum + comp)` so partial sums can exceed the
/// range of `f64` without losing relative accuracy.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    log_scale: f64,
    sum: f64,
    comp: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self {
            log_scale: f64::NEG_INFINITY,
            sum: 0.0,
            comp: 0.0,
        }
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_ln(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.log_scale {
            let r = (self.log_scale - ln_term).exp();
            self.sum *= r;
            self.comp *= r;
            self.log_scale = ln_term;
        }
        let t = (ln_term - self.log_scale).exp();
        // Neumaier
        let s = self.sum + t;
        if self.sum.abs() >= t.abs() {
            self.comp += (self.sum - s) + t;
        } else {
            self.comp += (t - s) + self.sum;
        }
        self.sum = s;
    }

    pub fn ln(&self) -> f64 {
        let total = self.sum + self.comp;
        if total <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.log_scale + total.ln()
        }
    }

    pub fn value(&self) -> f64 {
        self.ln().exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_matches_direct_sum() {
        let mut s = LogSum::new();
        let mut direct = 0.0;
        for k in 1..=100 {
            let t = 1.0 / (k as f64).powi(2);
            s.add_ln(t.ln());
            direct += t;
        }
        assert!((s.value() - direct).abs() < 1e-14);
    }

    #[test]
    fn log_sum_survives_overflow() {
        let mut s = LogSum::new();
        for _ in 0..10 {
            s.add_ln(800.0);
        }
        assert!((s.ln() - (800.0 + 10f64.ln())).abs() < 1e-12);
        assert!(s.value().is_infinite());
    }

    #[test]
    fn perron_of_constant_matrices() {
        let m = Matrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.5]);
        let (root, v, u) = perron(&m);
        assert!((root - 0.75).abs() < 1e-14);
        assert!((v[0] - 0.5).abs() < 1e-14 && (u[1] - 0.5).abs() < 1e-14);
    }
}
