//! Second moments of `Z_n` through the recursion `D_{n+1} = A_nᵀ D_n A_n + S_n`.

use super::BranchingModel;
use crate::error::{Error, Result};
use crate::linalg::{mat_t_vec, Matrix};

/// Covariance matrices `D_0..=D_horizon` of `Z_n` started from one particle of
/// type `j` (0-based). `S_n` weights each type's offspring covariance by the
/// expected number of type-`i` particles at time `n`.
pub fn covariance_sequence(model: &BranchingModel, j: usize, horizon: usize) -> Result<Vec<Matrix>> {
    let d = model.d();
    if j >= d {
        return Err(Error::domain(format!("initial type {} out of range 1..={d}", j + 1)));
    }
    let mut mean = vec![0.0; d];
    mean[j] = 1.0;
    let mut current = Matrix::zeros(d, d);
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(current.clone());
    for n in 0..horizon {
        let a = model.mean_matrix(n);
        let mut next = a.transpose() * &current * &a;
        for (i, law) in model.laws_at(n).iter().enumerate() {
            if mean[i] != 0.0 {
                next += law.covariance() * mean[i];
            }
        }
        next = (&next + next.transpose()) * 0.5;
        mean = mat_t_vec(&a, &mean);
        current = next;
        out.push(current.clone());
    }
    Ok(out)
}
