#![allow(dead_code)]

use mtbp_core::model::{Atom, OffspringLaw};
use mtbp_core::simulate::{CtModel, CtPiece, CtTail};
use mtbp_core::BranchingModel;

pub fn uni(pairs: &[(u32, f64)]) -> OffspringLaw {
    OffspringLaw::univariate(pairs).unwrap()
}

pub fn two(atoms: &[([u32; 2], f64)]) -> OffspringLaw {
    let atoms = atoms.iter().map(|(a, p)| Atom { offspring: a.to_vec(), p: *p }).collect();
    OffspringLaw::new(2, atoms, "test law").unwrap()
}

pub fn critical() -> BranchingModel {
    BranchingModel::constant(vec![uni(&[(0, 0.5), (2, 0.5)])]).unwrap()
}

pub fn supercritical() -> BranchingModel {
    BranchingModel::constant(vec![uni(&[(0, 0.5), (3, 0.5)])]).unwrap()
}

pub fn subcritical() -> BranchingModel {
    BranchingModel::constant(vec![uni(&[(0, 0.6), (2, 0.4)])]).unwrap()
}

/// Period-2 two-type model with strictly positive mean matrices.
pub fn periodic_two_type() -> BranchingModel {
    BranchingModel::periodic(vec![
        vec![
            two(&[([0, 0], 0.3), ([2, 0], 0.2), ([1, 1], 0.3), ([0, 2], 0.2)]),
            two(&[([0, 0], 0.4), ([1, 1], 0.3), ([2, 1], 0.1), ([0, 2], 0.2)]),
        ],
        vec![
            two(&[([0, 0], 0.5), ([3, 0], 0.1), ([1, 2], 0.2), ([0, 2], 0.2)]),
            two(&[([0, 0], 0.45), ([2, 0], 0.25), ([1, 3], 0.1), ([0, 1], 0.2)]),
        ],
    ])
    .unwrap()
}

/// Two-type model whose mean matrix has unit row sums, so `Λ_n ≡ 1`.
pub fn critical_two_type() -> BranchingModel {
    BranchingModel::constant(vec![
        two(&[([0, 0], 0.5), ([2, 0], 0.25), ([0, 2], 0.125), ([1, 1], 0.125)]),
        two(&[([0, 0], 0.5), ([2, 0], 0.375), ([0, 2], 0.125)]),
    ])
    .unwrap()
}

pub fn ct_constant(rate: f64, law: OffspringLaw) -> CtModel {
    CtModel::constant(vec![rate], vec![law]).unwrap()
}

/// Two-type model whose rates and laws switch at half-integer times, period 1.
pub fn ct_seasonal() -> CtModel {
    CtModel::new(
        2,
        vec![
            CtPiece {
                start: 0.0,
                rates: vec![1.5, 1.0],
                laws: vec![
                    two(&[([0, 0], 0.4), ([2, 0], 0.3), ([1, 1], 0.3)]),
                    two(&[([0, 0], 0.5), ([1, 1], 0.3), ([0, 2], 0.2)]),
                ],
            },
            CtPiece {
                start: 0.5,
                rates: vec![0.5, 2.0],
                laws: vec![
                    two(&[([0, 0], 0.5), ([2, 0], 0.2), ([1, 1], 0.3)]),
                    two(&[([0, 0], 0.45), ([1, 1], 0.35), ([0, 2], 0.2)]),
                ],
            },
        ],
        CtTail::Periodic { period: 1.0 },
    )
    .unwrap()
}

/// Exact pmf of `Z_n` for a one-type model started from one particle.
pub fn brute_force_pmf(model: &BranchingModel, n: usize) -> Vec<f64> {
    let mut pmf = vec![0.0, 1.0];
    for step in 0..n {
        let law: Vec<(usize, f64)> = model
            .law(step, 0)
            .atoms()
            .iter()
            .map(|a| (a.offspring[0] as usize, a.p))
            .collect();
        let max_child = law.iter().map(|a| a.0).max().unwrap();
        let mut next = vec![0.0; (pmf.len() - 1) * max_child + 1];
        let mut power = vec![1.0];
        for &pk in &pmf {
            for (i, &q) in power.iter().enumerate() {
                next[i] += pk * q;
            }
            let mut grown = vec![0.0; power.len() + max_child];
            for (i, &q) in power.iter().enumerate() {
                for &(c, p) in &law {
                    grown[i + c] += q * p;
                }
            }
            power = grown;
        }
        pmf = next;
    }
    pmf
}

pub fn pmf_mean_var(pmf: &[f64]) -> (f64, f64) {
    let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let var = pmf.iter().enumerate().map(|(k, p)| (k as f64 - mean).powi(2) * p).sum();
    (mean, var)
}
