use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Tolerance on the total mass of an offspring law.
pub const MASS_TOL: f64 = 1e-12;

/// One atom of an offspring law: an offspring vector and its probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub offspring: Vec<u32>,
    pub p: f64,
}

/// Finite-support distribution of the offspring vector of one parent.
///
/// `pgf(s) = Σ p · Π s_i^{a_i}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct OffspringLaw {
    atoms: Vec<Atom>,
}

impl OffspringLaw {
    /// Validates probabilities, dimensions and distinctness. `location` names
    /// the law in error messages.
    pub fn new(d: usize, atoms: Vec<Atom>, location: &str) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid(format!("empty offspring law at {location}")));
        }
        let mut seen = HashSet::with_capacity(atoms.len());
        let mut mass = 0.0;
        for atom in &atoms {
            if atom.offspring.len() != d {
                return Err(Error::invalid(format!(
                    "offspring vector of length {} in a {d}-type model at {location}",
                    atom.offspring.len()
                )));
            }
            if !atom.p.is_finite() || atom.p < 0.0 {
                return Err(Error::invalid(format!(
                    "negative or non-finite probability {} at {location}",
                    atom.p
                )));
            }
            if !seen.insert(atom.offspring.clone()) {
                return Err(Error::invalid(format!(
                    "duplicate offspring vector {:?} at {location}",
                    atom.offspring
                )));
            }
            mass += atom.p;
        }
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::PmfMass {
                mass,
                location: location.to_string(),
            });
        }
        Ok(Self { atoms })
    }

    /// Convenience constructor for one-type laws: pairs of (count, probability).
    pub fn univariate(pairs: &[(u32, f64)]) -> Result<Self> {
        let atoms = pairs
            .iter()
            .map(|&(k, p)| Atom {
                offspring: vec![k],
                p,
            })
            .collect();
        Self::new(1, atoms, "univariate law")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].offspring.len()
    }

    /// Evaluates the generating function at `s ∈ [0,1]^d`.
    pub fn pgf(&self, s: &[f64]) -> Result<f64> {
        check_unit_cube(s, self.dim())?;
        Ok(self.pgf_unchecked(s))
    }

    pub(crate) fn pgf_unchecked(&self, s: &[f64]) -> f64 {
        self.atoms.iter().map(|a| a.p * monomial(&a.offspring, s)).sum()
    }

    /// `1 - pgf(1 - w)`, accurate to relative precision for small `w`.
    pub fn complement(&self, w: &[f64]) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let mut log_keep = 0.0;
                for (&k, &wi) in a.offspring.iter().zip(w) {
                    if k > 0 {
                        log_keep += k as f64 * (-wi).ln_1p();
                    }
                }
                a.p * -log_keep.exp_m1()
            })
            .sum()
    }

    /// Gradient of the generating function at `s`.
    pub fn gradient(&self, s: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        check_unit_cube(s, d)?;
        let mut g = vec![0.0; d];
        for a in &self.atoms {
            for i in 0..d {
                let k = a.offspring[i];
                if k == 0 {
                    continue;
                }
                let mut term = a.p * k as f64;
                for (m, &km) in a.offspring.iter().enumerate() {
                    let e = if m == i { km - 1 } else { km };
                    term *= s[m].powi(e as i32);
                }
                g[i] += term;
            }
        }
        Ok(g)
    }

    /// Matrix of mixed second partials of the generating function at `s`.
    pub fn hessian(&self, s: &[f64]) -> Result<Matrix> {
        let d = self.dim();
        check_unit_cube(s, d)?;
        Ok(self.hessian_unchecked(s))
    }

    pub(crate) fn hessian_unchecked(&self, s: &[f64]) -> Matrix {
        let d = self.dim();
        let mut h = Matrix::zeros(d, d);
        for a in &self.atoms {
            for i in 0..d {
                for k in i..d {
                    let (ai, ak) = (a.offspring[i], a.offspring[k]);
                    let coeff = if i == k {
                        ai as f64 * (ai as f64 - 1.0)
                    } else {
                        ai as f64 * ak as f64
                    };
                    if coeff == 0.0 {
                        continue;
                    }
                    let mut term = a.p * coeff;
                    for (m, &km) in a.offspring.iter().enumerate() {
                        let e = km - u32::from(m == i) - u32::from(m == k);
                        term *= s[m].powi(e as i32);
                    }
                    h[(i, k)] += term;
                }
            }
        }
        for i in 0..d {
            for k in 0..i {
                h[(i, k)] = h[(k, i)];
            }
        }
        h
    }

    /// Expected offspring count of each type.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d];
        for a in &self.atoms {
            for i in 0..d {
                m[i] += a.p * f64::from(a.offspring[i]);
            }
        }
        m
    }

    /// Covariance matrix of the offspring vector.
    pub fn covariance(&self) -> Matrix {
        let d = self.dim();
        let mean = self.mean();
        let mut c = Matrix::zeros(d, d);
        for a in &self.atoms {
            for i in 0..d {
                for k in 0..d {
                    c[(i, k)] += a.p
                        * (f64::from(a.offspring[i]) - mean[i])
                        * (f64::from(a.offspring[k]) - mean[k]);
                }
            }
        }
        c
    }

    /// `P(X = 0)`.
    pub fn prob_zero(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.offspring.iter().all(|&k| k == 0))
            .map(|a| a.p)
            .sum()
    }

    /// `P(X(i) ≥ 2)`.
    pub fn prob_at_least_two(&self, i: usize) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.offspring[i] >= 2)
            .fold(0.0, |s, a| s + a.p)
    }

    /// `E ‖X‖²` with the ℓ¹ norm.
    pub fn second_moment(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let n: f64 = a.offspring.iter().map(|&k| f64::from(k)).sum();
                a.p * n * n
            })
            .sum()
    }

    /// `E(X(i)² - X(i))`.
    pub fn factorial_moment(&self, i: usize) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let k = f64::from(a.offspring[i]);
                a.p * k * (k - 1.0)
            })
            .sum()
    }

    /// Largest total offspring count in the support.
    pub fn max_total(&self) -> u64 {
        self.atoms
            .iter()
            .map(|a| a.offspring.iter().map(|&k| u64::from(k)).sum())
            .max()
            .unwrap_or(0)
    }

    /// Relabels types: new type `perm[i]` is old type `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let mut off = vec![0; a.offspring.len()];
                for (i, &k) in a.offspring.iter().enumerate() {
                    off[perm[i]] = k;
                }
                Atom { offspring: off, p: a.p }
            })
            .collect();
        Self { atoms }
    }
}

fn monomial(a: &[u32], s: &[f64]) -> f64 {
    a.iter().zip(s).map(|(&k, &x)| x.powi(k as i32)).product()
}

pub(crate) fn check_unit_cube(s: &[f64], d: usize) -> Result<()> {
    if s.len() != d {
        return Err(Error::domain(format!(
            "argument has {} components, expected {d}",
            s.len()
        )));
    }
    if let Some(x) = s.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::domain(format!("component {x} outside [0,1]")));
    }
    Ok(())
}
