//! The continuous-time process observed at integer times.
//!
//! The law of `Z_{n+1}` given `Z_n = e_j` is computed by uniformization of
//! the population chain restricted to `{a : ‖a‖₁ ≤ K}`, doubling `K` until
//! the mass escaping the lattice is negligible.

use std::collections::HashMap;

use serde::Serialize;

use super::{CtModel, CtTail};
use crate::error::{Error, Result};
use crate::model::{Atom, BranchingModel, Epoch, OffspringLaw, Tail, DEFAULT_SUPPORT_CAP};

/// Largest `λδ` per uniformization sub-step.
const MAX_POISSON_MEAN: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkeletonReport {
    /// Largest lattice bound `K` any unit-time law required.
    pub lattice_bound: u32,
    /// Largest mass dropped from any law before renormalizing.
    pub truncated_mass: f64,
    pub max_support: usize,
}

struct Lattice {
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl Lattice {
    fn new(d: usize, bound: u32) -> Result<Self> {
        let mut states = vec![Vec::new()];
        for _ in 0..d {
            states = states
                .into_iter()
                .flat_map(|s: Vec<u32>| {
                    let used: u32 = s.iter().sum();
                    (0..=bound - used).map(move |k| [s.clone(), vec![k]].concat())
                })
                .collect();
            if states.len() > DEFAULT_SUPPORT_CAP {
                return Err(Error::SupportCap { what: "skeleton lattice".into(), cap: DEFAULT_SUPPORT_CAP });
            }
        }
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(Self { states, index })
    }
}

/// Sparse generator of the lattice chain while `rates`/`laws` are in force.
struct Transitions {
    /// `(from, to, rate)` for moves that stay on the lattice.
    moves: Vec<(usize, usize, f64)>,
    outflow: Vec<f64>,
    max_outflow: f64,
}

impl Transitions {
    fn new(lattice: &Lattice, rates: &[f64], laws: &[OffspringLaw]) -> Self {
        let mut moves = Vec::new();
        let mut outflow = vec![0.0; lattice.states.len()];
        for (from, a) in lattice.states.iter().enumerate() {
            for (j, (&rate, law)) in rates.iter().zip(laws).enumerate() {
                if a[j] == 0 {
                    continue;
                }
                let base = a[j] as f64 * rate;
                outflow[from] += base;
                for atom in law.atoms() {
                    let mut b = a.clone();
                    b[j] -= 1;
                    for (x, &y) in b.iter_mut().zip(&atom.offspring) {
                        *x += y;
                    }
                    if let Some(&to) = lattice.index.get(&b) {
                        moves.push((from, to, base * atom.p));
                    }
                }
            }
        }
        let max_outflow = outflow.iter().fold(0.0, |a: f64, &b| a.max(b));
        Self { moves, outflow, max_outflow }
    }

    /// `π ← π e^{Qτ}` with mass leaving the lattice dropped.
    fn evolve(&self, pi: &mut Vec<f64>, tau: f64) {
        if self.max_outflow == 0.0 || tau <= 0.0 {
            return;
        }
        let lam = self.max_outflow;
        let steps = (lam * tau / MAX_POISSON_MEAN).ceil().max(1.0) as usize;
        let mu = lam * tau / steps as f64;
        for _ in 0..steps {
            let mut term = pi.clone();
            let mut weight = (-mu).exp();
            let mut acc: Vec<f64> = term.iter().map(|x| x * weight).collect();
            let mut cumulative = weight;
            let mut m = 0usize;
            while 1.0 - cumulative > 1e-17 && m < 200 {
                m += 1;
                let mut next: Vec<f64> = term
                    .iter()
                    .zip(&self.outflow)
                    .map(|(x, o)| x * (1.0 - o / lam))
                    .collect();
                for &(from, to, r) in &self.moves {
                    next[to] += term[from] * r / lam;
                }
                term = next;
                weight *= mu / m as f64;
                cumulative += weight;
                acc.iter_mut().zip(&term).for_each(|(a, t)| *a += weight * t);
            }
            *pi = acc;
        }
    }
}

/// Unit-time law of a single type-`j` particle started at time `n`.
fn unit_law(ct: &CtModel, n: usize, j: usize, mass_tol: f64) -> Result<(OffspringLaw, u32, f64)> {
    let d = ct.d();
    let (a, b) = (n as f64, n as f64 + 1.0);
    let cuts: Vec<f64> = std::iter::once(a)
        .chain(ct.breakpoints(a, b))
        .chain(std::iter::once(b))
        .collect();
    let mut bound = 16u32;
    loop {
        let lattice = Lattice::new(d, bound)?;
        let mut start = vec![0u32; d];
        start[j] = 1;
        let mut pi = vec![0.0; lattice.states.len()];
        pi[lattice.index[&start]] = 1.0;
        for w in cuts.windows(2) {
            let piece = ct.piece_at(0.5 * (w[0] + w[1]));
            Transitions::new(&lattice, &piece.rates, &piece.laws).evolve(&mut pi, w[1] - w[0]);
        }
        let prune = mass_tol * 1e-6;
        let atoms: Vec<Atom> = lattice
            .states
            .iter()
            .zip(&pi)
            .filter(|(_, &p)| p > prune)
            .map(|(s, &p)| Atom { offspring: s.clone(), p })
            .collect();
        let mass: f64 = atoms.iter().map(|a| a.p).sum();
        let lost = (1.0 - mass).max(0.0);
        if lost < mass_tol / 2.0 {
            let atoms = atoms.into_iter().map(|a| Atom { p: a.p / mass, ..a }).collect();
            let law = OffspringLaw::new(d, atoms, &format!("skeleton step {n} type {}", j + 1))?;
            return Ok((law, bound, lost));
        }
        bound = bound.checked_mul(2).ok_or_else(|| Error::domain("skeleton lattice bound overflow"))?;
    }
}

/// Discrete-time model of `Z_0, Z_1, Z_2, …` for a continuous-time model.
pub fn embedded_skeleton(ct: &CtModel, mass_tol: f64) -> Result<(BranchingModel, SkeletonReport)> {
    if !(mass_tol > 0.0 && mass_tol <= 1e-6) {
        return Err(Error::domain(format!("mass_tol {mass_tol} outside (0, 1e-6]")));
    }
    let (steps, tail) = match ct.tail() {
        CtTail::RepeatLast => {
            let last = ct.pieces().last().expect("nonempty").start;
            (last.ceil() as usize + 1, Tail::RepeatLast)
        }
        CtTail::Periodic { period } => {
            let p = period.round();
            if (period - p).abs() > 1e-12 || p < 1.0 {
                return Err(Error::domain(format!(
                    "integer-time skeleton needs an integer period, got {period}"
                )));
            }
            (p as usize, Tail::Periodic { period: p as usize })
        }
    };
    let mut report = SkeletonReport { lattice_bound: 0, truncated_mass: 0.0, max_support: 0 };
    let mut schedule = Vec::with_capacity(steps);
    for n in 0..steps {
        let mut laws = Vec::with_capacity(ct.d());
        for j in 0..ct.d() {
            let (law, bound, lost) = unit_law(ct, n, j, mass_tol)?;
            report.lattice_bound = report.lattice_bound.max(bound);
            report.truncated_mass = report.truncated_mass.max(lost);
            report.max_support = report.max_support.max(law.atoms().len());
            laws.push(law);
        }
        schedule.push(Epoch { start: n, laws });
    }
    Ok((BranchingModel::new(ct.d(), schedule, tail)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_unit_law_matches_closed_form() {
        // F_t(s) = 1 − (1−s)/(1 + t(1−s)/2) for ρ = 1 and {0:½, 2:½}
        let ct = CtModel::constant(vec![1.0], vec![OffspringLaw::univariate(&[(0, 0.5), (2, 0.5)]).unwrap()])
            .unwrap();
        let (m, r) = embedded_skeleton(&ct, 1e-9).unwrap();
        assert_eq!(m.tail(), Tail::RepeatLast);
        for s in [0.0, 0.3, 0.9] {
            let exact = 1.0 - (1.0 - s) / (1.0 + 0.5 * (1.0 - s));
            assert!((m.pgf(0, &[s]).unwrap()[0] - exact).abs() < 1e-9);
        }
        assert!(r.truncated_mass < 5e-10);
        assert!((m.mean_matrix(0)[(0, 0)] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn non_integer_period_is_rejected() {
        let law = OffspringLaw::univariate(&[(0, 0.5), (2, 0.5)]).unwrap();
        let ct = CtModel::new(
            1,
            vec![super::super::CtPiece { start: 0.0, rates: vec![1.0], laws: vec![law] }],
            CtTail::Periodic { period: 1.5 },
        )
        .unwrap();
        assert!(embedded_skeleton(&ct, 1e-9).is_err());
    }
}
