//! Time-dependent offspring laws and the quantities derived from them.
//!
//! A [`BranchingModel`] is a schedule of per-type [`OffspringLaw`]s plus a
//! [`Tail`] that extends the schedule to every generation. Laws are explicit
//! finite-support pmfs, so generating functions and their derivatives are
//! evaluated exactly.

mod covariance;
mod law;
mod skip;
mod validate;

pub use covariance::covariance_sequence;
pub use law::{Atom, OffspringLaw, MASS_TOL};
pub use skip::{skip_generations, SkipOptions, SkipReport, DEFAULT_SUPPORT_CAP};
pub use validate::{
    validate_model, AssumptionReport, AssumptionVerdict, CellCheck, Finiteness, ParentCheck,
    UniformCriticality, ValidationThresholds,
};

pub(crate) use law::check_unit_cube;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// How the schedule continues past its last entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Tail {
    /// The last entry's laws are used forever.
    RepeatLast,
    /// The explicit range `[0, last_start + 1)` is followed by endless
    /// repetitions of its final `period` generations.
    Periodic { period: usize },
}

/// The laws in force from generation `start` until the next entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Epoch {
    pub start: usize,
    pub laws: Vec<OffspringLaw>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchingModel {
    d: usize,
    schedule: Vec<Epoch>,
    tail: Tail,
}

impl BranchingModel {
    pub fn new(d: usize, schedule: Vec<Epoch>, tail: Tail) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("number of types must be at least 1"));
        }
        let Some(first) = schedule.first() else {
            return Err(Error::invalid("schedule is empty"));
        };
        if first.start != 0 {
            return Err(Error::invalid("first schedule entry must start at 0"));
        }
        for w in schedule.windows(2) {
            if w[1].start <= w[0].start {
                return Err(Error::invalid(format!(
                    "schedule starts not strictly increasing: {} then {}",
                    w[0].start, w[1].start
                )));
            }
        }
        for e in &schedule {
            if e.laws.len() != d {
                return Err(Error::invalid(format!(
                    "entry at {} has {} laws for {d} types",
                    e.start,
                    e.laws.len()
                )));
            }
            if let Some(law) = e.laws.iter().find(|l| l.dim() != d) {
                return Err(Error::invalid(format!(
                    "law of dimension {} at entry {}",
                    law.dim(),
                    e.start
                )));
            }
        }
        let model = Self { d, schedule, tail };
        if let Tail::Periodic { period } = tail {
            if period == 0 || period > model.explicit_len() {
                return Err(Error::invalid(format!(
                    "period {period} must be in 1..={}",
                    model.explicit_len()
                )));
            }
        }
        Ok(model)
    }

    /// Time-homogeneous model.
    pub fn constant(laws: Vec<OffspringLaw>) -> Result<Self> {
        let d = laws.first().map(OffspringLaw::dim).unwrap_or(0);
        Self::new(d, vec![Epoch { start: 0, laws }], Tail::RepeatLast)
    }

    /// Model cycling through `steps`, one generation each.
    pub fn periodic(steps: Vec<Vec<OffspringLaw>>) -> Result<Self> {
        let d = steps
            .first()
            .and_then(|l| l.first())
            .map(OffspringLaw::dim)
            .unwrap_or(0);
        let period = steps.len();
        let schedule = steps
            .into_iter()
            .enumerate()
            .map(|(start, laws)| Epoch { start, laws })
            .collect();
        Self::new(d, schedule, Tail::Periodic { period })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn schedule(&self) -> &[Epoch] {
        &self.schedule
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Length of the explicitly described range, `last_start + 1`.
    pub fn explicit_len(&self) -> usize {
        self.schedule.last().map_or(0, |e| e.start) + 1
    }

    /// `(t0, p)` such that the laws at `n ≥ t0` repeat with period `p`.
    pub fn eventual_period(&self) -> (usize, usize) {
        match self.tail {
            Tail::RepeatLast => (self.explicit_len() - 1, 1),
            Tail::Periodic { period } => (self.explicit_len() - period, period),
        }
    }

    /// Representative generation in `[0, explicit_len)` with the same laws as `n`.
    pub fn canonical_index(&self, n: usize) -> usize {
        let e = self.explicit_len();
        if n < e {
            return n;
        }
        match self.tail {
            Tail::RepeatLast => e - 1,
            Tail::Periodic { period } => e - period + (n - e) % period,
        }
    }

    pub fn laws_at(&self, n: usize) -> &[OffspringLaw] {
        let t = self.canonical_index(n);
        let idx = match self.schedule.binary_search_by(|e| e.start.cmp(&t)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        &self.schedule[idx].laws
    }

    pub fn law(&self, n: usize, j: usize) -> &OffspringLaw {
        &self.laws_at(n)[j]
    }

    /// `A_n(j, i)`: expected number of type-`i` children of a type-`j` parent at generation `n`.
    pub fn mean_matrix(&self, n: usize) -> Matrix {
        let mut a = Matrix::zeros(self.d, self.d);
        for (j, law) in self.laws_at(n).iter().enumerate() {
            for (i, m) in law.mean().into_iter().enumerate() {
                a[(j, i)] = m;
            }
        }
        a
    }

    /// Vector of generating functions `g_n(s)`.
    pub fn pgf(&self, n: usize, s: &[f64]) -> Result<Vec<f64>> {
        check_unit_cube(s, self.d)?;
        Ok(self.pgf_unchecked(n, s))
    }

    pub(crate) fn pgf_unchecked(&self, n: usize, s: &[f64]) -> Vec<f64> {
        self.laws_at(n).iter().map(|l| l.pgf_unchecked(s)).collect()
    }

    /// Model obtained by relabeling types: new type `perm[i]` is old type `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let d = self.d;
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (0..d).collect::<Vec<_>>() {
            return Err(Error::domain(format!("{perm:?} is not a permutation of 0..{d}")));
        }
        let schedule = self
            .schedule
            .iter()
            .map(|e| {
                let mut laws = e.laws.clone();
                for (i, law) in e.laws.iter().enumerate() {
                    laws[perm[i]] = law.permuted(perm);
                }
                Epoch { start: e.start, laws }
            })
            .collect();
        Self::new(d, schedule, self.tail)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawModel = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RawModel::from(self)).expect("model serializes")
    }

    /// Like [`to_json`](Self::to_json) with a free-form `meta` object, which loading ignores.
    pub fn to_json_with_meta(&self, meta: serde_json::Value) -> String {
        let raw = RawModel { meta: Some(meta), ..RawModel::from(self) };
        serde_json::to_string_pretty(&raw).expect("model serializes")
    }
}

/// On-disk form of a model.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    d: usize,
    schedule: Vec<RawEpoch>,
    tail: Tail,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEpoch {
    start: usize,
    laws: Vec<Vec<Atom>>,
}

impl TryFrom<RawModel> for BranchingModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let schedule = raw
            .schedule
            .into_iter()
            .map(|e| {
                let laws = e
                    .laws
                    .into_iter()
                    .enumerate()
                    .map(|(j, atoms)| {
                        OffspringLaw::new(raw.d, atoms, &format!("start {} type {}", e.start, j + 1))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Epoch { start: e.start, laws })
            })
            .collect::<Result<Vec<_>>>()?;
        BranchingModel::new(raw.d, schedule, raw.tail)
    }
}

impl From<&BranchingModel> for RawModel {
    fn from(m: &BranchingModel) -> Self {
        RawModel {
            d: m.d,
            schedule: m
                .schedule
                .iter()
                .map(|e| RawEpoch {
                    start: e.start,
                    laws: e.laws.iter().map(|l| l.atoms().to_vec()).collect(),
                })
                .collect(),
            tail: m.tail,
            meta: None,
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn uni(pairs: &[(u32, f64)]) -> OffspringLaw {
        OffspringLaw::univariate(pairs).unwrap()
    }

    pub fn law2(atoms: &[([u32; 2], f64)]) -> OffspringLaw {
        OffspringLaw::new(
            2,
            atoms
                .iter()
                .map(|(a, p)| Atom { offspring: a.to_vec(), p: *p })
                .collect(),
            "fixture",
        )
        .unwrap()
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

    /// Two-type model whose mean matrix has unit row sums.
    pub fn critical_two_type() -> BranchingModel {
        BranchingModel::constant(vec![
            law2(&[([0, 0], 0.5), ([2, 0], 0.25), ([0, 2], 0.125), ([1, 1], 0.125)]),
            law2(&[([0, 0], 0.5), ([2, 0], 0.375), ([0, 2], 0.125)]),
        ])
        .unwrap()
    }
}
