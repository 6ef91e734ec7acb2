//! Seeded Monte Carlo in discrete and continuous time.
//!
//! Trajectory `r` of a run with master seed `seed` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `r`. Each trajectory owns its
//! generator, so ensembles are identical for serial and parallel execution.

mod ct;
mod discrete;
mod ode;
mod skeleton;
mod stats;

pub use ct::{simulate_ct, validate_ct, CtAssumptionReport, CtModel, CtPiece, CtTail};
pub use discrete::{run_ensemble, step_population};
pub use ode::{moment_ode, ooii_integral, MomentPath};
pub use skeleton::{embedded_skeleton, SkeletonReport};
pub use stats::{
    conditioned_stats, ks_exponential, sample_moments, ConditionedStats, SampleMoments,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const DEFAULT_PARTICLE_CAP: u64 = 10_000_000;

/// Generator for trajectory `r` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimOptions {
    pub initial: Vec<u64>,
    /// Largest total population a trajectory may reach.
    pub cap: u64,
    /// Keep the state after every generation (or at every integer time).
    pub record_trace: bool,
}

impl SimOptions {
    pub fn new(initial: Vec<u64>) -> Self {
        Self { initial, cap: DEFAULT_PARTICLE_CAP, record_trace: false }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Generations(usize),
    Time(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub state: Vec<u64>,
    pub survived: bool,
    /// The population passed the cap; `state` is the last state before that.
    pub capped: bool,
    /// States at generations (or integer times) `0, 1, …` when recorded.
    pub trace: Option<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ensemble {
    pub horizon: Horizon,
    pub seed: u64,
    pub options: SimOptions,
    pub trajectories: Vec<Trajectory>,
    pub capped: usize,
}

impl Ensemble {
    pub fn reps(&self) -> usize {
        self.trajectories.len()
    }

    pub fn d(&self) -> usize {
        self.options.initial.len()
    }

    pub fn survival_frequency(&self) -> f64 {
        let alive = self.trajectories.iter().filter(|t| t.survived).count();
        alive as f64 / self.reps() as f64
    }

    /// The ensemble seen at an earlier generation or integer time, from the traces.
    pub fn at_step(&self, k: usize) -> Option<Ensemble> {
        let trajectories = self
            .trajectories
            .iter()
            .map(|t| {
                let trace = t.trace.as_ref()?;
                let state = trace.get(k).or_else(|| t.capped.then(|| trace.last()).flatten())?;
                Some(Trajectory {
                    state: state.clone(),
                    survived: state.iter().any(|&x| x > 0),
                    capped: t.capped && k >= trace.len(),
                    trace: None,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        let horizon = match self.horizon {
            Horizon::Generations(_) => Horizon::Generations(k),
            Horizon::Time(_) => Horizon::Time(k as f64),
        };
        let capped = trajectories.iter().filter(|t| t.capped).count();
        Some(Ensemble { horizon, seed: self.seed, options: self.options.clone(), trajectories, capped })
    }
}

pub(crate) fn check_initial(initial: &[u64], d: usize) -> crate::Result<()> {
    if initial.len() != d {
        return Err(crate::Error::domain(format!(
            "initial population has {} entries, model has {d} types",
            initial.len()
        )));
    }
    Ok(())
}
