//! Multi-type branching processes with time-dependent offspring laws.
//!
//! The crate is organized around one pipeline:
//!
//! * [`model`] holds offspring laws, schedules, generating-function evaluation,
//!   assumption checks, the skip-generations transform and the covariance
//!   recursion.
//! * [`spectral`] builds the generalized Perron-Frobenius sequences
//!   `v_n, u_n, λ_n, λ̃_n` with a Hilbert-metric error certificate.
//! * [`genfun`] composes generating functions exactly and tabulates the
//!   survival series `Ξ_n`, `Γ_n` and `α(n, s)`.
//! * [`classify`] decides survival / extinction with exponential limit /
//!   extinction without it.
//! * [`simulate`] runs seeded Monte Carlo ensembles in discrete and
//!   continuous time and integrates the first-moment ODE.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the `parallel`
//! feature disabled every loop runs serially and produces identical output.

pub mod classify;
pub mod error;
pub mod exec;
pub mod genfun;
pub mod linalg;
pub mod model;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{BranchingModel, OffspringLaw, Tail};

/// Version string echoed into every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
