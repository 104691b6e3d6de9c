//! Second-order moment ("momentous") dynamics for a quantum particle confined to
//! a circle or a sphere, optionally in the Makarov ring-shaped potential.
//!
//! The state is a set of classical expectation values plus the ten (three on the
//! circle) Weyl-ordered central moments of order two. Everything numerical is
//! generic over [`Scalar`]; the `*64` aliases below pin it to `f64`.

pub mod algebra;
pub mod analysis;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod initial;
pub mod integrator;
pub mod quadrature;
pub mod reproduction;
pub mod scalar;
pub mod special;
pub mod state;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use algebra::{BracketTable, HamiltonianModel, Rational};
pub use dynamics::{MomentPolicy, SystemKind, SystemTag};
pub use ensemble::{EnsembleResult, SweepSpec};
pub use initial::{CorrelationPolicy, GaussianSpec};
pub use integrator::{IntegratorConfig, Trajectory};
pub use state::{MomentIndex, MomentState, Mode, SystemParams, TerminationStatus, TerminationTag};

pub type MomentState64 = MomentState<f64>;
pub type SystemParams64 = SystemParams<f64>;
pub type GaussianSpec64 = GaussianSpec<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type EnsembleResult64 = EnsembleResult<f64>;
pub type SweepSpec64 = SweepSpec<f64>;
