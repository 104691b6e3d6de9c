//! Poisson structure of the extended phase space and the bracket-driven
//! equations of motion.

pub mod bracket;
pub mod generic;
pub mod hamiltonian;
pub mod moyal;

use num_rational::Ratio;

pub use bracket::{bracket, BracketTable, MomentCombination};
pub use generic::{generic_rhs, poisson_tensor, quantum_hamiltonian, GenericField};
pub use hamiltonian::{FreeCircle, FreeSphere, HamiltonianModel, HarmonicOscillator, Makarov, ThetaPotential};

/// Exact coefficient type of the bracket algebra.
pub type Rational = Ratio<i64>;
