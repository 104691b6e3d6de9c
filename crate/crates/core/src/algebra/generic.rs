//! Equations of motion obtained from the Hamiltonian and the bracket structure
//! alone: `dy/dt = Pi(y) grad H_Q(y)`.

use super::bracket::BracketTable;
use super::hamiltonian::{Derivatives, HamiltonianModel, ThetaPotential, WithPotential};
use crate::error::{Error, Result};
use crate::integrator::VectorField;
use crate::scalar::Scalar;
use crate::state::{MomentIndex, MomentState, SystemParams};

/// Poisson tensor on `[classical.., moments..]`, row-major. Canonical blocks for
/// each `(q, p)` pair, zero coupling between classical values and moments, and
/// the moment block linear in the current moments.
pub fn poisson_tensor<T: Scalar>(state: &MomentState<T>, table: &BracketTable) -> Result<Vec<T>> {
    state.check_shape()?;
    if table.mode() != state.mode {
        return Err(Error::ModeMismatch { expected: table.mode().name(), found: state.mode.name() });
    }
    let mode = state.mode;
    let n = mode.dim();
    let nc = mode.classical_len();
    let nm = mode.moment_len();
    let mut pi = vec![T::zero(); n * n];
    for k in 0..mode.dof() {
        pi[(2 * k) * n + 2 * k + 1] = T::one();
        pi[(2 * k + 1) * n + 2 * k] = -T::one();
    }
    for a in 0..nm {
        for b in 0..nm {
            pi[(nc + a) * n + nc + b] = table.evaluate(a, b, &state.moments);
        }
    }
    Ok(pi)
}

/// Gradient of `H_Q = H(x) + 1/2 sum_ij H_ij C_ij` with respect to all state
/// components, where `C` is the covariance assembled from the moments.
pub fn quantum_gradient<T: Scalar>(d: &Derivatives<T>, state: &MomentState<T>) -> Vec<T> {
    let mode = state.mode;
    let nc = mode.classical_len();
    let half = T::lit(0.5);
    let mut grad = vec![T::zero(); mode.dim()];
    let pairs: Vec<(usize, usize)> = MomentIndex::all(mode).map(|i| i.pair()).collect();
    for k in 0..nc {
        let mut g = d.gradient[k];
        for (s, &(i, j)) in pairs.iter().enumerate() {
            let w = if i == j { half } else { T::one() };
            g += w * d.third(i, j, k) * state.moments[s];
        }
        grad[k] = g;
    }
    for (s, &(i, j)) in pairs.iter().enumerate() {
        let w = if i == j { half } else { T::one() };
        grad[nc + s] = w * d.hess(i, j);
    }
    grad
}

/// `H_Q` of a model at a state.
pub fn quantum_hamiltonian<T: Scalar>(model: &dyn HamiltonianModel<T>, state: &MomentState<T>) -> Result<T> {
    let d = model.derivatives(&state.classical)?;
    let half = T::lit(0.5);
    let mut h = d.value;
    for (s, idx) in MomentIndex::all(state.mode).enumerate() {
        let (i, j) = idx.pair();
        let w = if i == j { half } else { T::one() };
        h += w * d.hess(i, j) * state.moments[s];
    }
    Ok(h)
}

/// Time derivative of every state component for `H_Q` built from `model`
/// plus an optional polar potential.
pub fn generic_rhs<T: Scalar>(
    model: &dyn HamiltonianModel<T>,
    potential: Option<&dyn ThetaPotential<T>>,
    table: &BracketTable,
    state: &MomentState<T>,
    params: &SystemParams<T>,
) -> Result<Vec<T>> {
    params.validate()?;
    if model.mode() != state.mode {
        return Err(Error::ModeMismatch { expected: model.mode().name(), found: state.mode.name() });
    }
    let d = match potential {
        Some(p) => WithPotential { base: model, potential: p }.derivatives(&state.classical)?,
        None => model.derivatives(&state.classical)?,
    };
    let grad = quantum_gradient(&d, state);
    let pi = poisson_tensor(state, table)?;
    let n = state.mode.dim();
    Ok((0..n).map(|r| (0..n).fold(T::zero(), |acc, c| acc + pi[r * n + c] * grad[c])).collect())
}

/// Adapter exposing [`generic_rhs`] as an integrable vector field.
pub struct GenericField<'a, T> {
    pub model: &'a dyn HamiltonianModel<T>,
    pub potential: Option<&'a dyn ThetaPotential<T>>,
    pub table: &'a BracketTable,
    pub params: SystemParams<T>,
}

impl<T: Scalar> VectorField<T> for GenericField<'_, T> {
    fn dim(&self) -> usize {
        self.model.mode().dim()
    }

    fn eval(&self, _t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        let state = MomentState::from_slice(self.model.mode(), y)?;
        let v = generic_rhs(self.model, self.potential, self.table, &state, &self.params)?;
        dy.copy_from_slice(&v);
        Ok(())
    }
}
