//! Hand-written right-hand sides and energies for the circle, the free sphere
//! and the sphere in the Makarov potential.
//!
//! With `mu = 1/(m R^2)` and `u = 1/sin^2(theta)` the sphere quantum Hamiltonian is
//!
//! ```text
//! H_Q = mu/2 [p_t^2 + p_f^2 u + 1/2 p_f^2 u'' G2000 + 2 p_f u' G1001 + G0200 + u G0002]
//!     + V + 1/2 V'' G2000
//! ```
//!
//! and the moment equations follow from the second-order bracket algebra with
//! the four moment forces `h2000 = mu p_f^2 u''/4 + V''/2`, `h1001 = mu p_f u'`,
//! `h0200 = mu/2`, `h0002 = mu u/2`.

use serde::{Deserialize, Serialize};

use crate::algebra::hamiltonian::{Makarov, PolarTrig};
use crate::error::{Error, Result};
use crate::integrator::VectorField;
use crate::scalar::Scalar;
use crate::state::{slot, Mode, MomentState, SystemParams};

/// Trajectories stop once `|sin(theta)|` drops below this.
pub const DEFAULT_SIN_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemTag {
    CircleFree,
    SphereFree,
    SphereMakarov,
}

impl SystemTag {
    pub fn mode(self) -> Mode {
        match self {
            SystemTag::CircleFree => Mode::Circle,
            SystemTag::SphereFree | SystemTag::SphereMakarov => Mode::Sphere,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemTag::CircleFree => "circle_free",
            SystemTag::SphereFree => "sphere_free",
            SystemTag::SphereMakarov => "sphere_makarov",
        }
    }
}

/// How moments enter a run. `Frozen` and `Zeroed` are the two classical
/// comparison modes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentPolicy {
    #[default]
    Evolve,
    /// Classical values feel the initial moments, which never change.
    Frozen,
    /// Moments are treated as zero: plain classical motion.
    Zeroed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemKind {
    pub tag: SystemTag,
    pub moment_policy: MomentPolicy,
}

impl SystemKind {
    pub fn new(tag: SystemTag, moment_policy: MomentPolicy) -> Self {
        SystemKind { tag, moment_policy }
    }

    pub fn mode(&self) -> Mode {
        self.tag.mode()
    }
}

fn check_mode<T>(kind: &SystemKind, state: &MomentState<T>) -> Result<()> {
    if kind.mode() != state.mode {
        return Err(Error::ModeMismatch { expected: kind.mode().name(), found: state.mode.name() });
    }
    Ok(())
}

/// Evaluates the right-hand side into `dy` for a flat state `y`.
pub fn rhs_into<T: Scalar>(
    kind: &SystemKind,
    params: &SystemParams<T>,
    sin_floor: T,
    y: &[T],
    dy: &mut [T],
) -> Result<()> {
    let mu = params.inv_inertia();
    let evolve = kind.moment_policy == MomentPolicy::Evolve;
    let zeroed = kind.moment_policy == MomentPolicy::Zeroed;
    match kind.tag {
        SystemTag::CircleFree => {
            let g = if zeroed { [T::zero(); 3] } else { [y[2], y[3], y[4]] };
            dy[0] = mu * y[1];
            dy[1] = T::zero();
            if evolve {
                dy[2] = T::lit(2.0) * mu * g[slot::G11];
                dy[3] = mu * g[slot::G02];
            } else {
                dy[2] = T::zero();
                dy[3] = T::zero();
            }
            dy[4] = T::zero();
        }
        SystemTag::SphereFree | SystemTag::SphereMakarov => {
            let tr = PolarTrig::new(y[0], sin_floor)?;
            let v = if kind.tag == SystemTag::SphereMakarov {
                Makarov::new(params, sin_floor).from_trig(&tr)
            } else {
                [T::zero(); 5]
            };
            let mut g = [T::zero(); 10];
            if !zeroed {
                g.copy_from_slice(&y[4..14]);
            }
            sphere_rhs(mu, &tr, &v, y[1], y[3], &g, evolve, dy);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sphere_rhs<T: Scalar>(mu: T, tr: &PolarTrig<T>, v: &[T; 5], pt: T, pp: T, g: &[T; 10], evolve: bool, dy: &mut [T]) {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let [u0, u1, u2, u3, _] = tr.u;

    dy[0] = mu * pt;
    dy[1] = -(half * mu * (pp * pp * u1 + half * pp * pp * u3 * g[slot::G2000] + two * pp * u2 * g[slot::G1001] + u1 * g[slot::G0002])
        + v[1]
        + half * v[3] * g[slot::G2000]);
    dy[2] = mu * (pp * u0 + half * pp * u2 * g[slot::G2000] + u1 * g[slot::G1001]);
    dy[3] = T::zero();

    let m = &mut dy[4..14];
    if !evolve {
        m.iter_mut().for_each(|x| *x = T::zero());
        return;
    }
    let h2000 = mu * pp * pp * u2 / four + half * v[2];
    let h1001 = mu * pp * u1;
    let h0200 = half * mu;
    let h0002 = half * mu * u0;

    m[slot::G2000] = four * g[slot::G1100] * h0200;
    m[slot::G1100] = -two * g[slot::G2000] * h2000 + two * g[slot::G0200] * h0200 - g[slot::G1001] * h1001;
    m[slot::G1010] = two * g[slot::G0110] * h0200 + two * g[slot::G1001] * h0002 + g[slot::G2000] * h1001;
    m[slot::G1001] = two * g[slot::G0101] * h0200;
    m[slot::G0200] = -four * g[slot::G1100] * h2000 - two * g[slot::G0101] * h1001;
    m[slot::G0110] = -two * g[slot::G1010] * h2000 + two * g[slot::G0101] * h0002 + (g[slot::G1100] - g[slot::G0011]) * h1001;
    m[slot::G0101] = -two * g[slot::G1001] * h2000 - g[slot::G0002] * h1001;
    m[slot::G0020] = four * g[slot::G0011] * h0002 + two * g[slot::G1010] * h1001;
    m[slot::G0011] = two * g[slot::G0002] * h0002 + g[slot::G1001] * h1001;
    m[slot::G0002] = T::zero();
}

/// Time derivative of the full state.
pub fn rhs<T: Scalar>(kind: &SystemKind, state: &MomentState<T>, params: &SystemParams<T>) -> Result<Vec<T>> {
    check_mode(kind, state)?;
    state.check_shape()?;
    let y = state.to_vec();
    let mut dy = vec![T::zero(); y.len()];
    rhs_into(kind, params, T::lit(DEFAULT_SIN_FLOOR), &y, &mut dy)?;
    Ok(dy)
}

/// `H_Q` (or its classical value under [`MomentPolicy::Zeroed`]).
pub fn energy<T: Scalar>(kind: &SystemKind, state: &MomentState<T>, params: &SystemParams<T>) -> Result<T> {
    check_mode(kind, state)?;
    energy_of_slice(kind, params, T::lit(DEFAULT_SIN_FLOOR), &state.to_vec())
}

pub fn energy_of_slice<T: Scalar>(kind: &SystemKind, params: &SystemParams<T>, sin_floor: T, y: &[T]) -> Result<T> {
    let mu = params.inv_inertia();
    let half = T::lit(0.5);
    let zeroed = kind.moment_policy == MomentPolicy::Zeroed;
    match kind.tag {
        SystemTag::CircleFree => {
            let g02 = if zeroed { T::zero() } else { y[2 + slot::G02] };
            Ok(half * mu * (y[1] * y[1] + g02))
        }
        SystemTag::SphereFree | SystemTag::SphereMakarov => {
            let tr = PolarTrig::new(y[0], sin_floor)?;
            let mut g = [T::zero(); 10];
            if !zeroed {
                g.copy_from_slice(&y[4..14]);
            }
            let (pt, pp) = (y[1], y[3]);
            let [u0, u1, u2, _, _] = tr.u;
            let mut h = half
                * mu
                * (pt * pt + pp * pp * u0 + half * pp * pp * u2 * g[slot::G2000] + T::lit(2.0) * pp * u1 * g[slot::G1001]
                    + g[slot::G0200]
                    + u0 * g[slot::G0002]);
            if kind.tag == SystemTag::SphereMakarov {
                let v = Makarov::new(params, sin_floor).from_trig(&tr);
                h += v[0] + half * v[2] * g[slot::G2000];
            }
            Ok(h)
        }
    }
}

/// Makarov potential with its second-order moment correction,
/// `V + G2000/(8 R^2 sin^4) (gamma (23 cos + cos 3theta) + 8 beta (2 + cos 2theta))`.
pub fn effective_potential<T: Scalar>(theta: T, g2000: T, params: &SystemParams<T>) -> Result<T> {
    params.validate()?;
    let (s, c) = theta.sin_cos();
    let floor = T::lit(DEFAULT_SIN_FLOOR);
    if !(s.abs() > floor) {
        return Err(Error::Singularity { sin_theta: s.to_f64_lossy(), floor: DEFAULT_SIN_FLOOR });
    }
    let r2 = params.radius * params.radius;
    let s2 = s * s;
    let v = -params.alpha / params.radius + (params.beta + params.gamma * c) / (r2 * s2);
    let l = T::lit;
    let corr = g2000 / (l(8.0) * r2 * s2 * s2)
        * (params.gamma * (l(23.0) * c + (l(3.0) * theta).cos()) + l(8.0) * params.beta * (l(2.0) + (l(2.0) * theta).cos()));
    Ok(v + corr)
}

/// A system bound to its parameters, ready for integration.
#[derive(Clone, Copy, Debug)]
pub struct Dynamics<T> {
    pub kind: SystemKind,
    pub params: SystemParams<T>,
    pub sin_floor: T,
}

impl<T: Scalar> VectorField<T> for Dynamics<T> {
    fn dim(&self) -> usize {
        self.kind.mode().dim()
    }

    fn eval(&self, _t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        rhs_into(&self.kind, &self.params, self.sin_floor, y, dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{generic_rhs, BracketTable, FreeCircle, FreeSphere};
    use crate::algebra::hamiltonian::ThetaPotential;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn reference_state(a: f64) -> MomentState<f64> {
        let mut s = MomentState::zeros(Mode::Sphere);
        s.classical = vec![FRAC_PI_2, a, 0.0, 10.0];
        s.moments[slot::G2000] = 0.0475;
        s.moments[slot::G0200] = 5.26316;
        s.moments[slot::G0020] = 0.05;
        s.moments[slot::G0002] = 5.0;
        s
    }

    fn kind(tag: SystemTag, p: MomentPolicy) -> SystemKind {
        SystemKind::new(tag, p)
    }

    #[test]
    fn equatorial_classical_motion() {
        let mut s = reference_state(1.0);
        s.moments.iter_mut().for_each(|g| *g = 0.0);
        let d = rhs(&kind(SystemTag::SphereFree, MomentPolicy::Zeroed), &s, &SystemParams::default()).unwrap();
        assert_eq!(&d[..4], &[1.0, d[1], 10.0, 0.0]);
        assert!(d[1].abs() < 1e-13);
    }

    #[test]
    fn reference_state_derivatives() {
        let d = rhs(&kind(SystemTag::SphereFree, MomentPolicy::Evolve), &reference_state(1.0), &SystemParams::default()).unwrap();
        assert_eq!(d[4 + slot::G2000], 0.0);
        assert_eq!(d[3], 0.0);
        assert_eq!(d[4 + slot::G0002], 0.0);
    }

    #[test]
    fn makarov_equatorial_force() {
        let p = SystemParams { beta: 2.0, gamma: -1.9, ..SystemParams::default() };
        let mut s = reference_state(1.0);
        s.moments.iter_mut().for_each(|g| *g = 0.0);
        let d = rhs(&kind(SystemTag::SphereMakarov, MomentPolicy::Zeroed), &s, &p).unwrap();
        assert!((d[1] - (-1.9)).abs() < 1e-13, "{}", d[1]);
    }

    #[test]
    fn energies() {
        let p = SystemParams::default();
        let c = MomentState { mode: Mode::Circle, classical: vec![0.0, 1.0], moments: vec![0.05, 0.0, 5.0] };
        assert_eq!(energy(&kind(SystemTag::CircleFree, MomentPolicy::Evolve), &c, &p).unwrap(), 3.0);
        let e = energy(&kind(SystemTag::SphereFree, MomentPolicy::Evolve), &reference_state(1.0), &p).unwrap();
        assert!((e - 58.00658).abs() < 1e-12);
        let pm = SystemParams { beta: 2.0, gamma: -1.9, ..SystemParams::default() };
        let e = energy(&kind(SystemTag::SphereMakarov, MomentPolicy::Zeroed), &reference_state(1.0), &pm).unwrap();
        assert!((e - (0.5 * (1.0 + 100.0) + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn effective_potential_cases() {
        let p = SystemParams { beta: 2.0, gamma: -1.9, alpha: 0.5, ..SystemParams::default() };
        let v0 = effective_potential(1.1, 0.0, &p).unwrap();
        let direct = -0.5 + (2.0 - 1.9 * 1.1f64.cos()) / 1.1f64.sin().powi(2);
        assert!((v0 - direct).abs() < 1e-14);
        let at_eq = effective_potential(FRAC_PI_2, 0.3, &p).unwrap() - effective_potential(FRAC_PI_2, 0.0, &p).unwrap();
        assert!((at_eq - 0.3 * 2.0).abs() < 1e-14);
        assert!(effective_potential(0.0, 0.1, &p).is_err());
    }

    #[test]
    fn rhs_rejects_pole() {
        let mut s = reference_state(1.0);
        s.classical[0] = 1e-4;
        assert!(matches!(
            rhs(&kind(SystemTag::SphereFree, MomentPolicy::Evolve), &s, &SystemParams::default()),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn circle_rhs_matches_generic() {
        let p = SystemParams { mass: 2.0, ..SystemParams::default() };
        let s = MomentState { mode: Mode::Circle, classical: vec![0.3, 1.5], moments: vec![0.05, 0.1, 5.2] };
        let a = rhs(&kind(SystemTag::CircleFree, MomentPolicy::Evolve), &s, &p).unwrap();
        let t = BracketTable::new(Mode::Circle).unwrap();
        let b = generic_rhs(&FreeCircle::new(&p), None, &t, &s, &p).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn makarov_reduces_to_free(th in 0.3f64..2.8, pt in -5.0f64..5.0, pp in -10.0f64..10.0,
                                   g in proptest::collection::vec(-1.0f64..1.0, 10)) {
            let mut s = reference_state(pt);
            s.classical[0] = th;
            s.classical[3] = pp;
            s.moments = g;
            let p = SystemParams { alpha: 0.7, ..SystemParams::default() };
            let a = rhs(&kind(SystemTag::SphereMakarov, MomentPolicy::Evolve), &s, &p).unwrap();
            let b = rhs(&kind(SystemTag::SphereFree, MomentPolicy::Evolve), &s, &p).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn second_derivative_matches_closed_correction(th in 0.2f64..2.9, beta in 0.0f64..3.0, gamma in -2.0f64..2.0) {
            let p = SystemParams { beta, gamma, ..SystemParams::default() };
            let v = Makarov::new(&p, 1e-3).derivatives(th).unwrap();
            let corr = effective_potential(th, 1.0, &p).unwrap() - effective_potential(th, 0.0, &p).unwrap();
            prop_assert!((0.5 * v[2] - corr).abs() <= 1e-8 * corr.abs().max(1.0));
        }

        #[test]
        fn frozen_and_zeroed_policies(th in 0.3f64..2.8, pt in -3.0f64..3.0) {
            let mut s = reference_state(pt);
            s.classical[0] = th;
            let p = SystemParams::default();
            let f = rhs(&kind(SystemTag::SphereFree, MomentPolicy::Frozen), &s, &p).unwrap();
            let e = rhs(&kind(SystemTag::SphereFree, MomentPolicy::Evolve), &s, &p).unwrap();
            prop_assert_eq!(&f[..4], &e[..4]);
            prop_assert!(f[4..].iter().all(|&x| x == 0.0));
            let z = rhs(&kind(SystemTag::SphereFree, MomentPolicy::Zeroed), &s, &p).unwrap();
            let mut c = s.clone();
            c.moments.iter_mut().for_each(|g| *g = 0.0);
            let t = BracketTable::new(Mode::Sphere).unwrap();
            let g = generic_rhs(&FreeSphere::new(&p, 1e-3), None, &t, &c, &p).unwrap();
            for k in 0..4 {
                prop_assert!((z[k] - g[k]).abs() <= 1e-12 * g[k].abs().max(1.0));
            }
        }
    }
}
