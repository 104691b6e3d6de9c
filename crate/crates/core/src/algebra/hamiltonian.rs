//! Classical Hamiltonians with analytic derivatives, consumed by the
//! bracket-driven right-hand side.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{Mode, SystemParams};

/// Value, gradient, Hessian and third-derivative tensor at a phase-space point.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivatives<T> {
    n: usize,
    pub value: T,
    pub gradient: Vec<T>,
    hessian: Vec<T>,
    third: Vec<T>,
}

impl<T: Scalar> Derivatives<T> {
    pub fn zeros(n: usize) -> Self {
        Derivatives {
            n,
            value: T::zero(),
            gradient: vec![T::zero(); n],
            hessian: vec![T::zero(); n * n],
            third: vec![T::zero(); n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn hess(&self, i: usize, j: usize) -> T {
        self.hessian[i * self.n + j]
    }

    pub fn third(&self, i: usize, j: usize, k: usize) -> T {
        self.third[(i * self.n + j) * self.n + k]
    }

    /// Sets a Hessian entry and its mirror.
    pub fn set_hess(&mut self, i: usize, j: usize, v: T) {
        self.hessian[i * self.n + j] = v;
        self.hessian[j * self.n + i] = v;
    }

    /// Sets a third derivative in all index permutations.
    pub fn set_third(&mut self, i: usize, j: usize, k: usize, v: T) {
        let n = self.n;
        for (a, b, c) in [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)] {
            self.third[(a * n + b) * n + c] = v;
        }
    }
}

/// A classical Hamiltonian `H(theta, p_theta[, phi, p_phi])`.
pub trait HamiltonianModel<T: Scalar>: Send + Sync {
    fn mode(&self) -> Mode;

    /// Derivatives up to total order three. Fails where the Hamiltonian is singular.
    fn derivatives(&self, x: &[T]) -> Result<Derivatives<T>>;
}

/// A potential depending on the polar angle only. Returns `V` and its first
/// four derivatives.
pub trait ThetaPotential<T: Scalar>: Send + Sync {
    fn derivatives(&self, theta: T) -> Result<[T; 5]>;
}

/// Free rotor on a circle, `H = p^2 / (2 m R^2)`.
#[derive(Clone, Copy, Debug)]
pub struct FreeCircle<T> {
    pub inv_inertia: T,
}

impl<T: Scalar> FreeCircle<T> {
    pub fn new(params: &SystemParams<T>) -> Self {
        FreeCircle { inv_inertia: params.inv_inertia() }
    }
}

impl<T: Scalar> HamiltonianModel<T> for FreeCircle<T> {
    fn mode(&self) -> Mode {
        Mode::Circle
    }

    fn derivatives(&self, x: &[T]) -> Result<Derivatives<T>> {
        let mu = self.inv_inertia;
        let p = x[1];
        let mut d = Derivatives::zeros(2);
        d.value = mu * p * p * T::lit(0.5);
        d.gradient[1] = mu * p;
        d.set_hess(1, 1, mu);
        Ok(d)
    }
}

/// One-dimensional oscillator `p^2/(2m) + m w^2 q^2 / 2`, laid out like the circle.
#[derive(Clone, Copy, Debug)]
pub struct HarmonicOscillator<T> {
    pub mass: T,
    pub omega: T,
}

impl<T: Scalar> HamiltonianModel<T> for HarmonicOscillator<T> {
    fn mode(&self) -> Mode {
        Mode::Circle
    }

    fn derivatives(&self, x: &[T]) -> Result<Derivatives<T>> {
        let k = self.mass * self.omega * self.omega;
        let half = T::lit(0.5);
        let mut d = Derivatives::zeros(2);
        d.value = x[1] * x[1] * half / self.mass + k * x[0] * x[0] * half;
        d.gradient[0] = k * x[0];
        d.gradient[1] = x[1] / self.mass;
        d.set_hess(0, 0, k);
        d.set_hess(1, 1, T::one() / self.mass);
        Ok(d)
    }
}

/// Trigonometric pieces shared by the sphere kinetic term and the Makarov potential.
#[derive(Clone, Copy, Debug)]
pub struct PolarTrig<T> {
    pub s: T,
    pub c: T,
    /// `1/sin^2`, `d/dtheta`, `d^2`, `d^3`, `d^4`.
    pub u: [T; 5],
    /// `cos/sin^2` and its first four derivatives.
    pub w: [T; 5],
}

impl<T: Scalar> PolarTrig<T> {
    pub fn new(theta: T, sin_floor: T) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        if !(s.abs() > sin_floor) {
            return Err(Error::Singularity { sin_theta: s.to_f64_lossy(), floor: sin_floor.to_f64_lossy() });
        }
        let l = T::lit;
        let is = s.recip();
        let is2 = is * is;
        let is3 = is2 * is;
        let is4 = is2 * is2;
        let is5 = is4 * is;
        let is6 = is3 * is3;
        let c2 = c * c;
        let c3 = c2 * c;
        let c4 = c2 * c2;
        let c5 = c4 * c;
        let u = [
            is2,
            l(-2.0) * c * is3,
            (l(2.0) + l(4.0) * c2) * is4,
            -(l(16.0) * c + l(8.0) * c3) * is5,
            (l(16.0) + l(88.0) * c2 + l(16.0) * c4) * is6,
        ];
        let w = [
            c * is2,
            -(T::one() + c2) * is3,
            (l(5.0) * c + c3) * is4,
            -(l(5.0) + l(18.0) * c2 + c4) * is5,
            (l(61.0) * c + l(58.0) * c3 + c5) * is6,
        ];
        Ok(PolarTrig { s, c, u, w })
    }
}

/// Free particle on a sphere, `H = (p_theta^2 + p_phi^2 / sin^2 theta) / (2 m R^2)`.
#[derive(Clone, Copy, Debug)]
pub struct FreeSphere<T> {
    pub inv_inertia: T,
    pub sin_floor: T,
}

impl<T: Scalar> FreeSphere<T> {
    pub fn new(params: &SystemParams<T>, sin_floor: T) -> Self {
        FreeSphere { inv_inertia: params.inv_inertia(), sin_floor }
    }
}

impl<T: Scalar> HamiltonianModel<T> for FreeSphere<T> {
    fn mode(&self) -> Mode {
        Mode::Sphere
    }

    fn derivatives(&self, x: &[T]) -> Result<Derivatives<T>> {
        let tr = PolarTrig::new(x[0], self.sin_floor)?;
        let mu = self.inv_inertia;
        let half = T::lit(0.5);
        let (pt, pp) = (x[1], x[3]);
        let u = tr.u;
        let mut d = Derivatives::zeros(4);
        d.value = half * mu * (pt * pt + pp * pp * u[0]);
        d.gradient[0] = half * mu * pp * pp * u[1];
        d.gradient[1] = mu * pt;
        d.gradient[3] = mu * pp * u[0];
        d.set_hess(0, 0, half * mu * pp * pp * u[2]);
        d.set_hess(0, 3, mu * pp * u[1]);
        d.set_hess(1, 1, mu);
        d.set_hess(3, 3, mu * u[0]);
        d.set_third(0, 0, 0, half * mu * pp * pp * u[3]);
        d.set_third(0, 0, 3, mu * pp * u[2]);
        d.set_third(0, 3, 3, mu * u[1]);
        Ok(d)
    }
}

/// Ring-shaped potential `-alpha/R + beta/(R^2 sin^2) + gamma cos/(R^2 sin^2)`.
#[derive(Clone, Copy, Debug)]
pub struct Makarov<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub radius: T,
    pub sin_floor: T,
}

impl<T: Scalar> Makarov<T> {
    pub fn new(params: &SystemParams<T>, sin_floor: T) -> Self {
        Makarov { alpha: params.alpha, beta: params.beta, gamma: params.gamma, radius: params.radius, sin_floor }
    }

    pub fn from_trig(&self, tr: &PolarTrig<T>) -> [T; 5] {
        let ir2 = (self.radius * self.radius).recip();
        let mut out = [T::zero(); 5];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (self.beta * tr.u[k] + self.gamma * tr.w[k]) * ir2;
        }
        out[0] -= self.alpha / self.radius;
        out
    }
}

impl<T: Scalar> ThetaPotential<T> for Makarov<T> {
    fn derivatives(&self, theta: T) -> Result<[T; 5]> {
        Ok(self.from_trig(&PolarTrig::new(theta, self.sin_floor)?))
    }
}

/// Adds a polar potential to a sphere Hamiltonian.
pub struct WithPotential<'a, T> {
    pub base: &'a dyn HamiltonianModel<T>,
    pub potential: &'a dyn ThetaPotential<T>,
}

impl<T: Scalar> HamiltonianModel<T> for WithPotential<'_, T> {
    fn mode(&self) -> Mode {
        self.base.mode()
    }

    fn derivatives(&self, x: &[T]) -> Result<Derivatives<T>> {
        let mut d = self.base.derivatives(x)?;
        let v = self.potential.derivatives(x[0])?;
        d.value += v[0];
        d.gradient[0] += v[1];
        let h = d.hess(0, 0) + v[2];
        d.set_hess(0, 0, h);
        let t = d.third(0, 0, 0) + v[3];
        d.set_third(0, 0, 0, t);
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd_check(model: &dyn HamiltonianModel<f64>, x: &[f64]) {
        let n = x.len();
        let d = model.derivatives(x).unwrap();
        let h = 1e-5;
        let shifted = |k: usize, s: f64| {
            let mut y = x.to_vec();
            y[k] += s;
            model.derivatives(&y).unwrap()
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0);
        for k in 0..n {
            let (p, m) = (shifted(k, h), shifted(k, -h));
            let g = (p.value - m.value) / (2.0 * h);
            assert!(close(g, d.gradient[k]), "grad {k}: {g} vs {}", d.gradient[k]);
            for i in 0..n {
                let hh = (p.gradient[i] - m.gradient[i]) / (2.0 * h);
                assert!(close(hh, d.hess(i, k)), "hess {i}{k}");
                for j in 0..n {
                    let t = (p.hess(i, j) - m.hess(i, j)) / (2.0 * h);
                    assert!(close(t, d.third(i, j, k)), "third {i}{j}{k}: {t} vs {}", d.third(i, j, k));
                }
            }
        }
    }

    #[test]
    fn singular_at_pole() {
        let m = FreeSphere { inv_inertia: 1.0, sin_floor: 1e-3 };
        assert!(matches!(m.derivatives(&[1e-4, 0.0, 0.0, 1.0]), Err(Error::Singularity { .. })));
    }

    #[test]
    fn makarov_fourth_derivative_by_differences() {
        let v = Makarov { alpha: 0.3, beta: 2.0, gamma: -1.9, radius: 1.3, sin_floor: 1e-3 };
        for th in [0.4f64, 1.0, 1.7, 2.6] {
            let h = 1e-5f64;
            let p = v.derivatives(th + h).unwrap();
            let m = v.derivatives(th - h).unwrap();
            let d = v.derivatives(th).unwrap();
            for k in 0..4 {
                let fd = (p[k] - m[k]) / (2.0 * h);
                assert!((fd - d[k + 1]).abs() <= 1e-6 * d[k + 1].abs().max(1.0), "k={k} th={th}");
            }
        }
    }

    #[test]
    fn makarov_equator_values() {
        let v = Makarov { alpha: 0.0, beta: 2.0, gamma: -1.9, radius: 1.0, sin_floor: 1e-3 };
        let d = v.derivatives(std::f64::consts::FRAC_PI_2).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-15);
        // -dV/dtheta at the equator equals gamma / R^2
        assert!((-d[1] - (-1.9)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn sphere_derivatives_match_differences(th in 0.3f64..2.8, pt in -5.0f64..5.0, pp in -10.0f64..10.0) {
            let m = FreeSphere { inv_inertia: 0.7, sin_floor: 1e-3 };
            fd_check(&m, &[th, pt, 0.4, pp]);
        }

        #[test]
        fn makarov_sphere_derivatives_match_differences(th in 0.3f64..2.8, pt in -5.0f64..5.0, pp in -10.0f64..10.0, g in -2.0f64..2.0) {
            let base = FreeSphere { inv_inertia: 1.0, sin_floor: 1e-3 };
            let pot = Makarov { alpha: 1.0, beta: 2.0, gamma: g, radius: 1.0, sin_floor: 1e-3 };
            let m = WithPotential { base: &base, potential: &pot };
            fd_check(&m, &[th, pt, -1.0, pp]);
        }

        #[test]
        fn circle_and_oscillator_match_differences(q in -3.0f64..3.0, p in -4.0f64..4.0) {
            fd_check(&FreeCircle { inv_inertia: 1.5 }, &[q, p]);
            fd_check(&HarmonicOscillator { mass: 2.0, omega: 0.7 }, &[q, p]);
        }
    }
}
