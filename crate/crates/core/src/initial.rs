//! Initial classical values and moments of Gaussian wave packets on the circle
//! and on the sphere.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::{dawson, erf_real};
use crate::state::{slot, Mode, MomentState, SystemParams};

/// Shape of the initial packet `exp(i(l phi + m theta) - lambda phi^2/2 - kappa (theta - theta0)^2/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec<T> {
    pub lambda: T,
    /// Polar width; unused on the circle.
    pub kappa: T,
    pub l: i64,
    pub m_theta: i64,
    pub theta0: T,
    pub phi0: T,
}

impl<T: Scalar> Default for GaussianSpec<T> {
    fn default() -> Self {
        GaussianSpec {
            lambda: T::lit(10.0),
            kappa: T::lit(10.0),
            l: 10,
            m_theta: 0,
            theta0: T::FRAC_PI_2(),
            phi0: T::zero(),
        }
    }
}

impl<T: Scalar> GaussianSpec<T> {
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be > 0, got {}", self.lambda)));
        }
        if mode == Mode::Sphere {
            if !(self.kappa > T::zero()) || !self.kappa.is_finite() {
                return Err(Error::param("kappa", format!("must be > 0, got {}", self.kappa)));
            }
            if (self.theta0 - T::FRAC_PI_2()).abs() > T::lit(1e-12) {
                return Err(Error::param("theta0", "closed-form moments assume an equatorial center (pi/2)"));
            }
        }
        if !self.phi0.is_finite() {
            return Err(Error::param("phi0", "must be finite"));
        }
        Ok(())
    }
}

/// How the circle position-momentum correlation `G^{1,1}` is initialized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationPolicy<T> {
    /// Symmetric packet: `G^{1,1} = 0`.
    Zero,
    /// Real magnitude of the boundary correction, `(hbar/2)(1 - 2 lambda G^{2,0})`.
    BoundaryMagnitude,
    /// Chirped packet with `G^{1,1} = g`; `G^{0,2}` gains `g^2 / G^{2,0}` so the
    /// uncertainty product is that of the unchirped packet.
    Chirp(T),
}

impl<T> Default for CorrelationPolicy<T> {
    fn default() -> Self {
        CorrelationPolicy::Zero
    }
}

/// `(G^{2,0}, G^{0,2})` of `exp(-lambda x^2/2)` truncated to `[-pi, pi]`.
pub fn periodic_gaussian_moments<T: Scalar>(lambda: T, hbar: T) -> Result<(T, T)> {
    let pi = T::PI();
    let erf = erf_real(pi * lambda.sqrt())?;
    let boundary = (pi / lambda).sqrt() * (-lambda * pi * pi).exp() / erf;
    let g20 = T::one() / (lambda + lambda) - boundary;
    let g02 = lambda * hbar * hbar * (T::one() - lambda * g20);
    Ok((g20, g02))
}

pub fn circle_initial_moments<T: Scalar>(
    spec: &GaussianSpec<T>,
    params: &SystemParams<T>,
    policy: CorrelationPolicy<T>,
) -> Result<MomentState<T>> {
    params.validate()?;
    spec.validate(Mode::Circle)?;
    let hbar = params.hbar;
    let (g20, mut g02) = periodic_gaussian_moments(spec.lambda, hbar)?;
    let lambda = spec.lambda.to_f64_lossy();
    if !(g20 > T::zero()) || !g20.is_finite() {
        return Err(Error::NotLocalized { lambda, reason: format!("G20 = {g20}") });
    }
    let g11 = match policy {
        CorrelationPolicy::Zero => T::zero(),
        CorrelationPolicy::BoundaryMagnitude => hbar * T::lit(0.5) * (T::one() - T::lit(2.0) * spec.lambda * g20),
        CorrelationPolicy::Chirp(g) => {
            if !g.is_finite() {
                return Err(Error::param("correlation", "must be finite"));
            }
            g02 += g * g / g20;
            g
        }
    };
    // The truncated packet only respects the uncertainty floor once the
    // boundary correction is negligible.
    let product = g20 * g02 - g11 * g11;
    let floor = params.uncertainty_floor();
    if product < floor * (T::one() - T::lit(1e-9)) {
        return Err(Error::NotLocalized {
            lambda,
            reason: format!("uncertainty product {product} below hbar^2/4"),
        });
    }
    let mut s = MomentState::zeros(Mode::Circle);
    s.classical = vec![T::zero(), T::from_i64(spec.l).unwrap() * hbar];
    s.moments[slot::G20] = g20;
    s.moments[slot::G11] = g11;
    s.moments[slot::G02] = g02;
    Ok(s)
}

/// `chi = (1 - i pi kappa) / (2 sqrt(kappa))`.
pub fn chi<T: Scalar>(kappa: T) -> Complex<T> {
    Complex::new(T::one(), -T::PI() * kappa) / (T::lit(2.0) * kappa.sqrt())
}

/// `F(chi) + F(conj chi)`, which is real.
fn dawson_pair_sum<T: Scalar>(kappa: T) -> Result<T> {
    let z = chi(kappa);
    Ok((dawson(z)? + dawson(z.conj())?).re)
}

/// Polar position variance of the sphere packet.
pub fn sphere_g2000<T: Scalar>(kappa: T) -> Result<T> {
    let s = dawson_pair_sum(kappa)?;
    let two = T::lit(2.0);
    Ok((two * kappa.sqrt() / s + two * kappa - T::one()) / (T::lit(4.0) * kappa * kappa))
}

/// Polar momentum variance of the sphere packet.
pub fn sphere_g0200<T: Scalar>(kappa: T, hbar: T) -> Result<T> {
    let s = dawson_pair_sum(kappa)?;
    let two = T::lit(2.0);
    Ok(hbar * hbar * kappa * kappa * s / (two * kappa.sqrt() + (two * kappa - T::one()) * s))
}

pub fn sphere_initial_moments<T: Scalar>(spec: &GaussianSpec<T>, params: &SystemParams<T>) -> Result<MomentState<T>> {
    params.validate()?;
    spec.validate(Mode::Sphere)?;
    let hbar = params.hbar;
    let (g0020, g0002) = periodic_gaussian_moments(spec.lambda, hbar)?;
    let mut s = MomentState::zeros(Mode::Sphere);
    s.classical = vec![
        spec.theta0,
        T::from_i64(spec.m_theta).unwrap() * hbar,
        spec.phi0,
        T::from_i64(spec.l).unwrap() * hbar,
    ];
    s.moments[slot::G2000] = sphere_g2000(spec.kappa)?;
    s.moments[slot::G0200] = sphere_g0200(spec.kappa, hbar)?;
    s.moments[slot::G0020] = g0020;
    s.moments[slot::G0002] = g0002;
    Ok(s)
}

/// Search interval for [`solve_kappa`]. The lower end keeps `|chi|` inside the
/// Dawson domain, the upper end keeps `F(chi)` below overflow.
pub const KAPPA_BRACKET: (f64, f64) = (1e-3, 250.0);

/// Finds the polar width `kappa` whose packet has `G^{2,0,0,0} = target`.
///
/// `G^{2,0,0,0}(kappa)` decreases monotonically, so plain bisection in
/// `ln kappa` is deterministic and always converges.
pub fn solve_kappa<T: Scalar>(target: T, params: &SystemParams<T>) -> Result<T> {
    params.validate()?;
    let lo = T::lit(KAPPA_BRACKET.0);
    let hi = T::lit(KAPPA_BRACKET.1);
    let g_lo = sphere_g2000(lo)?;
    let g_hi = sphere_g2000(hi)?;
    if !(target <= g_lo && target >= g_hi) {
        return Err(Error::Unattainable {
            target: target.to_f64_lossy(),
            lo: g_hi.to_f64_lossy(),
            hi: g_lo.to_f64_lossy(),
        });
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let mid = (a + b) * T::lit(0.5);
        if mid <= a || mid >= b {
            break;
        }
        if sphere_g2000(mid.exp())? > target {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (ka, kb) = (a.exp(), b.exp());
    let (ea, eb) = ((sphere_g2000(ka)? - target).abs(), (sphere_g2000(kb)? - target).abs());
    Ok(if ea <= eb { ka } else { kb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::special::erfi_complex;
    use crate::state::validate_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    type C = Complex<f64>;

    fn params() -> SystemParams<f64> {
        SystemParams::default()
    }

    fn q(f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        integrate(f, a, b, 1e-300, 1e-13).unwrap()
    }

    /// `<(x - <x>)^2>` and `<(P - <P>)^2>` of the periodic packet, the latter by
    /// applying `P = -i hbar d/dx` to the wave function twice.
    fn circle_oracle(lambda: f64, l: f64, hbar: f64) -> (f64, f64, f64) {
        let psi = |x: f64| C::new(0.0, l * x).exp() * (-lambda * x * x / 2.0).exp();
        let dpsi = |x: f64| C::new(-lambda * x, l) * psi(x);
        let d2psi = |x: f64| (C::new(-lambda * x, l) * C::new(-lambda * x, l) - lambda) * psi(x);
        let norm = q(|x| psi(x).norm_sqr(), -PI, PI);
        let mean_p = q(|x| (psi(x).conj() * C::new(0.0, -hbar) * dpsi(x)).re, -PI, PI) / norm;
        let g20 = q(|x| x * x * psi(x).norm_sqr(), -PI, PI) / norm;
        // (P - p)^2 = P^2 - 2pP + p^2
        let g02 = q(
            |x| {
                let p2 = -hbar * hbar * d2psi(x);
                let p1 = C::new(0.0, -hbar) * dpsi(x);
                (psi(x).conj() * (p2 - 2.0 * mean_p * p1 + mean_p * mean_p * psi(x))).re
            },
            -PI,
            PI,
        ) / norm;
        (g20, g02, mean_p)
    }

    /// Normalization from the erfi closed form.
    fn norm_sq_closed(lambda: f64, kappa: f64) -> f64 {
        let z = chi(kappa);
        let diff = erfi_complex(z.conj()).unwrap() - erfi_complex(z).unwrap();
        let num = C::new(0.0, 2.0 * (kappa * lambda).sqrt() * (1.0 / (4.0 * kappa)).exp());
        let den = PI * erf_real(PI * lambda.sqrt()).unwrap() * diff;
        (num / den).re
    }

    #[test]
    fn circle_lambda_ten() {
        let spec = GaussianSpec { lambda: 10.0, l: 0, ..GaussianSpec::default() };
        let s = circle_initial_moments(&spec, &params(), CorrelationPolicy::Zero).unwrap();
        assert!((s.moments[0] - 0.05).abs() < 1e-42);
        assert!((s.moments[2] - 5.0).abs() < 1e-12);
        assert_eq!(s.moments[1], 0.0);
        assert_eq!(s.classical, vec![0.0, 0.0]);
    }

    #[test]
    fn circle_large_lambda_saturates() {
        let spec = GaussianSpec { lambda: 1e4, l: 3, ..GaussianSpec::default() };
        let s = circle_initial_moments(&spec, &params(), CorrelationPolicy::Zero).unwrap();
        assert!((s.moments[0] - 0.5e-4).abs() < 1e-18);
        assert!((s.moments[0] * s.moments[2] - 0.25).abs() < 1e-14);
        assert_eq!(s.classical[1], 3.0);
    }

    #[test]
    fn circle_correlation_policies() {
        let spec = GaussianSpec { lambda: 10.0, l: 1, ..GaussianSpec::default() };
        let pm = circle_initial_moments(&spec, &params(), CorrelationPolicy::BoundaryMagnitude).unwrap();
        assert!(pm.moments[1].abs() < 1e-40);
        let ch = circle_initial_moments(&spec, &params(), CorrelationPolicy::Chirp(0.1)).unwrap();
        assert_eq!(ch.moments[1], 0.1);
        assert!((ch.uncertainty_theta() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn circle_broad_packet_rejected() {
        let spec = GaussianSpec { lambda: 0.05, ..GaussianSpec::default() };
        assert!(matches!(
            circle_initial_moments(&spec, &params(), CorrelationPolicy::Zero),
            Err(Error::NotLocalized { .. })
        ));
        let spec = GaussianSpec { lambda: -1.0, ..GaussianSpec::default() };
        assert!(circle_initial_moments(&spec, &params(), CorrelationPolicy::Zero).is_err());
    }

    #[test]
    fn sphere_lambda_ten() {
        let spec = GaussianSpec::default();
        let s = sphere_initial_moments(&spec, &params()).unwrap();
        assert!((s.moments[slot::G0020] - 0.05).abs() < 1e-15);
        assert!((s.moments[slot::G0002] - 5.0).abs() < 1e-12);
        for k in [slot::G1100, slot::G1010, slot::G1001, slot::G0110, slot::G0101, slot::G0011] {
            assert_eq!(s.moments[k], 0.0);
        }
        assert_eq!(s.classical, vec![FRAC_PI_2, 0.0, 0.0, 10.0]);
        let r = validate_state(&s, &params(), 1e-9);
        assert!(r.is_valid());
    }

    #[test]
    fn sphere_requires_equatorial_center() {
        let spec = GaussianSpec { theta0: 1.0, ..GaussianSpec::default() };
        assert!(sphere_initial_moments(&spec, &params()).is_err());
    }

    #[test]
    fn kappa_for_reference_width() {
        let k = solve_kappa(0.0475, &params()).unwrap();
        // G2000 = 19/400 at kappa = 10 up to exponentially small terms
        assert!((k - 10.0).abs() < 1e-8, "{k}");
        assert!((sphere_g2000(k).unwrap() - 0.0475).abs() < 1e-10);
        let g0200 = sphere_g0200(k, 1.0).unwrap();
        assert!((g0200 - 100.0 / 19.0).abs() < 1e-8);
        // tabulated 5.26316 is the five-decimal rounding
        assert!((g0200 - 5.26316).abs() < 3e-6);
    }

    #[test]
    fn kappa_round_trip_and_errors() {
        let g1 = sphere_g2000(1.0).unwrap();
        assert!((solve_kappa(g1, &params()).unwrap() - 1.0).abs() < 1e-10);
        match solve_kappa(-0.1, &params()).unwrap_err() {
            Error::Unattainable { lo, hi, .. } => assert!(lo > 0.0 && hi > lo),
            e => panic!("{e}"),
        }
        assert!(solve_kappa(1.0, &params()).is_err());
    }

    #[test]
    fn g2000_is_monotone_on_bracket() {
        let mut prev = f64::INFINITY;
        let (lo, hi) = KAPPA_BRACKET;
        for k in 0..=400 {
            let kappa = lo * (hi / lo).powf(k as f64 / 400.0);
            let g = sphere_g2000(kappa).unwrap();
            assert!(g < prev, "kappa={kappa}");
            prev = g;
        }
    }

    #[test]
    fn circle_quadrature_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let lambda = rng.gen_range(1.5..60.0);
            let l = rng.gen_range(-10..10);
            let spec = GaussianSpec { lambda, l, ..GaussianSpec::default() };
            let s = circle_initial_moments(&spec, &params(), CorrelationPolicy::Zero).unwrap();
            let (g20, g02, p) = circle_oracle(lambda, l as f64, 1.0);
            assert!((s.moments[0] - g20).abs() / g20 < 1e-8, "lambda={lambda}");
            assert!((s.moments[2] - g02).abs() / g02 < 1e-8, "lambda={lambda}");
            assert!((s.classical[1] - p).abs() < 1e-8);
        }
    }

    #[test]
    fn sphere_quadrature_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let lambda = rng.gen_range(1.5..60.0);
            let kappa = rng.gen_range(0.5..60.0);
            let m = rng.gen_range(-5..5);
            let spec = GaussianSpec { lambda, kappa, m_theta: m, ..GaussianSpec::default() };
            let s = sphere_initial_moments(&spec, &params()).unwrap();

            // normalization with the closed-form constant
            let n2 = norm_sq_closed(lambda, kappa);
            let theta_w = |t: f64| (-kappa * (t - FRAC_PI_2).powi(2)).exp() * t.sin();
            let phi_w = |f: f64| (-lambda * f * f).exp();
            let zt = q(theta_w, 0.0, PI);
            let zp = q(phi_w, -PI, PI);
            assert!((n2 * zt * zp - 1.0).abs() < 1e-8, "norm {}", n2 * zt * zp);

            let mean_t = q(|t| t * theta_w(t), 0.0, PI) / zt;
            assert!((mean_t - FRAC_PI_2).abs() < 1e-12);
            let g2000 = q(|t| (t - FRAC_PI_2).powi(2) * theta_w(t), 0.0, PI) / zt;
            assert!((s.moments[slot::G2000] - g2000).abs() / g2000 < 1e-8, "kappa={kappa}");
            // minimum-uncertainty relation for the polar momentum spread
            let g0200 = 0.25 / g2000;
            assert!((s.moments[slot::G0200] - g0200).abs() / g0200 < 1e-8);

            let (g20, g02, p) = circle_oracle(lambda, 10.0, 1.0);
            assert!((s.moments[slot::G0020] - g20).abs() / g20 < 1e-8);
            assert!((s.moments[slot::G0002] - g02).abs() / g02 < 1e-8);
            assert!((p - 10.0).abs() < 1e-8);
            assert!(validate_state(&s, &params(), 1e-9).is_valid());
            assert!(s.uncertainty_theta() >= 0.25 - 1e-12);
            assert!(s.uncertainty_phi().unwrap() >= 0.25 - 1e-12);
        }
    }

    #[test]
    fn f32_sphere_moments() {
        let s = sphere_initial_moments(&GaussianSpec::<f32>::default(), &SystemParams::default()).unwrap();
        assert!((s.moments[slot::G2000] - 0.0475).abs() < 1e-5);
    }
}
