//! Error function, imaginary error function and the Dawson function of a
//! complex argument.
//!
//! `erf` uses the positive-term series below |x| = 3 and the continued fraction
//! for `erfc` above. The Dawson function is summed directly for |z| <= 1 and
//! otherwise obtained by Taylor-marching the ODE `F' = 1 - 2zF` outward along
//! the ray from the unit circle. It is entire, so the only domain restriction
//! anywhere in this module is overflow.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest modulus accepted by [`dawson`].
pub const DAWSON_MAX_MODULUS: f64 = 50.0;

const SERIES_SWITCH: f64 = 3.0;

fn two_over_sqrt_pi<T: Scalar>() -> T {
    T::FRAC_2_SQRT_PI()
}

fn check_finite<T: Scalar>(x: T, function: &'static str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { function, reason: format!("non-finite argument {x}") })
    }
}

/// `erf(x)` to about one ulp of absolute accuracy.
pub fn erf_real<T: Scalar>(x: T) -> Result<T> {
    check_finite(x, "erf")?;
    let ax = x.abs();
    let v = if ax < T::lit(SERIES_SWITCH) {
        erf_series(ax)
    } else {
        T::one() - erfc_continued_fraction(ax)
    };
    Ok(if x < T::zero() { -v } else { v })
}

/// `2/sqrt(pi) exp(-x^2) sum 2^n x^(2n+1) / (2n+1)!!`, all terms positive.
fn erf_series<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term = term * (x2 + x2) / T::from_u32(2 * n + 1).unwrap();
        sum += term;
        if term <= T::epsilon() * sum || n > 500 {
            break;
        }
    }
    two_over_sqrt_pi::<T>() * (-x2).exp() * sum
}

/// Modified Lentz evaluation of
/// `erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`.
fn erfc_continued_fraction<T: Scalar>(x: T) -> T {
    let tiny = T::min_positive_value().sqrt();
    let mut f = x;
    let mut c = f;
    let mut d = T::zero();
    for n in 1..1000u32 {
        let a = T::from_u32(n).unwrap() * T::lit(0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f *= delta;
        if (delta - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    (-x * x).exp() / (T::PI().sqrt() * f)
}

/// Overflow guard for [`erfi_real`]: the largest half-integer below
/// `sqrt(ln(max))` for the scalar type (26.5 for `f64`).
pub fn erfi_bound<T: Scalar>() -> T {
    let b = T::max_value().ln().sqrt();
    (b * T::lit(2.0)).floor() * T::lit(0.5)
}

/// `erfi(x) = -i erf(ix)` for real `x`.
pub fn erfi_real<T: Scalar>(x: T) -> Result<T> {
    check_finite(x, "erfi")?;
    let bound = erfi_bound::<T>();
    if x.abs() > bound {
        return Err(Error::Overflow { function: "erfi", bound: bound.to_f64_lossy() });
    }
    let ax = x.abs();
    let v = if ax <= T::lit(5.0) {
        // 2/sqrt(pi) sum x^(2k+1) / (k! (2k+1))
        let x2 = ax * ax;
        let mut pow = ax;
        let mut sum = ax;
        let mut k = 0u32;
        loop {
            k += 1;
            let kf = T::from_u32(k).unwrap();
            pow = pow * x2 / kf;
            let term = pow / (kf + kf + T::one());
            sum += term;
            if term <= T::epsilon() * sum || k > 400 {
                break;
            }
        }
        two_over_sqrt_pi::<T>() * sum
    } else {
        let f = dawson(Complex::new(ax, T::zero()))?.re;
        two_over_sqrt_pi::<T>() * (ax * ax).exp() * f
    };
    if !v.is_finite() {
        return Err(Error::Overflow { function: "erfi", bound: bound.to_f64_lossy() });
    }
    Ok(if x < T::zero() { -v } else { v })
}

fn dawson_series<T: Scalar>(z: Complex<T>) -> Complex<T> {
    // sum (-1)^n 2^n z^(2n+1) / (2n+1)!!
    let m2z2 = z * z * T::lit(-2.0);
    let mut term = z;
    let mut sum = z;
    for n in 1..200u32 {
        term = term * m2z2 / T::from_u32(2 * n + 1).unwrap();
        sum += term;
        if term.norm() <= T::epsilon() * sum.norm() * T::lit(0.5) {
            break;
        }
    }
    sum
}

/// One Taylor step of `F' = 1 - 2zF` from `w` (where `F(w) = f`) by `h`.
fn dawson_taylor_step<T: Scalar>(w: Complex<T>, f: Complex<T>, h: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    let two = T::lit(2.0);
    let mut a_prev = f;
    let mut a = one - w * f * two;
    let mut hp = h;
    let mut sum = f + a * hp;
    let mut small = 0;
    for n in 1..400u32 {
        let next = -(w * a + a_prev) * two / T::from_u32(n + 1).unwrap();
        a_prev = a;
        a = next;
        hp = hp * h;
        let term = a * hp;
        sum += term;
        if term.norm() <= T::epsilon() * sum.norm() * T::lit(0.25) {
            small += 1;
            if small >= 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    sum
}

/// Dawson function `F(z) = exp(-z^2) \int_0^z exp(t^2) dt` for `|z| <= 50`.
pub fn dawson<T: Scalar>(z: Complex<T>) -> Result<Complex<T>> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain { function: "dawson", reason: "non-finite argument".into() });
    }
    let r = z.norm();
    if r > T::lit(DAWSON_MAX_MODULUS) {
        return Err(Error::Domain {
            function: "dawson",
            reason: format!("|z| = {r} exceeds {DAWSON_MAX_MODULUS}"),
        });
    }
    if r <= T::one() {
        return Ok(dawson_series(z));
    }
    let dir = z / r;
    let mut w = dir;
    let mut f = dawson_series(w);
    let mut s = T::one();
    let half = T::lit(0.5);
    while s < r {
        let len = (half / s).min(half).min(r - s);
        let next = s + len;
        // land exactly on z at the final step
        let w_next = if next >= r { z } else { dir * next };
        f = dawson_taylor_step(w, f, w_next - w);
        w = w_next;
        s = next;
        if !f.re.is_finite() || !f.im.is_finite() {
            return Err(Error::Overflow { function: "dawson", bound: s.to_f64_lossy() });
        }
    }
    Ok(f)
}

/// Complex error function through `erf(z) = -i erfi(iz)`.
pub fn erf_complex<T: Scalar>(z: Complex<T>) -> Result<Complex<T>> {
    let i = Complex::new(T::zero(), T::one());
    Ok(-i * erfi_complex(i * z)?)
}

/// `erfi(z) = 2/sqrt(pi) exp(z^2) F(z)`.
pub fn erfi_complex<T: Scalar>(z: Complex<T>) -> Result<Complex<T>> {
    let v = (z * z).exp() * dawson(z)? * two_over_sqrt_pi::<T>();
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Overflow { function: "erfi", bound: erfi_bound::<T>().to_f64_lossy() });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    /// Faddeeva `w(z)` for `Im z > 0` from the Laplace continued fraction,
    /// evaluated bottom-up with a fixed depth.
    fn faddeeva_cf(z: C) -> C {
        let mut t = z;
        for k in (1..6000).rev() {
            t = z - C::new(k as f64 * 0.5, 0.0) / t;
        }
        C::new(0.0, 1.0 / std::f64::consts::PI.sqrt()) / t
    }

    fn dawson_via_faddeeva(z: C) -> C {
        // F(z) = i sqrt(pi)/2 (exp(-z^2) - w(z))
        C::new(0.0, std::f64::consts::PI.sqrt() / 2.0) * ((-z * z).exp() - faddeeva_cf(z))
    }

    fn chi(kappa: f64) -> C {
        C::new(1.0, -std::f64::consts::PI * kappa) / (2.0 * kappa.sqrt())
    }

    fn rel(a: C, b: C) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn erf_values() {
        assert_eq!(erf_real(0.0f64).unwrap(), 0.0);
        let q = integrate(|t: f64| (-t * t).exp(), 0.0, 1.0, 1e-16, 1e-15).unwrap() * 2.0 / std::f64::consts::PI.sqrt();
        assert!((erf_real(1.0f64).unwrap() - q).abs() < 1e-14);
        assert!((erf_real(1.0f64).unwrap() - 0.8427007929).abs() < 1e-10);
        assert_eq!(erf_real(std::f64::consts::PI * 10f64.sqrt()).unwrap(), 1.0);
        assert!(erf_real(f64::NAN).is_err());
        assert!(erf_real(f64::INFINITY).is_err());
    }

    #[test]
    fn erf_continuous_at_switch() {
        let below = erf_series(3.0f64 - 1e-12);
        let above = 1.0 - erfc_continued_fraction(3.0f64);
        assert!((below - above).abs() < 1e-14);
        // erfc tail against quadrature of the complement
        let tail = integrate(|t: f64| (-t * t).exp(), 4.0, 12.0, 1e-30, 1e-13).unwrap() * 2.0 / std::f64::consts::PI.sqrt();
        assert!((erfc_continued_fraction(4.0f64) - tail).abs() / tail < 1e-12);
    }

    #[test]
    fn erfi_values() {
        assert_eq!(erfi_real(0.0f64).unwrap(), 0.0);
        assert!((erfi_real(1.0f64).unwrap() - 1.6504257588).abs() < 1e-10);
        assert!((erfi_real(-1.0f64).unwrap() + 1.6504257588).abs() < 1e-10);
        let q = integrate(|t: f64| (t * t).exp(), 0.0, 1.0, 1e-16, 1e-15).unwrap() * 2.0 / std::f64::consts::PI.sqrt();
        assert!((erfi_real(1.0f64).unwrap() - q).abs() / q < 1e-12);
        match erfi_real(30.0f64).unwrap_err() {
            Error::Overflow { bound, .. } => assert_eq!(bound, 26.5),
            e => panic!("{e}"),
        }
        assert!(erfi_real(26.0f64).unwrap().is_finite());
    }

    #[test]
    fn erfi_series_and_dawson_paths_agree() {
        for x in [4.9f64, 5.0, 5.1, 7.0] {
            let q = integrate(|t: f64| (t * t - x * x).exp(), 0.0, x, 1e-300, 1e-14).unwrap();
            let via = erfi_real(x).unwrap() / (x * x).exp() * std::f64::consts::PI.sqrt() / 2.0;
            assert!((via - q).abs() / q < 1e-12, "x={x}");
        }
    }

    #[test]
    fn erfi_through_complex_erf() {
        for x in [0.3f64, 1.0, 2.5, 4.0, -1.7] {
            let via = C::new(0.0, -1.0) * erf_complex(C::new(0.0, x)).unwrap();
            let direct = erfi_real(x).unwrap();
            assert!((via.re - direct).abs() / direct.abs() < 1e-10);
            assert!(via.im.abs() < 1e-10 * direct.abs());
        }
        for x in [0.5f64, 2.0, 3.5] {
            let e = erf_complex(C::new(x, 0.0)).unwrap();
            assert!((e.re - erf_real(x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn dawson_at_one() {
        let f = dawson(C::new(1.0, 0.0)).unwrap();
        assert!((f.re - 0.5380795069).abs() < 1e-10);
        assert_eq!(f.im, 0.0);
        assert_eq!(dawson(C::new(0.0, 0.0)).unwrap(), C::new(0.0, 0.0));
    }

    #[test]
    fn dawson_matches_quadrature_on_real_axis() {
        for x in [0.5f64, 1.0, 2.0, 3.7, 8.0, 20.0, 49.0] {
            let q = integrate(|t: f64| (t * t - x * x).exp(), 0.0, x, 1e-300, 1e-12).unwrap();
            let f = dawson(C::new(x, 0.0)).unwrap().re;
            assert!((f - q).abs() / q < 1e-10, "x={x} {f} {q}");
        }
    }

    #[test]
    fn dawson_at_chi_two_ways() {
        for kappa in [0.2, 1.0, 10.0, 40.0, 150.0] {
            let z = conj_if_needed(chi(kappa));
            let a = dawson(z).unwrap();
            let b = dawson_via_faddeeva(z);
            assert!(rel(a, b) < 1e-10, "kappa={kappa}: {a} vs {b}");
        }
    }

    // the continued fraction wants Im z > 0; use conjugation symmetry
    fn conj_if_needed(z: C) -> C {
        if z.im > 0.0 {
            z
        } else {
            z.conj()
        }
    }

    #[test]
    fn dawson_conjugation_and_reality_of_sum() {
        for kappa in [0.01, 0.3, 1.0, 10.0, 100.0, 250.0] {
            let z = chi(kappa);
            let a = dawson(z).unwrap();
            let b = dawson(z.conj()).unwrap();
            assert!(rel(b, a.conj()) < 1e-13);
            let s = a + b;
            assert!(s.im.abs() <= 1e-10 * s.norm());
        }
    }

    #[test]
    fn dawson_ode_residual_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r = rng.gen_range(0.0..8.0);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let z = C::from_polar(r, th);
            let h = 1e-3;
            let fz = dawson(z).unwrap();
            let f = |k: f64| dawson(z + k * h).unwrap();
            // fourth-order central difference
            let d = (8.0 * (f(1.0) - f(-1.0)) - (f(2.0) - f(-2.0))) / (12.0 * h);
            let resid = (d - (C::new(1.0, 0.0) - 2.0 * z * fz)).norm();
            let scale = 1.0f64.max((z * fz).norm());
            assert!(resid < 1e-8 * scale, "z={z} resid={resid} scale={scale}");
        }
    }

    #[test]
    fn dawson_domain() {
        assert!(dawson(C::new(51.0, 0.0)).is_err());
        assert!(dawson(C::new(f64::NAN, 0.0)).is_err());
        assert!(matches!(dawson(C::new(0.0, 40.0)), Err(Error::Overflow { .. })));
    }

    #[test]
    fn f32_paths() {
        assert!((erf_real(1.0f32).unwrap() - 0.842_700_8).abs() < 1e-6);
        assert!((dawson(Complex::new(1.0f32, 0.0)).unwrap().re - 0.538_079_5).abs() < 1e-6);
        assert_eq!(erfi_bound::<f32>(), 9.0);
    }

    proptest! {
        #[test]
        fn erf_is_odd_and_bounded(x in -8.0f64..8.0) {
            let a = erf_real(x).unwrap();
            prop_assert_eq!(a, -erf_real(-x).unwrap());
            prop_assert!(a.abs() <= 1.0);
        }

        #[test]
        fn erfi_is_odd(x in -20.0f64..20.0) {
            prop_assert_eq!(erfi_real(x).unwrap(), -erfi_real(-x).unwrap());
        }

        #[test]
        fn dawson_is_odd(re in -10.0f64..10.0, im in -5.0f64..5.0) {
            let z = C::new(re, im);
            let a = dawson(z).unwrap();
            let b = dawson(-z).unwrap();
            prop_assert!(rel(-b, a) < 1e-12);
        }
    }
}
