//! Exact Moyal-bracket oracle for moment brackets.
//!
//! A moment is written as a polynomial in expectation values of Weyl symbols,
//! `G_ij = E[x_i x_j] - E[x_i] E[x_j]`. The bracket of two expectation values
//! is the expectation of the Moyal bracket of the symbols, a finite series for
//! polynomials. Products are handled by the Leibniz rule, and the result is
//! re-expressed in central moments. Everything is exact rational arithmetic.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::Rational;
use crate::error::{Error, Result};
use crate::state::{Mode, MomentIndex};

/// Monomial exponents over `(q1, p1, q2, p2, ..)`.
pub type Monomial = Vec<u8>;

/// Polynomial in the symbols with an explicit power of hbar per term.
pub type SymbolPoly = BTreeMap<(Monomial, u32), Rational>;

fn derivative(m: &Monomial, var: usize, order: u8) -> Option<(Monomial, i64)> {
    if m[var] < order {
        return None;
    }
    let mut out = m.clone();
    let mut factor = 1i64;
    for k in 0..order {
        factor *= (m[var] - k) as i64;
    }
    out[var] -= order;
    Some((out, factor))
}

fn multi_derivative(m: &Monomial, orders: &[u8]) -> Option<(Monomial, i64)> {
    let mut cur = m.clone();
    let mut coef = 1i64;
    for (v, &o) in orders.iter().enumerate() {
        let (next, c) = derivative(&cur, v, o)?;
        cur = next;
        coef *= c;
    }
    Some((cur, coef))
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `A Lambda^n B` for monomials, `Lambda = sum_i (<-d_qi ->d_pi - <-d_pi ->d_qi)`.
fn poisson_power(a: &Monomial, b: &Monomial, n: u32) -> BTreeMap<Monomial, i64> {
    let vars = a.len();
    let mut ops: BTreeMap<(Vec<u8>, Vec<u8>), i64> = BTreeMap::new();
    ops.insert((vec![0; vars], vec![0; vars]), 1);
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for ((da, db), c) in ops {
            for i in 0..vars / 2 {
                let (q, p) = (2 * i, 2 * i + 1);
                for (from_a, from_b, sign) in [(q, p, 1i64), (p, q, -1i64)] {
                    let mut na = da.clone();
                    let mut nb = db.clone();
                    na[from_a] += 1;
                    nb[from_b] += 1;
                    *next.entry((na, nb)).or_insert(0) += sign * c;
                }
            }
        }
        ops = next;
    }
    let mut out = BTreeMap::new();
    for ((da, db), c) in ops {
        if c == 0 {
            continue;
        }
        if let (Some((ma, ca)), Some((mb, cb))) = (multi_derivative(a, &da), multi_derivative(b, &db)) {
            *out.entry(mono_mul(&ma, &mb)).or_insert(0) += c * ca * cb;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

/// `(A*B - B*A)/(i hbar)` for two monomial symbols.
pub fn moyal_bracket(a: &Monomial, b: &Monomial) -> SymbolPoly {
    let max_n = a.iter().map(|&x| x as u32).sum::<u32>().min(b.iter().map(|&x| x as u32).sum());
    let mut out = SymbolPoly::new();
    let mut n = 1;
    while n <= max_n {
        // only odd powers survive the commutator
        let sign = if ((n - 1) / 2) % 2 == 0 { 1 } else { -1 };
        let scale = Rational::new(sign, (1i64 << (n - 1)) * factorial(n));
        for (m, c) in poisson_power(a, b, n) {
            *out.entry((m, n - 1)).or_insert_with(Rational::zero) += scale * Rational::from_integer(c);
        }
        n += 2;
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Product of expectation values `E[m1] E[m2] ..`, kept sorted.
type ExpProduct = Vec<Monomial>;

/// Polynomial in expectation values, keyed by factor list and hbar power.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpPoly(BTreeMap<(ExpProduct, u32), Rational>);

impl ExpPoly {
    fn add_term(&mut self, mut factors: ExpProduct, hbar: u32, c: Rational) {
        factors.retain(|m| m.iter().any(|&e| e > 0));
        factors.sort();
        let e = self.0.entry((factors, hbar)).or_insert_with(Rational::zero);
        *e += c;
    }

    fn cleaned(mut self) -> Self {
        self.0.retain(|_, c| !c.is_zero());
        self
    }

    /// `E[x_i]` as an expectation polynomial.
    pub fn coordinate(vars: usize, i: usize) -> Self {
        let mut m = vec![0u8; vars];
        m[i] = 1;
        let mut p = ExpPoly::default();
        p.add_term(vec![m], 0, Rational::one());
        p
    }

    /// Central second moment written with non-central expectation values.
    pub fn central_moment(index: MomentIndex) -> Self {
        let e = index.exponents().to_vec();
        let vars = e.len();
        let (i, j) = index.pair();
        let mut mi = vec![0u8; vars];
        let mut mj = vec![0u8; vars];
        mi[i] = 1;
        mj[j] = 1;
        let mut p = ExpPoly::default();
        p.add_term(vec![e], 0, Rational::one());
        p.add_term(vec![mi, mj], 0, -Rational::one());
        p
    }

    /// Bracket by the Leibniz rule over factors.
    pub fn bracket(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = ExpPoly::default();
        for ((fa, ha), ca) in &self.0 {
            for ((fb, hb), cb) in &other.0 {
                for (ia, ma) in fa.iter().enumerate() {
                    for (ib, mb) in fb.iter().enumerate() {
                        let rest: Vec<Monomial> = fa
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| *k != ia)
                            .chain(fb.iter().enumerate().filter(|(k, _)| *k != ib))
                            .map(|(_, m)| m.clone())
                            .collect();
                        for ((m, h), c) in moyal_bracket(ma, mb) {
                            let mut factors = rest.clone();
                            factors.push(m);
                            out.add_term(factors, ha + hb + h, *ca * *cb * c);
                        }
                    }
                }
            }
        }
        out.cleaned()
    }
}

/// Polynomial in the classical values `x` and central moments `G`.
type CenteredKey = (Vec<u8>, Vec<u8>, u32);

fn centered_mul(a: &BTreeMap<CenteredKey, Rational>, b: &BTreeMap<CenteredKey, Rational>) -> BTreeMap<CenteredKey, Rational> {
    let mut out = BTreeMap::new();
    for ((xa, ga, ha), ca) in a {
        for ((xb, gb, hb), cb) in b {
            let key = (mono_mul(xa, xb), mono_mul(ga, gb), ha + hb);
            *out.entry(key).or_insert_with(Rational::zero) += *ca * *cb;
        }
    }
    out.retain(|_, c: &mut Rational| !c.is_zero());
    out
}

/// Rewrites expectation values through `E[x_i] = x_i` and
/// `E[x_i x_j] = G_ij + x_i x_j`.
fn recenter(p: &ExpPoly, mode: Mode) -> Result<BTreeMap<CenteredKey, Rational>> {
    let vars = 2 * mode.dof();
    let nm = mode.moment_len();
    let mut total: BTreeMap<CenteredKey, Rational> = BTreeMap::new();
    for ((factors, h), c) in &p.0 {
        let mut acc: BTreeMap<CenteredKey, Rational> = BTreeMap::new();
        acc.insert((vec![0; vars], vec![0; nm], *h), *c);
        for m in factors {
            let order: u32 = m.iter().map(|&e| e as u32).sum();
            let mut f = BTreeMap::new();
            match order {
                1 => {
                    f.insert((m.clone(), vec![0; nm], 0), Rational::one());
                }
                2 => {
                    let idx = MomentIndex::new(mode, m)?;
                    let mut g = vec![0u8; nm];
                    g[idx.slot()] = 1;
                    f.insert((vec![0; vars], g, 0), Rational::one());
                    f.insert((m.clone(), vec![0; nm], 0), Rational::one());
                }
                _ => return Err(Error::NotClosed(format!("expectation of order {order} needs higher moments"))),
            }
            acc = centered_mul(&acc, &f);
        }
        for (k, v) in acc {
            *total.entry(k).or_insert_with(Rational::zero) += v;
        }
    }
    total.retain(|_, c| !c.is_zero());
    Ok(total)
}

/// Bracket of two second-order moments as a linear combination of moments,
/// computed from the Moyal series. Fails if anything other than a linear,
/// hbar-free combination survives.
pub fn moyal_moment_bracket(a: MomentIndex, b: MomentIndex) -> Result<BTreeMap<usize, Rational>> {
    if a.mode() != b.mode() {
        return Err(Error::ModeMismatch { expected: a.mode().name(), found: b.mode().name() });
    }
    let mode = a.mode();
    let br = ExpPoly::central_moment(a).bracket(&ExpPoly::central_moment(b));
    linear_in_moments(&recenter(&br, mode)?)
}

/// Bracket of the expectation value of coordinate `i` with a moment.
pub fn moyal_coordinate_moment_bracket(mode: Mode, i: usize, b: MomentIndex) -> Result<BTreeMap<usize, Rational>> {
    let br = ExpPoly::coordinate(2 * mode.dof(), i).bracket(&ExpPoly::central_moment(b));
    linear_in_moments(&recenter(&br, mode)?)
}

fn linear_in_moments(terms: &BTreeMap<CenteredKey, Rational>) -> Result<BTreeMap<usize, Rational>> {
    let mut out = BTreeMap::new();
    for ((x, g, h), c) in terms {
        let gdeg: u32 = g.iter().map(|&e| e as u32).sum();
        if *h != 0 || x.iter().any(|&e| e > 0) || gdeg != 1 {
            return Err(Error::NotClosed(format!("residual term x{x:?} G{g:?} hbar^{h} * {c}")));
        }
        let s = g.iter().position(|&e| e == 1).unwrap();
        out.insert(s, *c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ci(a: u8, b: u8) -> MomentIndex {
        MomentIndex::circle(a, b).unwrap()
    }

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn canonical_symbol_bracket() {
        let out = moyal_bracket(&vec![1, 0], &vec![0, 1]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[&(vec![0, 0], 0)], r(1));
    }

    #[test]
    fn cubic_symbols_pick_up_hbar_squared() {
        // {q^3, p^3}_M = 9 q^2 p^2 - (3/2) hbar^2
        let out = moyal_bracket(&vec![3, 0], &vec![0, 3]);
        assert_eq!(out[&(vec![2, 2], 0)], r(9));
        assert_eq!(out[&(vec![0, 0], 2)], Rational::new(-3, 2));
    }

    #[test]
    fn one_dof_algebra() {
        let b = moyal_moment_bracket(ci(2, 0), ci(0, 2)).unwrap();
        assert_eq!(b, BTreeMap::from([(1, r(4))]));
        let b = moyal_moment_bracket(ci(2, 0), ci(1, 1)).unwrap();
        assert_eq!(b, BTreeMap::from([(0, r(2))]));
        let b = moyal_moment_bracket(ci(1, 1), ci(0, 2)).unwrap();
        assert_eq!(b, BTreeMap::from([(2, r(2))]));
        assert!(moyal_moment_bracket(ci(2, 0), ci(2, 0)).unwrap().is_empty());
    }

    #[test]
    fn separate_sectors_commute() {
        let a = MomentIndex::sphere(2, 0, 0, 0).unwrap();
        let b = MomentIndex::sphere(0, 0, 0, 2).unwrap();
        assert!(moyal_moment_bracket(a, b).unwrap().is_empty());
    }

    #[test]
    fn coordinates_are_orthogonal_to_moments() {
        for mode in [Mode::Circle, Mode::Sphere] {
            for i in 0..2 * mode.dof() {
                for b in MomentIndex::all(mode) {
                    assert!(moyal_coordinate_moment_bracket(mode, i, b).unwrap().is_empty());
                }
            }
        }
    }

    #[test]
    fn mixed_modes_rejected() {
        assert!(moyal_moment_bracket(ci(2, 0), MomentIndex::sphere(2, 0, 0, 0).unwrap()).is_err());
    }
}
