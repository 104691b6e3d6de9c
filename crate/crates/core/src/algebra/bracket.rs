//! Closed-form moment brackets and the second-order bracket table.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::Rational;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{Mode, MomentIndex};

/// One term of a general moment bracket: `(re + i im) hbar^p prod G^{factor}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketTerm {
    pub re: Rational,
    pub im: Rational,
    pub hbar_power: u32,
    /// Exponents of each moment factor, interleaved `(a1, b1, a2, b2, ..)`.
    pub factors: Vec<Vec<u8>>,
}

fn binom(n: i64, k: i64) -> i64 {
    if k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1i64, |acc, j| acc * (n - j) / (j + 1))
}

fn factorial(n: i64) -> i64 {
    (1..=n).product()
}

/// All `e` with `sum e = total` and `e_i <= upper_i`.
fn compositions(total: i64, upper: &[i64]) -> Vec<Vec<i64>> {
    fn rec(i: usize, left: i64, upper: &[i64], cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i == upper.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in 0..=left.min(upper[i]) {
            cur.push(v);
            rec(i + 1, left - v, upper, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, total, upper, &mut Vec::new(), &mut out);
    out
}

/// The combinatorial coefficient `K^{n,s,e}`.
///
/// The lower bound on each `g_i` is `max(e_i - s, e_i - a_i, e_i - d_i, 0)`,
/// the values for which every binomial below is nonzero.
fn k_coefficient(n: i64, s: i64, e: &[i64], a: &[i64], b: &[i64], c: &[i64], d: &[i64]) -> Rational {
    let k = e.len();
    let lower: Vec<i64> = (0..k).map(|i| (e[i] - s).max(e[i] - a[i]).max(e[i] - d[i]).max(0)).collect();
    let upper: Vec<i64> = (0..k).map(|i| b[i].min(c[i]).min(n - s).min(e[i])).collect();
    if lower.iter().zip(&upper).any(|(l, u)| l > u) {
        return Rational::zero();
    }
    let span: Vec<i64> = lower.iter().zip(&upper).map(|(l, u)| u - l).collect();
    let shift: i64 = lower.iter().sum();
    let mut sum = Rational::zero();
    for off in compositions(n - s - shift, &span) {
        let g: Vec<i64> = off.iter().zip(&lower).map(|(o, l)| o + l).collect();
        let mut term = Rational::new(1, factorial(s) * factorial(n - s));
        for i in 0..k {
            let num = binom(a[i], e[i] - g[i]) * binom(b[i], g[i]) * binom(c[i], g[i]) * binom(d[i], e[i] - g[i]);
            let den = binom(n - s, g[i]) * binom(s, e[i] - g[i]);
            term *= Rational::new(num, den);
        }
        sum += term;
    }
    sum
}

/// General bracket `{G^{a,b}, G^{c,d}}` of two moments of any order, as a sum
/// of products of moments. Sign convention: `(-1)^(n-s)`, which reproduces the
/// canonical `{q, p} = 1` orientation.
pub fn appendix_bracket(first: &[u8], second: &[u8]) -> Vec<BracketTerm> {
    assert_eq!(first.len(), second.len());
    let k = first.len() / 2;
    let a: Vec<i64> = (0..k).map(|i| first[2 * i] as i64).collect();
    let b: Vec<i64> = (0..k).map(|i| first[2 * i + 1] as i64).collect();
    let c: Vec<i64> = (0..k).map(|i| second[2 * i] as i64).collect();
    let d: Vec<i64> = (0..k).map(|i| second[2 * i + 1] as i64).collect();
    let mut terms = Vec::new();

    for i in 0..k {
        if a[i] * d[i] != 0 {
            let mut f1 = first.to_vec();
            let mut f2 = second.to_vec();
            f1[2 * i] -= 1;
            f2[2 * i + 1] -= 1;
            terms.push(BracketTerm {
                re: Rational::from_integer(a[i] * d[i]),
                im: Rational::zero(),
                hbar_power: 0,
                factors: vec![f1, f2],
            });
        }
        if b[i] * c[i] != 0 {
            let mut f1 = first.to_vec();
            let mut f2 = second.to_vec();
            f1[2 * i + 1] -= 1;
            f2[2 * i] -= 1;
            terms.push(BracketTerm {
                re: Rational::from_integer(-b[i] * c[i]),
                im: Rational::zero(),
                hbar_power: 0,
                factors: vec![f1, f2],
            });
        }
    }

    let overlap: i64 = (0..k).map(|i| a[i].min(d[i]) + b[i].min(c[i])).sum();
    let n_max = if overlap <= 1 { 1 } else { overlap - 1 };
    for n in 1..=n_max {
        // (i hbar / 2)^(n-1) = i^(n-1) hbar^(n-1) / 2^(n-1)
        let scale = Rational::new(1, 1i64 << (n - 1));
        let (unit_re, unit_im) = match (n - 1) % 4 {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        };
        for s in 0..=n {
            let sign = if (n - s) % 2 == 0 { 1 } else { -1 };
            let upper: Vec<i64> = (0..k).map(|i| a[i].min(d[i]).min(s) + b[i].min(c[i]).min(n - s)).collect();
            for e in compositions(n, &upper) {
                let kc = k_coefficient(n, s, &e, &a, &b, &c, &d);
                if kc.is_zero() {
                    continue;
                }
                let mut factor = Vec::with_capacity(2 * k);
                for i in 0..k {
                    factor.push((a[i] + c[i] - e[i]) as u8);
                    factor.push((b[i] + d[i] - e[i]) as u8);
                }
                let coef = kc * scale * Rational::from_integer(sign);
                terms.push(BracketTerm {
                    re: coef * Rational::from_integer(unit_re),
                    im: coef * Rational::from_integer(unit_im),
                    hbar_power: (n - 1) as u32,
                    factors: vec![factor],
                });
            }
        }
    }
    terms
}

/// Linear combination `sum c_k G_k` of second-order moments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MomentCombination {
    pub terms: Vec<(MomentIndex, Rational)>,
}

impl MomentCombination {
    pub fn coefficient(&self, index: MomentIndex) -> Rational {
        self.terms.iter().find(|(i, _)| *i == index).map(|t| t.1).unwrap_or_else(Rational::zero)
    }

    pub fn to_slot_map(&self) -> BTreeMap<usize, Rational> {
        self.terms.iter().map(|(i, c)| (i.slot(), *c)).collect()
    }
}

/// Second-order bracket from the closed form. First-order central moments
/// vanish, so product terms with an order-one factor drop out; whatever
/// survives must be linear in second-order moments.
pub fn bracket(a: MomentIndex, b: MomentIndex) -> Result<MomentCombination> {
    if a.mode() != b.mode() {
        return Err(Error::ModeMismatch { expected: a.mode().name(), found: b.mode().name() });
    }
    let mode = a.mode();
    let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
    for t in appendix_bracket(a.exponents(), b.exponents()) {
        let orders: Vec<u32> = t.factors.iter().map(|f| f.iter().map(|&x| x as u32).sum()).collect();
        if orders.contains(&1) {
            continue;
        }
        let nontrivial: Vec<&Vec<u8>> = t.factors.iter().zip(&orders).filter(|(_, &o)| o > 0).map(|(f, _)| f).collect();
        if nontrivial.len() != 1 || orders.iter().any(|&o| o > 2) || !t.im.is_zero() || t.hbar_power != 0 {
            if t.re.is_zero() && t.im.is_zero() {
                continue;
            }
            return Err(Error::NotClosed(format!("{a} with {b}: term {t:?}")));
        }
        let idx = MomentIndex::new(mode, nontrivial[0])?;
        *acc.entry(idx.slot()).or_insert_with(Rational::zero) += t.re;
    }
    let terms = acc
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(s, c)| (MomentIndex::from_slot(mode, s).unwrap(), c))
        .collect();
    Ok(MomentCombination { terms })
}

/// Every moment-moment bracket of a mode, computed once.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketTable {
    mode: Mode,
    entries: Vec<Vec<(usize, Rational)>>,
}

impl BracketTable {
    pub fn new(mode: Mode) -> Result<Self> {
        let n = mode.moment_len();
        let mut entries = Vec::with_capacity(n * n);
        for a in MomentIndex::all(mode) {
            for b in MomentIndex::all(mode) {
                entries.push(bracket(a, b)?.to_slot_map().into_iter().collect());
            }
        }
        Ok(BracketTable { mode, entries })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn entry(&self, a: usize, b: usize) -> &[(usize, Rational)] {
        &self.entries[a * self.mode.moment_len() + b]
    }

    pub fn entry_map(&self, a: usize, b: usize) -> BTreeMap<usize, Rational> {
        self.entry(a, b).iter().copied().collect()
    }

    /// `{G_a, G_b}` at the given moment values.
    pub fn evaluate<T: Scalar>(&self, a: usize, b: usize, moments: &[T]) -> T {
        self.entry(a, b)
            .iter()
            .fold(T::zero(), |acc, (s, c)| acc + rational_to::<T>(*c) * moments[*s])
    }

    /// Copy with the sign of `{G_a, G_b}` (and its mirror) flipped. Used to
    /// check that the validation suites notice a corrupted algebra.
    pub fn with_negated_entry(&self, a: usize, b: usize) -> Self {
        let n = self.mode.moment_len();
        let mut t = self.clone();
        for idx in [a * n + b, b * n + a] {
            for term in t.entries[idx].iter_mut() {
                term.1 = -term.1;
            }
        }
        t
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = self.mode.moment_len();
        (0..n).all(|a| {
            (0..n).all(|b| {
                let ab = self.entry_map(a, b);
                let ba: BTreeMap<usize, Rational> = self.entry(b, a).iter().map(|(s, c)| (*s, -*c)).collect();
                ab == ba
            })
        })
    }
}

pub fn rational_to<T: Scalar>(r: Rational) -> T {
    T::from_i64(*r.numer()).unwrap() / T::from_i64(*r.denom()).unwrap()
}
