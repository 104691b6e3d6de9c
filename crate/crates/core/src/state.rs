//! Phase-space data model: classical expectation values, second-order moments,
//! their canonical ordering, and validity checks.
//!
//! Moment slots follow lexicographic descending order of the exponent tuple over
//! `(theta, p_theta, phi, p_phi)`:
//!
//! | slot | sphere | circle |
//! |------|--------|--------|
//! | 0 | 2000 | 20 |
//! | 1 | 1100 | 11 |
//! | 2 | 1010 | 02 |
//! | 3 | 1001 | |
//! | 4 | 0200 | |
//! | 5 | 0110 | |
//! | 6 | 0101 | |
//! | 7 | 0020 | |
//! | 8 | 0011 | |
//! | 9 | 0002 | |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Circle,
    Sphere,
}

impl Mode {
    /// Number of canonical pairs.
    pub const fn dof(self) -> usize {
        match self {
            Mode::Circle => 1,
            Mode::Sphere => 2,
        }
    }

    pub const fn classical_len(self) -> usize {
        2 * self.dof()
    }

    pub const fn moment_len(self) -> usize {
        match self {
            Mode::Circle => 3,
            Mode::Sphere => 10,
        }
    }

    /// Length of the flat state vector `[classical.., moments..]`.
    pub const fn dim(self) -> usize {
        self.classical_len() + self.moment_len()
    }

    pub const fn name(self) -> &'static str {
        match self {
            Mode::Circle => "circle",
            Mode::Sphere => "sphere",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const SPHERE_ORDER: [[u8; 4]; 10] = [
    [2, 0, 0, 0],
    [1, 1, 0, 0],
    [1, 0, 1, 0],
    [1, 0, 0, 1],
    [0, 2, 0, 0],
    [0, 1, 1, 0],
    [0, 1, 0, 1],
    [0, 0, 2, 0],
    [0, 0, 1, 1],
    [0, 0, 0, 2],
];

pub const CIRCLE_ORDER: [[u8; 2]; 3] = [[2, 0], [1, 1], [0, 2]];

/// Slot constants for the sphere.
pub mod slot {
    pub const G2000: usize = 0;
    pub const G1100: usize = 1;
    pub const G1010: usize = 2;
    pub const G1001: usize = 3;
    pub const G0200: usize = 4;
    pub const G0110: usize = 5;
    pub const G0101: usize = 6;
    pub const G0020: usize = 7;
    pub const G0011: usize = 8;
    pub const G0002: usize = 9;

    pub const G20: usize = 0;
    pub const G11: usize = 1;
    pub const G02: usize = 2;
}

/// Exponent tuple of a second-order moment. Circle indices keep the last two
/// exponents at zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentIndex {
    mode: Mode,
    exps: [u8; 4],
}

impl MomentIndex {
    pub fn new(mode: Mode, exponents: &[u8]) -> Result<Self> {
        let bad = |reason| Error::InvalidMomentIndex { exponents: exponents.to_vec(), reason };
        if exponents.len() != 2 * mode.dof() {
            return Err(bad("wrong number of exponents for mode"));
        }
        if exponents.iter().map(|&e| e as u32).sum::<u32>() != 2 {
            return Err(bad("moment order must be 2"));
        }
        let mut exps = [0u8; 4];
        exps[..exponents.len()].copy_from_slice(exponents);
        Ok(MomentIndex { mode, exps })
    }

    pub fn sphere(a: u8, b: u8, c: u8, d: u8) -> Result<Self> {
        Self::new(Mode::Sphere, &[a, b, c, d])
    }

    pub fn circle(a: u8, b: u8) -> Result<Self> {
        Self::new(Mode::Circle, &[a, b])
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn exponents(&self) -> &[u8] {
        &self.exps[..2 * self.mode.dof()]
    }

    pub fn slot(&self) -> usize {
        let e = self.exponents();
        Self::all(self.mode)
            .position(|i| i.exponents() == e)
            .expect("validated index has a slot")
    }

    pub fn from_slot(mode: Mode, slot: usize) -> Result<Self> {
        match mode {
            Mode::Sphere => SPHERE_ORDER.get(slot).map(|e| Self::new(mode, e)),
            Mode::Circle => CIRCLE_ORDER.get(slot).map(|e| Self::new(mode, e)),
        }
        .unwrap_or_else(|| {
            Err(Error::InvalidMomentIndex { exponents: vec![], reason: "slot out of range" })
        })
    }

    pub fn all(mode: Mode) -> impl Iterator<Item = MomentIndex> {
        (0..mode.moment_len()).map(move |s| Self::from_slot(mode, s).unwrap())
    }

    /// The pair of phase-space coordinates `(i, j)`, `i <= j`, whose product
    /// this moment measures.
    pub fn pair(&self) -> (usize, usize) {
        let mut v = Vec::with_capacity(2);
        for (k, &e) in self.exponents().iter().enumerate() {
            for _ in 0..e {
                v.push(k);
            }
        }
        (v[0], v[1])
    }

    pub fn from_pair(mode: Mode, i: usize, j: usize) -> Result<Self> {
        let n = 2 * mode.dof();
        if i >= n || j >= n {
            return Err(Error::InvalidMomentIndex { exponents: vec![], reason: "coordinate out of range" });
        }
        let mut e = vec![0u8; n];
        e[i] += 1;
        e[j] += 1;
        Self::new(mode, &e)
    }

    /// Compact label such as `G2000` or `G11`.
    pub fn label(&self) -> String {
        let digits: String = self.exponents().iter().map(|e| char::from(b'0' + e)).collect();
        format!("G{digits}")
    }
}

/// Looks up the storage slot of a moment.
pub fn moment_slot(index: MomentIndex, mode: Mode) -> Result<usize> {
    if index.mode != mode {
        return Err(Error::ModeMismatch { expected: mode.name(), found: index.mode.name() });
    }
    Ok(index.slot())
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.exponents().iter().map(|e| e.to_string()).collect();
        write!(f, "G^{{{}}}", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams<T> {
    pub mass: T,
    pub radius: T,
    pub hbar: T,
    /// Constant shift of the Makarov potential; exerts no force.
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Scalar> Default for SystemParams<T> {
    fn default() -> Self {
        SystemParams {
            mass: T::one(),
            radius: T::one(),
            hbar: T::one(),
            alpha: T::zero(),
            beta: T::zero(),
            gamma: T::zero(),
        }
    }
}

impl<T: Scalar> SystemParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("mass", self.mass), ("radius", self.radius), ("hbar", self.hbar)] {
            if !v.is_finite() || v <= T::zero() {
                return Err(Error::param(field, format!("must be finite and > 0, got {v}")));
            }
        }
        for (field, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() {
                return Err(Error::param(field, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// `1 / (m R^2)`.
    pub fn inv_inertia(&self) -> T {
        T::one() / (self.mass * self.radius * self.radius)
    }

    pub fn uncertainty_floor(&self) -> T {
        self.hbar * self.hbar / T::lit(4.0)
    }
}

/// Classical expectation values plus all second-order moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentState<T> {
    pub mode: Mode,
    /// `[theta, p_theta]` or `[theta, p_theta, phi, p_phi]`; `phi` is unwrapped.
    pub classical: Vec<T>,
    pub moments: Vec<T>,
}

impl<T: Scalar> MomentState<T> {
    pub fn zeros(mode: Mode) -> Self {
        MomentState {
            mode,
            classical: vec![T::zero(); mode.classical_len()],
            moments: vec![T::zero(); mode.moment_len()],
        }
    }

    pub fn from_slice(mode: Mode, y: &[T]) -> Result<Self> {
        if y.len() != mode.dim() {
            return Err(Error::InvalidState(format!(
                "{mode} state needs {} entries, got {}",
                mode.dim(),
                y.len()
            )));
        }
        let nc = mode.classical_len();
        Ok(MomentState { mode, classical: y[..nc].to_vec(), moments: y[nc..].to_vec() })
    }

    pub fn to_vec(&self) -> Vec<T> {
        let mut v = self.classical.clone();
        v.extend_from_slice(&self.moments);
        v
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.classical.len() != self.mode.classical_len() || self.moments.len() != self.mode.moment_len() {
            return Err(Error::InvalidState(format!("malformed {} state", self.mode)));
        }
        Ok(())
    }

    pub fn moment(&self, index: MomentIndex) -> Result<T> {
        Ok(self.moments[moment_slot(index, self.mode)?])
    }

    pub fn set_moment(&mut self, index: MomentIndex, value: T) -> Result<()> {
        let s = moment_slot(index, self.mode)?;
        self.moments[s] = value;
        Ok(())
    }

    pub fn theta(&self) -> T {
        self.classical[0]
    }

    pub fn p_theta(&self) -> T {
        self.classical[1]
    }

    pub fn phi(&self) -> Option<T> {
        self.classical.get(2).copied()
    }

    pub fn p_phi(&self) -> Option<T> {
        self.classical.get(3).copied()
    }

    /// `G^{2,0}G^{0,2} - (G^{1,1})^2` for the `(theta, p_theta)` pair.
    pub fn uncertainty_theta(&self) -> T {
        match self.mode {
            Mode::Circle => uncertainty_det(&self.moments, slot::G20, slot::G02, slot::G11),
            Mode::Sphere => uncertainty_det(&self.moments, slot::G2000, slot::G0200, slot::G1100),
        }
    }

    /// Same combination for `(phi, p_phi)`; `None` on the circle.
    pub fn uncertainty_phi(&self) -> Option<T> {
        match self.mode {
            Mode::Circle => None,
            Mode::Sphere => Some(uncertainty_det(&self.moments, slot::G0020, slot::G0002, slot::G0011)),
        }
    }

    /// `(theta, p_theta, phi, p_phi, G..)` reflected through the equator.
    pub fn mirrored(&self) -> Self {
        let mut m = self.clone();
        m.classical[0] = T::PI() - self.classical[0];
        m.classical[1] = -self.classical[1];
        if self.mode == Mode::Sphere {
            for s in [slot::G1010, slot::G1001, slot::G0110, slot::G0101] {
                m.moments[s] = -m.moments[s];
            }
        }
        m
    }
}

fn uncertainty_det<T: Scalar>(g: &[T], q: usize, p: usize, qp: usize) -> T {
    g[q] * g[p] - g[qp] * g[qp]
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidityReport<T> {
    pub non_finite: Vec<String>,
    pub negative_diagonals: Vec<(MomentIndex, T)>,
    /// `(pair name, product, floor)` for each product below `floor - tol`.
    pub uncertainty_violations: Vec<(&'static str, T, T)>,
    pub uncertainty_products: Vec<T>,
}

impl<T> ValidityReport<T> {
    pub fn is_valid(&self) -> bool {
        self.non_finite.is_empty() && self.negative_diagonals.is_empty() && self.uncertainty_violations.is_empty()
    }
}

pub fn validate_state<T: Scalar>(state: &MomentState<T>, params: &SystemParams<T>, tol: T) -> ValidityReport<T> {
    let mut report = ValidityReport {
        non_finite: Vec::new(),
        negative_diagonals: Vec::new(),
        uncertainty_violations: Vec::new(),
        uncertainty_products: Vec::new(),
    };
    if state.check_shape().is_err() {
        report.non_finite.push("shape".to_string());
        return report;
    }
    let names = ["theta", "p_theta", "phi", "p_phi"];
    for (k, v) in state.classical.iter().enumerate() {
        if !v.is_finite() {
            report.non_finite.push(names[k].to_string());
        }
    }
    for idx in MomentIndex::all(state.mode) {
        let v = state.moments[idx.slot()];
        if !v.is_finite() {
            report.non_finite.push(idx.label());
        }
        let (i, j) = idx.pair();
        if i == j && v < T::zero() {
            report.negative_diagonals.push((idx, v));
        }
    }
    let floor = params.uncertainty_floor();
    let mut pairs = vec![("theta", state.uncertainty_theta())];
    if let Some(p) = state.uncertainty_phi() {
        pairs.push(("phi", p));
    }
    for (name, p) in pairs {
        report.uncertainty_products.push(p);
        if !(p >= floor - tol) {
            report.uncertainty_violations.push((name, p, floor));
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationTag {
    Completed,
    UncertaintyViolation,
    PoleSingularity,
    StepFailure,
}

impl TerminationTag {
    pub fn name(self) -> &'static str {
        match self {
            TerminationTag::Completed => "completed",
            TerminationTag::UncertaintyViolation => "uncertainty_violation",
            TerminationTag::PoleSingularity => "pole_singularity",
            TerminationTag::StepFailure => "step_failure",
        }
    }
}

impl fmt::Display for TerminationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminationStatus<T> {
    pub tag: TerminationTag,
    pub time: T,
    pub detail: String,
}
