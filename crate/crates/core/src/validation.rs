//! Self-test suites: bracket algebra against the Moyal oracle, hand-written
//! equations against the bracket-derived ones, conservation laws, uncertainty
//! floors and integrator self-convergence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::moyal::moyal_moment_bracket;
use crate::algebra::{generic_rhs, BracketTable, FreeCircle, FreeSphere, Makarov};
use crate::analysis::{component_drift, energy_drift};
use crate::dynamics::{rhs, MomentPolicy, SystemKind, SystemTag, DEFAULT_SIN_FLOOR};
use crate::error::{Error, Result};
use crate::integrator::{convergence_check, integrate, IntegratorConfig};
use crate::reproduction::{makarov_params, reference_state};
use crate::state::{slot, validate_state, Mode, MomentIndex, MomentState, SystemParams, TerminationTag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Brackets,
    Oracle,
    Conservation,
    Uncertainty,
    Convergence,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Brackets, Suite::Oracle, Suite::Conservation, Suite::Uncertainty, Suite::Convergence];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Brackets => "brackets",
            Suite::Oracle => "oracle",
            Suite::Conservation => "conservation",
            Suite::Uncertainty => "uncertainty",
            Suite::Convergence => "convergence",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::param("suite", format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: String) {
        self.checks.push(Check { name: name.into(), passed, detail });
    }
}

/// Bracket tables the suites run against; swapping one in is how mutation tests work.
#[derive(Clone, Debug)]
pub struct ValidationContext {
    pub circle_table: BracketTable,
    pub sphere_table: BracketTable,
    pub config: IntegratorConfig<f64>,
    pub seed: u64,
    pub samples: usize,
}

impl ValidationContext {
    pub fn new() -> Result<Self> {
        Ok(ValidationContext {
            circle_table: BracketTable::new(Mode::Circle)?,
            sphere_table: BracketTable::new(Mode::Sphere)?,
            config: IntegratorConfig::default(),
            seed: 20240611,
            samples: 100,
        })
    }

    fn table(&self, mode: Mode) -> &BracketTable {
        match mode {
            Mode::Circle => &self.circle_table,
            Mode::Sphere => &self.sphere_table,
        }
    }
}

/// Random state obeying both uncertainty relations, away from the poles.
pub fn random_valid_state<R: Rng>(mode: Mode, params: &SystemParams<f64>, rng: &mut R) -> MomentState<f64> {
    let floor = params.uncertainty_floor();
    let mut s = MomentState::zeros(mode);
    let pair = |rng: &mut R| {
        let q: f64 = rng.gen_range(0.01..0.3);
        let qp: f64 = rng.gen_range(-0.5..0.5);
        let p = (floor + qp * qp) / q * (1.0 + rng.gen_range(0.0..1.0));
        (q, qp, p)
    };
    match mode {
        Mode::Circle => {
            s.classical = vec![rng.gen_range(-3.0..3.0), rng.gen_range(-10.0..10.0)];
            let (q, qp, p) = pair(rng);
            s.moments[slot::G20] = q;
            s.moments[slot::G11] = qp;
            s.moments[slot::G02] = p;
        }
        Mode::Sphere => {
            s.classical = vec![
                rng.gen_range(0.3..std::f64::consts::PI - 0.3),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-10.0..10.0),
            ];
            let (q, qp, p) = pair(rng);
            s.moments[slot::G2000] = q;
            s.moments[slot::G1100] = qp;
            s.moments[slot::G0200] = p;
            let (q, qp, p) = pair(rng);
            s.moments[slot::G0020] = q;
            s.moments[slot::G0011] = qp;
            s.moments[slot::G0002] = p;
            for k in [slot::G1010, slot::G1001, slot::G0110, slot::G0101] {
                s.moments[k] = rng.gen_range(-0.02..0.02);
            }
        }
    }
    s
}

fn brackets_suite(ctx: &ValidationContext) -> Result<SuiteReport> {
    let mut rep = SuiteReport { suite: Suite::Brackets, checks: Vec::new() };
    for mode in [Mode::Circle, Mode::Sphere] {
        let table = ctx.table(mode);
        let mut mismatches = Vec::new();
        let mut total = 0;
        for a in MomentIndex::all(mode) {
            for b in MomentIndex::all(mode) {
                total += 1;
                if table.entry_map(a.slot(), b.slot()) != moyal_moment_bracket(a, b)? {
                    mismatches.push(format!("{{{},{}}}", a.label(), b.label()));
                }
            }
        }
        rep.push(
            format!("{mode} brackets match the Moyal oracle"),
            mismatches.is_empty(),
            format!("{} of {total} coefficients differ {:?}", mismatches.len(), mismatches),
        );
        rep.push(format!("{mode} bracket table antisymmetric"), table.is_antisymmetric(), String::new());
    }
    Ok(rep)
}

/// Largest component-wise relative difference, with differences below `1e-12` ignored.
fn worst_relative(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if d <= 1e-12 {
                0.0
            } else {
                d / x.abs().max(y.abs())
            }
        })
        .fold(0.0, f64::max)
}

fn oracle_suite(ctx: &ValidationContext) -> Result<SuiteReport> {
    let mut rep = SuiteReport { suite: Suite::Oracle, checks: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for tag in [SystemTag::CircleFree, SystemTag::SphereFree, SystemTag::SphereMakarov] {
        let params = if tag == SystemTag::SphereMakarov {
            SystemParams { alpha: 0.4, beta: 2.0, gamma: -1.9, mass: 1.3, radius: 0.8, hbar: 1.0 }
        } else {
            SystemParams { mass: 1.3, radius: 0.8, ..SystemParams::default() }
        };
        let kind = SystemKind::new(tag, MomentPolicy::Evolve);
        let mode = tag.mode();
        let mut worst = 0.0f64;
        let mut invalid = 0;
        for _ in 0..ctx.samples {
            let s = random_valid_state(mode, &params, &mut rng);
            if !validate_state(&s, &params, 0.0).is_valid() {
                invalid += 1;
            }
            let hand = rhs(&kind, &s, &params)?;
            let table = ctx.table(mode);
            let generic = match tag {
                SystemTag::CircleFree => generic_rhs(&FreeCircle::new(&params), None, table, &s, &params)?,
                SystemTag::SphereFree => {
                    generic_rhs(&FreeSphere::new(&params, DEFAULT_SIN_FLOOR), None, table, &s, &params)?
                }
                SystemTag::SphereMakarov => {
                    let pot = Makarov::new(&params, DEFAULT_SIN_FLOOR);
                    generic_rhs(&FreeSphere::new(&params, DEFAULT_SIN_FLOOR), Some(&pot), table, &s, &params)?
                }
            };
            worst = worst.max(worst_relative(&hand, &generic));
        }
        rep.push(
            format!("{} hand-written vs bracket-derived", tag.name()),
            worst <= 1e-6 && invalid == 0,
            format!("{} states, worst relative difference {worst:.3e}, {invalid} invalid states", ctx.samples),
        );
    }
    Ok(rep)
}

fn conservation_suite(ctx: &ValidationContext) -> Result<SuiteReport> {
    let mut rep = SuiteReport { suite: Suite::Conservation, checks: Vec::new() };
    let free = SystemParams::default();
    let kind = SystemKind::new(SystemTag::SphereFree, MomentPolicy::Evolve);
    let tr = integrate(kind, &reference_state(1.0), &free, &ctx.config)?;
    let dp = component_drift(&tr, 3)?;
    let dg = component_drift(&tr, 4 + slot::G0002)?;
    let de = energy_drift(&tr);
    let done = tr.status.tag == TerminationTag::Completed;
    rep.push("sphere_free run completes", done, format!("{}", tr.status.tag));
    rep.push("sphere_free |dP_phi| < 1e-10", dp < 1e-10, format!("{dp:.3e}"));
    rep.push("sphere_free |dG0002| < 1e-10", dg < 1e-10, format!("{dg:.3e}"));
    rep.push("sphere_free |dH_Q|/H_Q < 1e-8", de < 1e-8, format!("{de:.3e}"));

    let mk = SystemKind::new(SystemTag::SphereMakarov, MomentPolicy::Evolve);
    let tr = integrate(mk, &reference_state(1.0), &makarov_params(-0.2), &ctx.config)?;
    let de = energy_drift(&tr);
    rep.push("sphere_makarov (gamma = -0.2) |dH_Q|/H_Q < 1e-8", de < 1e-8, format!("{de:.3e} ({})", tr.status.tag));

    let circle = MomentState { mode: Mode::Circle, classical: vec![0.0, 10.0], moments: vec![0.05, 0.1, 5.2] };
    let ck = SystemKind::new(SystemTag::CircleFree, MomentPolicy::Evolve);
    let tr = integrate(ck, &circle, &free, &ctx.config)?;
    let de = energy_drift(&tr);
    rep.push("circle_free |dH_Q|/H_Q < 1e-8", de < 1e-8, format!("{de:.3e}"));
    Ok(rep)
}

fn uncertainty_suite(ctx: &ValidationContext) -> Result<SuiteReport> {
    let mut rep = SuiteReport { suite: Suite::Uncertainty, checks: Vec::new() };
    let cases = [
        ("sphere_free a = 1", SystemTag::SphereFree, SystemParams::default()),
        ("sphere_makarov gamma = -0.2", SystemTag::SphereMakarov, makarov_params(-0.2)),
    ];
    for (name, tag, params) in cases {
        let tr = integrate(SystemKind::new(tag, MomentPolicy::Evolve), &reference_state(1.0), &params, &ctx.config)?;
        let floor = params.uncertainty_floor() - 1e-9;
        let (th, ph) = tr.min_uncertainty();
        let ph = ph.unwrap_or(f64::NAN);
        let ok = tr.completed() && th >= floor && ph >= floor;
        rep.push(
            format!("{name}: min products >= hbar^2/4 - 1e-9 over the full span"),
            ok,
            format!("min dG_theta {th:.12}, min dG_phi {ph:.12}, status {} at t = {}", tr.status.tag, tr.status.time),
        );
    }
    Ok(rep)
}

fn convergence_suite(ctx: &ValidationContext) -> Result<SuiteReport> {
    let mut rep = SuiteReport { suite: Suite::Convergence, checks: Vec::new() };
    let kind = SystemKind::new(SystemTag::SphereFree, MomentPolicy::Evolve);
    let r = convergence_check(kind, &reference_state(1.0), &SystemParams::default(), &ctx.config, &[1e-6, 1e-8, 1e-10])?;
    let shrink = r.deltas.windows(2).all(|w| w[1] * 10.0 <= w[0]);
    rep.push("sphere_free self-convergence monotone", r.monotone && r.certified, format!("deltas {:?}", r.deltas));
    rep.push("successive deltas shrink by >= 10x", shrink, format!("deltas {:?}", r.deltas));
    Ok(rep)
}

pub fn run_suite(suite: Suite, ctx: &ValidationContext) -> Result<SuiteReport> {
    match suite {
        Suite::Brackets => brackets_suite(ctx),
        Suite::Oracle => oracle_suite(ctx),
        Suite::Conservation => conservation_suite(ctx),
        Suite::Uncertainty => uncertainty_suite(ctx),
        Suite::Convergence => convergence_suite(ctx),
    }
}

pub fn run_suites(suites: &[Suite], ctx: &ValidationContext) -> Result<Vec<SuiteReport>> {
    suites.iter().map(|&s| run_suite(s, ctx)).collect()
}
