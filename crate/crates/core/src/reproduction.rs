//! Reference runs and the published comparison tables: single-trajectory
//! corrections, ensemble statistics and the Makarov asymmetry metrics.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    hemisphere_ratio, mean_theta, phase_shift, predicted_phase_shift, time_to_theta, TerminatedPolicy, EQUATOR_TOL,
};
use crate::dynamics::{rhs, MomentPolicy, SystemKind, SystemTag};
use crate::ensemble::{run_sweep, InitialCondition, RunSetup, SweepParameter, SweepSpec, SweepValues};
use crate::error::Result;
use crate::integrator::{integrate, IntegratorConfig, Trajectory};
use crate::state::{slot, Mode, MomentState, SystemParams};

/// The fixed reference profile: equatorial start, `P_phi = 10`,
/// `G2000 = 0.0475`, `G0200 = 5.26316`, `G0020 = 0.05`, `G0002 = 5`.
pub fn reference_state(a: f64) -> MomentState<f64> {
    let mut s = MomentState::zeros(Mode::Sphere);
    s.classical = vec![std::f64::consts::FRAC_PI_2, a, 0.0, 10.0];
    s.moments[slot::G2000] = 0.0475;
    s.moments[slot::G0200] = 5.26316;
    s.moments[slot::G0020] = 0.05;
    s.moments[slot::G0002] = 5.0;
    s
}

pub fn makarov_params(gamma: f64) -> SystemParams<f64> {
    SystemParams { beta: 2.0, gamma, ..SystemParams::default() }
}

pub fn reference_setup(tag: SystemTag, params: SystemParams<f64>, a: f64, config: IntegratorConfig<f64>) -> RunSetup<f64> {
    RunSetup {
        kind: SystemKind::new(tag, MomentPolicy::Evolve),
        params,
        initial: InitialCondition::Explicit(reference_state(a)),
        config,
    }
}

/// One line of a comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub quantity: String,
    /// Published value, when there is one.
    pub published: Option<f64>,
    pub computed: f64,
    pub rel_deviation: Option<f64>,
    /// Acceptance band `[lo, hi]` on `computed`; rows without one are informational.
    pub band: Option<(f64, f64)>,
    pub pass: Option<bool>,
}

impl ReportRow {
    pub fn new(quantity: &str, published: Option<f64>, computed: f64, band: Option<(f64, f64)>) -> Self {
        let rel_deviation = published.filter(|p| *p != 0.0).map(|p| (computed - p) / p.abs());
        let pass = band.map(|(lo, hi)| computed >= lo && computed <= hi);
        ReportRow { quantity: quantity.to_string(), published, computed, rel_deviation, band, pass }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

impl Report {
    /// True when every row with an acceptance band passes.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn row(&self, quantity: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    /// Fixed-width text rendering.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.name);
        out.push_str(&format!(
            "{:<28} {:>14} {:>16} {:>10} {:>22} {:>6}\n",
            "quantity", "published", "computed", "rel.dev", "band", "pass"
        ));
        for r in &self.rows {
            let published = r.published.map_or("-".to_string(), |p| format!("{p:.6}"));
            let dev = r.rel_deviation.map_or("-".to_string(), |d| format!("{:+.2}%", 100.0 * d));
            let band = r.band.map_or("-".to_string(), |(a, b)| format!("[{}, {}]", short(a), short(b)));
            let pass = match r.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "-",
            };
            out.push_str(&format!(
                "{:<28} {:>14} {:>16.9} {:>10} {:>22} {:>6}\n",
                r.quantity, published, r.computed, dev, band, pass
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

/// Up to nine significant digits, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{:.*}", (8 - x.abs().log10().floor().max(-20.0) as i32).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Semiclassical run and its classical (moments zeroed) companion.
pub fn reference_pair(
    tag: SystemTag,
    params: &SystemParams<f64>,
    a: f64,
    config: &IntegratorConfig<f64>,
) -> Result<(Trajectory<f64>, Trajectory<f64>)> {
    let s0 = reference_state(a);
    let sc = integrate(SystemKind::new(tag, MomentPolicy::Evolve), &s0, params, config)?;
    let cl = integrate(SystemKind::new(tag, MomentPolicy::Zeroed), &s0, params, config)?;
    Ok((sc, cl))
}

/// Single free-sphere trajectory with `a = 1` at `t_end`.
pub fn table1(config: &IntegratorConfig<f64>) -> Result<Report> {
    let params = SystemParams::default();
    let (sc, cl) = reference_pair(SystemTag::SphereFree, &params, 1.0, config)?;
    let d = phase_shift(&sc, &cl)?;
    let end = sc.final_state();
    let kind = SystemKind::new(SystemTag::SphereFree, MomentPolicy::Evolve);
    let phi_dot = rhs(&kind, end, &params)?[2];
    let g0 = sc.samples[0].state.moments[slot::G2000];
    let g = end.moments[slot::G2000];
    let rows = vec![
        ReportRow::new("theta", Some(1.573), end.theta(), None),
        ReportRow::new("|dtheta|", Some(0.002), d.end_dtheta.abs(), Some((0.001, 0.01))),
        ReportRow::new("phi", Some(91.84), end.phi().unwrap_or(f64::NAN), None),
        ReportRow::new("|dphi|", Some(8.16), d.end_dphi.abs(), Some((6.5, 10.0))),
        ReportRow::new("dphi (signed)", Some(-8.16), d.end_dphi, None),
        ReportRow::new("phi_dot", Some(9.21), phi_dot, None),
        ReportRow::new("G2000", Some(0.1426), g, None),
        ReportRow::new("G2000(t)/G2000(0)", Some(3.0), g / g0, Some((2.0, 4.0))),
        ReportRow::new("G0020", Some(0.050), end.moments[slot::G0020], None),
        ReportRow::new("H_Q(0)", Some(58.0066), sc.samples[0].energy, Some((58.0066 - 1e-6, 58.0066 + 1e-6))),
        ReportRow::new("H_Q(0) vs published", Some(53.12), sc.samples[0].energy, None),
        ReportRow::new("predicted dphi", Some(9.5), predicted_phase_shift(&params, 10.0, g0, 0.0, sc.end_time()), None),
    ];
    let mut notes = vec![format!("classical run: moments zeroed; t = {}", d.end_time)];
    if !sc.completed() {
        notes.push(format!("semiclassical run ended early: {}", sc.status.tag));
    }
    Ok(Report { name: "table1: free sphere, a = 1".to_string(), rows, notes })
}

/// Paired ensemble `a = 0, 2, ..., 10` on the free sphere.
pub fn table2(config: &IntegratorConfig<f64>, threads: Option<usize>) -> Result<Report> {
    let spec = SweepSpec {
        base: reference_setup(SystemTag::SphereFree, SystemParams::default(), 0.0, *config),
        parameter: SweepParameter::A,
        values: SweepValues::Range { min: 0.0, max: 10.0, step: 2.0 },
        paired_classical: true,
        classical_policy: MomentPolicy::Zeroed,
        threads,
    };
    let res = run_sweep(&spec)?;
    let st = res.stats(config.t_end)?;
    let rows = vec![
        ReportRow::new("mean |dtheta|", Some(0.018), st.abs_dtheta.mean, None),
        ReportRow::new("std |dtheta|", Some(0.012), st.abs_dtheta.std_dev, None),
        ReportRow::new("mean |dphi|", Some(6.4), st.abs_dphi.mean, None),
        ReportRow::new("std |dphi|", Some(2.8), st.abs_dphi.std_dev, None),
        ReportRow::new("mean |dphi|/phi_cl", Some(0.072), st.rel_dphi.mean, Some((0.04, 0.11))),
        ReportRow::new("std |dphi|/phi_cl", Some(0.021), st.rel_dphi.std_dev, None),
        ReportRow::new("mean dG2000/G0", Some(1.98), st.g2000_growth.mean, Some((1.5, 2.5))),
        ReportRow::new("std dG2000/G0", Some(0.24), st.g2000_growth.std_dev, None),
    ];
    let notes = vec![format!("N = {} pairs, population statistics at t = {}", st.abs_dphi.n, st.t_eval)];
    Ok(Report { name: "table2: free-sphere ensemble, a = 0..10 step 2".to_string(), rows, notes })
}

/// Makarov metrics for `beta = 2`, `gamma = -1.9`.
pub fn makarov_metrics(config: &IntegratorConfig<f64>, threads: Option<usize>) -> Result<Report> {
    let params = makarov_params(-1.9);
    let (sc, cl) = reference_pair(SystemTag::SphereMakarov, &params, 1.0, config)?;
    let t_sc = time_to_theta(&sc, 2.0)?;
    let t_cl = time_to_theta(&cl, 2.0)?;
    let ratio = match (t_sc, t_cl) {
        (Some(a), Some(b)) => a / b,
        _ => f64::NAN,
    };
    let spec = SweepSpec {
        base: reference_setup(SystemTag::SphereMakarov, params, 0.0, *config),
        parameter: SweepParameter::A,
        values: SweepValues::Range { min: -8.0, max: 8.0, step: 1.0 },
        paired_classical: false,
        classical_policy: MomentPolicy::Zeroed,
        threads,
    };
    let res = run_sweep(&spec)?;
    let trajs = res.semiclassical();
    let policy = TerminatedPolicy::LastValidState;
    let r5 = hemisphere_ratio(&trajs, 5.0, policy, EQUATOR_TOL)?;
    let r10 = hemisphere_ratio(&trajs, 10.0, policy, EQUATOR_TOL)?;
    let th5 = mean_theta(&trajs, 5.0, policy)?;
    let rows = vec![
        ReportRow::new("t_cl(theta = 2)", Some(1.2), t_cl.unwrap_or(f64::NAN), None),
        ReportRow::new("t_sc(theta = 2)", Some(0.8), t_sc.unwrap_or(f64::NAN), None),
        ReportRow::new("t_sc/t_cl", Some(0.8 / 1.2), ratio, Some((0.5, 0.85))),
        ReportRow::new("hemisphere ratio t=5", Some(3.1), r5.ratio, None),
        ReportRow::new("hemisphere ratio t=10", Some(3.8), r10.ratio, Some((2.5, 5.0))),
        ReportRow::new("theta_mean t=5", Some(2.3), th5, None),
    ];
    let terminated = trajs.iter().filter(|t| !t.completed()).count();
    let notes = vec![
        format!("single runs: semiclassical {}, classical {}", sc.status.tag, cl.status.tag),
        format!(
            "t=5 counts south {} north {} equator {}; t=10 counts south {} north {} equator {}",
            r5.south, r5.north, r5.on_equator, r10.south, r10.north, r10.on_equator
        ),
        format!("{} of {} ensemble runs ended before t_end; last valid state used", terminated, trajs.len()),
        format!("{} grid points failed to run", res.failures().len()),
    ];
    Ok(Report { name: "makarov_metrics: beta = 2, gamma = -1.9".to_string(), rows, notes })
}
