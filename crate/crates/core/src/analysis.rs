//! Post-processing of trajectories: uncertainty products, phase shifts, ensemble
//! statistics, hemisphere counts and threshold crossing times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::scalar::Scalar;
use crate::state::{slot, Mode, MomentState, SystemParams};

/// Default half-width of the band around the equator that counts as neither hemisphere.
pub const EQUATOR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySeries<T> {
    pub t: Vec<T>,
    pub theta: Vec<T>,
    pub phi: Vec<T>,
    pub min_theta: T,
    pub min_phi: T,
}

/// Both uncertainty products at every sample, recomputed from the moments.
pub fn uncertainty_products<T: Scalar>(traj: &Trajectory<T>) -> Result<UncertaintySeries<T>> {
    if traj.mode != Mode::Sphere {
        return Err(Error::ModeMismatch { expected: Mode::Sphere.name(), found: traj.mode.name() });
    }
    let n = traj.samples.len();
    let mut out = UncertaintySeries {
        t: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        min_theta: T::infinity(),
        min_phi: T::infinity(),
    };
    for s in &traj.samples {
        let th = s.state.uncertainty_theta();
        let ph = s.state.uncertainty_phi().unwrap_or_else(T::nan);
        out.min_theta = out.min_theta.min(th);
        out.min_phi = out.min_phi.min(ph);
        out.t.push(s.t);
        out.theta.push(th);
        out.phi.push(ph);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseShift<T> {
    pub t: Vec<T>,
    pub dtheta: Vec<T>,
    pub dphi: Vec<T>,
    pub end_time: T,
    pub end_dtheta: T,
    pub end_dphi: T,
}

/// Signed differences semiclassical minus classical on the semiclassical grid,
/// up to the end of the shorter run.
pub fn phase_shift<T: Scalar>(semiclassical: &Trajectory<T>, classical: &Trajectory<T>) -> Result<PhaseShift<T>> {
    if semiclassical.mode != classical.mode {
        return Err(Error::Alignment("trajectories live on different configuration spaces".to_string()));
    }
    if semiclassical.start_time() != classical.start_time() {
        return Err(Error::Alignment("trajectories start at different times".to_string()));
    }
    let end = semiclassical.end_time().min(classical.end_time());
    let mut out = PhaseShift {
        t: Vec::new(),
        dtheta: Vec::new(),
        dphi: Vec::new(),
        end_time: end,
        end_dtheta: T::zero(),
        end_dphi: T::zero(),
    };
    for s in semiclassical.samples.iter().filter(|s| s.t <= end) {
        let c = classical.state_at(s.t)?;
        out.t.push(s.t);
        out.dtheta.push(s.state.theta() - c.theta());
        out.dphi.push(diff_phi(&s.state, &c));
    }
    if out.t.last() != Some(&end) {
        let (a, b) = (semiclassical.state_at(end)?, classical.state_at(end)?);
        out.t.push(end);
        out.dtheta.push(a.theta() - b.theta());
        out.dphi.push(diff_phi(&a, &b));
    }
    out.end_dtheta = *out.dtheta.last().expect("non-empty");
    out.end_dphi = *out.dphi.last().expect("non-empty");
    Ok(out)
}

fn diff_phi<T: Scalar>(a: &MomentState<T>, b: &MomentState<T>) -> T {
    match (a.phi(), b.phi()) {
        (Some(x), Some(y)) => x - y,
        _ => T::zero(),
    }
}

/// Near-equator estimate of the azimuthal phase shift,
/// `2 P_phi mu (G2000_0 t + 2 mu G1100_0 t^2)` with `mu = 1/(m R^2)`.
/// Only meaningful while the trajectory stays close to the equator.
pub fn predicted_phase_shift<T: Scalar>(params: &SystemParams<T>, p_phi: T, g2000_0: T, g1100_0: T, t: T) -> T {
    let mu = params.inv_inertia();
    let two = T::lit(2.0);
    two * p_phi * mu * (g2000_0 * t + two * mu * g1100_0 * t * t)
}

/// Dimensionless combination `L dx0^2 t / (hbar R^2)` that sets the size of the shift.
pub fn scaling_combination<T: Scalar>(params: &SystemParams<T>, l: T, dx0_sq: T, t: T) -> T {
    l * dx0_sq * t / (params.hbar * params.radius * params.radius)
}

/// Population statistics of one metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    pub mean: T,
    pub std_dev: T,
    pub min: T,
    pub max: T,
    pub n: usize,
}

impl<T: Scalar> MetricSummary<T> {
    pub fn from_values(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Sweep("no values to summarize".to_string()));
        }
        let n = T::lit(values.len() as f64);
        let mean = values.iter().fold(T::zero(), |a, &b| a + b) / n;
        let var = values.iter().fold(T::zero(), |a, &b| a + (b - mean) * (b - mean)) / n;
        Ok(MetricSummary {
            mean,
            std_dev: var.sqrt(),
            min: values.iter().fold(T::infinity(), |a, &b| a.min(b)),
            max: values.iter().fold(T::neg_infinity(), |a, &b| a.max(b)),
            n: values.len(),
        })
    }
}

/// The four per-pair metrics at a common time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats<T> {
    pub t_eval: T,
    pub abs_dtheta: MetricSummary<T>,
    pub abs_dphi: MetricSummary<T>,
    /// `|dphi| / |phi_cl|`, as a fraction.
    pub rel_dphi: MetricSummary<T>,
    /// `(G2000(t) - G2000(0)) / G2000(0)` of the semiclassical run, as a fraction.
    pub g2000_growth: MetricSummary<T>,
}

/// Statistics over matched `(semiclassical, classical)` pairs.
pub fn ensemble_stats<T: Scalar>(pairs: &[(&Trajectory<T>, &Trajectory<T>)], t_eval: T) -> Result<EnsembleStats<T>> {
    if pairs.is_empty() {
        return Err(Error::Alignment("no matched pairs".to_string()));
    }
    let mut m = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (k, (sc, cl)) in pairs.iter().enumerate() {
        if sc.mode != Mode::Sphere || cl.mode != Mode::Sphere {
            return Err(Error::Alignment(format!("pair {k} is not a sphere pair")));
        }
        let (s0, c0) = (&sc.samples[0].state, &cl.samples[0].state);
        if s0.classical != c0.classical {
            return Err(Error::Alignment(format!("pair {k} starts from different expectation values")));
        }
        let (s, c) = (sc.state_at(t_eval)?, cl.state_at(t_eval)?);
        let dphi = diff_phi(&s, &c).abs();
        m[0].push((s.theta() - c.theta()).abs());
        m[1].push(dphi);
        m[2].push(dphi / c.phi().unwrap_or_else(T::nan).abs());
        let g0 = s0.moments[slot::G2000];
        m[3].push((s.moments[slot::G2000] - g0) / g0);
    }
    Ok(EnsembleStats {
        t_eval,
        abs_dtheta: MetricSummary::from_values(&m[0])?,
        abs_dphi: MetricSummary::from_values(&m[1])?,
        rel_dphi: MetricSummary::from_values(&m[2])?,
        g2000_growth: MetricSummary::from_values(&m[3])?,
    })
}

/// How trajectories that stopped before the evaluation time are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedPolicy {
    /// Use the final pre-termination state.
    #[default]
    LastValidState,
    ExcludeTerminated,
}

/// θ of each trajectory at `t_eval` under `policy`; `None` for excluded runs.
pub fn theta_at<T: Scalar>(traj: &Trajectory<T>, t_eval: T, policy: TerminatedPolicy) -> Result<Option<T>> {
    if t_eval <= traj.end_time() {
        return Ok(Some(traj.state_at(t_eval)?.theta()));
    }
    match policy {
        TerminatedPolicy::LastValidState => Ok(Some(traj.final_state().theta())),
        TerminatedPolicy::ExcludeTerminated => Ok(None),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HemisphereCount<T> {
    /// `theta > pi/2`.
    pub south: usize,
    /// `theta < pi/2`.
    pub north: usize,
    pub on_equator: usize,
    pub excluded: usize,
    /// `south / north`; infinite when the north is empty, NaN when both are.
    pub ratio: T,
}

/// `N(theta > pi/2) / N(theta < pi/2)` at `t_eval`.
pub fn hemisphere_ratio<T: Scalar>(
    trajs: &[&Trajectory<T>],
    t_eval: T,
    policy: TerminatedPolicy,
    equator_tol: T,
) -> Result<HemisphereCount<T>> {
    let half_pi = T::FRAC_PI_2();
    let mut c = HemisphereCount { south: 0, north: 0, on_equator: 0, excluded: 0, ratio: T::nan() };
    for tr in trajs {
        if tr.mode != Mode::Sphere {
            return Err(Error::ModeMismatch { expected: Mode::Sphere.name(), found: tr.mode.name() });
        }
        match theta_at(tr, t_eval, policy)? {
            None => c.excluded += 1,
            Some(th) if (th - half_pi).abs() <= equator_tol => c.on_equator += 1,
            Some(th) if th > half_pi => c.south += 1,
            Some(_) => c.north += 1,
        }
    }
    c.ratio = match (c.south, c.north) {
        (0, 0) => T::nan(),
        (_, 0) => T::infinity(),
        (s, n) => T::lit(s as f64) / T::lit(n as f64),
    };
    Ok(c)
}

/// Population mean of θ at `t_eval`; NaN if every run was excluded.
pub fn mean_theta<T: Scalar>(trajs: &[&Trajectory<T>], t_eval: T, policy: TerminatedPolicy) -> Result<T> {
    let mut v = Vec::new();
    for tr in trajs {
        if let Some(th) = theta_at(tr, t_eval, policy)? {
            v.push(th);
        }
    }
    if v.is_empty() {
        return Ok(T::nan());
    }
    Ok(v.iter().fold(T::zero(), |a, &b| a + b) / T::lit(v.len() as f64))
}

/// First time θ reaches `theta_star`, located on the dense output.
pub fn time_to_theta<T: Scalar>(traj: &Trajectory<T>, theta_star: T) -> Result<Option<T>> {
    if !(theta_star > T::zero() && theta_star < T::PI()) {
        return Err(Error::param("theta_star", format!("must lie in (0, pi), got {theta_star}")));
    }
    let f = |t: T| -> Result<T> { Ok(traj.state_at(t)?.theta() - theta_star) };
    let end = traj.end_time();
    let t0 = traj.start_time();
    let mut a = t0;
    let mut fa = f(a)?;
    if fa == T::zero() {
        return Ok(Some(a));
    }
    for seg in traj.segments() {
        let probes = 8;
        for k in 1..=probes {
            let b = (seg.t0 + seg.h * T::lit(k as f64 / probes as f64)).min(end);
            if b <= a {
                continue;
            }
            let fb = f(b)?;
            if fb == T::zero() {
                return Ok(Some(b));
            }
            if (fa < T::zero()) != (fb < T::zero()) {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    if hi - lo <= T::lit(1e-12) * hi.abs().max(T::one()) {
                        break;
                    }
                    let mid = T::lit(0.5) * (lo + hi);
                    if (f(mid)? < T::zero()) == (fa < T::zero()) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Some(T::lit(0.5) * (lo + hi)));
            }
            a = b;
            fa = fb;
        }
        if a >= end {
            break;
        }
    }
    Ok(None)
}

/// Largest `|E(t) - E(0)| / |E(0)|` over the samples.
pub fn energy_drift<T: Scalar>(traj: &Trajectory<T>) -> T {
    let e0 = traj.samples[0].energy;
    traj.samples.iter().fold(T::zero(), |m, s| m.max((s.energy - e0).abs() / e0.abs()))
}

/// Largest `|y_k(t) - y_k(0)|` of one flat state component over the samples.
pub fn component_drift<T: Scalar>(traj: &Trajectory<T>, component: usize) -> Result<T> {
    if component >= traj.mode.dim() {
        return Err(Error::param("component", format!("index {component} out of range")));
    }
    let get = |s: &MomentState<T>| {
        let nc = s.classical.len();
        if component < nc {
            s.classical[component]
        } else {
            s.moments[component - nc]
        }
    };
    let y0 = get(&traj.samples[0].state);
    Ok(traj.samples.iter().fold(T::zero(), |m, s| m.max((get(&s.state) - y0).abs())))
}
