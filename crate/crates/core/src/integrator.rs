//! Dormand-Prince 5(4) integration with PI step control, dense output,
//! uniform sampling and event location.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dynamics::{energy_of_slice, Dynamics, MomentPolicy, SystemKind, DEFAULT_SIN_FLOOR};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::{slot, validate_state, Mode, MomentState, SystemParams, TerminationStatus, TerminationTag};

/// A first-order system `dy/dt = f(t, y)`.
pub trait VectorField<T> {
    fn dim(&self) -> usize;
    fn eval(&self, t: T, y: &[T], dy: &mut [T]) -> Result<()>;
}

impl<T, F: VectorField<T> + ?Sized> VectorField<T> for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        (**self).eval(t, y, dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    pub t_end: T,
    pub sample_dt: T,
    pub uncertainty_margin: T,
    pub sin_floor: T,
    pub max_steps: usize,
    /// Seconds of wall-clock time before a run gives up with `step_failure`.
    pub wall_clock_limit: f64,
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: T::lit(1e-9),
            abs_tol: T::lit(1e-12),
            max_step: T::lit(0.1),
            t_end: T::lit(10.0),
            sample_dt: T::lit(0.01),
            uncertainty_margin: T::lit(1e-10),
            sin_floor: T::lit(DEFAULT_SIN_FLOOR),
            max_steps: 2_000_000,
            wall_clock_limit: 60.0,
        }
    }
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("sample_dt", self.sample_dt),
            ("sin_floor", self.sin_floor),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::param(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.t_end.is_finite() && self.t_end >= T::zero()) {
            return Err(Error::param("t_end", format!("must be finite and >= 0, got {}", self.t_end)));
        }
        if !(self.uncertainty_margin.is_finite() && self.uncertainty_margin >= T::zero()) {
            return Err(Error::param("uncertainty_margin", "must be finite and >= 0".to_string()));
        }
        if self.sin_floor >= T::one() {
            return Err(Error::param("sin_floor", "must be below 1".to_string()));
        }
        if self.max_steps == 0 {
            return Err(Error::param("max_steps", "must be positive".to_string()));
        }
        if !(self.wall_clock_limit > 0.0) {
            return Err(Error::param("wall_clock_limit", "must be positive".to_string()));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, rel_tol: T) -> Self {
        let ratio = self.abs_tol / self.rel_tol;
        self.rel_tol = rel_tol;
        self.abs_tol = rel_tol * ratio;
        self
    }
}

// Dormand-Prince tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const PI_BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const EVENT_PROBES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const EVENT_TIME_TOL: f64 = 1e-12;

/// Fourth-order continuous extension over one accepted step.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSegment<T> {
    pub t0: T,
    pub h: T,
    cont: [Vec<T>; 5],
}

impl<T: Scalar> DenseSegment<T> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    fn eval_theta_into(&self, th: T, out: &mut [T]) {
        let one = T::one();
        let th1 = one - th;
        for (i, o) in out.iter_mut().enumerate() {
            let c = |k: usize| self.cont[k][i];
            *o = c(0) + th * (c(1) + th1 * (c(2) + th * (c(3) + th1 * c(4))));
        }
    }

    pub fn eval(&self, t: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.cont[0].len()];
        self.eval_theta_into((t - self.t0) / self.h, &mut out);
        out
    }
}

/// A terminating condition: the run stops when `g(y)` becomes negative.
pub struct Event<'a, T> {
    pub tag: TerminationTag,
    pub name: &'static str,
    pub g: Box<dyn Fn(&[T]) -> T + Send + Sync + 'a>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Output of the bare solver: sampled states, dense segments and the end status.
#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub samples: Vec<(T, Vec<T>)>,
    pub segments: Vec<DenseSegment<T>>,
    pub status: TerminationStatus<T>,
    pub stats: StepStats,
}

fn failure_tag(e: &Error) -> TerminationTag {
    match e {
        Error::Singularity { .. } => TerminationTag::PoleSingularity,
        _ => TerminationTag::StepFailure,
    }
}

fn error_norm<T: Scalar>(err: &[T], y: &[T], ynew: &[T], cfg: &IntegratorConfig<T>) -> T {
    let n = T::lit(err.len() as f64);
    let mut acc = T::zero();
    for i in 0..err.len() {
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / n).sqrt()
}

fn initial_step<T: Scalar, F: VectorField<T> + ?Sized>(
    field: &F,
    t: T,
    y: &[T],
    f0: &[T],
    cfg: &IntegratorConfig<T>,
    stats: &mut StepStats,
) -> T {
    let l = T::lit;
    let mut dnf = T::zero();
    let mut dny = T::zero();
    for i in 0..y.len() {
        let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= l(1e-10) || dny <= l(1e-10) { l(1e-6) } else { (dny / dnf).sqrt() * l(0.01) };
    h = h.min(cfg.max_step);
    let y1: Vec<T> = y.iter().zip(f0).map(|(&a, &b)| a + h * b).collect();
    let mut f1 = vec![T::zero(); y.len()];
    stats.evaluations += 1;
    if field.eval(t + h, &y1, &mut f1).is_err() {
        return h.min(l(1e-6));
    }
    let mut der2 = T::zero();
    for i in 0..y.len() {
        let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= l(1e-15) { l(1e-6).max(h * l(1e-3)) } else { (l(0.01) / der12).powf(l(0.2)) };
    (l(100.0) * h).min(h1).min(cfg.max_step)
}

fn sample_times<T: Scalar>(t0: T, cfg: &IntegratorConfig<T>) -> Vec<T> {
    let span = cfg.t_end - t0;
    if span <= T::zero() {
        return vec![t0];
    }
    let n = (span / cfg.sample_dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    let mut times: Vec<T> = (0..=n).map(|k| t0 + cfg.sample_dt * T::lit(k as f64)).collect();
    if let Some(last) = times.last_mut() {
        if (*last - cfg.t_end).abs() <= T::lit(1e-9) * cfg.sample_dt || *last > cfg.t_end {
            *last = cfg.t_end;
        }
    }
    times
}

/// Locates the earliest sign change of any event inside `seg`; returns the last
/// valid time, the state there and the event.
fn locate_event<T: Scalar>(
    seg: &DenseSegment<T>,
    events: &[Event<'_, T>],
    buf: &mut [T],
) -> Option<(T, usize)> {
    let mut prev = T::zero();
    for &p in EVENT_PROBES.iter() {
        let th = T::lit(p);
        seg.eval_theta_into(th, buf);
        let firing: Vec<usize> = (0..events.len()).filter(|&k| !((events[k].g)(buf) >= T::zero())).collect();
        if !firing.is_empty() {
            let mut best: Option<(T, usize)> = None;
            for k in firing {
                let (mut lo, mut hi) = (prev, th);
                let tol = T::lit(EVENT_TIME_TOL) / seg.h.abs();
                for _ in 0..200 {
                    if hi - lo <= tol {
                        break;
                    }
                    let mid = T::lit(0.5) * (lo + hi);
                    seg.eval_theta_into(mid, buf);
                    if (events[k].g)(buf) >= T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if best.map_or(true, |(b, _)| lo < b) {
                    best = Some((lo, k));
                }
            }
            return best;
        }
        prev = th;
    }
    None
}

/// Integrates from `t0` to `cfg.t_end`, sampling on the uniform grid and
/// stopping at the first event. Precondition failures are errors, everything
/// after the first step is reported through the status.
pub fn solve<T: Scalar, F: VectorField<T> + ?Sized>(
    field: &F,
    t0: T,
    y0: &[T],
    cfg: &IntegratorConfig<T>,
    events: &[Event<'_, T>],
) -> Result<Solution<T>> {
    cfg.validate()?;
    let n = field.dim();
    if y0.len() != n {
        return Err(Error::InvalidState(format!("expected {n} components, got {}", y0.len())));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState("initial state has non-finite entries".to_string()));
    }
    if !(t0.is_finite() && t0 <= cfg.t_end) {
        return Err(Error::param("t_end", format!("must not precede the start time {t0}")));
    }
    let started = Instant::now();
    let mut stats = StepStats::default();
    let grid = sample_times(t0, cfg);
    let mut samples = vec![(t0, y0.to_vec())];
    let mut next = 1;
    let mut segments = Vec::new();
    let finish = |samples, segments, tag, time, detail: String, stats| {
        Ok(Solution { samples, segments, status: TerminationStatus { tag, time, detail }, stats })
    };

    for ev in events {
        let g = (ev.g)(y0);
        if !(g >= T::zero()) {
            return finish(samples, segments, ev.tag, t0, format!("{} event active at start ({g})", ev.name), stats);
        }
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; 7];
    stats.evaluations += 1;
    if let Err(e) = field.eval(t, &y, &mut k[0]) {
        return finish(samples, segments, failure_tag(&e), t, e.to_string(), stats);
    }
    let mut h = if cfg.t_end > t0 { initial_step(field, t, &y, &k[0], cfg, &mut stats) } else { T::zero() };
    let mut err_old = T::lit(1e-4);
    let mut last_rejected = false;
    let mut ytmp = vec![T::zero(); n];
    let mut ynew = vec![T::zero(); n];
    let mut errv = vec![T::zero(); n];
    let mut buf = vec![T::zero(); n];
    let expo1 = T::lit(0.2 - 0.75 * PI_BETA);
    let l = T::lit;

    while t < cfg.t_end {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return finish(samples, segments, TerminationTag::StepFailure, t, format!("step limit {} reached", cfg.max_steps), stats);
        }
        if started.elapsed().as_secs_f64() > cfg.wall_clock_limit {
            return finish(
                samples,
                segments,
                TerminationTag::StepFailure,
                t,
                format!("wall-clock limit of {} s exceeded", cfg.wall_clock_limit),
                stats,
            );
        }
        let hmin = T::epsilon() * l(16.0) * t.abs().max(T::one());
        h = h.min(cfg.max_step);
        let mut last = false;
        if t + h >= cfg.t_end - hmin {
            h = cfg.t_end - t;
            last = true;
        }

        // stages
        let mut failure: Option<Error> = None;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for j in 0..s {
                    if A[s][j] != 0.0 {
                        acc += l(A[s][j]) * k[j][i];
                    }
                }
                ytmp[i] = y[i] + h * acc;
            }
            stats.evaluations += 1;
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            if let Err(e) = field.eval(t + l(C[s]) * h, &ytmp, &mut tail[0]) {
                failure = Some(e);
                break;
            }
            if s == 6 {
                ynew.copy_from_slice(&ytmp);
            }
        }
        let err = match failure {
            Some(e) => {
                stats.rejected += 1;
                last_rejected = true;
                h = h * l(0.5);
                if h < hmin {
                    return finish(samples, segments, failure_tag(&e), t, format!("step size underflow: {e}"), stats);
                }
                continue;
            }
            None => {
                for i in 0..n {
                    let mut acc = T::zero();
                    for j in 0..7 {
                        if E[j] != 0.0 {
                            acc += l(E[j]) * k[j][i];
                        }
                    }
                    errv[i] = h * acc;
                }
                error_norm(&errv, &y, &ynew, cfg)
            }
        };

        if !(err.is_finite() && ynew.iter().all(|v| v.is_finite())) {
            stats.rejected += 1;
            last_rejected = true;
            h = h * l(0.5);
            if h < hmin {
                return finish(samples, segments, TerminationTag::StepFailure, t, "step size underflow: non-finite state".into(), stats);
            }
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= T::one() {
            stats.accepted += 1;
            let t_new = if last { cfg.t_end } else { t + h };
            let mut cont: [Vec<T>; 5] = Default::default();
            cont[0] = y.clone();
            cont[1] = (0..n).map(|i| ynew[i] - y[i]).collect();
            cont[2] = (0..n).map(|i| h * k[0][i] - cont[1][i]).collect();
            cont[3] = (0..n).map(|i| cont[1][i] - h * k[6][i] - cont[2][i]).collect();
            cont[4] = (0..n)
                .map(|i| {
                    let mut acc = T::zero();
                    for j in 0..7 {
                        if D[j] != 0.0 {
                            acc += l(D[j]) * k[j][i];
                        }
                    }
                    h * acc
                })
                .collect();
            let seg = DenseSegment { t0: t, h, cont };

            if let Some((th, which)) = locate_event(&seg, events, &mut buf) {
                let t_ev = t + th * h;
                while next < grid.len() && grid[next] <= t_ev {
                    samples.push((grid[next], seg.eval(grid[next])));
                    next += 1;
                }
                let y_ev = seg.eval(t_ev);
                let g = (events[which].g)(&y_ev);
                if samples.last().is_some_and(|s| s.0 < t_ev) {
                    samples.push((t_ev, y_ev));
                }
                segments.push(seg);
                let detail = format!("{} event at t = {t_ev} (g = {g})", events[which].name);
                return finish(samples, segments, events[which].tag, t_ev, detail, stats);
            }

            while next < grid.len() && grid[next] <= t_new {
                let ts = grid[next];
                let v = if ts == t_new { ynew.clone() } else { seg.eval(ts) };
                samples.push((ts, v));
                next += 1;
            }
            segments.push(seg);
            t = t_new;
            y.copy_from_slice(&ynew);
            k.swap(0, 6);

            let fac = (fac11 / err_old.powf(l(PI_BETA))) / l(SAFETY);
            let fac = fac.max(l(1.0 / FAC_MAX)).min(l(1.0 / FAC_MIN));
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            err_old = err.max(l(1e-4));
            last_rejected = false;
            h = hnew;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h = h / (l(1.0 / FAC_MIN)).min(fac11 / l(SAFETY));
            if h < hmin {
                return finish(samples, segments, TerminationTag::StepFailure, t, "step size underflow".into(), stats);
            }
        }
    }
    if samples.last().is_some_and(|s| s.0 < t) {
        samples.push((t, y.clone()));
    }
    finish(samples, segments, TerminationTag::Completed, t, String::new(), stats)
}

/// One row of a trajectory: the state and the diagnostics at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub t: T,
    pub state: MomentState<T>,
    /// Uncertainty product of the first canonical pair.
    pub delta_theta: T,
    /// Uncertainty product of the azimuthal pair; sphere only.
    pub delta_phi: Option<T>,
    pub energy: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Trajectory<T> {
    pub kind: Option<SystemKind>,
    pub mode: Mode,
    pub params: SystemParams<T>,
    pub config: IntegratorConfig<T>,
    pub samples: Vec<Sample<T>>,
    pub status: TerminationStatus<T>,
    pub stats: StepStats,
    #[serde(skip)]
    segments: Vec<DenseSegment<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn start_time(&self) -> T {
        self.samples[0].t
    }

    /// Time of the last valid state.
    pub fn end_time(&self) -> T {
        self.samples.last().map(|s| s.t).unwrap_or_else(T::zero)
    }

    pub fn final_sample(&self) -> &Sample<T> {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn final_state(&self) -> &MomentState<T> {
        &self.final_sample().state
    }

    pub fn completed(&self) -> bool {
        self.status.tag == TerminationTag::Completed
    }

    pub fn segments(&self) -> &[DenseSegment<T>] {
        &self.segments
    }

    /// Dense-output state at any `t` inside the integrated span.
    pub fn state_at(&self, t: T) -> Result<MomentState<T>> {
        let (t0, t1) = (self.start_time(), self.end_time());
        if !(t >= t0 && t <= t1) {
            return Err(Error::Alignment(format!("t = {t} outside the integrated span [{t0}, {t1}]")));
        }
        if let Some(s) = self.samples.iter().find(|s| s.t == t) {
            return Ok(s.state.clone());
        }
        let idx = self.segments.partition_point(|s| s.t1() < t);
        let seg = self
            .segments
            .get(idx)
            .ok_or_else(|| Error::Alignment(format!("no dense output covers t = {t}")))?;
        MomentState::from_slice(self.mode, &seg.eval(t))
    }

    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Minimum of each uncertainty product over the samples.
    pub fn min_uncertainty(&self) -> (T, Option<T>) {
        let mut th = T::infinity();
        let mut ph: Option<T> = None;
        for s in &self.samples {
            th = th.min(s.delta_theta);
            if let Some(p) = s.delta_phi {
                ph = Some(ph.map_or(p, |q| q.min(p)));
            }
        }
        (th, ph)
    }
}

fn uncertainty_pair<T: Scalar>(y: &[T], nc: usize, q: usize, p: usize, qp: usize) -> T {
    y[nc + q] * y[nc + p] - y[nc + qp] * y[nc + qp]
}

/// Products `(theta pair, phi pair)` straight from a flat state.
pub fn uncertainty_of_slice<T: Scalar>(mode: Mode, y: &[T]) -> (T, Option<T>) {
    let nc = mode.classical_len();
    match mode {
        Mode::Circle => (uncertainty_pair(y, nc, slot::G20, slot::G02, slot::G11), None),
        Mode::Sphere => (
            uncertainty_pair(y, nc, slot::G2000, slot::G0200, slot::G1100),
            Some(uncertainty_pair(y, nc, slot::G0020, slot::G0002, slot::G0011)),
        ),
    }
}

fn build_trajectory<T: Scalar>(
    sol: Solution<T>,
    kind: Option<SystemKind>,
    mode: Mode,
    params: &SystemParams<T>,
    cfg: &IntegratorConfig<T>,
    energy: &dyn Fn(&[T]) -> Result<T>,
) -> Result<Trajectory<T>> {
    let mut samples = Vec::with_capacity(sol.samples.len());
    for (t, y) in sol.samples {
        let (dt, dp) = uncertainty_of_slice(mode, &y);
        let e = energy(&y).unwrap_or_else(|_| T::nan());
        samples.push(Sample { t, state: MomentState::from_slice(mode, &y)?, delta_theta: dt, delta_phi: dp, energy: e });
    }
    Ok(Trajectory {
        kind,
        mode,
        params: *params,
        config: *cfg,
        samples,
        status: sol.status,
        stats: sol.stats,
        segments: sol.segments,
    })
}

/// Integrates one of the built-in systems.
pub fn integrate<T: Scalar>(
    kind: SystemKind,
    state0: &MomentState<T>,
    params: &SystemParams<T>,
    config: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    params.validate()?;
    config.validate()?;
    state0.check_shape()?;
    if state0.mode != kind.mode() {
        return Err(Error::ModeMismatch { expected: kind.mode().name(), found: state0.mode.name() });
    }
    let mode = kind.mode();
    let mut y0 = state0.to_vec();
    if kind.moment_policy == MomentPolicy::Zeroed {
        y0[mode.classical_len()..].iter_mut().for_each(|g| *g = T::zero());
    }
    let start = MomentState::from_slice(mode, &y0)?;
    let report = validate_state(&start, params, config.uncertainty_margin);
    if !report.non_finite.is_empty() || !report.negative_diagonals.is_empty() {
        return Err(Error::InvalidState(format!("initial state invalid: {report:?}")));
    }
    if kind.moment_policy == MomentPolicy::Evolve && !report.uncertainty_violations.is_empty() {
        return Err(Error::InvalidState(format!(
            "initial moments violate the uncertainty relation: {:?}",
            report.uncertainty_violations
        )));
    }
    if mode == Mode::Sphere {
        let s = start.theta().sin();
        if !(s >= config.sin_floor) {
            return Err(Error::Singularity { sin_theta: s.to_f64_lossy(), floor: config.sin_floor.to_f64_lossy() });
        }
    }

    // the right-hand side stays evaluable a little past the pole event
    let rhs_floor = config.sin_floor * T::lit(0.5);
    let field = Dynamics { kind, params: *params, sin_floor: rhs_floor };
    let floor = params.uncertainty_floor() - config.uncertainty_margin;
    let mut events: Vec<Event<'_, T>> = Vec::new();
    if kind.moment_policy == MomentPolicy::Evolve {
        events.push(Event {
            tag: TerminationTag::UncertaintyViolation,
            name: "theta uncertainty",
            g: Box::new(move |y: &[T]| uncertainty_of_slice(mode, y).0 - floor),
        });
        if mode == Mode::Sphere {
            events.push(Event {
                tag: TerminationTag::UncertaintyViolation,
                name: "phi uncertainty",
                g: Box::new(move |y: &[T]| uncertainty_of_slice(mode, y).1.unwrap_or_else(T::zero) - floor),
            });
        }
    }
    if mode == Mode::Sphere {
        let sf = config.sin_floor;
        events.push(Event { tag: TerminationTag::PoleSingularity, name: "pole", g: Box::new(move |y: &[T]| y[0].sin() - sf) });
    }
    let sol = solve(&field, T::zero(), &y0, config, &events)?;
    let energy = move |y: &[T]| energy_of_slice(&kind, params, rhs_floor, y);
    build_trajectory(sol, Some(kind), mode, params, config, &energy)
}

/// Integrates an arbitrary field over a moment state layout, without events.
pub fn integrate_field<T: Scalar>(
    field: &dyn VectorField<T>,
    state0: &MomentState<T>,
    params: &SystemParams<T>,
    config: &IntegratorConfig<T>,
    energy: &dyn Fn(&[T]) -> Result<T>,
) -> Result<Trajectory<T>> {
    state0.check_shape()?;
    let sol = solve(field, T::zero(), &state0.to_vec(), config, &[])?;
    build_trajectory(sol, None, state0.mode, params, config, energy)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport<T> {
    pub tolerances: Vec<T>,
    /// Common end time at which the final states are compared.
    pub compare_time: T,
    pub final_states: Vec<Vec<T>>,
    /// Max-norm difference between final states of successive tolerances.
    pub deltas: Vec<T>,
    pub monotone: bool,
    pub all_completed: bool,
    /// The sequence converges and the configured tolerance is no looser than its first level.
    pub certified: bool,
}

fn check_sequence<T: Scalar>(tols: &[T]) -> Result<()> {
    if tols.len() < 3 {
        return Err(Error::param("tol_sequence", format!("needs at least 3 tolerances, got {}", tols.len())));
    }
    if tols.iter().any(|t| !(t.is_finite() && *t > T::zero())) || tols.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("tol_sequence", "must be positive and strictly decreasing".to_string()));
    }
    Ok(())
}

fn convergence_from<T: Scalar>(
    tols: &[T],
    config: &IntegratorConfig<T>,
    runs: Vec<(bool, T, Box<dyn Fn(T) -> Result<Vec<T>> + '_>)>,
) -> Result<ConvergenceReport<T>> {
    let compare_time = runs.iter().map(|r| r.1).fold(T::infinity(), |a, b| a.min(b));
    let all_completed = runs.iter().all(|r| r.0);
    let mut finals = Vec::with_capacity(runs.len());
    for r in &runs {
        finals.push((r.2)(compare_time)?);
    }
    let deltas: Vec<T> = finals
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
        .collect();
    let monotone = deltas.windows(2).all(|w| w[1] <= w[0]);
    Ok(ConvergenceReport {
        tolerances: tols.to_vec(),
        compare_time,
        final_states: finals,
        deltas,
        monotone,
        all_completed,
        certified: monotone && all_completed && config.rel_tol <= tols[0],
    })
}

/// Integrates a built-in system at each tolerance and compares the final states.
pub fn convergence_check<T: Scalar>(
    kind: SystemKind,
    state0: &MomentState<T>,
    params: &SystemParams<T>,
    config: &IntegratorConfig<T>,
    tol_sequence: &[T],
) -> Result<ConvergenceReport<T>> {
    check_sequence(tol_sequence)?;
    let mut trajs = Vec::new();
    for &tol in tol_sequence {
        trajs.push(integrate(kind, state0, params, &config.with_tolerance(tol))?);
    }
    let runs = trajs
        .iter()
        .map(|tr| {
            let f: Box<dyn Fn(T) -> Result<Vec<T>>> = Box::new(move |t| Ok(tr.state_at(t)?.to_vec()));
            (tr.completed(), tr.end_time(), f)
        })
        .collect();
    convergence_from(tol_sequence, config, runs)
}

/// Same as [`convergence_check`] for an arbitrary field.
pub fn convergence_check_field<T: Scalar>(
    field: &dyn VectorField<T>,
    y0: &[T],
    config: &IntegratorConfig<T>,
    tol_sequence: &[T],
) -> Result<ConvergenceReport<T>> {
    check_sequence(tol_sequence)?;
    let mut sols = Vec::new();
    for &tol in tol_sequence {
        sols.push(solve(field, T::zero(), y0, &config.with_tolerance(tol), &[])?);
    }
    let runs = sols
        .iter()
        .map(|s| {
            let end = s.status.time;
            let f: Box<dyn Fn(T) -> Result<Vec<T>>> = Box::new(move |t| {
                if t == end {
                    if let Some(last) = s.samples.last().filter(|x| x.0 == t) {
                        return Ok(last.1.clone());
                    }
                }
                let idx = s.segments.partition_point(|seg| seg.t1() < t);
                s.segments
                    .get(idx)
                    .map(|seg| seg.eval(t))
                    .ok_or_else(|| Error::Alignment(format!("no dense output covers t = {t}")))
            });
            (s.status.tag == TerminationTag::Completed, end, f)
        })
        .collect();
    convergence_from(tol_sequence, config, runs)
}
