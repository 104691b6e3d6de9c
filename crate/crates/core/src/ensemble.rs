//! Parameter sweeps: expand a grid, run every point (optionally with a matched
//! classical run) on a rayon pool, and collect results in grid order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{ensemble_stats, EnsembleStats};
use crate::dynamics::{MomentPolicy, SystemKind};
use crate::error::{Error, Result};
use crate::initial::{circle_initial_moments, solve_kappa, sphere_initial_moments, CorrelationPolicy, GaussianSpec};
use crate::integrator::{integrate, IntegratorConfig, Trajectory};
use crate::scalar::Scalar;
use crate::state::{Mode, MomentState, SystemParams};

/// Where the initial state of a run comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition<T> {
    Explicit(MomentState<T>),
    Gaussian {
        spec: GaussianSpec<T>,
        #[serde(default)]
        correlation: CorrelationPolicy<T>,
        /// Solve for `kappa` so that `G2000` takes this value.
        #[serde(default)]
        kappa_target: Option<T>,
        /// Overrides the initial `P_theta`.
        #[serde(default)]
        p_theta: Option<T>,
    },
}

impl<T: Scalar> InitialCondition<T> {
    pub fn build(&self, mode: Mode, params: &SystemParams<T>) -> Result<MomentState<T>> {
        match self {
            InitialCondition::Explicit(s) => {
                s.check_shape()?;
                if s.mode != mode {
                    return Err(Error::ModeMismatch { expected: mode.name(), found: s.mode.name() });
                }
                Ok(s.clone())
            }
            InitialCondition::Gaussian { spec, correlation, kappa_target, p_theta } => {
                let mut spec = *spec;
                if let Some(target) = kappa_target {
                    spec.kappa = solve_kappa(*target, params)?;
                }
                let mut s = match mode {
                    Mode::Circle => circle_initial_moments(&spec, params, *correlation)?,
                    Mode::Sphere => sphere_initial_moments(&spec, params)?,
                };
                if let Some(p) = p_theta {
                    s.classical[1] = *p;
                }
                Ok(s)
            }
        }
    }
}

/// Everything one integration needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct RunSetup<T> {
    pub kind: SystemKind,
    pub params: SystemParams<T>,
    pub initial: InitialCondition<T>,
    pub config: IntegratorConfig<T>,
}

impl<T: Scalar> RunSetup<T> {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.config.validate()?;
        self.initial.build(self.kind.mode(), &self.params).map(|_| ())
    }

    pub fn initial_state(&self) -> Result<MomentState<T>> {
        self.initial.build(self.kind.mode(), &self.params)
    }

    pub fn run(&self) -> Result<Trajectory<T>> {
        let s0 = self.initial_state()?;
        integrate(self.kind, &s0, &self.params, &self.config)
    }

    /// Same run with a different moment policy.
    pub fn with_policy(&self, policy: MomentPolicy) -> Self {
        RunSetup { kind: SystemKind::new(self.kind.tag, policy), ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Initial polar momentum `P_theta`.
    A,
    Gamma,
    Beta,
    Lambda,
    Kappa,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepValues<T> {
    List(Vec<T>),
    Range { min: T, max: T, step: T },
}

impl<T: Scalar> SweepValues<T> {
    /// Grid values in increasing order for ranges; lists keep their order.
    pub fn expand(&self) -> Result<Vec<T>> {
        match self {
            SweepValues::List(v) => {
                if v.is_empty() {
                    return Err(Error::Sweep("value list is empty".to_string()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Sweep("value list has non-finite entries".to_string()));
                }
                Ok(v.clone())
            }
            SweepValues::Range { min, max, step } => {
                if !(step.is_finite() && *step > T::zero()) {
                    return Err(Error::Sweep(format!("range step must be > 0, got {step}")));
                }
                if !(min.is_finite() && max.is_finite()) || min > max {
                    return Err(Error::Sweep(format!("empty range [{min}, {max}]")));
                }
                let n = ((*max - *min) / *step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
                Ok((0..=n).map(|k| *min + *step * T::lit(k as f64)).collect())
            }
        }
    }
}

fn default_classical_policy() -> MomentPolicy {
    MomentPolicy::Zeroed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SweepSpec<T> {
    pub base: RunSetup<T>,
    pub parameter: SweepParameter,
    pub values: SweepValues<T>,
    /// Also run each point under `classical_policy`.
    #[serde(default)]
    pub paired_classical: bool,
    #[serde(default = "default_classical_policy")]
    pub classical_policy: MomentPolicy,
    /// Worker count; all available cores when absent.
    #[serde(default)]
    pub threads: Option<usize>,
}

/// Applies one grid value to a copy of the base setup.
pub fn apply_parameter<T: Scalar>(base: &RunSetup<T>, parameter: SweepParameter, value: T) -> Result<RunSetup<T>> {
    let mut s = base.clone();
    match parameter {
        SweepParameter::Gamma => s.params.gamma = value,
        SweepParameter::Beta => s.params.beta = value,
        SweepParameter::A => match &mut s.initial {
            InitialCondition::Explicit(st) => {
                if st.classical.len() < 2 {
                    return Err(Error::InvalidState("explicit state has no P_theta".to_string()));
                }
                st.classical[1] = value;
            }
            InitialCondition::Gaussian { p_theta, .. } => *p_theta = Some(value),
        },
        SweepParameter::Lambda | SweepParameter::Kappa => match &mut s.initial {
            InitialCondition::Explicit(_) => {
                return Err(Error::Sweep(format!("sweeping {parameter:?} needs a gaussian initial condition")));
            }
            InitialCondition::Gaussian { spec, kappa_target, .. } => {
                if parameter == SweepParameter::Lambda {
                    spec.lambda = value;
                } else {
                    spec.kappa = value;
                    *kappa_target = None;
                }
            }
        },
    }
    Ok(s)
}

/// Outcome of one grid point; failures are kept as messages.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PointResult<T> {
    pub value: T,
    pub semiclassical: std::result::Result<Trajectory<T>, String>,
    pub classical: Option<std::result::Result<Trajectory<T>, String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct EnsembleResult<T> {
    pub spec: SweepSpec<T>,
    pub points: Vec<PointResult<T>>,
    /// Pair statistics at `t_end` when every pair reached it.
    pub summary: Option<EnsembleStats<T>>,
}

impl<T: Scalar> EnsembleResult<T> {
    pub fn values(&self) -> Vec<T> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Successful semiclassical trajectories in grid order.
    pub fn semiclassical(&self) -> Vec<&Trajectory<T>> {
        self.points.iter().filter_map(|p| p.semiclassical.as_ref().ok()).collect()
    }

    pub fn classical(&self) -> Vec<&Trajectory<T>> {
        self.points.iter().filter_map(|p| p.classical.as_ref().and_then(|c| c.as_ref().ok())).collect()
    }

    /// Points where both runs succeeded.
    pub fn pairs(&self) -> Vec<(&Trajectory<T>, &Trajectory<T>)> {
        self.points
            .iter()
            .filter_map(|p| match (&p.semiclassical, &p.classical) {
                (Ok(s), Some(Ok(c))) => Some((s, c)),
                _ => None,
            })
            .collect()
    }

    pub fn failures(&self) -> Vec<(T, String)> {
        let mut out = Vec::new();
        for p in &self.points {
            if let Err(e) = &p.semiclassical {
                out.push((p.value, e.clone()));
            }
            if let Some(Err(e)) = &p.classical {
                out.push((p.value, e.clone()));
            }
        }
        out
    }

    pub fn stats(&self, t_eval: T) -> Result<EnsembleStats<T>> {
        ensemble_stats(&self.pairs(), t_eval)
    }
}

fn run_point<T: Scalar>(spec: &SweepSpec<T>, value: T) -> PointResult<T> {
    let setup = apply_parameter(&spec.base, spec.parameter, value);
    let go = |s: &Result<RunSetup<T>>, policy: Option<MomentPolicy>| match s {
        Ok(s) => match policy {
            Some(p) => s.with_policy(p).run(),
            None => s.run(),
        }
        .map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    };
    PointResult {
        value,
        semiclassical: go(&setup, None),
        classical: spec.paired_classical.then(|| go(&setup, Some(spec.classical_policy))),
    }
}

/// Runs every grid point. Configuration problems are reported before any
/// integration starts; per-point failures are recorded in the result.
pub fn run_sweep<T: Scalar>(spec: &SweepSpec<T>) -> Result<EnsembleResult<T>> {
    let values = spec.values.expand()?;
    spec.base.params.validate()?;
    spec.base.config.validate()?;
    apply_parameter(&spec.base, spec.parameter, values[0])?.validate()?;
    if spec.threads == Some(0) {
        return Err(Error::Sweep("threads must be positive".to_string()));
    }
    let work = || values.par_iter().map(|&v| run_point(spec, v)).collect::<Vec<_>>();
    let points = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Sweep(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut result = EnsembleResult { spec: spec.clone(), points, summary: None };
    if spec.paired_classical && result.pairs().len() == values.len() {
        result.summary = result.stats(spec.base.config.t_end).ok();
    }
    Ok(result)
}
