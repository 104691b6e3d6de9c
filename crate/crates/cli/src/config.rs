//! Run configuration: a TOML file, overridden key by key from the command line.

use std::path::{Path, PathBuf};

use momentous::ensemble::{InitialCondition, RunSetup, SweepParameter, SweepSpec, SweepValues};
use momentous::reproduction::reference_state;
use momentous::{CorrelationPolicy, GaussianSpec, IntegratorConfig, Mode, MomentPolicy, SystemKind, SystemParams, SystemTag};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const OUT_DIR_ENV: &str = "MOMENTOUS_OUT_DIR";

fn default_system() -> SystemTag {
    SystemTag::SphereFree
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_system")]
    pub system: SystemTag,
    #[serde(default)]
    pub moment_policy: MomentPolicy,
    #[serde(default)]
    pub params: SystemParams<f64>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: default_system(),
            moment_policy: MomentPolicy::default(),
            params: SystemParams::default(),
            initial: InitialConfig::default(),
            integrator: IntegratorConfig::default(),
            sweep: None,
            output: OutputConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Fixed equatorial sphere state; on the circle the gaussian fields are used.
    #[default]
    Reference,
    Gaussian,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    #[default]
    Zero,
    BoundaryMagnitude,
    Chirp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub profile: Profile,
    /// Initial `P_theta`; the reference profile uses 1 when absent.
    pub a: Option<f64>,
    pub lambda: f64,
    pub kappa: f64,
    pub kappa_target: Option<f64>,
    pub l: i64,
    pub m_theta: i64,
    pub theta0: f64,
    pub phi0: f64,
    pub correlation: Correlation,
    /// `G^{1,1}` for the chirp correlation.
    pub chirp: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        let g = GaussianSpec::<f64>::default();
        InitialConfig {
            profile: Profile::Reference,
            a: None,
            lambda: g.lambda,
            kappa: g.kappa,
            kappa_target: None,
            l: g.l,
            m_theta: g.m_theta,
            theta0: g.theta0,
            phi0: g.phi0,
            correlation: Correlation::Zero,
            chirp: 0.0,
        }
    }
}

impl InitialConfig {
    pub fn condition(&self, mode: Mode) -> InitialCondition<f64> {
        if self.profile == Profile::Reference && mode == Mode::Sphere {
            return InitialCondition::Explicit(reference_state(self.a.unwrap_or(1.0)));
        }
        InitialCondition::Gaussian {
            spec: GaussianSpec {
                lambda: self.lambda,
                kappa: self.kappa,
                l: self.l,
                m_theta: self.m_theta,
                theta0: self.theta0,
                phi0: self.phi0,
            },
            correlation: match self.correlation {
                Correlation::Zero => CorrelationPolicy::Zero,
                Correlation::BoundaryMagnitude => CorrelationPolicy::BoundaryMagnitude,
                Correlation::Chirp => CorrelationPolicy::Chirp(self.chirp),
            },
            kappa_target: self.kappa_target,
            p_theta: self.a,
        }
    }
}

fn zeroed() -> MomentPolicy {
    MomentPolicy::Zeroed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default)]
    pub paired_classical: bool,
    #[serde(default = "zeroed")]
    pub classical_policy: MomentPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub prefix: String,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, prefix: "run".to_string(), csv: true, json: true }
    }
}

impl RunConfig {
    pub fn kind(&self) -> SystemKind {
        SystemKind::new(self.system, self.moment_policy)
    }

    pub fn setup(&self) -> RunSetup<f64> {
        RunSetup {
            kind: self.kind(),
            params: self.params,
            initial: self.initial.condition(self.system.mode()),
            config: self.integrator,
        }
    }

    pub fn sweep_spec(&self) -> Result<Option<SweepSpec<f64>>, CliError> {
        let Some(s) = &self.sweep else { return Ok(None) };
        let values = match (&s.values, s.min, s.max, s.step) {
            (Some(v), None, None, None) => SweepValues::List(v.clone()),
            (None, Some(min), Some(max), Some(step)) => SweepValues::Range { min, max, step },
            _ => {
                return Err(CliError::Config(
                    "sweep: give either `values` or all of `min`, `max`, `step`".to_string(),
                ))
            }
        };
        Ok(Some(SweepSpec {
            base: self.setup(),
            parameter: s.parameter,
            values,
            paired_classical: s.paired_classical,
            classical_policy: s.classical_policy,
            threads: s.threads,
        }))
    }

    /// Checks everything that can be checked without integrating.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            return Err(CliError::Config("output.prefix must be a plain, non-empty file stem".to_string()));
        }
        match self.sweep_spec()? {
            Some(spec) => {
                let first = spec.values.expand()?[0];
                momentous::ensemble::apply_parameter(&spec.base, spec.parameter, first)?.validate()?;
            }
            None => self.setup().validate()?,
        }
        Ok(())
    }

    /// Output directory: the config wins over the environment, which wins over `.`.
    pub fn resolve_out_dir(&mut self) {
        if self.output.dir.is_none() {
            self.output.dir = Some(std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")));
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

/// Sets a dotted key such as `params.gamma` in a TOML table.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key {key:?} is malformed")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override key {key:?}: {p} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_reference_profile() {
        let c = load(None, &[]).unwrap();
        assert_eq!(c.system, SystemTag::SphereFree);
        match c.setup().initial {
            InitialCondition::Explicit(s) => assert_eq!(s, reference_state(1.0)),
            _ => panic!("expected explicit state"),
        }
    }

    #[test]
    fn overrides_win() {
        let c = load(None, &["params.gamma=-1.9".into(), "system=\"sphere_makarov\"".into(), "initial.a=3".into()]).unwrap();
        assert_eq!(c.params.gamma, -1.9);
        assert_eq!(c.system, SystemTag::SphereMakarov);
        assert_eq!(c.initial.a, Some(3.0));
        let c = load(None, &["system=circle_free".into()]).unwrap();
        assert_eq!(c.system, SystemTag::CircleFree);
    }

    #[test]
    fn unknown_and_invalid_keys() {
        let e = load(None, &["params.mas=2".into()]).unwrap_err().to_string();
        assert!(e.contains("mas"), "{e}");
        let e = load(None, &["params.mass=-1".into()]).unwrap_err().to_string();
        assert!(e.contains("mass"), "{e}");
        assert!(load(None, &["nokey".into()]).is_err());
    }

    #[test]
    fn sweep_forms() {
        let c = load(None, &["sweep.parameter=\"a\"".into(), "sweep.values=[0, 2]".into()]).unwrap();
        assert!(matches!(c.sweep_spec().unwrap().unwrap().values, SweepValues::List(_)));
        let bad = load(None, &["sweep.parameter=\"a\"".into(), "sweep.min=1".into()]);
        assert!(bad.is_err());
        let bad = load(None, &["sweep.parameter=\"a\"".into(), "sweep.min=2".into(), "sweep.max=1".into(), "sweep.step=1".into()]);
        assert!(bad.is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = load(None, &["sweep.parameter=\"gamma\"".into(), "sweep.values=[-0.2]".into()]).unwrap();
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
