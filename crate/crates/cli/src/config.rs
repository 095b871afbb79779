//! Experiment configuration, schema version 1.

use std::path::{Path, PathBuf};

use fraclab::barriers_ignition::{BumpProfile, BumpSettings};
use fraclab::front_tracking::Side;
use fraclab::reactions::{
    make_alpha_monostable, make_bistable, make_ignition, make_kpp, make_power_logistic, ReactionSpec,
};
use fraclab::residual_verifier::{Barrier, Mode, SamplingPlan};
use fraclab::solver::{InitialCondition, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Simulate,
    Certify,
    Bump,
    Sweep,
    Fit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    /// Reaction for `certify` and `bump`; `simulate` takes it from `solver`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction: Option<ReactionChoice>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub barriers: Vec<BarrierRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SamplingPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump: Option<BumpRequest>,
    /// Simulate configs run by `sweep`, relative to this file.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitRequest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tracking: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionChoice {
    Ignition { theta0: f64, amplitude: f64 },
    PowerLogistic { alpha: f64, gamma: f64, theta0: f64 },
    AlphaMonostable { alpha: f64, gamma: f64, gamma_prime: f64, theta0: f64 },
    Kpp { rate: f64 },
    Bistable { theta0: f64, amplitude: f64 },
}

impl ReactionChoice {
    pub fn build(&self) -> fraclab::Result<ReactionSpec> {
        match *self {
            ReactionChoice::Ignition { theta0, amplitude } => make_ignition(theta0, amplitude),
            ReactionChoice::PowerLogistic { alpha, gamma, theta0 } => make_power_logistic(alpha, gamma, theta0),
            ReactionChoice::AlphaMonostable { alpha, gamma, gamma_prime, theta0 } => {
                make_alpha_monostable(alpha, gamma, gamma_prime, theta0)
            }
            ReactionChoice::Kpp { rate } => make_kpp(rate),
            ReactionChoice::Bistable { theta0, amplitude } => make_bistable(theta0, amplitude),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialChoice {
    Front { theta: f64, r: f64 },
    Ball { theta: f64, r_inner: f64, r_outer: f64 },
    /// A bump written by the `bump` subcommand.
    BumpFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OutputTimes {
    List(Vec<f64>),
    Linear { start: f64, end: f64, count: usize },
    Geometric { start: f64, end: f64, count: usize },
}

impl OutputTimes {
    pub fn expand(&self) -> Result<Vec<f64>, CliError> {
        let spaced = |start: f64, end: f64, count: usize, geometric: bool| -> Result<Vec<f64>, CliError> {
            if count < 2 || !(end > start) || (geometric && !(start > 0.0)) {
                return Err(CliError::Config(
                    "output_times: need count >= 2 and end > start (start > 0 when geometric)".into(),
                ));
            }
            let mut v: Vec<f64> = (0..count)
                .map(|i| {
                    let w = i as f64 / (count - 1) as f64;
                    if geometric {
                        (start.ln() + (end.ln() - start.ln()) * w).exp()
                    } else {
                        start + (end - start) * w
                    }
                })
                .collect();
            v[0] = start;
            v[count - 1] = end;
            Ok(v)
        };
        match *self {
            OutputTimes::List(ref v) => Ok(v.clone()),
            OutputTimes::Linear { start, end, count } => spaced(start, end, count, false),
            OutputTimes::Geometric { start, end, count } => spaced(start, end, count, true),
        }
    }
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub s: f64,
    pub dimension: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub dt_initial: f64,
    pub t_final: f64,
    pub reaction: ReactionChoice,
    pub initial_condition: InitialChoice,
    pub output_times: OutputTimes,
    #[serde(default = "default_amplitude")]
    pub front_amplitude: f64,
    /// Write a binary field dump at every output time.
    #[serde(default)]
    pub snapshots: bool,
}

impl SolverSection {
    pub fn build(&self, base: &Path) -> Result<SolverConfig, CliError> {
        let initial_condition = match &self.initial_condition {
            InitialChoice::Front { theta, r } => InitialCondition::Front { theta: *theta, r: *r },
            InitialChoice::Ball { theta, r_inner, r_outer } => {
                InitialCondition::Ball { theta: *theta, r_inner: *r_inner, r_outer: *r_outer }
            }
            InitialChoice::BumpFile { path } => {
                let profile: BumpProfile = read_artifact(&base.join(path), "bump")?;
                InitialCondition::Bump { profile }
            }
        };
        Ok(SolverConfig {
            s: self.s,
            dimension: self.dimension,
            half_width: self.half_width,
            points_per_axis: self.points_per_axis,
            dt_initial: self.dt_initial,
            t_final: self.t_final,
            reaction: self.reaction.build().map_err(|e| CliError::Config(format!("reaction: {e}")))?,
            initial_condition,
            output_times: self.output_times.expand()?,
            front_amplitude: self.front_amplitude,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BarrierSource {
    /// Barrier JSON as written by this tool.
    File { path: PathBuf },
    IgnitionSuper { k: usize, s: f64 },
    /// Self-similar subsolution built on a bump file.
    IgnitionSub { bump: PathBuf },
    /// Monostable subsolution; its start time is searched for with the
    /// verifier's default tolerance.
    MonostableSub { theta: f64, s: f64, dimension: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierRequest {
    pub barrier: BarrierSource,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpRequest {
    pub theta: f64,
    pub s: f64,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<BumpSettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Power,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    /// Series CSV (`t,x_under,x_over`), relative to the config file.
    pub series: PathBuf,
    pub side: Side,
    pub model: FitModel,
    /// Defaults to the simulator's window for the last recorded time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// Level the series was tracked at; recorded in the output only.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    0.5
}

/// Parses a config; diagnostics carry the line and column of the offence.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "schema_version: this binary reads version {SCHEMA_VERSION}, got {}",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Reads an artifact written by this tool; the schema header is optional.
pub fn read_artifact<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{what} file {}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{what} file {}: line {}: {e}", path.display(), e.line())))?;
    if let Some(obj) = value.as_object_mut() {
        if let Some(inner) = obj.remove(what) {
            value = inner;
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{what} file {}: {e}", path.display())))
}

impl BarrierSource {
    pub fn load(&self, base: &Path, f: &ReactionSpec) -> Result<Barrier, CliError> {
        use fraclab::barriers_ignition::{build_self_similar_sub, build_supersolution};
        use fraclab::barriers_monostable::{build_monostable_sub, find_t_theta};
        use fraclab::residual_verifier::default_tolerance;
        Ok(match self {
            BarrierSource::File { path } => read_artifact(&base.join(path), "barrier")?,
            BarrierSource::IgnitionSuper { k, s } => Barrier::IgnitionSuper(build_supersolution(*k, *s, f)?),
            BarrierSource::IgnitionSub { bump } => {
                let profile: BumpProfile = read_artifact(&base.join(bump), "bump")?;
                Barrier::IgnitionSub(build_self_similar_sub(profile)?)
            }
            BarrierSource::MonostableSub { theta, s, dimension } => {
                let mut b = build_monostable_sub(*theta, f, *s, *dimension)?;
                find_t_theta(&mut b, f, default_tolerance(f))?;
                Barrier::MonostableSub(b)
            }
        })
    }
}
