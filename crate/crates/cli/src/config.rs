//! Sectioned key-value configuration: parsing, defaults and validation.
//!
//! A run is described by a TOML document with sections `[model]`,
//! `[response]`, `[experiment]`, `[output]` plus per-command sections
//! (`[holder]`, `[cov]`, `[identity]`, `[simulate]`). Command-line flags
//! mirror the top-level keys and override the file; the output directory
//! may also come from the `SHOTNOISE_OUTPUT_DIR` environment variable
//! (flag > environment > file).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use shotnoise_core::counting::ModelSpec;
use shotnoise_core::gauss::DriverKind;
use shotnoise_core::response::{ResponseFn, SlowlyVarying};

use crate::CliError;

pub const DEFAULT_N_PATHS: usize = 5000;
pub const DEFAULT_U_POINTS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_GRID_POINTS: usize = 129;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Verify,
    Sweep,
    Holder,
    Cov,
    Identity,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Holder => "holder",
            Command::Cov => "cov",
            Command::Identity => "identity",
        }
    }
}

/// Driver selection in config sections. `frac_bm` (a fractionally
/// integrated Brownian path) is meaningful only where paths are built by
/// applying the operator, i.e. the `holder` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "driver", rename_all = "snake_case")]
pub enum DriverConfig {
    Bm,
    Fbm { hurst: f64 },
    Rl { rho: f64 },
    TimeChangedBm { exponent: f64 },
    FracBm { rho: f64 },
}

impl DriverConfig {
    pub fn as_driver_kind(&self, path: &str) -> Result<DriverKind, CliError> {
        let kind = match *self {
            DriverConfig::Bm => DriverKind::Bm,
            DriverConfig::Fbm { hurst } => DriverKind::fbm(hurst).map_err(at(path))?,
            DriverConfig::Rl { rho } => DriverKind::rl(rho).map_err(at(path))?,
            DriverConfig::TimeChangedBm { exponent } => {
                DriverKind::time_changed_bm(exponent).map_err(at(path))?
            }
            DriverConfig::FracBm { .. } => {
                return Err(CliError::Config(format!(
                    "{path}: frac_bm is only valid for the holder command"
                )))
            }
        };
        Ok(kind)
    }

    pub fn label(&self) -> String {
        match *self {
            DriverConfig::Bm => "bm".into(),
            DriverConfig::Fbm { hurst } => format!("fbm(H={hurst})"),
            DriverConfig::Rl { rho } => format!("rl(rho={rho})"),
            DriverConfig::TimeChangedBm { exponent } => format!("time_changed_bm(w={exponent})"),
            DriverConfig::FracBm { rho } => format!("frac_bm(rho={rho})"),
        }
    }
}

fn at(path: &str) -> impl Fn(shotnoise_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{path}: {e}"))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    command: Option<Command>,
    seed: Option<u64>,
    workers: Option<usize>,
    output: Option<RawOutput>,
    model: Option<ModelSpec>,
    response: Option<RawResponse>,
    experiment: Option<RawExperiment>,
    holder: Option<RawHolder>,
    cov: Option<RawCov>,
    identity: Option<RawIdentity>,
    simulate: Option<RawSimulate>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResponse {
    beta: f64,
    family: ResponseFamily,
    coeff: Option<f64>,
    power: Option<f64>,
    prefix: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ResponseFamily {
    Const,
    LogPower,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    scale_t: Option<f64>,
    scale_list: Option<Vec<f64>>,
    u_points: Option<Vec<f64>>,
    n_paths: Option<usize>,
    grid_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHolder {
    cases: Vec<DriverConfig>,
    n_paths: Option<usize>,
    levels: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawCov {
    #[serde(flatten)]
    driver: DriverConfig,
    beta: f64,
    u_points: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIdentity {
    k: u32,
    beta: f64,
    levels: Option<Vec<u32>>,
    n_paths: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawSimulate {
    what: SimulateWhat,
    n_paths: Option<usize>,
    #[serde(flatten)]
    driver: Option<DriverConfig>,
    t_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateWhat {
    Shots,
    Normalized,
    Driver,
}

/// Experiment parameters after defaulting.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSettings {
    pub scale_t: Option<f64>,
    pub scale_list: Option<Vec<f64>>,
    pub u_points: Vec<f64>,
    pub n_paths: usize,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderSettings {
    pub cases: Vec<DriverConfig>,
    pub n_paths: usize,
    pub levels: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovSettings {
    pub driver: DriverConfig,
    pub beta: f64,
    pub u_points: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySettings {
    pub k: u32,
    pub beta: f64,
    pub levels: Vec<u32>,
    pub n_paths: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSettings {
    pub what: SimulateWhat,
    pub n_paths: usize,
    pub driver: Option<DriverConfig>,
    pub t_max: f64,
}

/// Fully resolved and validated run configuration; echoed into every JSON
/// artifact. Execution details (worker count, output directory) are
/// excluded from the echo so artifacts are byte-identical across worker
/// counts and locations.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Command,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub model: Option<ModelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseFn>,
    pub experiment: ExperimentSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cov: Option<CovSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity: Option<IdentitySettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSettings>,
}

/// Command-line overrides of the top-level keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

pub fn parse_config(contents: &str, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let deserializer = toml::Deserializer::parse(contents)
        .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
    let raw: RawConfig = serde_path_to_error::deserialize(deserializer)
        .map_err(|e| CliError::Config(format!("config error at {}: {}", e.path(), e.inner())))?;
    resolve(raw, overrides)
}

fn resolve(raw: RawConfig, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let schema_version = raw.schema_version.unwrap_or(1);
    if schema_version != 1 {
        return Err(CliError::Config(format!(
            "schema_version: unsupported version {schema_version}, expected 1"
        )));
    }
    let command = overrides
        .command
        .or(raw.command)
        .ok_or_else(|| CliError::Config("command: missing (file key or --command)".into()))?;
    let seed = overrides
        .seed
        .or(raw.seed)
        .ok_or_else(|| CliError::Config("seed: missing (file key or --seed; wall-clock seeding is not supported)".into()))?;
    let workers = overrides.workers.or(raw.workers).unwrap_or(1);
    if workers == 0 {
        return Err(CliError::Config("workers: must be >= 1".into()));
    }
    let env_dir = std::env::var_os("SHOTNOISE_OUTPUT_DIR").map(PathBuf::from);
    let output_dir = overrides
        .output_dir
        .clone()
        .or(env_dir)
        .or(raw.output.and_then(|o| o.dir))
        .ok_or_else(|| {
            CliError::Config(
                "output.dir: missing (file key, --out or SHOTNOISE_OUTPUT_DIR)".into(),
            )
        })?;

    let model = raw.model;
    if let Some(m) = &model {
        validate_model(m)?;
    }
    let response = raw.response.map(build_response).transpose()?;

    let exp = raw.experiment;
    let experiment = ExperimentSettings {
        scale_t: exp.as_ref().and_then(|e| e.scale_t),
        scale_list: exp.as_ref().and_then(|e| e.scale_list.clone()),
        u_points: exp
            .as_ref()
            .and_then(|e| e.u_points.clone())
            .unwrap_or_else(|| DEFAULT_U_POINTS.to_vec()),
        n_paths: exp.as_ref().and_then(|e| e.n_paths).unwrap_or(DEFAULT_N_PATHS),
        grid_points: exp
            .as_ref()
            .and_then(|e| e.grid_points)
            .unwrap_or(DEFAULT_GRID_POINTS),
    };
    if experiment.u_points.iter().any(|&u| !(u > 0.0)) {
        return Err(CliError::Config(
            "experiment.u_points: probe points must be positive".into(),
        ));
    }
    if experiment.grid_points < 2 {
        return Err(CliError::Config("experiment.grid_points: must be >= 2".into()));
    }

    let holder = raw
        .holder
        .map(|h| -> Result<HolderSettings, CliError> {
            let levels = h.levels.unwrap_or(14);
            if !(8..=24).contains(&levels) {
                return Err(CliError::Config(
                    "holder.levels: dyadic level must lie in [8, 24]".into(),
                ));
            }
            if h.cases.is_empty() {
                return Err(CliError::Config("holder.cases: at least one case".into()));
            }
            for case in &h.cases {
                validate_holder_case(case)?;
            }
            Ok(HolderSettings {
                cases: h.cases,
                n_paths: h.n_paths.unwrap_or(100),
                levels,
            })
        })
        .transpose()?;

    let cov = raw
        .cov
        .map(|c| -> Result<CovSettings, CliError> {
            c.driver.as_driver_kind("cov.driver")?;
            if !(c.beta >= 0.0) {
                return Err(CliError::Config(format!(
                    "cov.beta: must be >= 0, got {}",
                    c.beta
                )));
            }
            let u_points = c
                .u_points
                .unwrap_or_else(|| vec![0.5, 1.0, 1.5, 2.0]);
            if u_points.iter().any(|&u| !(u > 0.0)) {
                return Err(CliError::Config("cov.u_points: must be positive".into()));
            }
            Ok(CovSettings { driver: c.driver, beta: c.beta, u_points })
        })
        .transpose()?;

    let identity = raw
        .identity
        .map(|i| -> Result<IdentitySettings, CliError> {
            if i.k < 2 {
                return Err(CliError::Config(format!(
                    "identity.k: the convolution identity requires k >= 2, got {}",
                    i.k
                )));
            }
            if !(i.beta > 0.0) {
                return Err(CliError::Config(format!(
                    "identity.beta: must be > 0, got {}",
                    i.beta
                )));
            }
            let levels = i.levels.unwrap_or_else(|| vec![12, 13]);
            if levels.iter().any(|&m| !(8..=24).contains(&m)) {
                return Err(CliError::Config(
                    "identity.levels: dyadic levels must lie in [8, 24]".into(),
                ));
            }
            Ok(IdentitySettings {
                k: i.k,
                beta: i.beta,
                levels,
                n_paths: i.n_paths.unwrap_or(3),
            })
        })
        .transpose()?;

    let simulate = raw
        .simulate
        .map(|s| -> Result<SimulateSettings, CliError> {
            if s.what == SimulateWhat::Driver {
                let d = s.driver.ok_or_else(|| {
                    CliError::Config("simulate.driver: required for what = \"driver\"".into())
                })?;
                d.as_driver_kind("simulate.driver")?;
            }
            Ok(SimulateSettings {
                what: s.what,
                n_paths: s.n_paths.unwrap_or(5),
                driver: s.driver,
                t_max: s.t_max.unwrap_or(1.0),
            })
        })
        .transpose()?;

    let config = RunConfig {
        schema_version,
        command,
        seed,
        workers,
        output_dir,
        model,
        response,
        experiment,
        holder,
        cov,
        identity,
        simulate,
    };
    check_command_requirements(&config)?;
    Ok(config)
}

fn validate_model(m: &ModelSpec) -> Result<(), CliError> {
    m.validate().map_err(|e| {
        let key = match m {
            ModelSpec::BranchingGenK { .. } => "model.generation",
            ModelSpec::LongMemoryWalk { .. } => "model.memory",
            ModelSpec::InhomPoisson { .. } => "model",
            _ => "model.increment",
        };
        CliError::Config(format!("{key}: {e}"))
    })
}

fn build_response(raw: RawResponse) -> Result<ResponseFn, CliError> {
    if !(raw.beta >= 0.0) {
        return Err(CliError::Config(format!(
            "response.beta: index must be >= 0, got {}",
            raw.beta
        )));
    }
    let family = match raw.family {
        ResponseFamily::Const => {
            if raw.power.is_some() {
                return Err(CliError::Config(
                    "response.power: not a parameter of the const family".into(),
                ));
            }
            SlowlyVarying::Const { coeff: raw.coeff.unwrap_or(1.0) }
        }
        ResponseFamily::LogPower => {
            if raw.coeff.is_some() {
                return Err(CliError::Config(
                    "response.coeff: not a parameter of the log_power family".into(),
                ));
            }
            SlowlyVarying::LogPower {
                power: raw.power.ok_or_else(|| {
                    CliError::Config("response.power: required for the log_power family".into())
                })?,
            }
        }
    };
    ResponseFn::new(raw.beta, family, raw.prefix.unwrap_or_default())
        .map_err(|e| CliError::Config(format!("response: {e}")))
}

fn validate_holder_case(case: &DriverConfig) -> Result<(), CliError> {
    match *case {
        DriverConfig::FracBm { rho } => {
            if !(rho > -0.5) || rho == 0.0 {
                return Err(CliError::Config(format!(
                    "holder.cases: frac_bm exponent must be > -1/2 and nonzero, got {rho}"
                )));
            }
            Ok(())
        }
        _ => case.as_driver_kind("holder.cases").map(|_| ()),
    }
}

fn check_command_requirements(config: &RunConfig) -> Result<(), CliError> {
    match config.command {
        Command::Verify => {
            if config.model.is_none() {
                return Err(CliError::Config("model: required for verify".into()));
            }
            if config.experiment.scale_t.is_none() {
                return Err(CliError::Config(
                    "experiment.scale_t: required for verify".into(),
                ));
            }
        }
        Command::Sweep => {
            if config.model.is_none() {
                return Err(CliError::Config("model: required for sweep".into()));
            }
            match &config.experiment.scale_list {
                None => {
                    return Err(CliError::Config(
                        "experiment.scale_list: required for sweep".into(),
                    ))
                }
                Some(list) if list.len() < 3 => {
                    return Err(CliError::Config(
                        "experiment.scale_list: need at least 3 scales".into(),
                    ))
                }
                _ => {}
            }
        }
        Command::Holder => {
            if config.holder.is_none() {
                return Err(CliError::Config("holder: section required".into()));
            }
        }
        Command::Cov => {
            if config.cov.is_none() {
                return Err(CliError::Config("cov: section required".into()));
            }
        }
        Command::Identity => {
            if config.identity.is_none() {
                return Err(CliError::Config("identity: section required".into()));
            }
        }
        Command::Simulate => {
            let sim = config
                .simulate
                .as_ref()
                .ok_or_else(|| CliError::Config("simulate: section required".into()))?;
            match sim.what {
                SimulateWhat::Shots => {
                    if config.model.is_none() {
                        return Err(CliError::Config(
                            "model: required for simulate shots".into(),
                        ));
                    }
                }
                SimulateWhat::Normalized => {
                    if config.model.is_none() {
                        return Err(CliError::Config(
                            "model: required for simulate normalized".into(),
                        ));
                    }
                    if config.response.is_none() {
                        return Err(CliError::Config(
                            "response: required for simulate normalized".into(),
                        ));
                    }
                    if config.experiment.scale_t.is_none() {
                        return Err(CliError::Config(
                            "experiment.scale_t: required for simulate normalized".into(),
                        ));
                    }
                }
                SimulateWhat::Driver => {}
            }
        }
    }
    Ok(())
}
