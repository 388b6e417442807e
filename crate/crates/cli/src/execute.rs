//! Command dispatch and artifact emission.
//!
//! Outputs are deterministic functions of `(config, seed)`: each simulated
//! path draws from an RNG stream keyed by its index and reductions run in
//! index order, so the emitted bytes do not depend on the worker count.

use std::path::PathBuf;

use serde::Serialize;
use shotnoise_core::fracint::{frac_integrate, holder_estimate, limit_cov, rl_convolution_identity_check, FracIntSpec};
use shotnoise_core::gauss::{sample_path, DriverKind, PathSampler};
use shotnoise_core::grid::TimeGrid;
use shotnoise_core::par;
use shotnoise_core::shotnoise::normalize;
use shotnoise_core::verify::{convergence_sweep, run_experiment, ExperimentSpec};

use crate::config::{Command, DriverConfig, RunConfig, SimulateWhat};
use crate::writers::{ensure_dir, write_csv, write_json};
use crate::CliError;

/// Result of a run: whether all verdicts passed and which files were written.
#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Run the configured command, writing artifacts into the output directory.
pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    ensure_dir(&config.output_dir)?;
    let body = || match config.command {
        Command::Verify => run_verify(config),
        Command::Sweep => run_sweep(config),
        Command::Holder => run_holder(config),
        Command::Cov => run_cov(config),
        Command::Identity => run_identity(config),
        Command::Simulate => run_simulate(config),
    };
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CliError::Io(format!("cannot build worker pool: {e}")))?;
        pool.install(body)
    }
    #[cfg(not(feature = "parallel"))]
    {
        body()
    }
}

fn experiment_spec(config: &RunConfig, scale_t: f64) -> ExperimentSpec {
    ExperimentSpec {
        model: config.model.clone().expect("validated: model present"),
        response: config.response.clone(),
        scale_t,
        u_points: config.experiment.u_points.clone(),
        n_paths: config.experiment.n_paths,
        seed: config.seed,
    }
}

#[derive(Serialize)]
struct ReportDocument<'a, T: Serialize> {
    schema_version: u32,
    config: &'a RunConfig,
    report: T,
}

fn run_verify(config: &RunConfig) -> Result<Outcome, CliError> {
    let scale_t = config.experiment.scale_t.expect("validated: scale_t present");
    let spec = experiment_spec(config, scale_t);
    let report = run_experiment(&spec)?;

    let json_path = config.output_dir.join("report.json");
    write_json(
        &json_path,
        &ReportDocument { schema_version: 1, config, report: &report },
    )?;

    let csv_path = config.output_dir.join("report.csv");
    let k = report.u_points.len();
    let mut rows = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            rows.push(format!(
                "{},{},{},{},{}",
                report.u_points[i],
                report.u_points[j],
                report.empirical_cov[i][j],
                report.theoretical_cov[i][j],
                report.cov_se[i][j],
            ));
        }
    }
    write_csv(
        &csv_path,
        &[format!("model={}", report.model), format!("scale_t={scale_t}")],
        "u_i,u_j,empirical,theoretical,se",
        rows,
    )?;

    Ok(Outcome { pass: report.pass, artifacts: vec![json_path, csv_path] })
}

fn run_sweep(config: &RunConfig) -> Result<Outcome, CliError> {
    let scales = config
        .experiment
        .scale_list
        .clone()
        .expect("validated: scale_list present");
    let spec = experiment_spec(config, scales[0]);
    let sweep = convergence_sweep(&spec, &scales)?;

    let json_path = config.output_dir.join("sweep.json");
    write_json(
        &json_path,
        &ReportDocument { schema_version: 1, config, report: &sweep },
    )?;

    let csv_path = config.output_dir.join("sweep.csv");
    let rows = sweep
        .scale_ts
        .iter()
        .zip(&sweep.deviations)
        .zip(&sweep.allowances)
        .map(|((t, d), a)| format!("{t},{d},{a}"))
        .collect::<Vec<_>>();
    write_csv(
        &csv_path,
        &[format!("model={}", spec.model.label())],
        "scale_t,max_abs_deviation,noise_allowance",
        rows,
    )?;

    Ok(Outcome { pass: sweep.trend_ok, artifacts: vec![json_path, csv_path] })
}

fn holder_target(case: &DriverConfig) -> f64 {
    match *case {
        DriverConfig::Bm => 0.5,
        DriverConfig::Fbm { hurst } => hurst,
        DriverConfig::Rl { rho } => (0.5 + rho).min(1.0),
        DriverConfig::TimeChangedBm { exponent } => 0.5 * exponent.min(1.0),
        DriverConfig::FracBm { rho } => (0.5 + rho).min(1.0),
    }
}

fn run_holder(config: &RunConfig) -> Result<Outcome, CliError> {
    let settings = config.holder.as_ref().expect("validated: holder present");
    let grid = TimeGrid::dyadic(1.0, settings.levels)?;
    let mut rows = Vec::new();
    for (case_idx, case) in settings.cases.iter().enumerate() {
        let estimates: Vec<f64> = match *case {
            DriverConfig::FracBm { rho } => {
                let spec = if rho > 0.0 {
                    FracIntSpec::positive(rho)?
                } else {
                    FracIntSpec::negative(rho)?
                };
                par::try_map_indexed(settings.n_paths, |i| {
                    let w = sample_path(
                        DriverKind::Bm,
                        &grid,
                        config.seed.wrapping_add(case_idx as u64 * 0x1000_0000),
                        i as u64,
                    )?;
                    holder_estimate(&frac_integrate(&w, &spec)?)
                })?
            }
            _ => {
                let kind = case.as_driver_kind("holder.cases")?;
                let sampler = PathSampler::new(kind, &grid)?;
                par::try_map_indexed(settings.n_paths, |i| {
                    holder_estimate(
                        &sampler
                            .sample(config.seed.wrapping_add(case_idx as u64 * 0x1000_0000), i as u64),
                    )
                })?
            }
        };
        let n = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / n;
        let sd = (estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (n - 1.0))
            .sqrt();
        rows.push(format!(
            "{},{},{},{},{},{}",
            case.label(),
            holder_target(case),
            settings.n_paths,
            grid.len(),
            mean,
            sd
        ));
    }
    let csv_path = config.output_dir.join("holder.csv");
    write_csv(
        &csv_path,
        &[],
        "case,target,n_paths,points,mean_estimate,sd_estimate",
        rows,
    )?;
    Ok(Outcome { pass: true, artifacts: vec![csv_path] })
}

fn run_cov(config: &RunConfig) -> Result<Outcome, CliError> {
    let settings = config.cov.as_ref().expect("validated: cov present");
    let kind = settings.driver.as_driver_kind("cov.driver")?;
    let mut rows = Vec::new();
    for &u in &settings.u_points {
        for &v in &settings.u_points {
            let value = limit_cov(|x, y| kind.cov(x, y), settings.beta, u, v)?;
            rows.push(format!("{u},{v},{value}"));
        }
    }
    let csv_path = config.output_dir.join("cov.csv");
    write_csv(
        &csv_path,
        &[format!("driver={}", kind.label()), format!("beta={}", settings.beta)],
        "u,v,limit_cov",
        rows,
    )?;
    Ok(Outcome { pass: true, artifacts: vec![csv_path] })
}

fn run_identity(config: &RunConfig) -> Result<Outcome, CliError> {
    let settings = config.identity.as_ref().expect("validated: identity present");
    let mut rows = Vec::new();
    for &level in &settings.levels {
        let grid = TimeGrid::dyadic(1.0, level)?;
        let deviations = par::try_map_indexed(settings.n_paths, |i| {
            let w = sample_path(DriverKind::Bm, &grid, config.seed, i as u64)?;
            rl_convolution_identity_check(&w, settings.k, settings.beta)
        })?;
        let worst = deviations.iter().copied().fold(0.0f64, f64::max);
        rows.push(format!(
            "{},{},{},{},{}",
            grid.len(),
            settings.k,
            settings.beta,
            settings.n_paths,
            worst
        ));
    }
    let csv_path = config.output_dir.join("identity.csv");
    write_csv(
        &csv_path,
        &[],
        "points,k,beta,n_paths,max_rel_deviation",
        rows,
    )?;
    Ok(Outcome { pass: true, artifacts: vec![csv_path] })
}

fn run_simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    let settings = config.simulate.as_ref().expect("validated: simulate present");
    let mut artifacts = Vec::new();
    match settings.what {
        SimulateWhat::Shots => {
            let model = config.model.as_ref().expect("validated: model present");
            let horizon = config
                .experiment
                .scale_t
                .unwrap_or(1.0)
                * config.experiment.u_points.iter().copied().fold(0.0, f64::max);
            for i in 0..settings.n_paths {
                let shots = model.generate(horizon, config.seed, i as u64)?;
                let path = config.output_dir.join(format!("shots_{i:04}.csv"));
                write_csv(
                    &path,
                    &[format!("model={}", model.label()), format!("horizon={horizon}")],
                    "time",
                    shots.times().iter().map(|t| format!("{t}")),
                )?;
                artifacts.push(path);
            }
        }
        SimulateWhat::Normalized => {
            let model = config.model.as_ref().expect("validated: model present");
            let h = config.response.as_ref().expect("validated: response present");
            let scale_t = config.experiment.scale_t.expect("validated: scale_t present");
            let u_max = config.experiment.u_points.iter().copied().fold(0.0, f64::max);
            let grid = TimeGrid::new(u_max, config.experiment.grid_points)?;
            let triple = model.normalization()?;
            let horizon = scale_t * u_max;
            let paths = par::try_map_indexed(settings.n_paths, |i| {
                let shots = model.generate(horizon, config.seed, i as u64)?;
                normalize(&shots, h, &triple, scale_t, &grid)
            })?;
            for (i, np) in paths.iter().enumerate() {
                let path = config.output_dir.join(format!("normalized_{i:04}.csv"));
                write_csv(
                    &path,
                    &[
                        format!("scale_t={scale_t}"),
                        format!("model={}", model.label()),
                        format!("response={}", h.label()),
                    ],
                    "u,value",
                    np.u_points
                        .iter()
                        .zip(&np.values)
                        .map(|(u, v)| format!("{u},{v}")),
                )?;
                artifacts.push(path);
            }
        }
        SimulateWhat::Driver => {
            let driver = settings
                .driver
                .as_ref()
                .expect("validated: driver present")
                .as_driver_kind("simulate.driver")?;
            let grid = TimeGrid::new(settings.t_max, config.experiment.grid_points)?;
            let sampler = PathSampler::new(driver, &grid)?;
            for i in 0..settings.n_paths {
                let p = sampler.sample(config.seed, i as u64);
                let path = config.output_dir.join(format!("driver_{i:04}.csv"));
                write_csv(
                    &path,
                    &[format!("driver={}", driver.label())],
                    "t,value",
                    grid.points()
                        .iter()
                        .zip(&p.values)
                        .map(|(t, v)| format!("{t},{v}")),
                )?;
                artifacts.push(path);
            }
        }
    }
    Ok(Outcome { pass: true, artifacts })
}
