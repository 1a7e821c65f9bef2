//! Study execution and artifact emission behind the command-line interface.
//!
//! Every command writes its results as CSV (fixed column order, shortest
//! round-trip float formatting) plus a `manifest.json` naming the seed,
//! config hash and outputs. Nothing here embeds timestamps or machine
//! state, so identical (config, seed) pairs produce byte-identical
//! artifacts.

use crate::config::{ConfigError, StudyConfig};
use crate::frequency::{self, FrequencyCase, KStarCache};
use crate::scenario::build_tree;
use crate::scheduler::{build_suc, FleetState, RunResult, SchedulerError};
use crate::valuation::{
    annual_value, instantaneous_value, marginal_value, MarginalCurve, ValuationError,
};
use serde::Serialize;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Frequency(#[from] frequency::FrequencyError),
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// What to execute; mirrors the CLI subcommands.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyCommand {
    /// One rolling run at the config's primary settings.
    Run,
    /// Annual value across `study.wind_capacities` and `study.rocof_values`.
    Annual,
    /// Instantaneous value over `study.demand_grid` x `study.wind_grid`.
    Instantaneous,
    /// Marginal value along `study.extra_grid` per capacity and RoCoF limit.
    Marginal,
    /// Simulate one (inertia, response) pair and check it against the limits.
    ValidateFrequency { inertia: f64, response: f64, demand: Option<f64> },
    /// Dump the hour-zero scheduling model in LP format.
    DumpModel,
}

impl StudyCommand {
    fn name(&self) -> &'static str {
        match self {
            StudyCommand::Run => "run",
            StudyCommand::Annual => "annual",
            StudyCommand::Instantaneous => "instantaneous",
            StudyCommand::Marginal => "marginal",
            StudyCommand::ValidateFrequency { .. } => "validate-frequency",
            StudyCommand::DumpModel => "dump-model",
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config_hash: String,
    version: &'a str,
    outputs: Vec<String>,
    provenance: &'a [String],
}

/// Executes a study and writes its artifacts under `out_dir`. Returns the
/// paths written (manifest last).
pub fn run_study(
    config: &StudyConfig,
    provenance: &[String],
    command: &StudyCommand,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut outputs = match command {
        StudyCommand::Run => emit_run(config, out_dir)?,
        StudyCommand::Annual => emit_annual(config, out_dir)?,
        StudyCommand::Instantaneous => emit_instantaneous(config, out_dir)?,
        StudyCommand::Marginal => emit_marginal(config, out_dir)?,
        StudyCommand::ValidateFrequency {
            inertia,
            response,
            demand,
        } => emit_frequency_check(config, *inertia, *response, *demand, out_dir)?,
        StudyCommand::DumpModel => emit_model_dump(config, out_dir)?,
    };

    let manifest = Manifest {
        command: command.name(),
        seed: config.scenario.seed,
        config_hash: format!("{:016x}", config.content_hash()),
        version: env!("CARGO_PKG_VERSION"),
        outputs: outputs
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
        provenance,
    };
    let manifest_path = out_dir.join("manifest.json");
    write_file(
        &manifest_path,
        (serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n").as_bytes(),
    )?;
    outputs.push(manifest_path);
    Ok(outputs)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_once(config: &StudyConfig) -> Result<RunResult, CliError> {
    let duration = config.study.duration_hours;
    let demand = config.demand_trace(duration + config.study.horizon_hours as usize)?;
    let wind = config.wind_trace(config.system.wind_capacity, duration)?;
    let suc = config.suc_config(None, config.study.extra_inertia, None)?;
    let cache = KStarCache::new();
    Ok(crate::scheduler::rolling_run(
        &suc, &demand, &wind, duration, &cache,
    )?)
}

fn emit_run(config: &StudyConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let run = run_once(config)?;
    let schedule = out_dir.join("schedule.csv");
    let mut out = String::new();
    let class_names: Vec<&str> = config.fleet.iter().map(|c| c.name.as_str()).collect();
    out.push_str("hour,demand_mw,wind_available_mw,wind_used_mw,curtailed_mw,shed_mw,inertia_mws2,response_mw");
    for name in &class_names {
        out.push_str(&format!(",n_up_{name}"));
    }
    for name in &class_names {
        out.push_str(&format!(",n_start_{name}"));
    }
    out.push_str(",cost_startup,cost_no_load,cost_marginal,cost_emissions,cost_shed,cost_total\n");
    for h in &run.hours {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}",
            h.hour, h.demand, h.wind_available, h.wind_used, h.curtailed, h.shed, h.inertia,
            h.response
        ));
        for v in &h.n_up {
            out.push_str(&format!(",{v}"));
        }
        for v in &h.n_start {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(
            ",{},{},{},{},{},{}\n",
            h.cost.startup,
            h.cost.no_load,
            h.cost.marginal,
            h.cost.emissions,
            h.cost.shed,
            h.cost.total()
        ));
    }
    write_file(&schedule, out.as_bytes())?;

    #[derive(Serialize)]
    struct Summary {
        hours: usize,
        cost_startup: f64,
        cost_no_load: f64,
        cost_marginal: f64,
        cost_emissions: f64,
        cost_shed: f64,
        cost_total: f64,
        curtailed_mwh: f64,
        aborted: Option<String>,
    }
    let summary = Summary {
        hours: run.hours.len(),
        cost_startup: run.totals.startup,
        cost_no_load: run.totals.no_load,
        cost_marginal: run.totals.marginal,
        cost_emissions: run.totals.emissions,
        cost_shed: run.totals.shed,
        cost_total: run.total_cost(),
        curtailed_mwh: run.total_curtailed(),
        aborted: run.aborted.clone(),
    };
    let summary_path = out_dir.join("summary.json");
    write_file(
        &summary_path,
        (serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n").as_bytes(),
    )?;
    Ok(vec![schedule, summary_path])
}

fn emit_annual(config: &StudyConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let records = annual_value(
        config,
        &config.study.wind_capacities,
        config.study.duration_hours,
    )?;
    let path = out_dir.join("annual_value.csv");
    let mut out =
        String::from("wind_capacity_mw,rocof_max_hz_s,baseline_cost,cost_with_extra,value\n");
    for r in &records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.wind_capacity, r.rocof_max, r.baseline_cost, r.cost_with_extra, r.value
        ));
    }
    write_file(&path, out.as_bytes())?;
    Ok(vec![path])
}

fn emit_instantaneous(config: &StudyConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let records = instantaneous_value(config, &config.study.demand_grid, &config.study.wind_grid)?;
    let long = out_dir.join("instantaneous.csv");
    let mut out = String::from(
        "demand_mw,wind_mw,rocof_max_hz_s,baseline_cost,cost_with_extra,value,curtailed_mw,curtailed,shed,binding,curtailment_drop_mw,response_drop_mw\n",
    );
    for r in &records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.demand,
            r.wind,
            r.rocof_max,
            r.baseline_cost,
            r.cost_with_extra,
            r.value,
            r.curtailed_mw,
            r.curtailed,
            r.shed,
            r.binding,
            r.curtailment_drop,
            r.response_drop
        ));
    }
    write_file(&long, out.as_bytes())?;

    // Surface grid: one row per wind level, one column per demand level.
    let grid = out_dir.join("instantaneous_grid.csv");
    let mut out = String::from("wind_mw");
    for d in &config.study.demand_grid {
        out.push_str(&format!(",demand_{d}"));
    }
    out.push('\n');
    for &w in &config.study.wind_grid {
        out.push_str(&format!("{w}"));
        for &d in &config.study.demand_grid {
            let value = records
                .iter()
                .find(|r| r.demand == d && r.wind == w)
                .map_or(f64::NAN, |r| r.value);
            out.push_str(&format!(",{value}"));
        }
        out.push('\n');
    }
    write_file(&grid, out.as_bytes())?;
    Ok(vec![long, grid])
}

fn emit_marginal(config: &StudyConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut curves: Vec<MarginalCurve> = Vec::new();
    for &capacity in &config.study.wind_capacities {
        for &rocof in &config.study.rocof_values {
            curves.push(marginal_value(
                config,
                &config.study.extra_grid,
                capacity,
                rocof,
                config.study.duration_hours,
            )?);
        }
    }
    let path = out_dir.join("marginal_value.csv");
    let mut out = String::from(
        "wind_capacity_mw,rocof_max_hz_s,extra_mws2,savings,marginal_per_mws2,saturation_mws2\n",
    );
    for curve in &curves {
        for p in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                curve.wind_capacity,
                curve.rocof_max,
                p.extra,
                p.savings,
                p.marginal,
                curve
                    .saturation
                    .map_or(String::from(""), |s| format!("{s}")),
            ));
        }
    }
    write_file(&path, out.as_bytes())?;
    Ok(vec![path])
}

fn emit_frequency_check(
    config: &StudyConfig,
    inertia: f64,
    response: f64,
    demand: Option<f64>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let demand = demand.unwrap_or(config.study.demand.base);
    let case = FrequencyCase::from_params(&config.system, demand, inertia, response);
    let traj = frequency::simulate_frequency(&case, frequency::DEFAULT_DT, frequency::DEFAULT_HORIZON)?;

    #[derive(Serialize)]
    struct Check {
        inertia_mws2: f64,
        response_mw: f64,
        demand_mw: f64,
        nadir_hz: f64,
        max_rocof_hz_s: f64,
        qss_deviation_hz: f64,
        nadir_ok: bool,
        rocof_ok: bool,
        qss_ok: bool,
    }
    let check = Check {
        inertia_mws2: inertia,
        response_mw: response,
        demand_mw: demand,
        nadir_hz: traj.nadir,
        max_rocof_hz_s: traj.max_rocof,
        qss_deviation_hz: traj.qss_deviation,
        nadir_ok: traj.nadir >= -config.system.delta_f_max,
        rocof_ok: traj.max_rocof <= config.system.rocof_max,
        qss_ok: traj.qss_deviation >= -config.system.delta_f_qss_max,
    };
    let path = out_dir.join("frequency_check.json");
    write_file(
        &path,
        (serde_json::to_string_pretty(&check).expect("check serializes") + "\n").as_bytes(),
    )?;

    println!(
        "nadir {:+.4} Hz (limit -{:.4}) -> {}",
        check.nadir_hz,
        config.system.delta_f_max,
        if check.nadir_ok { "pass" } else { "FAIL" }
    );
    println!(
        "max RoCoF {:.4} Hz/s (limit {:.4}) -> {}",
        check.max_rocof_hz_s,
        config.system.rocof_max,
        if check.rocof_ok { "pass" } else { "FAIL" }
    );
    println!(
        "quasi-steady-state {:+.4} Hz (limit -{:.4}) -> {}",
        check.qss_deviation_hz,
        config.system.delta_f_qss_max,
        if check.qss_ok { "pass" } else { "FAIL" }
    );
    Ok(vec![path])
}

fn emit_model_dump(config: &StudyConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let horizon = config.study.horizon_hours;
    let demand = config.demand_trace(horizon as usize + 1)?;
    let wind = config.wind_trace(config.system.wind_capacity, 1)?;
    let suc = config.suc_config(None, config.study.extra_inertia, None)?;
    let tree = build_tree(&suc.wind, wind[0], &demand, &suc.quantiles, horizon)
        .map_err(SchedulerError::from)?;
    let state = FleetState::all_online(suc.system.classes());
    let cache = KStarCache::new();
    let build = build_suc(&suc, &tree, &state, &cache, &[])?;

    let path = out_dir.join("model.lp");
    let mut buf = Vec::new();
    build
        .model
        .write_lp(&mut buf)
        .expect("in-memory write cannot fail");
    write_file(&path, &buf)?;
    Ok(vec![path])
}
