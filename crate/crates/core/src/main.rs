//! Batch CLI for the inertia-valuation studies. All commands read one TOML
//! config (the bundled GB reference when none is given), apply flag/env
//! overrides, and write CSV/JSON artifacts plus a reproducibility manifest
//! into the output directory. Failures exit non-zero with a JSON error on
//! stderr.

use clap::{Parser, Subcommand};
use inertia_suc::cli::{run_study, StudyCommand};
use inertia_suc::config::{parse_config, parse_config_str, LoadedConfig, GB_REFERENCE_TOML};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "inertia-suc",
    version,
    about = "Frequency-secured stochastic unit commitment and inertia valuation"
)]
struct Cli {
    /// Study configuration (TOML); defaults to the bundled GB reference.
    #[arg(long, global = true, env = "INERTIA_SUC_CONFIG")]
    config: Option<PathBuf>,

    /// Override the scenario seed.
    #[arg(long, global = true, env = "INERTIA_SUC_SEED")]
    seed: Option<u64>,

    /// Artifact directory.
    #[arg(long, global = true, default_value = "out", env = "INERTIA_SUC_OUT_DIR")]
    out_dir: PathBuf,

    /// Override the RoCoF limit (Hz/s) for every solve.
    #[arg(long, global = true, env = "INERTIA_SUC_ROCOF_MAX")]
    rocof_max: Option<f64>,

    /// Override the extra inertia of plain runs (MW·s²).
    #[arg(long, global = true, env = "INERTIA_SUC_EXTRA_INERTIA")]
    extra_inertia: Option<f64>,

    /// Override the simulated duration (hours).
    #[arg(long, global = true, env = "INERTIA_SUC_DURATION_HOURS")]
    duration_hours: Option<usize>,

    /// Worker threads for study-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0, env = "INERTIA_SUC_THREADS")]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One rolling run; writes schedule.csv and summary.json.
    Run,
    /// Annual value of inertia per wind capacity; writes annual_value.csv.
    Annual,
    /// Instantaneous value over the demand-wind grid; writes instantaneous{,_grid}.csv.
    Instantaneous,
    /// Marginal value along the extra-inertia grid; writes marginal_value.csv.
    Marginal,
    /// Simulate one committed (inertia, response) pair against the limits.
    ValidateFrequency {
        /// Post-fault inertia (MW·s²).
        #[arg(long)]
        inertia: f64,
        /// Delivered response (MW).
        #[arg(long)]
        response: f64,
        /// Demand the damping acts on (MW); defaults to the config base.
        #[arg(long)]
        demand: Option<f64>,
    },
    /// Write the hour-zero scheduling model in LP format.
    DumpModel,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let json = serde_json::json!({
                "error": err.to_string(),
                "kind": err_kind(&err),
            });
            eprintln!("{json}");
            ExitCode::FAILURE
        }
    }
}

fn err_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if cause
            .downcast_ref::<inertia_suc::config::ConfigError>()
            .is_some()
        {
            return "config";
        }
        if cause
            .downcast_ref::<inertia_suc::scheduler::SchedulerError>()
            .is_some()
        {
            return "scheduler";
        }
        if cause
            .downcast_ref::<inertia_suc::valuation::ValuationError>()
            .is_some()
        {
            return "valuation";
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "internal"
}

fn execute(cli: Cli) -> anyhow::Result<Vec<PathBuf>> {
    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok(); // a pool may already exist in-process; overrides are best-effort
    }

    let LoadedConfig {
        mut config,
        provenance,
    } = match &cli.config {
        Some(path) => parse_config(path)?,
        None => parse_config_str(GB_REFERENCE_TOML)?,
    };
    for line in &provenance {
        eprintln!("default applied: {line}");
    }

    if let Some(seed) = cli.seed {
        config.scenario.seed = seed;
    }
    if let Some(rocof) = cli.rocof_max {
        config.system.rocof_max = rocof;
        config.study.rocof_values = vec![rocof];
    }
    if let Some(extra) = cli.extra_inertia {
        config.study.extra_inertia = extra;
    }
    if let Some(duration) = cli.duration_hours {
        config.study.duration_hours = duration;
    }

    let command = match cli.command {
        Command::Run => StudyCommand::Run,
        Command::Annual => StudyCommand::Annual,
        Command::Instantaneous => StudyCommand::Instantaneous,
        Command::Marginal => StudyCommand::Marginal,
        Command::ValidateFrequency {
            inertia,
            response,
            demand,
        } => StudyCommand::ValidateFrequency {
            inertia,
            response,
            demand,
        },
        Command::DumpModel => StudyCommand::DumpModel,
    };

    Ok(run_study(&config, &provenance, &command, &cli.out_dir)?)
}
