//! File-backed study configuration: a sectioned TOML file covering the
//! fleet table, system parameters, the wind scenario process and the study
//! settings. Omitted fields fall back to GB-flavored defaults and every
//! fallback is reported in a provenance log, so a run is reproducible from
//! its config file alone. Resolved configs serialize back to TOML and
//! round-trip identically.

use crate::domain::{validate_fleet, DomainError, GeneratorClass, PowerSystem, SystemParams};
use crate::milp::MilpOptions;
use crate::scenario::{QuantileSpec, ScenarioError, WindProcess};
use crate::scheduler::SucConfig;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// The bundled GB-style reference configuration.
pub const GB_REFERENCE_TOML: &str = include_str!("../configs/gb_reference.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{field}: {requirement}")]
    Field {
        field: &'static str,
        requirement: String,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("csv `{path}`: {message}")]
    Csv { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSettings {
    pub quantiles: Vec<f64>,
    pub mean_cf: f64,
    pub persistence: f64,
    pub sigma_step: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    pub base: f64,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    pub peak_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub horizon_hours: u32,
    pub duration_hours: usize,
    /// Extra inertia applied to plain `run` invocations (MW·s²).
    pub extra_inertia: f64,
    /// Inertia increment the valuation studies price (MW·s²).
    pub value_unit: f64,
    pub n_nadir_cuts: usize,
    pub rocof_constraint: bool,
    pub nadir_constraint: bool,
    pub qss_constraint: bool,
    pub rocof_values: Vec<f64>,
    pub wind_capacities: Vec<f64>,
    pub demand_grid: Vec<f64>,
    pub wind_grid: Vec<f64>,
    pub extra_grid: Vec<f64>,
    /// Marginal-value saturation threshold (£); 0 = 1% of the peak marginal.
    pub marginal_epsilon: f64,
    pub gap_tol: f64,
    pub node_limit: usize,
    pub demand: DemandSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wind_csv: Option<PathBuf>,
}

/// A fully resolved study configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConfig {
    pub system: SystemParams,
    pub fleet: Vec<GeneratorClass>,
    pub scenario: ScenarioSettings,
    pub study: StudySettings,
}

// Raw mirror with optional fields so defaults can be tracked.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    fleet: Option<Vec<GeneratorClass>>,
    scenario: Option<RawScenario>,
    study: Option<RawStudy>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    f0: Option<f64>,
    damping: Option<f64>,
    rocof_max: Option<f64>,
    delta_f_max: Option<f64>,
    delta_f_qss_max: Option<f64>,
    t_delivery: Option<f64>,
    p_loss_max: Option<f64>,
    h_loss_max: Option<f64>,
    emissions_price: Option<f64>,
    voll: Option<f64>,
    wind_capacity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    quantiles: Option<Vec<f64>>,
    mean_cf: Option<f64>,
    persistence: Option<f64>,
    sigma_step: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    horizon_hours: Option<u32>,
    duration_hours: Option<usize>,
    extra_inertia: Option<f64>,
    value_unit: Option<f64>,
    n_nadir_cuts: Option<usize>,
    rocof_constraint: Option<bool>,
    nadir_constraint: Option<bool>,
    qss_constraint: Option<bool>,
    rocof_values: Option<Vec<f64>>,
    wind_capacities: Option<Vec<f64>>,
    demand_grid: Option<Vec<f64>>,
    wind_grid: Option<Vec<f64>>,
    extra_grid: Option<Vec<f64>>,
    marginal_epsilon: Option<f64>,
    gap_tol: Option<f64>,
    node_limit: Option<usize>,
    demand: Option<RawDemand>,
    wind_csv: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDemand {
    csv: Option<PathBuf>,
    base: Option<f64>,
    daily_amplitude: Option<f64>,
    weekly_amplitude: Option<f64>,
    peak_hour: Option<f64>,
}

/// A parsed config plus the list of fields that fell back to defaults.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: StudyConfig,
    pub provenance: Vec<String>,
}

/// Reads, resolves and validates a config file.
pub fn parse_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

/// Same as [`parse_config`] for in-memory text.
pub fn parse_config_str(text: &str) -> Result<LoadedConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    resolve(raw)
}

macro_rules! take {
    ($prov:ident, $section:literal, $field:ident, $raw:expr, $default:expr) => {{
        match $raw.$field {
            Some(v) => v,
            None => {
                let d = $default;
                $prov.push(format!(
                    concat!($section, ".", stringify!($field), " = {:?} (default)"),
                    d
                ));
                d
            }
        }
    }};
}

fn resolve(raw: RawConfig) -> Result<LoadedConfig, ConfigError> {
    let mut prov = Vec::new();
    let defaults = SystemParams::default();

    let rs = raw.system.unwrap_or_default();
    let system = SystemParams {
        f0: take!(prov, "system", f0, rs, defaults.f0),
        damping: take!(prov, "system", damping, rs, defaults.damping),
        rocof_max: take!(prov, "system", rocof_max, rs, defaults.rocof_max),
        delta_f_max: take!(prov, "system", delta_f_max, rs, defaults.delta_f_max),
        delta_f_qss_max: take!(prov, "system", delta_f_qss_max, rs, defaults.delta_f_qss_max),
        t_delivery: take!(prov, "system", t_delivery, rs, defaults.t_delivery),
        p_loss_max: take!(prov, "system", p_loss_max, rs, defaults.p_loss_max),
        h_loss_max: take!(prov, "system", h_loss_max, rs, defaults.h_loss_max),
        emissions_price: take!(prov, "system", emissions_price, rs, defaults.emissions_price),
        voll: take!(prov, "system", voll, rs, defaults.voll),
        wind_capacity: take!(prov, "system", wind_capacity, rs, defaults.wind_capacity),
    };

    let fleet = match raw.fleet {
        Some(f) => f,
        None => {
            prov.push("fleet = GB reference fleet (default)".into());
            crate::domain::gb_reference_fleet()
        }
    };
    // Full validation, field-precise errors.
    validate_fleet(fleet.clone(), system.clone())?;

    let rc = raw.scenario.unwrap_or_default();
    let scenario = ScenarioSettings {
        quantiles: take!(
            prov,
            "scenario",
            quantiles,
            rc,
            vec![0.005, 0.1, 0.3, 0.5, 0.7, 0.9, 0.995]
        ),
        mean_cf: take!(prov, "scenario", mean_cf, rc, 0.35),
        persistence: take!(prov, "scenario", persistence, rc, 0.95),
        sigma_step: take!(prov, "scenario", sigma_step, rc, 0.05),
        seed: take!(prov, "scenario", seed, rc, 42),
    };
    QuantileSpec::new(scenario.quantiles.clone())?;

    let rt = raw.study.unwrap_or_default();
    let rd = rt.demand.unwrap_or_default();
    let demand = DemandSettings {
        csv: rd.csv,
        base: take!(prov, "study.demand", base, rd, 35_000.0),
        daily_amplitude: take!(prov, "study.demand", daily_amplitude, rd, 8_000.0),
        weekly_amplitude: take!(prov, "study.demand", weekly_amplitude, rd, 2_000.0),
        peak_hour: take!(prov, "study.demand", peak_hour, rd, 18.0),
    };
    let study = StudySettings {
        horizon_hours: take!(prov, "study", horizon_hours, rt, 24),
        duration_hours: take!(prov, "study", duration_hours, rt, 168),
        extra_inertia: take!(prov, "study", extra_inertia, rt, 0.0),
        value_unit: take!(prov, "study", value_unit, rt, 1.0),
        n_nadir_cuts: take!(prov, "study", n_nadir_cuts, rt, 10),
        rocof_constraint: take!(prov, "study", rocof_constraint, rt, true),
        nadir_constraint: take!(prov, "study", nadir_constraint, rt, true),
        qss_constraint: take!(prov, "study", qss_constraint, rt, true),
        rocof_values: take!(prov, "study", rocof_values, rt, vec![0.25, 0.5]),
        wind_capacities: take!(
            prov,
            "study",
            wind_capacities,
            rt,
            vec![0.0, 5_000.0, 15_000.0, 30_000.0]
        ),
        demand_grid: take!(
            prov,
            "study",
            demand_grid,
            rt,
            vec![20_000.0, 25_000.0, 30_000.0, 35_000.0, 40_000.0, 45_000.0]
        ),
        wind_grid: take!(
            prov,
            "study",
            wind_grid,
            rt,
            vec![0.0, 6_000.0, 12_000.0, 18_000.0, 24_000.0, 30_000.0]
        ),
        extra_grid: take!(
            prov,
            "study",
            extra_grid,
            rt,
            (0..8).map(|i| i as f64 * 1_000.0).collect::<Vec<f64>>()
        ),
        marginal_epsilon: take!(prov, "study", marginal_epsilon, rt, 0.0),
        gap_tol: take!(prov, "study", gap_tol, rt, 1e-6),
        node_limit: take!(prov, "study", node_limit, rt, 20_000),
        demand,
        wind_csv: rt.wind_csv,
    };

    if study.horizon_hours == 0 {
        return Err(ConfigError::Field {
            field: "study.horizon_hours",
            requirement: "must be at least 1".into(),
        });
    }
    if study.duration_hours == 0 {
        return Err(ConfigError::Field {
            field: "study.duration_hours",
            requirement: "must be at least 1".into(),
        });
    }

    Ok(LoadedConfig {
        config: StudyConfig {
            system,
            fleet,
            scenario,
            study,
        },
        provenance: prov,
    })
}

impl StudyConfig {
    /// The bundled GB-style reference configuration.
    pub fn gb_reference() -> StudyConfig {
        parse_config_str(GB_REFERENCE_TOML)
            .expect("bundled reference config is valid")
            .config
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("resolved config serializes")
    }

    /// FNV-1a over the serialized form; stable across runs of one build.
    pub fn content_hash(&self) -> u64 {
        let mut hash = 0xcbf29ce484222325u64;
        for b in self.to_toml_string().bytes() {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash
    }

    pub fn power_system(&self) -> Result<PowerSystem, ConfigError> {
        Ok(validate_fleet(self.fleet.clone(), self.system.clone())?)
    }

    pub fn wind_process(&self, capacity: f64) -> WindProcess {
        WindProcess {
            capacity,
            mean_cf: self.scenario.mean_cf,
            persistence: self.scenario.persistence,
            sigma_step: self.scenario.sigma_step,
            seed: self.scenario.seed,
        }
    }

    /// Builds the per-step scheduling config. `rocof_max` and
    /// `wind_capacity` default to the `[system]` values when `None`.
    pub fn suc_config(
        &self,
        rocof_max: Option<f64>,
        extra_inertia: f64,
        wind_capacity: Option<f64>,
    ) -> Result<SucConfig, ConfigError> {
        let capacity = wind_capacity.unwrap_or(self.system.wind_capacity);
        let params = SystemParams {
            rocof_max: rocof_max.unwrap_or(self.system.rocof_max),
            wind_capacity: capacity,
            ..self.system.clone()
        };
        let system = validate_fleet(self.fleet.clone(), params)?;
        let quantiles = QuantileSpec::new(self.scenario.quantiles.clone())?;
        Ok(SucConfig {
            system,
            quantiles,
            wind: self.wind_process(capacity),
            horizon: self.study.horizon_hours,
            extra_inertia,
            rocof_constraint: self.study.rocof_constraint,
            nadir_constraint: self.study.nadir_constraint,
            qss_constraint: self.study.qss_constraint,
            n_nadir_cuts: self.study.n_nadir_cuts,
            milp: MilpOptions {
                gap_tol: self.study.gap_tol,
                node_limit: self.study.node_limit,
                ..MilpOptions::default()
            },
        })
    }

    /// Realized demand over `len` hours: the CSV when configured, otherwise
    /// the synthetic daily/weekly profile.
    pub fn demand_trace(&self, len: usize) -> Result<Vec<f64>, ConfigError> {
        if let Some(path) = &self.study.demand.csv {
            let trace = load_series_csv(path)?;
            if trace.len() < len {
                return Err(ConfigError::Field {
                    field: "study.demand.csv",
                    requirement: format!("needs at least {len} hours, has {}", trace.len()),
                });
            }
            return Ok(trace[..len].to_vec());
        }
        let d = &self.study.demand;
        Ok((0..len)
            .map(|t| {
                let t = t as f64;
                d.base
                    + d.daily_amplitude * ((t - d.peak_hour) * std::f64::consts::TAU / 24.0).cos()
                    + d.weekly_amplitude * (t * std::f64::consts::TAU / 168.0).sin()
            })
            .collect())
    }

    /// Realized wind over `len` hours at the given installed capacity: the
    /// CSV when configured (values clipped to capacity), otherwise the
    /// seeded synthetic process.
    pub fn wind_trace(&self, capacity: f64, len: usize) -> Result<Vec<f64>, ConfigError> {
        if let Some(path) = &self.study.wind_csv {
            let trace = load_series_csv(path)?;
            if trace.len() < len {
                return Err(ConfigError::Field {
                    field: "study.wind_csv",
                    requirement: format!("needs at least {len} hours, has {}", trace.len()),
                });
            }
            return Ok(trace[..len].iter().map(|w| w.clamp(0.0, capacity)).collect());
        }
        Ok(self.wind_process(capacity).generate_trace(len))
    }
}

/// Reads an `(hour, mw)` CSV; the header row is optional.
pub fn load_series_csv(path: &Path) -> Result<Vec<f64>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ConfigError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if record.len() < 2 {
            return Err(ConfigError::Csv {
                path: path.to_path_buf(),
                message: format!("row {} has {} fields, need hour,mw", i + 1, record.len()),
            });
        }
        if i == 0 && record.get(1).is_some_and(|v| v.parse::<f64>().is_err()) {
            continue; // header row
        }
        let mw: f64 = record
            .get(1)
            .unwrap()
            .parse()
            .map_err(|e| ConfigError::Csv {
                path: path.to_path_buf(),
                message: format!("row {}: {e}", i + 1),
            })?;
        out.push(mw);
    }
    Ok(out)
}
