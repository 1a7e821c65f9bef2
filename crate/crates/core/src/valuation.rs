//! The three inertia-valuation studies. Value is always the drop in
//! operating cost when a block of free inertia is added under otherwise
//! identical conditions (same seed, same traces):
//!
//! - annual value per installed wind capacity, from paired rolling runs;
//! - instantaneous value over a demand-wind grid, from paired single-hour
//!   commitments at a fixed condition;
//! - marginal value along an increasing extra-inertia grid, with the
//!   saturation point where the marginal drops below a threshold.
//!
//! Grid cells, capacity points and extra-inertia levels are independent, so
//! they evaluate in parallel; records come back in input order regardless of
//! thread count.

use crate::config::{ConfigError, StudyConfig};
use crate::domain::{SchedulePoint, SystemParams};
use crate::exec::map_collect;
use crate::frequency::{self, FrequencyCase, KStarCache};
use crate::milp::{solve_milp, SolveStatus};
use crate::scenario::ScenarioTree;
use crate::scheduler::{
    build_suc, extract_point, node_cost, rolling_run, CostBreakdown, FleetState, RunResult,
    SchedulerError, SucConfig,
};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValuationError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("run aborted: {0}")]
    Aborted(String),
    #[error("extra-inertia grid must be strictly increasing from 0, got {0:?}")]
    BadExtraGrid(Vec<f64>),
    #[error("{0} grid must be non-empty")]
    EmptyGrid(&'static str),
}

fn completed(run: RunResult) -> Result<RunResult, ValuationError> {
    match run.aborted {
        Some(reason) => Err(ValuationError::Aborted(reason)),
        None => Ok(run),
    }
}

/// Which frequency-security constraint sits on its bound at a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Rocof,
    Nadir,
    Qss,
    None,
}

impl std::fmt::Display for Binding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Binding::Rocof => "rocof",
            Binding::Nadir => "nadir",
            Binding::Qss => "qss",
            Binding::None => "none",
        };
        f.write_str(s)
    }
}

/// A solved operating point reduced to the quantities the frequency
/// constraints see.
#[derive(Debug, Clone, Copy)]
pub struct OperatingPoint {
    /// Post-fault inertia, extra included (MW·s²).
    pub inertia: f64,
    /// Total scheduled response (MW).
    pub response: f64,
    pub demand: f64,
}

/// Reports the minimal-slack frequency constraint at a solved point, with
/// slacks normalized by their requirement. A constraint binds when its
/// normalized slack is below 1e-6; with every slack above that the probe
/// reports `None`.
pub fn binding_constraint_probe(
    point: &OperatingPoint,
    params: &SystemParams,
    k_star: f64,
    rocof_on: bool,
    nadir_on: bool,
    qss_on: bool,
) -> Binding {
    let mut best = (Binding::None, f64::INFINITY);
    if rocof_on {
        let floor = frequency::rocof_inertia_floor(params.p_loss_max, params.rocof_max);
        let slack = (point.inertia - floor) / floor.max(1.0);
        if slack < best.1 {
            best = (Binding::Rocof, slack);
        }
    }
    if nadir_on && k_star > 0.0 {
        let slack = (point.inertia * point.response - k_star) / k_star;
        if slack < best.1 {
            best = (Binding::Nadir, slack);
        }
    }
    if qss_on {
        let floor = frequency::qss_response_floor(params, point.demand);
        if floor > 0.0 {
            let slack = (point.response - floor) / floor;
            if slack < best.1 {
                best = (Binding::Qss, slack);
            }
        }
    }
    if best.1 <= 1e-6 {
        best.0
    } else {
        Binding::None
    }
}

/// One paired measurement of the annual study.
#[derive(Debug, Clone)]
pub struct AnnualValueRecord {
    pub wind_capacity: f64,
    pub rocof_max: f64,
    pub baseline_cost: f64,
    pub cost_with_extra: f64,
    /// £ saved by `value_unit` MW·s² of free inertia over the run.
    pub value: f64,
}

/// Annual (long-run) value of inertia per wind capacity, for every RoCoF
/// limit in the config. Both runs of a pair share seed and traces.
pub fn annual_value(
    config: &StudyConfig,
    wind_capacities: &[f64],
    duration_hours: usize,
) -> Result<Vec<AnnualValueRecord>, ValuationError> {
    if wind_capacities.is_empty() {
        return Err(ValuationError::EmptyGrid("wind_capacities"));
    }
    let horizon = config.study.horizon_hours as usize;
    let demand = config.demand_trace(duration_hours + horizon)?;
    let unit = config.study.value_unit;

    // One k* cache per RoCoF limit: the nadir constant depends on it.
    let caches: Vec<(f64, Arc<KStarCache>)> = config
        .study
        .rocof_values
        .iter()
        .map(|&r| (r, Arc::new(KStarCache::new())))
        .collect();

    let mut jobs = Vec::new();
    for &capacity in wind_capacities {
        for (rocof, cache) in &caches {
            jobs.push((capacity, *rocof, Arc::clone(cache)));
        }
    }

    let results = map_collect(jobs, |(capacity, rocof, cache)| {
        let wind = config.wind_trace(capacity, duration_hours)?;
        let base_cfg = config.suc_config(Some(rocof), 0.0, Some(capacity))?;
        let extra_cfg = config.suc_config(Some(rocof), unit, Some(capacity))?;
        let base = completed(rolling_run(&base_cfg, &demand, &wind, duration_hours, &cache)?)?;
        let extra = completed(rolling_run(
            &extra_cfg,
            &demand,
            &wind,
            duration_hours,
            &cache,
        )?)?;
        Ok::<_, ValuationError>(AnnualValueRecord {
            wind_capacity: capacity,
            rocof_max: rocof,
            baseline_cost: base.total_cost(),
            cost_with_extra: extra.total_cost(),
            value: base.total_cost() - extra.total_cost(),
        })
    });
    results.into_iter().collect()
}

/// A solved single-hour commitment at a fixed demand-wind condition.
#[derive(Debug, Clone)]
pub struct HourSolution {
    pub point: SchedulePoint,
    pub cost: CostBreakdown,
    /// Post-fault inertia, extra included (MW·s²).
    pub inertia: f64,
    pub k_star: f64,
    pub curtailed: f64,
}

/// Commits a single steady-state hour at the given condition: the fleet may
/// run any subset of its units (shutting down is free, min up/down windows
/// are clear), so the solve prices the condition itself rather than a
/// transition. Includes the same post-solve nadir verification and cut
/// refinement as the rolling loop.
pub fn solve_single_hour(
    config: &SucConfig,
    demand: f64,
    wind_available: f64,
    k_cache: &KStarCache,
) -> Result<HourSolution, ValuationError> {
    let tree = ScenarioTree::single(demand, wind_available);
    let state = FleetState::all_online(config.system.classes());
    let params = config.system.params();
    let mut refinements: Vec<f64> = Vec::new();
    loop {
        let build = build_suc(config, &tree, &state, k_cache, &refinements)?;
        let sol = solve_milp(&build.model, &config.milp).map_err(SchedulerError::from)?;
        match sol.status {
            SolveStatus::Optimal => {}
            other => {
                return Err(ValuationError::Aborted(format!(
                    "single-hour solve at demand {demand} MW, wind {wind_available} MW: {other:?}"
                )))
            }
        }
        let point = extract_point(&build, &sol, 0, config.system.classes(), wind_available)
            .map_err(SchedulerError::from)?;
        let counts: Vec<u32> = point.per_class.iter().map(|d| d.n_up).collect();
        let inertia = crate::scheduler::committed_inertia(config, &counts);
        let k_star = build.k_star[0];

        if config.nadir_constraint && k_star > 0.0 && inertia > 0.0 {
            let case = FrequencyCase::from_params(params, demand, inertia, point.total_response());
            let (nadir, _, _) = frequency::simulate_extremes(
                &case,
                frequency::DEFAULT_DT,
                frequency::DEFAULT_HORIZON,
            )
            .map_err(SchedulerError::from)?;
            if nadir < -params.delta_f_max - crate::scheduler::VERIFY_NADIR_SLACK
                && refinements.len() < 3
            {
                refinements.push(inertia);
                continue;
            }
        }

        let cost = node_cost(
            &point,
            config.system.classes(),
            1.0,
            params.emissions_price,
            params.voll,
        );
        let curtailed = (wind_available - point.wind_used).max(0.0);
        return Ok(HourSolution {
            point,
            cost,
            inertia,
            k_star,
            curtailed,
        });
    }
}

/// One cell of the instantaneous study.
#[derive(Debug, Clone)]
pub struct InstantRecord {
    pub demand: f64,
    pub wind: f64,
    pub rocof_max: f64,
    pub baseline_cost: f64,
    pub cost_with_extra: f64,
    pub value: f64,
    /// Baseline spilled wind (MW) and whether any was spilled.
    pub curtailed_mw: f64,
    pub curtailed: bool,
    /// Baseline failed to serve all demand.
    pub shed: bool,
    pub binding: Binding,
    /// How much less wind is spilled with the extra inertia (MW).
    pub curtailment_drop: f64,
    /// How much less response is scheduled with the extra inertia (MW).
    pub response_drop: f64,
}

/// Instantaneous value of inertia over a demand-wind grid at the config's
/// primary RoCoF limit. Cells evaluate in parallel.
pub fn instantaneous_value(
    config: &StudyConfig,
    demand_grid: &[f64],
    wind_grid: &[f64],
) -> Result<Vec<InstantRecord>, ValuationError> {
    if demand_grid.is_empty() {
        return Err(ValuationError::EmptyGrid("demand_grid"));
    }
    if wind_grid.is_empty() {
        return Err(ValuationError::EmptyGrid("wind_grid"));
    }
    let unit = config.study.value_unit;
    let rocof = config.system.rocof_max;
    let cache = Arc::new(KStarCache::new());
    let base_cfg = config.suc_config(Some(rocof), 0.0, None)?;
    let extra_cfg = config.suc_config(Some(rocof), unit, None)?;

    let mut cells = Vec::with_capacity(demand_grid.len() * wind_grid.len());
    for &demand in demand_grid {
        for &wind in wind_grid {
            cells.push((demand, wind));
        }
    }

    let records = map_collect(cells, |(demand, wind)| {
        let base = solve_single_hour(&base_cfg, demand, wind, &cache)?;
        let extra = solve_single_hour(&extra_cfg, demand, wind, &cache)?;
        let op = OperatingPoint {
            inertia: base.inertia,
            response: base.point.total_response(),
            demand,
        };
        Ok::<_, ValuationError>(InstantRecord {
            demand,
            wind,
            rocof_max: rocof,
            baseline_cost: base.cost.total(),
            cost_with_extra: extra.cost.total(),
            value: base.cost.total() - extra.cost.total(),
            curtailed_mw: base.curtailed,
            curtailed: base.curtailed > 1e-6,
            shed: base.point.shed > 1e-6,
            binding: binding_constraint_probe(
                &op,
                base_cfg.system.params(),
                base.k_star,
                base_cfg.rocof_constraint,
                base_cfg.nadir_constraint,
                base_cfg.qss_constraint,
            ),
            curtailment_drop: base.curtailed - extra.curtailed,
            response_drop: base.point.total_response() - extra.point.total_response(),
        })
    });
    records.into_iter().collect()
}

/// One step of the marginal-value curve.
#[derive(Debug, Clone)]
pub struct MarginalPoint {
    /// Extra inertia at the end of the step (MW·s²).
    pub extra: f64,
    /// Total saving versus zero extra inertia (£).
    pub savings: f64,
    /// Saving per MW·s² across this step (£/MW·s²).
    pub marginal: f64,
}

#[derive(Debug, Clone)]
pub struct MarginalCurve {
    pub wind_capacity: f64,
    pub rocof_max: f64,
    pub points: Vec<MarginalPoint>,
    /// First grid level whose marginal value fell below the threshold.
    pub saturation: Option<f64>,
    pub epsilon: f64,
}

/// Marginal value of inertia along `extra_grid` (strictly increasing from
/// 0) at one wind capacity and RoCoF limit. Runs per level share traces and
/// evaluate in parallel.
pub fn marginal_value(
    config: &StudyConfig,
    extra_grid: &[f64],
    wind_capacity: f64,
    rocof_max: f64,
    duration_hours: usize,
) -> Result<MarginalCurve, ValuationError> {
    let increasing = extra_grid
        .windows(2)
        .all(|w| w[0] < w[1]);
    if extra_grid.is_empty() || extra_grid[0] != 0.0 || !increasing {
        return Err(ValuationError::BadExtraGrid(extra_grid.to_vec()));
    }

    let horizon = config.study.horizon_hours as usize;
    let demand = config.demand_trace(duration_hours + horizon)?;
    let wind = config.wind_trace(wind_capacity, duration_hours)?;
    let cache = Arc::new(KStarCache::new());

    let costs = map_collect(extra_grid.to_vec(), |extra| {
        let cfg = config.suc_config(Some(rocof_max), extra, Some(wind_capacity))?;
        let run = completed(rolling_run(&cfg, &demand, &wind, duration_hours, &cache)?)?;
        Ok::<_, ValuationError>(run.total_cost())
    });
    let costs: Vec<f64> = costs.into_iter().collect::<Result<_, _>>()?;

    let baseline = costs[0];
    let mut points = Vec::with_capacity(extra_grid.len().saturating_sub(1));
    for i in 1..extra_grid.len() {
        let savings = baseline - costs[i];
        let prev_savings = baseline - costs[i - 1];
        let marginal = (savings - prev_savings) / (extra_grid[i] - extra_grid[i - 1]);
        points.push(MarginalPoint {
            extra: extra_grid[i],
            savings,
            marginal,
        });
    }

    let epsilon = if config.study.marginal_epsilon > 0.0 {
        config.study.marginal_epsilon
    } else {
        0.01 * points.iter().map(|p| p.marginal).fold(0.0, f64::max)
    };
    let saturation = points
        .iter()
        .find(|p| p.marginal < epsilon)
        .map(|p| p.extra);

    Ok(MarginalCurve {
        wind_capacity,
        rocof_max,
        points,
        saturation,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    /// MW-rescaled replica of the reference config at 1/10 size with short
    /// horizons, sized for fast tests.
    pub(crate) fn desk_study_config() -> StudyConfig {
        let mut config = StudyConfig::gb_reference();
        config.fleet = config.fleet.iter().map(|c| c.scaled_mw(0.1)).collect();
        config.system.p_loss_max *= 0.1;
        config.system.wind_capacity *= 0.1;
        config.scenario.quantiles = vec![0.25, 0.5, 0.75];
        config.study.horizon_hours = 8;
        config.study.demand.base = 3000.0;
        config.study.demand.daily_amplitude = 700.0;
        config.study.demand.weekly_amplitude = 150.0;
        config.study.gap_tol = 1e-8;
        config
    }

    #[test]
    fn zero_wind_generous_fleet_has_negligible_value() {
        let mut config = desk_study_config();
        config.study.rocof_values = vec![0.5];
        let records = annual_value(&config, &[0.0], 6).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert!(r.value >= -1e-9 * r.baseline_cost.max(1.0), "value {}", r.value);
        assert!(
            r.value <= 1e-4 * r.baseline_cost,
            "value {} vs cost {}",
            r.value,
            r.baseline_cost
        );
    }

    #[test]
    fn instantaneous_cells_report_mechanisms() {
        let config = desk_study_config();
        let records = instantaneous_value(&config, &[2600.0, 4200.0], &[0.0, 2600.0]).unwrap();
        assert_eq!(records.len(), 4);
        for r in &records {
            assert!(
                r.value >= -1e-9 * r.baseline_cost.max(1.0),
                "cell ({}, {}): value {}",
                r.demand,
                r.wind,
                r.value
            );
            if r.value > 1e-6 {
                assert!(
                    r.curtailment_drop > 1e-9 || r.response_drop > 1e-9,
                    "cell ({}, {}): positive value without a mechanism",
                    r.demand,
                    r.wind
                );
            }
        }
        // The high-wind low-demand corner spills wind; the low-wind
        // high-demand corner does not.
        let spilled = records
            .iter()
            .find(|r| r.demand == 2600.0 && r.wind == 2600.0)
            .unwrap();
        assert!(spilled.curtailed, "expected curtailment at high wind / low demand");
        let tight = records
            .iter()
            .find(|r| r.demand == 4200.0 && r.wind == 0.0)
            .unwrap();
        assert!(!tight.curtailed);
    }

    #[test]
    fn probe_reports_none_when_constraints_are_off() {
        let mut config = desk_study_config();
        config.study.rocof_constraint = false;
        config.study.nadir_constraint = false;
        config.study.qss_constraint = false;
        let records = instantaneous_value(&config, &[3000.0], &[0.0]).unwrap();
        assert_eq!(records[0].binding, Binding::None);
    }

    #[test]
    fn trivial_extra_grid_yields_empty_curve() {
        let config = desk_study_config();
        let curve = marginal_value(&config, &[0.0], 1000.0, 0.5, 4).unwrap();
        assert!(curve.points.is_empty());
        assert!(curve.saturation.is_none());
    }

    #[test]
    fn misordered_extra_grid_rejected() {
        let config = desk_study_config();
        assert!(matches!(
            marginal_value(&config, &[0.0, 200.0, 100.0], 1000.0, 0.5, 4),
            Err(ValuationError::BadExtraGrid(_))
        ));
        assert!(matches!(
            marginal_value(&config, &[100.0, 200.0], 1000.0, 0.5, 4),
            Err(ValuationError::BadExtraGrid(_))
        ));
    }

    #[test]
    fn parse_and_value_desk_config_from_text() {
        // End-to-end: a desk config expressed as TOML drives a tiny study.
        let text = desk_study_config().to_toml_string();
        let loaded = parse_config_str(&text).unwrap();
        assert_eq!(loaded.config, desk_study_config());
    }
}
