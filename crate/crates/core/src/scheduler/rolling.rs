//! Rolling-planning simulation: each hour builds a fresh scenario tree from
//! the realized wind, solves the commitment MILP, commits only the root
//! (here-and-now) decisions, verifies the committed point against the
//! frequency simulator, and carries the fleet state forward. Costs
//! accumulate at realized wind.
//!
//! The nadir constraint enters the MILP as an outer approximation, so a
//! committed point can sit slightly outside the true bilinear curve. The
//! post-solve check re-simulates the committed (H, R); when the nadir
//! violation exceeds tolerance a tangent at the realized inertia is added
//! and the hour re-solved, up to three times.

use super::{
    build_suc, extract_point, node_cost, CostBreakdown, FleetState, SchedulerError, SucConfig,
};
use crate::frequency::{self, FrequencyCase, KStarCache};
use crate::milp::{solve_milp, SolveStatus};
use crate::scenario::build_tree;

/// Allowed nadir overshoot of a committed point (Hz).
pub const VERIFY_NADIR_SLACK: f64 = 5e-3;
const MAX_REFINEMENTS: usize = 3;

/// One realized hour of a rolling run.
#[derive(Debug, Clone)]
pub struct HourRecord {
    pub hour: usize,
    pub demand: f64,
    pub wind_available: f64,
    pub wind_used: f64,
    pub curtailed: f64,
    pub shed: f64,
    /// Post-fault inertia of the committed fleet (MW·s²), extra included.
    pub inertia: f64,
    /// Total scheduled response (MW).
    pub response: f64,
    pub n_up: Vec<u32>,
    pub n_start: Vec<u32>,
    pub cost: CostBreakdown,
    /// Simulated nadir of the committed point (Hz), when verification ran.
    pub verified_nadir: Option<f64>,
}

/// Outcome of a rolling run; `aborted` carries the reason when the run
/// stopped early (solver gap limit or failed verification), with the hours
/// completed so far.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub hours: Vec<HourRecord>,
    pub totals: CostBreakdown,
    pub aborted: Option<String>,
}

impl RunResult {
    pub fn total_cost(&self) -> f64 {
        self.totals.total()
    }

    pub fn total_curtailed(&self) -> f64 {
        self.hours.iter().map(|h| h.curtailed).sum()
    }

    pub fn total_response(&self) -> f64 {
        self.hours.iter().map(|h| h.response).sum()
    }
}

/// Steady-state commitment for a fixed condition: a one-node solve opened
/// from the all-online state, so the fleet may settle anywhere below full
/// commitment while meeting every security constraint. Used to seed the
/// rolling loop with a consistent hour-zero fleet.
pub fn steady_state_commitment(
    config: &SucConfig,
    demand: f64,
    wind: f64,
    k_cache: &KStarCache,
) -> Result<Vec<u32>, SchedulerError> {
    let tree = crate::scenario::ScenarioTree::single(demand, wind);
    let state = FleetState::all_online(config.system.classes());
    let build = build_suc(config, &tree, &state, k_cache, &[])?;
    let sol = solve_milp(&build.model, &config.milp)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::GapLimit if !sol.values.is_empty() => Ok((0..config
            .system
            .classes()
            .len())
            .map(|g| sol.value(build.index.n_up[0][g]).round().max(0.0) as u32)
            .collect()),
        _ => Err(SchedulerError::Infeasible { hour: 0 }),
    }
}

/// Runs `duration_hours` of rolling planning over the given realized
/// traces. `demand_trace` must cover `duration + horizon` hours,
/// `wind_trace` the duration.
///
/// The opening fleet state is the steady-state commitment for hour zero,
/// always computed at zero extra inertia: paired runs that differ only in
/// the extra-inertia level then share their (free) starting fleet, so cost
/// differences measure the inertia and nothing else.
pub fn rolling_run(
    config: &SucConfig,
    demand_trace: &[f64],
    wind_trace: &[f64],
    duration_hours: usize,
    k_cache: &KStarCache,
) -> Result<RunResult, SchedulerError> {
    if demand_trace.is_empty() || wind_trace.is_empty() {
        return Err(SchedulerError::ShortTrace { got: 0, need: 1 });
    }
    let warm_cfg = SucConfig {
        extra_inertia: 0.0,
        ..config.clone()
    };
    let initial = steady_state_commitment(
        &warm_cfg,
        demand_trace[0],
        wind_trace[0].clamp(0.0, config.wind.capacity),
        k_cache,
    )?;
    rolling_run_with_state(config, &initial, demand_trace, wind_trace, duration_hours, k_cache)
}

/// [`rolling_run`] from an explicit opening commitment, for comparisons
/// that must share their exogenous starting fleet across configs.
pub fn rolling_run_with_state(
    config: &SucConfig,
    initial_online: &[u32],
    demand_trace: &[f64],
    wind_trace: &[f64],
    duration_hours: usize,
    k_cache: &KStarCache,
) -> Result<RunResult, SchedulerError> {
    let need = duration_hours + config.horizon as usize;
    if demand_trace.len() < need {
        return Err(SchedulerError::ShortTrace {
            got: demand_trace.len(),
            need,
        });
    }
    if wind_trace.len() < duration_hours {
        return Err(SchedulerError::ShortTrace {
            got: wind_trace.len(),
            need: duration_hours,
        });
    }

    let classes = config.system.classes();
    let params = config.system.params();
    let mut state = FleetState::with_online(classes, initial_online);
    let mut hours = Vec::with_capacity(duration_hours);
    let mut totals = CostBreakdown::default();

    for hour in 0..duration_hours {
        let window = &demand_trace[hour..=hour + config.horizon as usize];
        let wind_now = wind_trace[hour].clamp(0.0, config.wind.capacity);
        let tree = build_tree(
            &config.wind,
            wind_now,
            window,
            &config.quantiles,
            config.horizon,
        )?;

        let mut refinements: Vec<f64> = Vec::new();
        let committed = loop {
            let build = build_suc(config, &tree, &state, k_cache, &refinements)?;
            let sol = solve_milp(&build.model, &config.milp)?;
            match sol.status {
                SolveStatus::Optimal => {}
                SolveStatus::GapLimit => {
                    return Ok(RunResult {
                        hours,
                        totals,
                        aborted: Some(format!(
                            "hour {hour}: node limit hit with relative gap {:.2e}",
                            sol.gap
                        )),
                    });
                }
                SolveStatus::Infeasible | SolveStatus::Unbounded => {
                    return Err(SchedulerError::Infeasible { hour });
                }
            }
            let point = extract_point(&build, &sol, 0, classes, tree.root().wind_available)?;

            if !config.nadir_constraint {
                break Ok((point, None));
            }
            // Post-solve verification of the committed (H, R) pair.
            let counts: Vec<u32> = point.per_class.iter().map(|d| d.n_up).collect();
            let inertia = committed_inertia(config, &counts);
            if inertia <= 0.0 {
                break Err(format!("hour {hour}: non-positive post-fault inertia"));
            }
            let case = FrequencyCase::from_params(params, tree.root().demand, inertia, point.total_response());
            let (nadir, _, _) =
                frequency::simulate_extremes(&case, frequency::DEFAULT_DT, frequency::DEFAULT_HORIZON)?;
            if nadir >= -params.delta_f_max - VERIFY_NADIR_SLACK {
                break Ok((point, Some(nadir)));
            }
            if refinements.len() >= MAX_REFINEMENTS {
                break Err(format!(
                    "hour {hour}: nadir {nadir:.4} Hz after {MAX_REFINEMENTS} cut refinements"
                ));
            }
            refinements.push(inertia);
        };

        let (point, verified_nadir) = match committed {
            Ok(pair) => pair,
            Err(reason) => {
                return Ok(RunResult {
                    hours,
                    totals,
                    aborted: Some(reason),
                })
            }
        };

        // Advance the state: stops fall out of the continuity balance.
        let stops: Vec<u32> = point
            .per_class
            .iter()
            .zip(&state.classes)
            .zip(classes)
            .map(|((dec, st), class)| {
                let started_now = if class.startup_time == 0 {
                    dec.n_start_gen
                } else {
                    st.pending_start.front().copied().unwrap_or(0)
                };
                (st.online + started_now).saturating_sub(dec.n_up)
            })
            .collect();

        let counts: Vec<u32> = point.per_class.iter().map(|d| d.n_up).collect();
        let cost = node_cost(&point, classes, 1.0, params.emissions_price, params.voll);
        totals.accumulate(&cost);
        hours.push(HourRecord {
            hour,
            demand: tree.root().demand,
            wind_available: tree.root().wind_available,
            wind_used: point.wind_used,
            curtailed: (tree.root().wind_available - point.wind_used).max(0.0),
            shed: point.shed,
            inertia: committed_inertia(config, &counts),
            response: point.total_response(),
            n_up: counts,
            n_start: point.per_class.iter().map(|d| d.n_start_gen).collect(),
            cost,
            verified_nadir,
        });

        state.advance(classes, &point.per_class, &stops);
    }

    Ok(RunResult {
        hours,
        totals,
        aborted: None,
    })
}

/// Post-fault inertia of a committed fleet under this config's sized loss,
/// extra inertia included (MW·s²).
pub fn committed_inertia(config: &SucConfig, online: &[u32]) -> f64 {
    let kinetic: f64 = config
        .system
        .classes()
        .iter()
        .zip(online)
        .map(|(class, &n)| config.inertia_coef(class) * f64::from(n))
        .sum();
    kinetic - config.loss_inertia() + config.extra_inertia
}
