//! Stochastic unit commitment over a scenario tree.
//!
//! [`build_suc`] assembles the MILP for one planning step: per node and
//! class an online count, a start decision, dispatch and response, plus
//! wind-use and shed slacks. Constraints cover energy balance, dispatch and
//! response limits, commitment dynamics along parent links (with a startup
//! pipeline — a start decision takes `startup_time` hours to begin
//! generating), aggregated minimum up/down windows, and the three frequency
//! requirements: the RoCoF inertia floor, nadir tangent cuts, and the
//! quasi-steady-state response floor.
//!
//! Startup cost is charged at decision time. With branching only at the
//! root, decision and start-generating nodes share a branch probability, so
//! the expected cost matches charging on generation start, while
//! horizon-edge starts are never free.
//!
//! Stop decisions are not variables: `stops(n) = N_up(parent) + starts
//! becoming effective − N_up(n)` is kept non-negative by one row, and the
//! min-down window telescopes into a pure start-sum row. This keeps the
//! model at exactly four variables per class per node.

mod rolling;

pub use rolling::{
    committed_inertia, rolling_run, rolling_run_with_state, steady_state_commitment, HourRecord,
    RunResult, VERIFY_NADIR_SLACK,
};

use crate::domain::{ClassDecision, DomainError, GeneratorClass, PowerSystem, SchedulePoint};
use crate::frequency::{self, FrequencyError, KStarCache, NadirCut, NadirCutSet};
use crate::milp::{MilpError, MilpModel, MilpOptions, MilpSolution, Relation, VarId};
use crate::scenario::{QuantileSpec, ScenarioError, ScenarioTree, WindProcess};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("fleet state covers {got} classes, fleet has {want}")]
    StateShape { got: usize, want: usize },
    #[error("class `{class}`: fleet state has {online} units online of {count}")]
    StateCounts {
        class: String,
        online: u32,
        count: u32,
    },
    #[error("trace covers {got} hours, the run needs {need}")]
    ShortTrace { got: usize, need: usize },
    #[error("hour {hour}: scheduling model is infeasible")]
    Infeasible { hour: usize },
    #[error(transparent)]
    Frequency(#[from] FrequencyError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Everything one planning step needs to know, shared read-only between the
/// rolling loop and the valuation studies.
#[derive(Debug, Clone)]
pub struct SucConfig {
    pub system: PowerSystem,
    pub quantiles: QuantileSpec,
    pub wind: WindProcess,
    /// Look-ahead of each planning step (hours).
    pub horizon: u32,
    /// Freely provided inertia (MW·s²) added to every node's post-fault level.
    pub extra_inertia: f64,
    pub rocof_constraint: bool,
    pub nadir_constraint: bool,
    pub qss_constraint: bool,
    pub n_nadir_cuts: usize,
    pub milp: MilpOptions,
}

impl SucConfig {
    pub fn new(system: PowerSystem, quantiles: QuantileSpec, wind: WindProcess) -> SucConfig {
        SucConfig {
            system,
            quantiles,
            wind,
            horizon: 24,
            extra_inertia: 0.0,
            rocof_constraint: true,
            nadir_constraint: true,
            qss_constraint: true,
            n_nadir_cuts: 10,
            milp: MilpOptions::default(),
        }
    }

    fn params(&self) -> &crate::domain::SystemParams {
        self.system.params()
    }

    /// Post-fault kinetic term removed by the sized loss (MW·s²).
    pub(crate) fn loss_inertia(&self) -> f64 {
        self.params().p_loss_max * self.params().h_loss_max / self.params().f0
    }

    /// Contribution of one online unit to post-fault inertia (MW·s²).
    pub(crate) fn inertia_coef(&self, class: &GeneratorClass) -> f64 {
        class.inertia_constant * class.p_max / self.params().f0
    }
}

/// Inter-temporal continuity carried between rolling steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassState {
    /// Units generating in the previous hour.
    pub online: u32,
    /// `pending_start[l]` = units that begin generating `l` hours from the
    /// current hour, decided in earlier steps. Length `startup_time`.
    pub pending_start: VecDeque<u32>,
    /// `recent_started[k]` = units that began generating `k+1` hours ago.
    pub recent_started: VecDeque<u32>,
    /// `recent_stopped[k]` = units stopped `k+1` hours ago.
    pub recent_stopped: VecDeque<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetState {
    pub classes: Vec<ClassState>,
}

impl FleetState {
    /// Clean state with the given online counts: empty startup pipeline and
    /// histories old enough that no up/down window binds.
    pub fn with_online(fleet: &[GeneratorClass], online: &[u32]) -> FleetState {
        let classes = fleet
            .iter()
            .zip(online)
            .map(|(class, &n)| ClassState {
                online: n,
                pending_start: VecDeque::from(vec![0; class.startup_time as usize]),
                recent_started: VecDeque::from(vec![
                    0;
                    (class.min_up_time as usize).saturating_sub(1)
                ]),
                recent_stopped: VecDeque::from(vec![
                    0;
                    (class.min_down_time as usize).saturating_sub(1)
                ]),
            })
            .collect();
        FleetState { classes }
    }

    /// Every unit online, histories clear. The steady-state opening point
    /// for single-hour studies: shutting down is free, starting costs.
    pub fn all_online(fleet: &[GeneratorClass]) -> FleetState {
        let counts: Vec<u32> = fleet.iter().map(|c| c.unit_count).collect();
        FleetState::with_online(fleet, &counts)
    }

    fn validate(&self, fleet: &[GeneratorClass]) -> Result<(), SchedulerError> {
        if self.classes.len() != fleet.len() {
            return Err(SchedulerError::StateShape {
                got: self.classes.len(),
                want: fleet.len(),
            });
        }
        for (state, class) in self.classes.iter().zip(fleet) {
            if state.online > class.unit_count {
                return Err(SchedulerError::StateCounts {
                    class: class.name.clone(),
                    online: state.online,
                    count: class.unit_count,
                });
            }
        }
        Ok(())
    }

    /// Moves one hour forward with the committed root decisions.
    pub fn advance(
        &mut self,
        fleet: &[GeneratorClass],
        decisions: &[ClassDecision],
        stops: &[u32],
    ) {
        for ((state, class), (dec, &stop)) in self
            .classes
            .iter_mut()
            .zip(fleet)
            .zip(decisions.iter().zip(stops))
        {
            let started_now = if class.startup_time == 0 {
                dec.n_start_gen
            } else {
                let due = state.pending_start.pop_front().unwrap_or(0);
                state.pending_start.push_back(dec.n_start_gen);
                due
            };
            state.online = (state.online + started_now).saturating_sub(stop);
            if !state.recent_started.is_empty() {
                state.recent_started.pop_back();
                state.recent_started.push_front(started_now);
            }
            if !state.recent_stopped.is_empty() {
                state.recent_stopped.pop_back();
                state.recent_stopped.push_front(stop);
            }
        }
    }
}

/// Variable ids of one assembled model, indexed `[node][class]`.
#[derive(Debug, Clone)]
pub struct SucVarIndex {
    pub n_up: Vec<Vec<VarId>>,
    pub start: Vec<Vec<VarId>>,
    pub dispatch: Vec<Vec<VarId>>,
    pub response: Vec<Vec<VarId>>,
    pub wind_used: Vec<VarId>,
    pub shed: Vec<VarId>,
}

impl SucVarIndex {
    pub fn variable_count(&self) -> usize {
        self.n_up.iter().map(Vec::len).sum::<usize>()
            + self.start.iter().map(Vec::len).sum::<usize>()
            + self.dispatch.iter().map(Vec::len).sum::<usize>()
            + self.response.iter().map(Vec::len).sum::<usize>()
            + self.wind_used.len()
            + self.shed.len()
    }
}

/// An assembled planning model plus the pieces post-processing needs.
pub struct SucBuild {
    pub model: MilpModel,
    pub index: SucVarIndex,
    /// Per-node nadir constant (0 when the constraint is off or vacuous).
    pub k_star: Vec<f64>,
    /// Per-node cut sets actually installed.
    pub cuts: Vec<NadirCutSet>,
}

/// Assembles the commitment MILP for `tree` starting from `state`.
/// `refinement_tangents` adds extra nadir tangents (used after post-solve
/// verification found the linearization gap too wide at the realized
/// inertia).
pub fn build_suc(
    config: &SucConfig,
    tree: &ScenarioTree,
    state: &FleetState,
    k_cache: &KStarCache,
    refinement_tangents: &[f64],
) -> Result<SucBuild, SchedulerError> {
    build_suc_inner(config, tree, state, k_cache, refinement_tangents, false)
}

/// Two-stage solve of one planning step. The first attempt pins the shed
/// slack to zero, which makes the energy balance a valid covering knapsack
/// over the online counts and lets the integer-hull rows absorb it; the
/// relaxation then prices whole units and branch-and-bound stays shallow.
/// If that model is infeasible (a genuine shortage needs the slack) the
/// exact free-shed model is solved instead.
pub fn solve_suc_step(
    config: &SucConfig,
    tree: &ScenarioTree,
    state: &FleetState,
    k_cache: &KStarCache,
    refinement_tangents: &[f64],
) -> Result<(SucBuild, MilpSolution), SchedulerError> {
    let build = build_suc_inner(config, tree, state, k_cache, refinement_tangents, true)?;
    let sol = crate::milp::solve_milp(&build.model, &config.milp)?;
    if sol.status != crate::milp::SolveStatus::Infeasible {
        return Ok((build, sol));
    }
    let build = build_suc_inner(config, tree, state, k_cache, refinement_tangents, false)?;
    let sol = crate::milp::solve_milp(&build.model, &config.milp)?;
    Ok((build, sol))
}

fn build_suc_inner(
    config: &SucConfig,
    tree: &ScenarioTree,
    state: &FleetState,
    k_cache: &KStarCache,
    refinement_tangents: &[f64],
    pin_shed: bool,
) -> Result<SucBuild, SchedulerError> {
    let classes = config.system.classes();
    let params = config.params();
    state.validate(classes)?;

    let n_nodes = tree.len();
    let n_classes = classes.len();
    let mut model = MilpModel::new();
    let mut index = SucVarIndex {
        n_up: vec![Vec::with_capacity(n_classes); n_nodes],
        start: vec![Vec::with_capacity(n_classes); n_nodes],
        dispatch: vec![Vec::with_capacity(n_classes); n_nodes],
        response: vec![Vec::with_capacity(n_classes); n_nodes],
        wind_used: Vec::with_capacity(n_nodes),
        shed: Vec::with_capacity(n_nodes),
    };

    // Emission-inclusive energy price per class.
    let energy_cost: Vec<f64> = classes
        .iter()
        .map(|c| c.marginal_cost + params.emissions_price * c.emissions_rate / 1000.0)
        .collect();

    for node in tree.topological() {
        let n = node.id;
        let pi = node.probability;
        let dt = node.time_step_hours;
        for (g, class) in classes.iter().enumerate() {
            let count = f64::from(class.unit_count);
            let (nup_lo, nup_hi) = if class.must_run {
                (count, count)
            } else {
                (0.0, count)
            };
            let n_up = model.add_integer(
                format!("nup_{}_n{n}", class.name),
                nup_lo,
                nup_hi,
                pi * dt * class.no_load_cost,
            );
            let start_hi = if class.must_run { 0.0 } else { count };
            let start = model.add_integer(
                format!("start_{}_n{n}", class.name),
                0.0,
                start_hi,
                pi * class.startup_cost,
            );
            let (p_lo, p_hi) = if class.must_run {
                (count * class.p_min_stable, count * class.p_max)
            } else {
                (0.0, count * class.p_max)
            };
            let dispatch = model.add_continuous(
                format!("pg_{}_n{n}", class.name),
                p_lo,
                p_hi,
                pi * dt * energy_cost[g],
            );
            let response = model.add_continuous(
                format!("rg_{}_n{n}", class.name),
                0.0,
                count * class.max_response,
                0.0,
            );
            index.n_up[n].push(n_up);
            index.start[n].push(start);
            index.dispatch[n].push(dispatch);
            index.response[n].push(response);
        }
        let wind_used =
            model.add_continuous(format!("wind_n{n}"), 0.0, node.wind_available.max(0.0), 0.0);
        let shed_cap = if pin_shed { 0.0 } else { node.demand.max(0.0) };
        let shed = model.add_continuous(
            format!("shed_n{n}"),
            0.0,
            shed_cap,
            pi * dt * params.voll,
        );
        index.wind_used.push(wind_used);
        index.shed.push(shed);
    }

    // Units starting generation at a node: the start decision `startup_time`
    // hours up the branch when inside the tree, otherwise the pipeline
    // constant carried in the state.
    let ancestor_at = |mut id: usize, lead: u32| -> usize {
        while tree.nodes[id].lead_time != lead {
            id = tree.nodes[id].parent.expect("lead exists on the branch");
        }
        id
    };
    let starts_generating = |node_id: usize, g: usize| -> (Option<VarId>, f64) {
        let class = &classes[g];
        let lead = tree.nodes[node_id].lead_time;
        if lead >= class.startup_time {
            let anc = ancestor_at(node_id, lead - class.startup_time);
            (Some(index.start[anc][g]), 0.0)
        } else {
            let pending = state.classes[g]
                .pending_start
                .get(lead as usize)
                .copied()
                .unwrap_or(0);
            (None, f64::from(pending))
        }
    };

    for node in tree.topological() {
        let n = node.id;

        // (b) energy balance.
        let mut balance: Vec<(VarId, f64)> = Vec::with_capacity(n_classes + 2);
        for g in 0..n_classes {
            balance.push((index.dispatch[n][g], 1.0));
        }
        balance.push((index.wind_used[n], 1.0));
        balance.push((index.shed[n], 1.0));
        model.add_constraint(format!("bal_n{n}"), balance, Relation::Eq, node.demand);

        for (g, class) in classes.iter().enumerate() {
            let n_up = index.n_up[n][g];
            let p = index.dispatch[n][g];
            let r = index.response[n][g];

            if !class.must_run {
                // (c) stable-generation floor.
                model.add_constraint(
                    format!("pmin_{}_n{n}", class.name),
                    vec![(p, 1.0), (n_up, -class.p_min_stable)],
                    Relation::Ge,
                    0.0,
                );
            }
            if class.max_response > 0.0 {
                // (c) headroom: dispatch plus response within committed rating.
                model.add_constraint(
                    format!("cap_{}_n{n}", class.name),
                    vec![(p, 1.0), (r, 1.0), (n_up, -class.p_max)],
                    Relation::Le,
                    0.0,
                );
                // (d) response within the per-unit cap.
                model.add_constraint(
                    format!("rcap_{}_n{n}", class.name),
                    vec![(r, 1.0), (n_up, -class.max_response)],
                    Relation::Le,
                    0.0,
                );
                // (d) deliverable fraction of spare headroom.
                if class.response_slope < 1.0 {
                    model.add_constraint(
                        format!("rslope_{}_n{n}", class.name),
                        vec![
                            (r, 1.0),
                            (p, class.response_slope),
                            (n_up, -class.response_slope * class.p_max),
                        ],
                        Relation::Le,
                        0.0,
                    );
                }
            } else if !class.must_run {
                // No response capability: plain dispatch ceiling.
                model.add_constraint(
                    format!("cap_{}_n{n}", class.name),
                    vec![(p, 1.0), (n_up, -class.p_max)],
                    Relation::Le,
                    0.0,
                );
            }

            if class.must_run {
                continue;
            }

            // (e) commitment continuity with stops implied non-negative:
            // N_up(n) − N_up(parent) − starts_generating(n) ≤ 0.
            let (sg_var, sg_const) = starts_generating(n, g);
            let mut stop_row: Vec<(VarId, f64)> = vec![(n_up, 1.0)];
            let mut rhs = sg_const;
            match node.parent {
                Some(par) => stop_row.push((index.n_up[par][g], -1.0)),
                None => rhs += f64::from(state.classes[g].online),
            }
            if let Some(sv) = sg_var {
                stop_row.push((sv, -1.0));
            }
            model.add_constraint(
                format!("stop_{}_n{n}", class.name),
                stop_row,
                Relation::Le,
                rhs,
            );

            // (e) minimum up: units that started generating within the
            // window are still online.
            if class.min_up_time >= 2 {
                let lead = node.lead_time;
                let from = lead.saturating_sub(class.min_up_time - 1);
                let mut row: Vec<(VarId, f64)> = vec![(n_up, 1.0)];
                let mut hist = 0.0;
                for j in from..=lead {
                    let (sv, sc) = starts_generating(ancestor_at(n, j), g);
                    hist += sc;
                    if let Some(sv) = sv {
                        row.push((sv, -1.0));
                    }
                }
                if lead < class.min_up_time - 1 {
                    let missing = (class.min_up_time - 1 - lead) as usize;
                    for i in 0..missing {
                        hist += f64::from(
                            state.classes[g].recent_started.get(i).copied().unwrap_or(0),
                        );
                    }
                }
                model.add_constraint(format!("minup_{}_n{n}", class.name), row, Relation::Ge, hist);
            }

            // (e) minimum down, telescoped into a start-sum bound:
            // N_up(window start) + Σ starts within window ≤ count − recent stops.
            if class.min_down_time >= 2 {
                let lead = node.lead_time;
                let from = lead.saturating_sub(class.min_down_time - 1);
                let mut row: Vec<(VarId, f64)> = Vec::new();
                let mut rhs = f64::from(class.unit_count);
                if from == 0 {
                    rhs -= f64::from(state.classes[g].online);
                } else {
                    row.push((index.n_up[ancestor_at(n, from - 1)][g], 1.0));
                }
                for j in from..=lead {
                    let (sv, sc) = starts_generating(ancestor_at(n, j), g);
                    rhs -= sc;
                    if let Some(sv) = sv {
                        row.push((sv, 1.0));
                    }
                }
                if lead < class.min_down_time - 1 {
                    let missing = (class.min_down_time - 1 - lead) as usize;
                    for i in 0..missing {
                        rhs -= f64::from(
                            state.classes[g].recent_stopped.get(i).copied().unwrap_or(0),
                        );
                    }
                }
                if !row.is_empty() {
                    model.add_constraint(
                        format!("mindown_{}_n{n}", class.name),
                        row,
                        Relation::Le,
                        rhs,
                    );
                }
            }
        }
    }

    // Frequency security rows. The post-fault inertia at node n is the
    // linear expression Σ_g coef_g·N_up(n,g) − loss + extra.
    let loss = config.loss_inertia();
    let extra = config.extra_inertia;
    let coefs: Vec<f64> = classes.iter().map(|c| config.inertia_coef(c)).collect();
    let mut k_star = vec![0.0; n_nodes];
    let mut cuts: Vec<NadirCutSet> = Vec::with_capacity(n_nodes);

    let rocof_floor = frequency::rocof_inertia_floor(params.p_loss_max, params.rocof_max);
    let h_max = config.system.full_commitment_inertia() + extra;
    let response_cap = config.system.total_max_response();

    // Constant security contribution of the pinned (must-run) classes, and
    // the integer knapsack structure of the free ones.
    let fixed_inertia: f64 = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.must_run)
        .map(|(g, c)| coefs[g] * f64::from(c.unit_count))
        .sum();
    let fixed_response_cap: f64 = classes
        .iter()
        .filter(|c| c.must_run)
        .map(|c| c.max_response * f64::from(c.unit_count))
        .sum();
    let fixed_capacity: f64 = classes
        .iter()
        .filter(|c| c.must_run)
        .map(|c| c.p_max * f64::from(c.unit_count))
        .sum();
    let free_classes: Vec<usize> = (0..n_classes)
        .filter(|&g| !classes[g].must_run && classes[g].unit_count > 0)
        .collect();

    for node in tree.topological() {
        let n = node.id;
        // Requirements as knapsacks over the free online counts:
        // Σ_g weight_g·N_g ≥ rhs, after folding in pinned classes.
        let mut knapsacks: Vec<(Vec<f64>, f64)> = Vec::new();

        let qss_floor_n = if config.qss_constraint {
            frequency::qss_response_floor(params, node.demand)
        } else {
            0.0
        };
        if pin_shed {
            // No slack: committed capacity net of wind and the response
            // floor must cover demand.
            knapsacks.push((
                free_classes.iter().map(|&g| classes[g].p_max).collect(),
                node.demand - node.wind_available - fixed_capacity + qss_floor_n.max(0.0),
            ));
        }

        if config.rocof_constraint {
            let row: Vec<(VarId, f64)> = (0..n_classes)
                .map(|g| (index.n_up[n][g], coefs[g]))
                .collect();
            let rhs = rocof_floor + loss - extra;
            model.add_constraint(format!("rocof_n{n}"), row, Relation::Ge, rhs);
            knapsacks.push((
                free_classes.iter().map(|&g| coefs[g]).collect(),
                rhs - fixed_inertia,
            ));
        }
        if config.qss_constraint && qss_floor_n > 0.0 {
            let row: Vec<(VarId, f64)> = (0..n_classes)
                .map(|g| (index.response[n][g], 1.0))
                .collect();
            model.add_constraint(format!("qss_n{n}"), row, Relation::Ge, qss_floor_n);
            knapsacks.push((
                free_classes
                    .iter()
                    .map(|&g| classes[g].max_response)
                    .collect(),
                qss_floor_n - fixed_response_cap,
            ));
        }
        if config.nadir_constraint {
            let k = k_cache.get(params, node.demand)?;
            k_star[n] = k;
            let mut set = if k > 0.0 {
                let h_floor = (k / response_cap.max(1e-9))
                    .max(if config.rocof_constraint { rocof_floor } else { 0.0 })
                    .max(h_max * 1e-4);
                let h_floor = if h_floor < h_max { h_floor } else { h_max * 0.5 };
                frequency::build_nadir_cuts(k, h_floor, h_max, config.n_nadir_cuts)?
            } else {
                NadirCutSet {
                    k_star: 0.0,
                    cuts: Vec::new(),
                    h_floor: h_max * 1e-4,
                }
            };
            if k > 0.0 {
                for &h in refinement_tangents {
                    if h > 0.0 {
                        set.cuts.push(NadirCut::tangent_at(k, h));
                    }
                }
            }
            for (ci, cut) in set.cuts.iter().enumerate() {
                // R + b·H ≥ a  with  H = Σ coef·N_up − loss + extra.
                let mut row: Vec<(VarId, f64)> = Vec::with_capacity(2 * n_classes);
                for g in 0..n_classes {
                    row.push((index.response[n][g], 1.0));
                }
                for g in 0..n_classes {
                    row.push((index.n_up[n][g], cut.b * coefs[g]));
                }
                let rhs = cut.a + cut.b * (loss - extra);
                model.add_constraint(format!("nadir{ci}_n{n}"), row, Relation::Ge, rhs);
                // Necessary count condition: response is capped per unit, so
                // Σ (maxresp_g + b·coef_g)·N_g must reach the cut too.
                knapsacks.push((
                    free_classes
                        .iter()
                        .map(|&g| classes[g].max_response + cut.b * coefs[g])
                        .collect(),
                    rhs - fixed_response_cap - cut.b * fixed_inertia,
                ));
            }
            cuts.push(set);
        } else {
            cuts.push(NadirCutSet {
                k_star: 0.0,
                cuts: Vec::new(),
                h_floor: 1.0,
            });
        }

        // Integer-hull strengthening of the combined security requirement.
        // With at most two free classes the exact hull of the requirement
        // staircase is a handful of facets; every row is implied for
        // integral counts, so the optimum is untouched while the relaxation
        // stops parking between integers on binding cuts.
        for (coeffs, rhs) in security_hull_facets(&knapsacks, classes, &free_classes) {
            let row: Vec<(VarId, f64)> = free_classes
                .iter()
                .zip(&coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(&g, &c)| (index.n_up[n][g], c))
                .collect();
            if !row.is_empty() {
                let j = model.num_constraints();
                model.add_constraint(format!("sechull{j}_n{n}"), row, Relation::Ge, rhs);
            }
        }
    }

    Ok(SucBuild {
        model,
        index,
        k_star,
        cuts,
    })
}

/// Exact integer hull of a set of two-variable covering knapsacks
/// `Σ w_g·N_g ≥ rhs` over the free classes' count boxes, returned as facet
/// rows `Σ c_g·N_g ≥ rhs`. Every facet is implied for integer counts, so
/// adding them never cuts a feasible commitment; it only remolds the
/// relaxation onto the integer staircase. Three or more free classes fall
/// back to no strengthening.
fn security_hull_facets(
    knapsacks: &[(Vec<f64>, f64)],
    classes: &[GeneratorClass],
    free_classes: &[usize],
) -> Vec<(Vec<f64>, f64)> {
    let live: Vec<&(Vec<f64>, f64)> = knapsacks.iter().filter(|(_, rhs)| *rhs > 1e-9).collect();
    if live.is_empty() {
        return Vec::new();
    }
    let ceil_eps = |x: f64| (x - 1e-9).ceil().max(0.0);

    match free_classes.len() {
        1 => {
            let count = f64::from(classes[free_classes[0]].unit_count);
            let mut need = 0.0_f64;
            for (w, rhs) in &live {
                if w[0] > 1e-12 {
                    need = need.max(ceil_eps(rhs / w[0]));
                }
            }
            if need > 0.0 && need <= count {
                vec![(vec![1.0], need)]
            } else {
                Vec::new()
            }
        }
        2 => {
            let count_a = i64::from(classes[free_classes[0]].unit_count);
            let count_b = i64::from(classes[free_classes[1]].unit_count);

            // Minimum first-class count per second-class column.
            let mut points: Vec<(i64, i64)> = Vec::new();
            for x in 0..=count_b {
                let mut y = 0_i64;
                let mut feasible = true;
                for (w, rhs) in &live {
                    let residual = rhs - w[1] * x as f64;
                    if residual <= 1e-9 {
                        continue;
                    }
                    if w[0] <= 1e-12 {
                        feasible = false;
                        break;
                    }
                    y = y.max(ceil_eps(residual / w[0]) as i64);
                }
                if feasible && y <= count_a {
                    points.push((x, y));
                }
            }
            let Some(&(x_min, _)) = points.first() else {
                return Vec::new(); // plain rows already make the node infeasible
            };

            let mut facets: Vec<(Vec<f64>, f64)> = Vec::new();
            if x_min > 0 {
                facets.push((vec![0.0, 1.0], x_min as f64));
            }

            // Lower convex hull of the staircase (monotone chain).
            let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| -> i64 {
                (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
            };
            let mut hull: Vec<(i64, i64)> = Vec::new();
            for &p in &points {
                while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0
                {
                    hull.pop();
                }
                hull.push(p);
            }

            if hull.len() == 1 {
                let (_, y) = hull[0];
                if y > 0 {
                    facets.push((vec![1.0, 0.0], y as f64));
                }
                return facets;
            }
            for w in hull.windows(2) {
                let (x1, y1) = w[0];
                let (x2, y2) = w[1];
                if y1 == 0 && y2 == 0 {
                    continue;
                }
                // (x2−x1)·N_a + (y1−y2)·N_b ≥ x2·y1 − x1·y2
                facets.push((
                    vec![(x2 - x1) as f64, (y1 - y2) as f64],
                    (x2 * y1 - x1 * y2) as f64,
                ));
            }
            facets
        }
        _ => Vec::new(),
    }
}

/// Reads the decision set of one node out of a solution, snapping integer
/// counts and shaving solver residue off the continuous values.
pub fn extract_point(
    build: &SucBuild,
    solution: &MilpSolution,
    node: usize,
    classes: &[GeneratorClass],
    wind_available: f64,
) -> Result<SchedulePoint, DomainError> {
    let per_class = classes
        .iter()
        .enumerate()
        .map(|(g, class)| {
            let n_up = solution.value(build.index.n_up[node][g]).round().max(0.0) as u32;
            let n_start = solution.value(build.index.start[node][g]).round().max(0.0) as u32;
            let lo = f64::from(n_up) * class.p_min_stable;
            let hi = f64::from(n_up) * class.p_max;
            let dispatch = solution
                .value(build.index.dispatch[node][g])
                .clamp(lo.min(hi), hi);
            let response = solution.value(build.index.response[node][g]).max(0.0);
            ClassDecision {
                n_up,
                n_start_gen: n_start,
                dispatch,
                response,
            }
        })
        .collect();
    let point = SchedulePoint {
        node,
        per_class,
        wind_used: solution
            .value(build.index.wind_used[node])
            .clamp(0.0, wind_available.max(0.0)),
        shed: solution.value(build.index.shed[node]).max(0.0),
    };
    point.validate(classes, wind_available)?;
    Ok(point)
}

/// Realized cost components of one schedule point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    pub startup: f64,
    pub no_load: f64,
    pub marginal: f64,
    pub emissions: f64,
    pub shed: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.startup + self.no_load + self.marginal + self.emissions + self.shed
    }

    pub fn accumulate(&mut self, other: &CostBreakdown) {
        self.startup += other.startup;
        self.no_load += other.no_load;
        self.marginal += other.marginal;
        self.emissions += other.emissions;
        self.shed += other.shed;
    }
}

/// Operating cost of one point over `dt_hours`: startup (at decision time)
/// plus time-scaled no-load, marginal energy, emissions penalty and shed
/// penalty.
pub fn node_cost(
    point: &SchedulePoint,
    classes: &[GeneratorClass],
    dt_hours: f64,
    emissions_price: f64,
    voll: f64,
) -> CostBreakdown {
    let mut cost = CostBreakdown::default();
    for (dec, class) in point.per_class.iter().zip(classes) {
        cost.startup += class.startup_cost * f64::from(dec.n_start_gen);
        cost.no_load += dt_hours * class.no_load_cost * f64::from(dec.n_up);
        cost.marginal += dt_hours * class.marginal_cost * dec.dispatch;
        cost.emissions +=
            dt_hours * emissions_price * class.emissions_rate / 1000.0 * dec.dispatch;
    }
    cost.shed = dt_hours * voll * point.shed;
    cost
}
