//! Best-first branch-and-bound on the bounded-variable simplex.
//!
//! One tableau is shared across the whole search: a popped node only swaps
//! the integer-variable bounds in and re-runs the dual simplex from the
//! inherited basis (bound changes never break dual feasibility). Node order
//! is (parent bound, insertion id), so bounds tighten reproducibly and the
//! search is deterministic. Branching picks the most fractional integer
//! variable, ties to the smallest index.

use super::simplex::{outcome_to_solution, LpOutcome, Tableau};
use super::{MilpError, MilpModel, MilpSolution, SolveStatus};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone)]
pub struct MilpOptions {
    /// Relative optimality gap proving termination.
    pub gap_tol: f64,
    /// Integer feasibility tolerance.
    pub int_tol: f64,
    /// Maximum branch nodes before returning the incumbent as `GapLimit`.
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            gap_tol: 1e-6,
            int_tol: 1e-6,
            node_limit: 20_000,
        }
    }
}

struct Node {
    bound: f64,
    depth: u32,
    id: u64,
    lowers: Box<[f64]>,
    uppers: Box<[f64]>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}

impl Ord for Node {
    // BinaryHeap is a max-heap; invert so the smallest bound pops first.
    // Ties go to the deepest node (diving), then insertion order: commitment
    // models are massively degenerate and pure bound order would otherwise
    // sweep the whole frontier before reaching any integral leaf.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| self.depth.cmp(&other.depth))
            .then_with(|| other.id.cmp(&self.id))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
}

fn fractionality(v: f64) -> f64 {
    let frac = v - v.floor();
    frac.min(1.0 - frac)
}

/// Branching variable: the first integer variable (in declaration order)
/// whose value is fractional beyond `int_tol`, with the most fractional
/// variable of that declaration block winning.
///
/// Declaration order on scheduling models follows the scenario tree from
/// the root, so bounds are pinned in decision order: fixing a commitment
/// before its descendants keeps the startup pipeline satisfiable, where
/// pure most-fractional branching routinely dives into dead ends.
fn pick_branch_var(tab: &Tableau, ints: &[usize], int_tol: f64) -> Option<(usize, f64)> {
    for &var in ints {
        let v = tab.value_of(var);
        if fractionality(v) > int_tol {
            return Some((var, v));
        }
    }
    None
}

fn snapped_values(tab: &Tableau, ints: &[usize]) -> Vec<f64> {
    let mut values = tab.structural_values();
    for &var in ints {
        values[var] = values[var].round();
    }
    values
}

pub(crate) fn branch_and_bound(
    model: &MilpModel,
    options: &MilpOptions,
) -> Result<MilpSolution, MilpError> {
    let ints = model.integer_ids();
    let mut tab = Tableau::new(model);
    let root = tab.solve_from_scratch()?;
    if root != LpOutcome::Optimal {
        return Ok(outcome_to_solution(model, &mut tab, root));
    }

    let root_bound = model.objective_value(&tab.structural_values());
    let mut incumbent: Option<Incumbent> = None;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut nodes_explored = 0usize;
    let mut hit_node_limit = false;

    let root_lowers: Vec<f64> = ints.iter().map(|&v| model.variables()[v].lower).collect();
    let root_uppers: Vec<f64> = ints.iter().map(|&v| model.variables()[v].upper).collect();

    if pick_branch_var(&tab, &ints, options.int_tol).is_none() {
        // Relaxation already integral: proven optimal with zero branch nodes.
        let values = snapped_values(&tab, &ints);
        let objective = model.objective_value(&values);
        return Ok(MilpSolution {
            status: SolveStatus::Optimal,
            objective,
            values,
            gap: 0.0,
            nodes_explored: 0,
        });
    }
    heap.push(Node {
        bound: root_bound,
        depth: 0,
        id: next_id,
        lowers: root_lowers.into_boxed_slice(),
        uppers: root_uppers.into_boxed_slice(),
    });
    next_id += 1;

    let cutoff = |inc: &Option<Incumbent>| -> f64 {
        inc.as_ref().map_or(f64::INFINITY, |i| {
            i.objective - options.gap_tol * i.objective.abs().max(1.0)
        })
    };

    'outer: while let Some(node) = heap.pop() {
        if node.bound >= cutoff(&incumbent) {
            // Best-first order: everything left is at least as weak.
            heap.push(node);
            break;
        }

        // Process the popped node, then plunge: follow one child (nearest
        // integer side) inline and push the abandoned sibling, until the
        // dive bottoms out. Incumbents surface after one dive instead of
        // after the whole frontier.
        let mut lowers = node.lowers.into_vec();
        let mut uppers = node.uppers.into_vec();
        let mut depth = node.depth;

        loop {
            if nodes_explored >= options.node_limit {
                heap.push(Node {
                    bound: node.bound,
                    depth,
                    id: next_id,
                    lowers: lowers.into_boxed_slice(),
                    uppers: uppers.into_boxed_slice(),
                });
                hit_node_limit = true;
                break 'outer;
            }
            nodes_explored += 1;

            // The shared tableau accumulates elimination error across
            // pivots; rebuild it from the model on a fixed cadence so node
            // verdicts (including infeasibility certificates) stay sound.
            let refactor = nodes_explored % 128 == 0;
            if refactor {
                tab = Tableau::new(model);
            }
            for (idx, &var) in ints.iter().enumerate() {
                tab.set_bounds(var, lowers[idx], uppers[idx]);
            }
            tab.resync();
            let solve = if refactor {
                tab.solve_from_scratch()
            } else {
                tab.reoptimize()
            };
            let outcome = match solve {
                Ok(o) => o,
                Err(_) => {
                    tab = Tableau::new(model);
                    for (idx, &var) in ints.iter().enumerate() {
                        tab.set_bounds(var, lowers[idx], uppers[idx]);
                    }
                    tab.resync();
                    tab.solve_from_scratch()?
                }
            };
            if outcome == LpOutcome::Infeasible {
                break;
            }
            let lp_obj = model.objective_value(&tab.structural_values());
            if lp_obj >= cutoff(&incumbent) {
                break;
            }

            let Some((var, value)) = pick_branch_var(&tab, &ints, options.int_tol) else {
                let values = snapped_values(&tab, &ints);
                let objective = model.objective_value(&values);
                if incumbent
                    .as_ref()
                    .map_or(true, |inc| objective < inc.objective)
                {
                    incumbent = Some(Incumbent { objective, values });
                }
                break;
            };

            // Abandoned sibling goes to the heap. The dive rounds up unless
            // the value is nearly integral: commitment-style models are
            // covering problems, so extra capacity keeps the dive feasible
            // and lands on strong incumbents, where nearest-side rounding
            // starves capacity and dead-ends.
            let idx = ints.iter().position(|&v| v == var).expect("int var");
            depth += 1;
            let follow_floor = value - value.floor() < 0.1;
            if follow_floor {
                if value.ceil() <= uppers[idx] {
                    let mut lo = lowers.clone();
                    lo[idx] = value.ceil();
                    heap.push(Node {
                        bound: lp_obj,
                        depth,
                        id: next_id,
                        lowers: lo.into_boxed_slice(),
                        uppers: uppers.clone().into_boxed_slice(),
                    });
                    next_id += 1;
                }
                uppers[idx] = value.floor();
                if lowers[idx] > uppers[idx] {
                    break;
                }
            } else {
                if value.floor() >= lowers[idx] {
                    let mut up = uppers.clone();
                    up[idx] = value.floor();
                    heap.push(Node {
                        bound: lp_obj,
                        depth,
                        id: next_id,
                        lowers: lowers.clone().into_boxed_slice(),
                        uppers: up.into_boxed_slice(),
                    });
                    next_id += 1;
                }
                lowers[idx] = value.ceil();
                if lowers[idx] > uppers[idx] {
                    break;
                }
            }
        }
    }

    let best_open = heap.peek().map(|n| n.bound);
    match incumbent {
        Some(inc) => {
            let scale = inc.objective.abs().max(1.0);
            let gap = best_open.map_or(0.0, |b| ((inc.objective - b) / scale).max(0.0));
            let status = if hit_node_limit && gap > options.gap_tol {
                SolveStatus::GapLimit
            } else {
                SolveStatus::Optimal
            };
            Ok(MilpSolution {
                status,
                objective: inc.objective,
                values: inc.values,
                gap,
                nodes_explored,
            })
        }
        None => {
            if hit_node_limit {
                Ok(MilpSolution {
                    status: SolveStatus::GapLimit,
                    objective: f64::INFINITY,
                    values: Vec::new(),
                    gap: f64::INFINITY,
                    nodes_explored,
                })
            } else {
                Ok(MilpSolution {
                    status: SolveStatus::Infeasible,
                    objective: f64::INFINITY,
                    values: Vec::new(),
                    gap: f64::INFINITY,
                    nodes_explored,
                })
            }
        }
    }
}
