//! Bounded-variable dense simplex over an explicit tableau.
//!
//! Every row gets one logical variable (slack, surplus, or fixed-at-zero for
//! equalities), so the initial basis is always the logical identity.
//! Variable bounds stay outside the tableau: nonbasic variables sit at a
//! bound, the tableau only tracks `B⁻¹[A|I]`. That makes branch-and-bound
//! cheap — changing a bound never invalidates the factorization, and the
//! dual simplex restores feasibility from whatever basis is current.
//!
//! Cold solves go through dual simplex when the starting point is dual
//! feasible (always true for the all-nonnegative-cost commitment models),
//! otherwise through a piecewise phase-1 primal followed by phase 2.
//!
//! Pivot selection is Dantzig pricing with ties broken by smallest variable
//! index; sustained degeneracy switches to Bland's rule, which restores the
//! termination guarantee. Rows are pre-scaled by a power of two — exact in
//! binary floating point — and feasibility tolerances are tracked per
//! variable so that scaled logical slacks still certify the unscaled rows to
//! 1e-6.

use super::{MilpError, MilpModel, MilpSolution, Relation, SolveStatus};

const PRICE_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const PIVOT_TOL_RELAXED: f64 = 1e-11;
const SKIP_TOL: f64 = 1e-12;
const REFRESH_EVERY: usize = 256;
const STALL_LIMIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic with both bounds infinite, parked at zero.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
}

pub(crate) struct Tableau {
    m: usize,
    n_struct: usize,
    /// Total columns: structurals then one logical per row.
    n: usize,
    tab: Vec<f64>,
    rhs0: Vec<f64>,
    cost: Vec<f64>,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    /// Per-variable bound-feasibility tolerance.
    feas: Vec<f64>,
    status: Vec<Status>,
    basic_in_row: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    pivot_row_buf: Vec<f64>,
    pivots: usize,
    bland: bool,
    stall: usize,
}

impl Tableau {
    pub(crate) fn new(model: &MilpModel) -> Tableau {
        let m = model.num_constraints();
        let n_struct = model.num_variables();
        let n = n_struct + m;

        let mut tab = vec![0.0; m * n];
        let mut rhs0 = vec![0.0; m];
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut cost = vec![0.0; n];
        let mut feas = vec![0.0; n];

        for (j, v) in model.variables().iter().enumerate() {
            lower[j] = v.lower;
            upper[j] = v.upper;
            cost[j] = model.objective()[j];
            let mag = v.lower.abs().max(v.upper.abs());
            let mag = if mag.is_finite() { mag } else { 0.0 };
            feas[j] = (1e-9 * (1.0 + mag)).clamp(1e-9, 1e-6);
        }

        for (i, con) in model.constraints().iter().enumerate() {
            let maxabs = con
                .terms
                .iter()
                .map(|&(_, c)| c.abs())
                .fold(0.0_f64, f64::max)
                .clamp(1e-12, 1e12);
            // Power-of-two row scaling: exact in binary floating point.
            let scale = (-maxabs.log2().round()).exp2();
            let row = &mut tab[i * n..(i + 1) * n];
            for &(var, coef) in &con.terms {
                row[var] += coef * scale;
            }
            row[n_struct + i] = 1.0;
            rhs0[i] = con.rhs * scale;
            let logical = n_struct + i;
            // The scaled slack certifies the unscaled row to 1e-6.
            feas[logical] = (1e-6 * scale).clamp(1e-10, 1e-6);
            match con.relation {
                Relation::Le => {
                    lower[logical] = 0.0;
                    upper[logical] = f64::INFINITY;
                }
                Relation::Ge => {
                    lower[logical] = f64::NEG_INFINITY;
                    upper[logical] = 0.0;
                }
                Relation::Eq => {
                    lower[logical] = 0.0;
                    upper[logical] = 0.0;
                }
            }
        }

        let mut status = Vec::with_capacity(n);
        let mut x = vec![0.0; n];
        for j in 0..n_struct {
            if lower[j].is_finite() {
                status.push(Status::AtLower);
                x[j] = lower[j];
            } else if upper[j].is_finite() {
                status.push(Status::AtUpper);
                x[j] = upper[j];
            } else {
                status.push(Status::Free);
            }
        }
        let mut basic_in_row = Vec::with_capacity(m);
        for i in 0..m {
            status.push(Status::Basic);
            basic_in_row.push(n_struct + i);
        }

        let d = cost.clone();
        let mut t = Tableau {
            m,
            n_struct,
            n,
            tab,
            rhs0,
            cost,
            lower,
            upper,
            feas,
            status,
            basic_in_row,
            x,
            d,
            pivot_row_buf: vec![0.0; n],
            pivots: 0,
            bland: false,
            stall: 0,
        };
        t.refresh_x();
        t
    }

    /// Recomputes every basic value exactly from bounds and the current
    /// inverse: x_B = B⁻¹b − Σ_nonbasic (B⁻¹a_j)·x_j.
    fn refresh_x(&mut self) {
        for j in 0..self.n {
            match self.status[j] {
                Status::AtLower => self.x[j] = self.lower[j],
                Status::AtUpper => self.x[j] = self.upper[j],
                Status::Free => self.x[j] = 0.0,
                Status::Basic => {}
            }
        }
        for i in 0..self.m {
            let row = &self.tab[i * self.n..(i + 1) * self.n];
            let mut val = 0.0;
            for r in 0..self.m {
                let binv = row[self.n_struct + r];
                if binv != 0.0 {
                    val += binv * self.rhs0[r];
                }
            }
            for (j, &rj) in row.iter().enumerate() {
                if rj != 0.0 && self.status[j] != Status::Basic {
                    let xj = self.x[j];
                    if xj != 0.0 {
                        val -= rj * xj;
                    }
                }
            }
            self.x[self.basic_in_row[i]] = val;
        }
    }

    fn recompute_reduced_costs(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basic_in_row[i]];
            if cb != 0.0 {
                let row = &self.tab[i * self.n..(i + 1) * self.n];
                for (dj, &rj) in self.d.iter_mut().zip(row) {
                    *dj -= cb * rj;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basic_in_row[i]] = 0.0;
        }
    }

    fn is_dual_feasible(&self) -> bool {
        self.status.iter().enumerate().all(|(j, s)| match s {
            Status::AtLower => self.d[j] >= -PRICE_TOL,
            Status::AtUpper => self.d[j] <= PRICE_TOL,
            Status::Free => self.d[j].abs() <= PRICE_TOL,
            Status::Basic => true,
        })
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        self.pivot_row_buf
            .copy_from_slice(&self.tab[r * n..(r + 1) * n]);
        let piv = self.pivot_row_buf[q];
        let inv = 1.0 / piv;
        for v in self.pivot_row_buf.iter_mut() {
            *v *= inv;
        }
        self.pivot_row_buf[q] = 1.0;
        self.tab[r * n..(r + 1) * n].copy_from_slice(&self.pivot_row_buf);

        let prow = &self.pivot_row_buf;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let row = &mut self.tab[i * n..(i + 1) * n];
            let f = row[q];
            if f.abs() > SKIP_TOL {
                for (v, p) in row.iter_mut().zip(prow) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            } else if f != 0.0 {
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f.abs() > SKIP_TOL {
            for (v, p) in self.d.iter_mut().zip(prow) {
                *v -= f * p;
            }
        }
        self.d[q] = 0.0;

        self.pivots += 1;
        if self.pivots % REFRESH_EVERY == 0 {
            self.refresh_x();
        }
    }

    /// Steps the entering variable `q` by `delta`, snaps the leaving basic
    /// of row `r` onto `bound_value`, then pivots.
    fn apply_step_and_pivot(
        &mut self,
        r: usize,
        q: usize,
        delta: f64,
        bound_value: f64,
        new_status: Status,
    ) {
        if delta != 0.0 {
            for i in 0..self.m {
                let a = self.tab[i * self.n + q];
                if a != 0.0 {
                    let k = self.basic_in_row[i];
                    self.x[k] -= a * delta;
                }
            }
            self.x[q] += delta;
        }
        let leaving = self.basic_in_row[r];
        self.x[leaving] = bound_value;
        self.status[leaving] = new_status;
        self.status[q] = Status::Basic;
        self.basic_in_row[r] = q;
        self.pivot(r, q);
    }

    fn primal_simplex(&mut self) -> Result<LpOutcome, MilpError> {
        let max_iters = self.iteration_cap();
        for _ in 0..max_iters {
            let Some((q, dir)) = self.price_entering() else {
                self.refresh_x();
                return Ok(LpOutcome::Optimal);
            };
            match self.primal_ratio_and_step(q, dir, false)? {
                StepResult::Stepped => {}
                StepResult::Unbounded => return Ok(LpOutcome::Unbounded),
            }
        }
        Err(MilpError::IterationLimit)
    }

    /// Entering candidate: most violating reduced cost, smallest index on
    /// ties (first eligible under Bland). Returns the movement direction.
    fn price_entering(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n {
            let (viol, dir) = match self.status[j] {
                Status::Basic => continue,
                Status::AtLower if self.d[j] < -PRICE_TOL => (-self.d[j], 1.0),
                Status::AtUpper if self.d[j] > PRICE_TOL => (self.d[j], -1.0),
                Status::Free if self.d[j].abs() > PRICE_TOL => {
                    (self.d[j].abs(), if self.d[j] < 0.0 { 1.0 } else { -1.0 })
                }
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            match best {
                Some((_, bv, _)) if viol <= bv => {}
                _ => best = Some((j, viol, dir)),
            }
        }
        best.map(|(j, _, dir)| (j, dir))
    }

    /// Bounded ratio test and step for entering `q` moving in `dir`. In
    /// phase-1 mode a basic currently violating a bound blocks only at the
    /// violated bound (where it turns feasible and leaves).
    fn primal_ratio_and_step(
        &mut self,
        q: usize,
        dir: f64,
        phase1: bool,
    ) -> Result<StepResult, MilpError> {
        let own_range = if self.lower[q].is_finite() && self.upper[q].is_finite() {
            self.upper[q] - self.lower[q]
        } else {
            f64::INFINITY
        };

        let mut best_t = own_range;
        let mut leave: Option<(usize, f64, Status)> = None;
        let mut leave_var = usize::MAX;

        for i in 0..self.m {
            let alpha = self.tab[i * self.n + q];
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let k = self.basic_in_row[i];
            let rate = -dir * alpha; // d x_k / d t, t >= 0
            let xk = self.x[k];
            let lk = self.lower[k];
            let uk = self.upper[k];
            let fk = self.feas[k];

            let candidate: Option<(f64, f64, Status)> = if phase1 && xk < lk - fk {
                (rate > 0.0).then(|| ((lk - xk) / rate, lk, Status::AtLower))
            } else if phase1 && xk > uk + fk {
                (rate < 0.0).then(|| ((xk - uk) / -rate, uk, Status::AtUpper))
            } else if rate > 0.0 {
                uk.is_finite()
                    .then(|| (((uk - xk) / rate).max(0.0), uk, Status::AtUpper))
            } else {
                lk.is_finite()
                    .then(|| (((xk - lk) / -rate).max(0.0), lk, Status::AtLower))
            };

            if let Some((t, bound, st)) = candidate {
                let t = t.max(0.0);
                let take = t < best_t - 1e-10
                    || (t < best_t + 1e-10 && leave.is_some() && k < leave_var);
                if take {
                    best_t = t.min(best_t);
                    leave = Some((i, bound, st));
                    leave_var = k;
                }
            }
        }

        if leave.is_none() && best_t.is_infinite() {
            return Ok(StepResult::Unbounded);
        }
        self.track_stall(best_t);

        match leave {
            None => {
                // Bound flip: q runs to its opposite bound, basis unchanged.
                let delta = dir * best_t;
                for i in 0..self.m {
                    let a = self.tab[i * self.n + q];
                    if a != 0.0 {
                        let k = self.basic_in_row[i];
                        self.x[k] -= a * delta;
                    }
                }
                if dir > 0.0 {
                    self.status[q] = Status::AtUpper;
                    self.x[q] = self.upper[q];
                } else {
                    self.status[q] = Status::AtLower;
                    self.x[q] = self.lower[q];
                }
                Ok(StepResult::Stepped)
            }
            Some((r, bound, st)) => {
                self.apply_step_and_pivot(r, q, dir * best_t, bound, st);
                Ok(StepResult::Stepped)
            }
        }
    }

    fn track_stall(&mut self, step: f64) {
        if step.abs() <= 1e-10 {
            self.stall += 1;
            if self.stall > STALL_LIMIT {
                self.bland = true;
            }
        } else {
            self.stall = 0;
            self.bland = false;
        }
    }

    /// Primal phase 1: minimizes total bound violation of the basics with
    /// piecewise-linear pricing recomputed each iteration.
    fn phase1(&mut self) -> Result<LpOutcome, MilpError> {
        let max_iters = self.iteration_cap();
        let mut dw = vec![0.0; self.n];
        let mut w = vec![0.0; self.m];
        for _ in 0..max_iters {
            let mut any = false;
            for i in 0..self.m {
                let k = self.basic_in_row[i];
                w[i] = if self.x[k] < self.lower[k] - self.feas[k] {
                    any = true;
                    -1.0
                } else if self.x[k] > self.upper[k] + self.feas[k] {
                    any = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !any {
                return Ok(LpOutcome::Optimal);
            }

            dw.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..self.m {
                if w[i] != 0.0 {
                    let row = &self.tab[i * self.n..(i + 1) * self.n];
                    let wi = w[i];
                    for (dj, &rj) in dw.iter_mut().zip(row) {
                        *dj -= wi * rj;
                    }
                }
            }

            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.n {
                if self.status[j] == Status::Basic {
                    continue;
                }
                let (viol, dir) = match self.status[j] {
                    Status::AtLower if dw[j] < -PRICE_TOL => (-dw[j], 1.0),
                    Status::AtUpper if dw[j] > PRICE_TOL => (dw[j], -1.0),
                    Status::Free if dw[j].abs() > PRICE_TOL => {
                        (dw[j].abs(), if dw[j] < 0.0 { 1.0 } else { -1.0 })
                    }
                    _ => continue,
                };
                if self.bland {
                    entering = Some((j, viol, dir));
                    break;
                }
                match entering {
                    Some((_, bv, _)) if viol <= bv => {}
                    _ => entering = Some((j, viol, dir)),
                }
            }

            let Some((q, _, dir)) = entering else {
                return Ok(LpOutcome::Infeasible);
            };
            match self.primal_ratio_and_step(q, dir, true)? {
                StepResult::Stepped => {}
                StepResult::Unbounded => {
                    return Err(MilpError::Numerical("phase-1 direction unblocked".into()))
                }
            }
        }
        Err(MilpError::IterationLimit)
    }

    /// Dual simplex: keeps reduced-cost feasibility while restoring primal
    /// feasibility. Starting dual feasible rules unboundedness out, so the
    /// outcomes are optimal or infeasible.
    pub(crate) fn dual_simplex(&mut self) -> Result<LpOutcome, MilpError> {
        let max_iters = self.iteration_cap();
        for _ in 0..max_iters {
            let mut leave: Option<(usize, f64, bool)> = None; // row, violation, below?
            for i in 0..self.m {
                let k = self.basic_in_row[i];
                let xk = self.x[k];
                let (viol, below) = if xk < self.lower[k] - self.feas[k] {
                    (self.lower[k] - xk, true)
                } else if xk > self.upper[k] + self.feas[k] {
                    (xk - self.upper[k], false)
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((ri, bv, _)) => {
                        viol > bv + 1e-12
                            || ((viol - bv).abs() <= 1e-12 && k < self.basic_in_row[ri])
                    }
                };
                if better {
                    leave = Some((i, viol, below));
                }
            }
            let Some((r, _, below)) = leave else {
                self.refresh_x();
                return Ok(LpOutcome::Optimal);
            };

            let Some(q) = self.dual_entering(r, below) else {
                return Ok(LpOutcome::Infeasible);
            };

            let k = self.basic_in_row[r];
            let target = if below { self.lower[k] } else { self.upper[k] };
            let alpha = self.tab[r * self.n + q];
            let delta = (self.x[k] - target) / alpha;
            self.track_stall(delta);
            let st = if below { Status::AtLower } else { Status::AtUpper };
            self.apply_step_and_pivot(r, q, delta, target, st);
        }
        Err(MilpError::IterationLimit)
    }

    /// Dual ratio test on row `r`: min |d_j / α_rj| over sign-eligible
    /// columns; ties prefer the larger pivot, then the smaller index. A
    /// relaxed pivot floor is tried before declaring infeasibility.
    fn dual_entering(&self, r: usize, below: bool) -> Option<usize> {
        let row = &self.tab[r * self.n..(r + 1) * self.n];
        for tol in [PIVOT_TOL, PIVOT_TOL_RELAXED] {
            let mut best: Option<(usize, f64, f64)> = None; // j, ratio, |alpha|
            for (j, &alpha) in row.iter().enumerate() {
                if alpha.abs() <= tol || self.lower[j] == self.upper[j] {
                    continue;
                }
                let eligible = match self.status[j] {
                    Status::AtLower => below == (alpha < 0.0),
                    Status::AtUpper => below == (alpha > 0.0),
                    Status::Free => true,
                    Status::Basic => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / alpha.abs();
                if self.bland {
                    return Some(j);
                }
                let better = match best {
                    None => true,
                    Some((bj, br, ba)) => {
                        ratio < br - 1e-12
                            || ((ratio - br).abs() <= 1e-12
                                && (alpha.abs() > ba + 1e-12
                                    || ((alpha.abs() - ba).abs() <= 1e-12 && j < bj)))
                    }
                };
                if better {
                    best = Some((j, ratio, alpha.abs()));
                }
            }
            if let Some((j, _, _)) = best {
                return Some(j);
            }
        }
        None
    }

    /// Confirms a claimed optimum against exactly recomputed reduced costs.
    /// Incremental pivot updates of the cost row drift over long runs; a
    /// stale row can end the dual simplex at a primal-feasible but
    /// suboptimal vertex. The polish recomputes the row and, when it still
    /// prices out, re-runs the primal from the (feasible) endpoint.
    fn polish(&mut self, first: LpOutcome) -> Result<LpOutcome, MilpError> {
        let mut outcome = first;
        for _ in 0..4 {
            if outcome != LpOutcome::Optimal {
                return Ok(outcome);
            }
            self.recompute_reduced_costs();
            if self.is_dual_feasible() {
                return Ok(LpOutcome::Optimal);
            }
            outcome = self.primal_simplex()?;
        }
        Ok(outcome)
    }

    /// Re-solve after bound changes: dual simplex from the inherited basis,
    /// then the anti-drift polish. The workhorse of branch-and-bound nodes.
    pub(crate) fn reoptimize(&mut self) -> Result<LpOutcome, MilpError> {
        let outcome = self.dual_simplex()?;
        self.polish(outcome)
    }

    pub(crate) fn solve_from_scratch(&mut self) -> Result<LpOutcome, MilpError> {
        self.bland = false;
        self.stall = 0;
        if self.is_dual_feasible() {
            match self.dual_simplex() {
                Err(MilpError::IterationLimit) => {} // fall back to the primal path
                Ok(outcome) => return self.polish(outcome),
                Err(e) => return Err(e),
            }
        }
        if let LpOutcome::Infeasible = self.phase1()? {
            return Ok(LpOutcome::Infeasible);
        }
        self.recompute_reduced_costs();
        let outcome = self.primal_simplex()?;
        self.polish(outcome)
    }

    /// Re-bounds a variable in place; nonbasic variables snap to the bound
    /// they sit on. The factorization is untouched, so a dual-simplex
    /// re-solve continues from the inherited basis.
    pub(crate) fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
        match self.status[var] {
            Status::AtLower => self.x[var] = lower,
            Status::AtUpper => self.x[var] = upper,
            _ => {}
        }
    }

    pub(crate) fn resync(&mut self) {
        self.refresh_x();
        self.bland = false;
        self.stall = 0;
    }

    pub(crate) fn structural_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_struct);
        for j in 0..self.n_struct {
            let mut v = self.x[j];
            // Shave solver-tolerance residue off the bounds.
            if self.lower[j].is_finite() && v < self.lower[j] && v > self.lower[j] - 1e-6 {
                v = self.lower[j];
            }
            if self.upper[j].is_finite() && v > self.upper[j] && v < self.upper[j] + 1e-6 {
                v = self.upper[j];
            }
            out.push(v);
        }
        out
    }

    pub(crate) fn value_of(&self, var: usize) -> f64 {
        self.x[var]
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.m + self.n) + 10_000
    }
}

enum StepResult {
    Stepped,
    Unbounded,
}

pub(crate) fn outcome_to_solution(
    model: &MilpModel,
    tab: &mut Tableau,
    outcome: LpOutcome,
) -> MilpSolution {
    match outcome {
        LpOutcome::Optimal => {
            let values = tab.structural_values();
            let objective = model.objective_value(&values);
            MilpSolution {
                status: SolveStatus::Optimal,
                objective,
                values,
                gap: 0.0,
                nodes_explored: 0,
            }
        }
        LpOutcome::Infeasible => MilpSolution {
            status: SolveStatus::Infeasible,
            objective: f64::INFINITY,
            values: Vec::new(),
            gap: f64::INFINITY,
            nodes_explored: 0,
        },
        LpOutcome::Unbounded => MilpSolution {
            status: SolveStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            values: Vec::new(),
            gap: f64::INFINITY,
            nodes_explored: 0,
        },
    }
}
