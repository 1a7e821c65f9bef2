//! Solver-independent MILP representation with a built-in exact solver:
//! bounded-variable dense simplex for LP relaxations and best-first
//! branch-and-bound on the integer variables. Desk-scale commitment models
//! are comfortably in range; [`MilpBackend`] leaves room to swap in an
//! industrial solver for larger studies without touching call sites.
//!
//! Models are immutable once built; every solve owns private working state,
//! so separate models may be solved concurrently.

mod branch;
mod simplex;

use std::io::{self, Write};
use thiserror::Error;

pub use branch::MilpOptions;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("constraint `{constraint}` references unknown variable id {var}")]
    UnknownVariable { constraint: String, var: usize },
    #[error("NaN coefficient in {0}")]
    NanCoefficient(String),
    #[error("integer variable `{0}` must have finite bounds")]
    UnboundedInteger(String),
    #[error("variable `{0}` has empty bound interval")]
    EmptyBounds(String),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("simplex iteration limit exceeded")]
    IterationLimit,
}

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// Sparse row, one coefficient per referenced variable.
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    /// Signed violation of the row at `values` (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.evaluate(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimization model: variables with bounds, sparse linear rows, linear
/// objective.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<f64>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> VarId {
        let id = self.variables.len();
        self.variables.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
        });
        self.objective.push(objective);
        id
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> VarId {
        self.add_variable(name, VarKind::Continuous, lower, upper, objective)
    }

    pub fn add_integer(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> VarId {
        self.add_variable(name, VarKind::Integer, lower, upper, objective)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    /// Re-bounds a variable, e.g. to pin integers for enumeration or warm
    /// experiments.
    pub fn set_variable_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.variables[var].lower = lower;
        self.variables[var].upper = upper;
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn integer_ids(&self) -> Vec<VarId> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Integer)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(values)
            .map(|(c, x)| c * x)
            .sum()
    }

    /// Largest constraint violation at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.violation(values))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || self.objective[i].is_nan() {
                return Err(MilpError::NanCoefficient(format!("variable `{}`", v.name)));
            }
            if v.lower > v.upper {
                return Err(MilpError::EmptyBounds(v.name.clone()));
            }
            if v.kind == VarKind::Integer && !(v.lower.is_finite() && v.upper.is_finite()) {
                return Err(MilpError::UnboundedInteger(v.name.clone()));
            }
        }
        for c in &self.constraints {
            if c.rhs.is_nan() {
                return Err(MilpError::NanCoefficient(format!("constraint `{}`", c.name)));
            }
            for &(var, coef) in &c.terms {
                if var >= self.variables.len() {
                    return Err(MilpError::UnknownVariable {
                        constraint: c.name.clone(),
                        var,
                    });
                }
                if coef.is_nan() {
                    return Err(MilpError::NanCoefficient(format!("constraint `{}`", c.name)));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump in LP format, suitable for cross-checking against an
    /// external solver. Coefficients print with shortest round-trip
    /// precision, so parsing the dump back reproduces the model exactly.
    pub fn write_lp(&self, out: &mut impl Write) -> io::Result<()> {
        let term = |coef: f64, name: &str, first: bool| -> String {
            let sign = if coef < 0.0 {
                "- "
            } else if first {
                ""
            } else {
                "+ "
            };
            format!("{sign}{} {name}", coef.abs())
        };

        writeln!(out, "Minimize")?;
        write!(out, " obj:")?;
        let mut first = true;
        for (i, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write!(out, " {}", term(c, &self.variables[i].name, first))?;
                first = false;
            }
        }
        if first {
            write!(out, " 0 {}", self.variables.first().map_or("x0", |v| v.name.as_str()))?;
        }
        writeln!(out)?;

        writeln!(out, "Subject To")?;
        for con in &self.constraints {
            write!(out, " {}:", con.name)?;
            let mut first = true;
            for &(var, coef) in &con.terms {
                if coef != 0.0 {
                    write!(out, " {}", term(coef, &self.variables[var].name, first))?;
                    first = false;
                }
            }
            if first {
                write!(out, " 0 {}", self.variables.first().map_or("x0", |v| v.name.as_str()))?;
            }
            let rel = match con.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            writeln!(out, " {rel} {}", con.rhs)?;
        }

        writeln!(out, "Bounds")?;
        for v in &self.variables {
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) => writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper)?,
                (true, false) => writeln!(out, " {} >= {}", v.name, v.lower)?,
                (false, true) => writeln!(out, " {} <= {}", v.name, v.upper)?,
                (false, false) => writeln!(out, " {} free", v.name)?,
            }
        }

        if self.variables.iter().any(|v| v.kind == VarKind::Integer) {
            writeln!(out, "Generals")?;
            for v in &self.variables {
                if v.kind == VarKind::Integer {
                    writeln!(out, " {}", v.name)?;
                }
            }
        }
        writeln!(out, "End")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node limit hit before proving the gap; incumbent and gap reported.
    GapLimit,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Relative optimality gap proven by the search (0 for LP optima).
    pub gap: f64,
    /// Branch-and-bound nodes solved after the root relaxation.
    pub nodes_explored: usize,
}

impl MilpSolution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var]
    }

    pub fn rounded_int(&self, var: VarId) -> i64 {
        self.values[var].round() as i64
    }
}

/// Solves the LP relaxation (integrality dropped). Deterministic: identical
/// models produce identical pivot sequences and therefore identical bits.
pub fn solve_lp(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    let mut tab = simplex::Tableau::new(model);
    let outcome = tab.solve_from_scratch()?;
    Ok(simplex::outcome_to_solution(model, &mut tab, outcome))
}

/// Best-first branch-and-bound with most-fractional branching. Returns a
/// proven-optimal solution once the relative gap closes below
/// `options.gap_tol`; hitting the node limit yields `GapLimit` with the
/// incumbent.
pub fn solve_milp(model: &MilpModel, options: &MilpOptions) -> Result<MilpSolution, MilpError> {
    model.validate()?;
    branch::branch_and_bound(model, options)
}

/// Backend seam: the built-in solver implements it; an external solver can
/// be wired in behind the same contract.
pub trait MilpBackend {
    fn solve(&self, model: &MilpModel, options: &MilpOptions) -> Result<MilpSolution, MilpError>;
}

/// The built-in simplex + branch-and-bound backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinSolver;

impl MilpBackend for BuiltinSolver {
    fn solve(&self, model: &MilpModel, options: &MilpOptions) -> Result<MilpSolution, MilpError> {
        solve_milp(model, options)
    }
}

#[cfg(test)]
mod tests;
