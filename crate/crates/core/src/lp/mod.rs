//! Bounded-variable linear programming.
//!
//! [`LpInstance`] is a solver-agnostic description (minimize `c·v` subject to
//! sparse `≥`/`≤` rows and per-variable bounds); [`solve`] runs a two-phase
//! primal simplex on it and [`write_mps`] dumps it in fixed MPS.

mod mps;
mod simplex;

pub use mps::write_mps;
pub use simplex::solve;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    /// `a·v >= rhs`
    Ge,
    /// `a·v <= rhs`
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse coefficients `(variable, value)`, at most one entry per variable.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * v[j]).sum()
    }

    /// Amount by which `v` violates the row (0 when satisfied).
    pub fn violation(&self, v: &[f64]) -> f64 {
        let act = self.activity(v);
        match self.relation {
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Le => (act - self.rhs).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    n_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("malformed LP instance: {0}")]
    MalformedInstance(String),
}

impl LpInstance {
    /// `n_vars` variables with zero cost and bounds `[0, +inf)`.
    pub fn new(n_vars: usize) -> Self {
        LpInstance {
            n_vars,
            objective: vec![0.0; n_vars],
            constraints: Vec::new(),
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }

    /// Largest row or bound violation of the point `v`.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(v)).fold(0.0, f64::max);
        let bounds = v
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&l, &u))| (l - x).max(x - u).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let bad = |m: String| Err(LpError::MalformedInstance(m));
        if self.objective.len() != self.n_vars || self.lower.len() != self.n_vars || self.upper.len() != self.n_vars {
            return bad("vector lengths disagree with n_vars".into());
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return bad(format!("objective coefficient {j} is not finite"));
            }
        }
        for j in 0..self.n_vars {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return bad(format!("variable {j} has invalid bounds [{l}, {u}]"));
            }
            if l > u {
                return bad(format!("variable {j} has contradictory bounds [{l}, {u}]"));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return bad(format!("row {i} has non-finite rhs"));
            }
            let mut seen = std::collections::HashSet::with_capacity(row.coeffs.len());
            for &(j, a) in &row.coeffs {
                if j >= self.n_vars {
                    return bad(format!("row {i} references variable {j} >= {}", self.n_vars));
                }
                if !a.is_finite() {
                    return bad(format!("row {i} has a non-finite coefficient"));
                }
                if !seen.insert(j) {
                    return bad(format!("row {i} lists variable {j} twice"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    /// `None` means `50 * (n_vars + n_constraints)`.
    pub max_iters: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-9,
            max_iters: None,
        }
    }
}
