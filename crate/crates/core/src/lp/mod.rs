//! Linear programs in inequality form and a dense simplex solver.
//!
//! Problems are stated as
//!
//! ```text
//! maximize   cᵀx
//! subject to A·x ≤ b,  lower ≤ x ≤ upper
//! ```
//!
//! where bounds may be infinite. Variables carry a [`VarRole`] so the
//! stat-arb subproblems can be dumped and checked by role.

mod simplex;
mod statarb;

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::matrix::{dot, Matrix};

pub use simplex::solve_lp;
pub use statarb::{build_fixed_band_lp, build_moving_band_lp, moving_band_residuals};

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("simplex iteration limit ({iterations}) exceeded")]
    IterationLimit { iterations: usize, last: Vec<f64> },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarRole {
    /// Share holding `s_i`.
    Holding(usize),
    /// Fixed band midpoint `μ`.
    Midpoint,
    /// Absolute-value auxiliary `u_i ≥ |s_i|`.
    AbsAux(usize),
    Generic(usize),
}

impl VarRole {
    pub fn name(&self) -> String {
        match self {
            VarRole::Holding(i) => format!("s{i}"),
            VarRole::Midpoint => "mu".to_string(),
            VarRole::AbsAux(i) => format!("u{i}"),
            VarRole::Generic(i) => format!("x{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Matrix,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub labels: Vec<VarRole>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub status: LpStatus,
}

impl LpProblem {
    /// Problem with free variables labelled `x0, x1, ...`.
    pub fn new(objective: Vec<f64>, constraints: Matrix, rhs: Vec<f64>) -> Result<Self, LpError> {
        let m = objective.len();
        let p = Self {
            lower: vec![f64::NEG_INFINITY; m],
            upper: vec![f64::INFINITY; m],
            labels: (0..m).map(VarRole::Generic).collect(),
            objective,
            constraints,
            rhs,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, LpError> {
        self.lower = lower;
        self.upper = upper;
        self.validate()?;
        Ok(self)
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let m = self.n_vars();
        let bad = |msg: String| Err(LpError::Malformed(msg));
        if m == 0 || self.n_rows() == 0 {
            return bad("need at least one variable and one row".into());
        }
        if self.constraints.ncols() != m || self.constraints.nrows() != self.n_rows() {
            return bad(format!(
                "constraint matrix is {}x{}, expected {}x{}",
                self.constraints.nrows(),
                self.constraints.ncols(),
                self.n_rows(),
                m
            ));
        }
        if self.lower.len() != m || self.upper.len() != m || self.labels.len() != m {
            return bad("bounds/labels length mismatch".into());
        }
        if self
            .objective
            .iter()
            .chain(&self.rhs)
            .any(|v| !v.is_finite())
            || self.constraints.as_slice().iter().any(|v| !v.is_finite())
        {
            return bad("non-finite coefficient".into());
        }
        for j in 0..m {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return bad(format!("invalid bounds on {}", self.labels[j].name()));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return bad(format!("invalid bounds on {}", self.labels[j].name()));
            }
        }
        // every |s_i| auxiliary needs u_i - s_i <= 0 and u_i + s_i >= 0 rows
        for (j, role) in self.labels.iter().enumerate() {
            if let VarRole::AbsAux(i) = role {
                let Some(sj) = self.labels.iter().position(|r| *r == VarRole::Holding(*i)) else {
                    return bad(format!("u{i} has no matching s{i}"));
                };
                let has_row = |sign: f64| {
                    (0..self.n_rows()).any(|r| {
                        let row = self.constraints.row(r);
                        row[j] == -1.0
                            && row[sj] == sign
                            && self.rhs[r] == 0.0
                            && row
                                .iter()
                                .enumerate()
                                .all(|(c, &v)| c == j || c == sj || v == 0.0)
                    })
                };
                if !has_row(1.0) || !has_row(-1.0) {
                    return bad(format!("missing absolute-value rows for u{i}"));
                }
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = (0..self.n_rows())
            .map(|r| dot(self.constraints.row(r), x) - self.rhs[r])
            .fold(0.0_f64, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi))
            .fold(0.0_f64, f64::max);
        rows.max(bounds)
    }

    /// Diagnostic dump in LP-style rows. Not a stable format.
    pub fn to_lp_text(&self) -> String {
        let names: Vec<String> = self.labels.iter().map(VarRole::name).collect();
        let mut out = String::from("max:");
        for (c, name) in self.objective.iter().zip(&names) {
            if *c != 0.0 {
                let _ = write!(out, " {c:+}*{name}");
            }
        }
        out.push('\n');
        for r in 0..self.n_rows() {
            let mut line = String::new();
            for (a, name) in self.constraints.row(r).iter().zip(&names) {
                if *a != 0.0 {
                    let _ = write!(line, "{a:+}*{name} ");
                }
            }
            if line.is_empty() {
                line.push_str("0 ");
            }
            let _ = writeln!(out, "{line}<= {}", self.rhs[r]);
        }
        for (j, name) in names.iter().enumerate() {
            if self.lower[j].is_finite() {
                let _ = writeln!(out, "{name} >= {}", self.lower[j]);
            }
            if self.upper[j].is_finite() {
                let _ = writeln!(out, "{name} <= {}", self.upper[j]);
            }
        }
        out
    }

    pub fn write_lp(&self, path: impl AsRef<Path>) -> Result<(), LpError> {
        std::fs::write(path, self.to_lp_text())?;
        Ok(())
    }
}
