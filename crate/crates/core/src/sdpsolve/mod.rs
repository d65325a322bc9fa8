//! Primal-dual interior-point solver for block SDPs with free variables.
//!
//! Problems are posed in the equality form
//!
//! ```text
//!   opt   f^T u
//!   s.t.  <A_i, X> + (F u)_i = b_i      i = 1..m
//!         X = diag(X_1, ..., X_K),  X_k PSD,  u free
//! ```
//!
//! where `opt` is min or max. Each `A_i` is a sparse symmetric matrix given by
//! its upper-triangular entries.

mod ipm;
mod preprocess;
mod sdpa;

pub use preprocess::{preprocess, PreprocessRecord};
pub use sdpa::write_sdpa;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semialg::ToleranceSet;

/// Entry `(row, col)` (and its mirror `(col, row)`) of a constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub psd: Vec<PsdEntry>,
    /// `(free variable index, coefficient)` pairs.
    pub free: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub n_free: usize,
    pub rows: Vec<ConstraintRow>,
    pub rhs: Vec<f64>,
    /// Objective weights on the free variables.
    pub objective: Vec<f64>,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
}

impl SdpProblem {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let bad = |msg: String| Err(SdpError::Malformed(msg));
        if self.rhs.len() != self.rows.len() {
            return bad(format!("{} rows but {} right-hand sides", self.rows.len(), self.rhs.len()));
        }
        if self.objective.len() != self.n_free {
            return bad(format!(
                "{} free variables but {} objective weights",
                self.n_free,
                self.objective.len()
            ));
        }
        for (i, row) in self.rows.iter().enumerate() {
            for e in &row.psd {
                let Some(&dim) = self.block_dims.get(e.block) else {
                    return bad(format!("row {i}: block {} does not exist", e.block));
                };
                if e.row > e.col || e.col >= dim {
                    return bad(format!(
                        "row {i}: entry ({}, {}) invalid for block {} of size {dim}",
                        e.row, e.col, e.block
                    ));
                }
                if !e.value.is_finite() {
                    return bad(format!("row {i}: non-finite coefficient"));
                }
            }
            for &(j, v) in &row.free {
                if j >= self.n_free || !v.is_finite() {
                    return bad(format!("row {i}: bad free-variable term ({j}, {v})"));
                }
            }
        }
        if self.rhs.iter().chain(&self.objective).any(|v| !v.is_finite()) {
            return bad("non-finite data".into());
        }
        Ok(())
    }

    /// `<A_i, X> + (F u)_i` for every row.
    pub fn apply(&self, blocks: &[DMatrix<f64>], free: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                let psd: f64 = row
                    .psd
                    .iter()
                    .map(|e| {
                        let x = blocks[e.block][(e.row, e.col)];
                        if e.row == e.col {
                            e.value * x
                        } else {
                            e.value * (x + blocks[e.block][(e.col, e.row)])
                        }
                    })
                    .sum();
                psd + row.free.iter().map(|&(j, v)| v * free[j]).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    InfeasibleDetected,
    UnboundedDetected,
    NumericalFailure,
}

impl SdpStatus {
    /// Whether the returned iterate is a meaningful approximate solution.
    pub fn has_iterate(self) -> bool {
        matches!(
            self,
            SdpStatus::Optimal | SdpStatus::MaxIterations | SdpStatus::NumericalFailure
        )
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub free_vars: Vec<f64>,
    pub block_matrices: Vec<DMatrix<f64>>,
    /// One multiplier per original row (removed rows get 0).
    pub dual_vector: Vec<f64>,
    pub dual_slacks: Vec<DMatrix<f64>>,
    /// Objective value in the problem's own sense.
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `max(<X,Z>, |pobj - dobj|) / (1 + |pobj| + |dobj|)` at the returned iterate.
    pub final_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub rows_before: usize,
    pub rows_after: usize,
}

impl SdpSolution {
    /// `<X_k, Z_k>` per block.
    pub fn complementarity(&self) -> Vec<f64> {
        self.block_matrices
            .iter()
            .zip(&self.dual_slacks)
            .map(|(x, z)| x.dot(z))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    /// Threshold on the normalised Farkas residual for infeasibility claims.
    pub infeas_tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            infeas_tol: 1e-8,
            max_iters: 200,
        }
    }
}

impl SolverOptions {
    pub fn from_tolerances(tol: &ToleranceSet, max_iters: usize) -> Self {
        SolverOptions {
            gap_tol: tol.sdp_gap,
            max_iters,
            ..SolverOptions::default()
        }
    }
}

/// Removes dependent rows, then runs the interior-point iteration.
pub fn solve(prob: &SdpProblem, tol: &ToleranceSet, max_iters: usize) -> Result<SdpSolution, SdpError> {
    solve_with(prob, &SolverOptions::from_tolerances(tol, max_iters))
}

pub fn solve_with(prob: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    prob.validate()?;
    let (reduced, record) = preprocess(prob);
    let mut sol = if record.inconsistent {
        ipm::infeasible_by_rank(&reduced)
    } else {
        ipm::run(&reduced, opts)
    };
    sol.dual_vector = record.expand_duals(&sol.dual_vector);
    sol.rows_before = record.rows_before;
    sol.rows_after = record.kept_rows.len();
    Ok(sol)
}
