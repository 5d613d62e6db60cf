//! Discrete optimal transport: entropic (log-domain Sinkhorn) and exact.
//!
//! Objectives follow the relative-entropy convention
//!
//! ```text
//! W_β(μ, ν) = min_γ ⟨C, γ⟩ + β · KL(γ | μ ⊗ ν)
//! ```
//!
//! which for uniform marginals equals `⟨C, γ⟩ + β Σ γ_ij log γ_ij + β log(n_S n_T)`.
//! A `β` of exactly zero is served by the exact min-cost-flow solver on
//! instances small enough for it.

mod exact;
mod sinkhorn;

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

pub use exact::{exact_plan, exact_w1, EXACT_MAX_CELLS};
pub use sinkhorn::sinkhorn;

use crate::error::{Error, Result};
use crate::measures::CostMatrix;

/// Stopping rule and regularisation for the Sinkhorn solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Entropic regularisation strength (units of the ground cost).
    pub beta: f64,
    /// Total Sinkhorn sweeps allowed across all annealing stages.
    pub max_iterations: usize,
    /// Target L1 violation of the column marginal (rows are exact on exit).
    pub marginal_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1e-3,
            max_iterations: 10_000,
            marginal_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn with_beta(beta: f64) -> Self {
        Self {
            beta,
            ..Self::default()
        }
    }

    /// Checks the configuration for use with Sinkhorn (`beta > 0`).
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        self.validate_stopping()
    }

    fn validate_stopping(&self) -> Result<()> {
        if !(self.marginal_tolerance.is_finite() && self.marginal_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "marginal_tolerance must be positive, got {}",
                self.marginal_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Optimal coupling together with the pieces of its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub coupling: Array2<f64>,
    pub row_marginal: Array1<f64>,
    pub col_marginal: Array1<f64>,
    pub beta: f64,
    /// `Σ c_ij γ_ij`.
    pub transport_cost: f64,
    /// `β · KL(γ | μ ⊗ ν)`.
    pub entropy_term: f64,
    /// `transport_cost + entropy_term`.
    pub objective: f64,
    /// Sweeps used (0 for the exact solver).
    pub iterations: usize,
    /// L1 distance between the coupling's column sums and `col_marginal`.
    pub marginal_violation: f64,
}

impl TransportPlan {
    pub fn shape(&self) -> (usize, usize) {
        self.coupling.dim()
    }

    /// Writes `row,col,mass` lines for every cell with mass above `threshold`.
    pub fn write_csv<W: Write>(&self, out: W, threshold: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "mass"])?;
        for ((i, j), &m) in self.coupling.indexed_iter() {
            if m > threshold {
                w.write_record([i.to_string(), j.to_string(), format!("{m:e}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn check_marginals(cost: &CostMatrix, mu: ArrayView1<'_, f64>, nu: ArrayView1<'_, f64>) -> Result<()> {
    let (n, m) = cost.shape();
    if mu.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mu.len(),
        });
    }
    if nu.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: nu.len(),
        });
    }
    for (name, w) in [("mu", mu), ("nu", nu)] {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidInput(format!("{name} must be finite and nonnegative")));
        }
        let total = w.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("{name} sums to {total}, expected 1")));
        }
    }
    Ok(())
}

/// Entropic OT value and plan; `beta == 0` is routed to the exact solver.
pub fn entropic_ot(
    cost: &CostMatrix,
    mu: ArrayView1<'_, f64>,
    nu: ArrayView1<'_, f64>,
    config: &SolverConfig,
) -> Result<TransportPlan> {
    if config.beta == 0.0 {
        return exact_plan(cost, mu, nu);
    }
    sinkhorn(cost, mu, nu, config)
}
