//! Newton-Raphson and Nelder-Mead minimizers.
//!
//! Both minimize. Maximum-likelihood callers pass the negative log-likelihood.

mod linalg;
mod nelder_mead;
mod newton;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use linalg::Matrix;
pub use nelder_mead::{nelder_mead, NelderMeadOutcome};
pub use newton::{newton_raphson, NewtonOutcome};

use crate::error::{Error, Result};

/// Value and optional derivatives of an objective at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEvaluation {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub hessian: Option<Matrix>,
}

impl ObjectiveEvaluation {
    pub fn value(value: f64) -> Self {
        Self { value, gradient: None, hessian: None }
    }

    pub fn full(value: f64, gradient: Vec<f64>, hessian: Matrix) -> Self {
        Self { value, gradient: Some(gradient), hessian: Some(hessian) }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if let Some(g) = &self.gradient {
            if g.len() != dim {
                return Err(Error::InvalidConfig(alloc::format!(
                    "gradient has dimension {}, expected {dim}",
                    g.len()
                )));
            }
        }
        if let Some(h) = &self.hessian {
            if h.dim() != dim {
                return Err(Error::InvalidConfig(alloc::format!(
                    "hessian has dimension {}, expected {dim}",
                    h.dim()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Newton: max absolute coordinate step. Nelder-Mead: spread of vertex values.
    pub tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Relative size of the initial simplex; each coordinate is perturbed by
    /// `max(initial_scale, initial_scale * |x_i|)`.
    pub initial_scale: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-8,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_scale: 0.1,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    /// Defaults tuned for the simplex search.
    pub fn nelder_mead() -> Self {
        Self { max_iterations: 20_000, tolerance: 1e-10, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("optimizer {what}")));
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.reflection > 0.0) {
            return bad("reflection must be positive");
        }
        if !(self.expansion > 1.0 && self.expansion > self.reflection) {
            return bad("expansion must exceed 1 and the reflection coefficient");
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return bad("contraction must lie in (0, 1)");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.initial_scale > 0.0) {
            return bad("initial_scale must be positive");
        }
        Ok(())
    }
}

/// One optimizer iteration, exportable as a JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub value: f64,
    pub params: Vec<f64>,
}
