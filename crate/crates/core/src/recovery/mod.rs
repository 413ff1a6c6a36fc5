//! Recovering `T*` from `Y_i = ⟨T*, X_i^{⊗ℓ}⟩`.
//!
//! * [`erm_solve`] and [`null_space_witness`] work on the whole symmetric
//!   space through the design matrix.
//! * [`rank_min_als`] fits a rank-`r` factored model by alternating updates.
//! * [`uniqueness_probe`] searches for a unit-norm low-rank tensor that nearly
//!   annihilates every measurement.
//! * [`polarization_decompose`] writes any symmetric tensor as an explicit sum
//!   of signed rank-one powers.

mod als;
mod design;
mod erm;
mod polarization;
mod probe;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measurements::MeasurementSet;
use crate::symtensor::{RankOneSum, SymmetricTensor};

pub use als::{rank_min_als, AlsOptions};
pub use design::{design_matrix, DesignMatrix, MAX_DESIGN_ENTRIES};
pub use erm::{erm_solve, null_space_witness, MAX_WITNESS_COLS};
pub use polarization::polarization_decompose;
pub use probe::{uniqueness_probe, uniqueness_probe_with, ProbeOptions, ProbeResult};

/// An estimate in coefficient or factored form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Estimate {
    Coefficients(SymmetricTensor),
    Factors { d: usize, ell: u32, sum: RankOneSum },
}

impl Estimate {
    pub fn materialize(&self) -> Result<SymmetricTensor> {
        match self {
            Estimate::Coefficients(t) => Ok(t.clone()),
            Estimate::Factors { d, ell, sum } => SymmetricTensor::from_rank_one_sum_in(sum, *d, *ell),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<f64> {
        match self {
            Estimate::Coefficients(t) => t.apply(x),
            Estimate::Factors { ell, sum, .. } => Ok(sum.apply(x, *ell)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub estimate: Estimate,
    /// `max_i |⟨T̂, X_i^{⊗ℓ}⟩ − Y_i|`, recomputed from the returned estimate.
    pub residual_inf: f64,
    pub restarts_used: usize,
    /// Iterations of the selected run (0 for direct solvers).
    pub iterations: usize,
    pub converged: bool,
    /// Whether the zero-loss solution is unique (direct solvers only).
    pub unique: Option<bool>,
    /// Numerical rank of the design matrix (direct solvers only).
    pub rank: Option<usize>,
    /// Final residual of every restart, by restart index.
    pub restart_residuals: Vec<f64>,
}

/// `max(1, ‖Y‖_∞)`, the scale against which residual tolerances are applied.
pub fn label_scale(ms: &MeasurementSet) -> f64 {
    ms.y.iter().fold(1.0f64, |m, y| m.max(y.abs()))
}

pub fn residual_inf(estimate: &Estimate, ms: &MeasurementSet) -> Result<f64> {
    let mut worst = 0.0f64;
    for (x, y) in ms.x.iter().zip(&ms.y) {
        worst = worst.max((estimate.apply(x)? - y).abs());
    }
    Ok(worst)
}

/// Residual tolerance used to call a direct solve converged.
pub const DIRECT_TOL: f64 = 1e-8;

impl RecoveryResult {
    fn finish(estimate: Estimate, ms: &MeasurementSet, restarts_used: usize, iterations: usize, tol: f64) -> Self {
        let residual = residual_inf(&estimate, ms).unwrap_or(f64::INFINITY);
        let tol = if tol == 0.0 { DIRECT_TOL } else { tol };
        RecoveryResult {
            estimate,
            residual_inf: residual,
            restarts_used,
            iterations,
            converged: residual <= tol * label_scale(ms),
            unique: None,
            rank: None,
            restart_residuals: vec![residual],
        }
    }

    fn with_rank(mut self, unique: bool, rank: usize) -> Self {
        self.unique = Some(unique);
        self.rank = Some(rank);
        self
    }
}
