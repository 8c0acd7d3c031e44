//! Approximation operators onto the low-rank sets: ALS for CP, HOSVD for
//! Tucker, TT-SVD for tensor trains, and a multi-grid ALS bootstrap for
//! high-dimensional rank-one problems.

mod als;
mod hosvd;
mod multigrid;
mod tt_svd;

use serde::{Deserialize, Serialize};

pub use als::{als_cp, mttkrp, split_restart_seed};
pub use hosvd::hosvd;
pub use multigrid::{divisor_schedule, multigrid_als_rank1, split_kronecker_factor};
pub use tt_svd::tt_svd;

use crate::error::{Error, Result};
use crate::formats::CpTensor;

/// How ALS restarts are seeded.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum AlsInit {
    /// Gaussian factors with unit-norm columns.
    #[default]
    RandomGaussian,
    /// Restart 0 starts from this tensor; later restarts are Gaussian.
    Provided(CpTensor),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlsOptions {
    pub max_sweeps: usize,
    /// Stop once the relative residual change of a sweep drops below this.
    pub rel_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub init: AlsInit,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            rel_tol: 1e-8,
            restarts: 1,
            seed: 0,
            init: AlsInit::RandomGaussian,
        }
    }
}

impl AlsOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter("max_sweeps must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be > 0".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one approximation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    /// CP rank, Tucker multilinear ranks, or TT bond ranks `r_1..r_{d-1}`.
    pub ranks: Vec<usize>,
    /// `‖P(t) − t‖_F`, computed from the dense reconstruction.
    pub residual: f64,
    pub sweeps_used: usize,
    pub converged: bool,
    /// Residual after every ALS sweep of the returned restart.
    pub history: Vec<f64>,
    /// Squared discarded singular values per mode (HOSVD) or per step (TT-SVD).
    pub discarded: Vec<f64>,
}
