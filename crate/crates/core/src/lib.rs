//! Low-rank tensor approximation and noise-filtration experiments.
//!
//! The crate covers dense tensors and a Jacobi SVD ([`tensor`], [`svd`]),
//! the CP / Tucker / tensor-train formats ([`formats`]), their approximation
//! operators ([`decompose`]), the denoising experiment engine ([`noise`],
//! [`sweep`], [`steering`]), closed-form bound evaluators ([`bounds`]) and
//! numerical witnesses for the rank-two geometry lemmas ([`theory`]).

pub mod bounds;
pub mod decompose;
pub mod error;
pub mod formats;
pub mod matrix;
pub mod noise;
pub mod rng;
pub mod steering;
pub mod svd;
pub mod sweep;
pub mod tensor;
pub mod theory;

pub use bounds::{
    calibrate_mu, empirical_rank1_bound, net_log_cardinality, rank_bound, scaled_theorem1_bound,
    theorem1_bound, theorem1_tail_probability, BoundInputs, BoundKind, BoundValue, MuCalibration,
};
pub use decompose::{
    als_cp, hosvd, multigrid_als_rank1, tt_svd, AlsInit, AlsOptions, ApproxReport,
};
pub use error::{Error, Result};
pub use formats::{
    cp_to_dense, parameter_count, random_cp, random_tt_via_ttsvd, random_tucker, tt_to_dense,
    tucker_to_dense, CpTensor, FormatKind, TtCore, TtTensor, TuckerTensor,
};
pub use matrix::Matrix;
pub use noise::{
    add_noise, check_hypothesis, filtration_error, fit_power_law, guarantee_bound,
    knorm_lower_bound, knorm_options, NoiseMode, NoiseSpec, PowerLawFit,
};
pub use steering::{
    complex_rank1_als, random_phases, rank_one_defects, steering_tensor, steering_trial,
    SteeringTrial,
};
pub use svd::{svd, truncated_svd, SvdResult};
pub use sweep::{
    admissible_dims, dimension_sweep, rank_sweep, DimensionSweep, ExperimentRecord, RankSweep,
    SweepSolver,
};
pub use tensor::{devectorize, fold, fro_norm, inner, kron, unfold, vectorize, DenseTensor};
