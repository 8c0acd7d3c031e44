use crate::error::{Error, Result};
use crate::formats::TuckerTensor;
use crate::svd::svd;
use crate::tensor::{fro_norm, mode_product, unfold, DenseTensor};

use super::ApproxReport;

/// Classical (non-sequential) HOSVD truncated to multilinear rank `rank` in
/// every mode: each factor holds the leading left singular vectors of the
/// corresponding unfolding of `t`, and the core is `t ×_s U_sᵀ`.
pub fn hosvd(t: &DenseTensor, rank: usize) -> Result<(TuckerTensor, ApproxReport)> {
    let max = t.shape().iter().copied().min().unwrap_or(0);
    if rank == 0 || rank > max {
        return Err(Error::RankOutOfRange { rank, max });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut factors = Vec::with_capacity(t.ndim());
    let mut discarded = Vec::with_capacity(t.ndim());
    for s in 0..t.ndim() {
        let full = svd(&unfold(t, s)?)?;
        discarded.push(full.sigma[rank..].iter().map(|x| x * x).sum());
        factors.push(full.truncate(rank).u);
    }
    let mut core = t.clone();
    for (s, f) in factors.iter().enumerate() {
        core = mode_product(&core, &f.transpose(), s)?;
    }
    let tucker = TuckerTensor::new(core, factors)?;
    let residual = fro_norm(&tucker.to_dense().sub(t)?);
    let report = ApproxReport {
        ranks: vec![rank; t.ndim()],
        residual,
        sweeps_used: 1,
        converged: true,
        history: Vec::new(),
        discarded,
    };
    Ok((tucker, report))
}
