use crate::error::{Error, Result};
use crate::formats::{TtCore, TtTensor};
use crate::matrix::Matrix;
use crate::svd::svd;
use crate::tensor::{fro_norm, DenseTensor};

use super::ApproxReport;

/// TT-SVD with every bond rank capped at `rank`.
///
/// Left-to-right: reshape the remainder to `(r_{s-1}·m_s) × rest`, keep the
/// leading `min(rank, …)` singular triplets, store `U` as core `s` and carry
/// `diag(σ)·Vᵀ` forward.
pub fn tt_svd(t: &DenseTensor, rank: usize) -> Result<(TtTensor, ApproxReport)> {
    if rank == 0 {
        return Err(Error::RankOutOfRange {
            rank,
            max: usize::MAX,
        });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let shape = t.shape();
    let d = shape.len();
    let mut cores = Vec::with_capacity(d);
    let mut discarded = Vec::with_capacity(d.saturating_sub(1));
    let mut carry = t.data().to_vec();
    let mut r_prev = 1usize;
    for &m in &shape[..d - 1] {
        let rows = r_prev * m;
        let cols = carry.len() / rows;
        let full = svd(&Matrix::new(rows, cols, carry)?)?;
        let keep = rank.min(full.sigma.len());
        discarded.push(full.sigma[keep..].iter().map(|x| x * x).sum());
        let trunc = full.truncate(keep);
        cores.push(TtCore::new(r_prev, m, keep, trunc.u.into_data())?);
        carry = Vec::with_capacity(keep * cols);
        for a in 0..keep {
            carry.extend((0..cols).map(|j| trunc.sigma[a] * trunc.v[(j, a)]));
        }
        r_prev = keep;
    }
    cores.push(TtCore::new(r_prev, shape[d - 1], 1, carry)?);
    let tt = TtTensor::new(cores)?;
    let residual = fro_norm(&tt.to_dense().sub(t)?);
    let ranks = tt.ranks()[1..d].to_vec();
    let report = ApproxReport {
        ranks,
        residual,
        sweeps_used: 1,
        converged: true,
        history: Vec::new(),
        discarded,
    };
    Ok((tt, report))
}
