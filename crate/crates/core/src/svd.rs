//! One-sided Jacobi SVD.
//!
//! Columns of the working matrix are rotated pairwise until every pair
//! satisfies `|a_p·a_q| ≤ 1e-12·‖a_p‖·‖a_q‖`. Singular values are the final
//! column norms. Wide inputs are handled through their transpose so the
//! rotations always act on the shorter dimension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, Matrix};

/// Off-diagonal convergence threshold of the Jacobi sweeps.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    /// `rows × k` with orthonormal columns.
    pub u: Matrix,
    /// Non-increasing, non-negative.
    pub sigma: Vec<f64>,
    /// `cols × k` with orthonormal columns.
    pub v: Matrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U·diag(σ)·Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let (m, n, k) = (self.u.rows(), self.v.rows(), self.sigma.len());
        Matrix::from_fn(m, n, |i, j| {
            (0..k)
                .map(|r| self.u[(i, r)] * self.sigma[r] * self.v[(j, r)])
                .sum()
        })
    }

    pub fn truncate(mut self, rank: usize) -> Self {
        let rank = rank.min(self.sigma.len());
        self.u = self.u.leading_columns(rank);
        self.v = self.v.leading_columns(rank);
        self.sigma.truncate(rank);
        self
    }
}

/// Thin SVD with `k = min(rows, cols)` triplets.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if a.rows() >= a.cols() {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose())?;
        Ok(SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        })
    }
}

/// Best rank-`rank` approximation factors (Eckart–Young).
pub fn truncated_svd(a: &Matrix, rank: usize) -> Result<SvdResult> {
    let max = a.rows().min(a.cols());
    if rank == 0 || rank > max {
        return Err(Error::RankOutOfRange { rank, max });
    }
    Ok(svd(a)?.truncate(rank))
}

fn jacobi_tall(a: &Matrix) -> Result<SvdResult> {
    let (m, n) = (a.rows(), a.cols());
    let mut cols = a.columns();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal singular values keep their computed order.
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if sigma[k] > smax * 1e-300 && sigma[k] > 0.0 {
            u_cols.push(cols[j].iter().map(|x| x / sigma[k]).collect());
        } else {
            u_cols.push(vec![0.0; m]);
            missing.push(k);
        }
    }
    complete_basis(&mut u_cols, &missing);
    let v_cols: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok(SvdResult {
        u: Matrix::from_columns(&u_cols)?,
        sigma,
        v: Matrix::from_columns(&v_cols)?,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to all
/// others, drawing candidates from the standard basis.
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = cols[0].len();
    let mut filled: Vec<bool> = vec![true; cols.len()];
    for &k in missing {
        filled[k] = false;
    }
    let mut candidate = 0;
    for &k in missing {
        while candidate < m {
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _pass in 0..2 {
                for (j, c) in cols.iter().enumerate() {
                    if filled[j] {
                        let proj = dot(c, &e);
                        e.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
                    }
                }
            }
            let n = norm2(&e);
            if n > 1e-8 {
                cols[k] = e.into_iter().map(|x| x / n).collect();
                filled[k] = true;
                break;
            }
        }
    }
}
