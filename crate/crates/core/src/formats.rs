//! Structured low-rank representations: canonical (CP), Tucker and
//! tensor-train, plus the random instance recipes used by the experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{norm2, orthonormalize_columns, Matrix};
use crate::rng;
use crate::tensor::{fro_norm, kron_pair, mode_product, DenseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormatKind {
    Canonical,
    Tucker,
    TensorTrain,
}

impl FormatKind {
    pub const ALL: [FormatKind; 3] = [
        FormatKind::Canonical,
        FormatKind::Tucker,
        FormatKind::TensorTrain,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            FormatKind::Canonical => "cp",
            FormatKind::Tucker => "tucker",
            FormatKind::TensorTrain => "tt",
        }
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for FormatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cp" | "canonical" => Ok(FormatKind::Canonical),
            "tucker" => Ok(FormatKind::Tucker),
            "tt" | "tensortrain" | "tensor-train" => Ok(FormatKind::TensorTrain),
            other => Err(Error::InvalidParameter(format!("unknown format '{other}'"))),
        }
    }
}

/// Canonical polyadic tensor `Σ_r weights[r] · a⁽¹⁾_r ⊗ … ⊗ a⁽ᵈ⁾_r`.
///
/// In normalized form every factor column has unit 2-norm and the scale
/// sits in `weights`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpTensor {
    pub factors: Vec<Matrix>,
    pub weights: Vec<f64>,
}

impl CpTensor {
    pub fn new(factors: Vec<Matrix>, weights: Vec<f64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Empty("CP factor list"));
        }
        let rank = weights.len();
        if rank == 0 {
            return Err(Error::RankOutOfRange {
                rank,
                max: usize::MAX,
            });
        }
        if let Some(f) = factors.iter().find(|f| f.cols() != rank) {
            return Err(Error::InvalidShape(format!(
                "factor with {} columns, expected {rank}",
                f.cols()
            )));
        }
        Ok(Self { factors, weights })
    }

    /// Rank-one tensor from factor vectors (normalized internally).
    pub fn rank_one(vectors: &[Vec<f64>]) -> Result<Self> {
        let mut weight = 1.0;
        let mut factors = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.is_empty() {
                return Err(Error::Empty("CP factor"));
            }
            let n = norm2(v);
            let col: Vec<f64> = if n > 0.0 {
                v.iter().map(|x| x / n).collect()
            } else {
                v.clone()
            };
            weight *= n;
            factors.push(Matrix::from_columns(&[col])?);
        }
        Self::new(factors, vec![weight])
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    /// Moves column norms into the weights.
    pub fn normalize(&mut self) {
        for r in 0..self.rank() {
            for f in &mut self.factors {
                let col = f.column(r);
                let n = norm2(&col);
                if n > 0.0 {
                    let unit: Vec<f64> = col.iter().map(|x| x / n).collect();
                    f.set_column(r, &unit);
                    self.weights[r] *= n;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DenseTensor {
        cp_to_dense(self)
    }
}

pub fn cp_to_dense(c: &CpTensor) -> DenseTensor {
    let shape = c.shape();
    let len: usize = shape.iter().product();
    let mut data = vec![0.0; len];
    for r in 0..c.rank() {
        if c.weights[r] == 0.0 {
            continue;
        }
        let mut term = vec![c.weights[r]];
        for f in &c.factors {
            term = kron_pair(&term, &f.column(r));
        }
        data.iter_mut().zip(&term).for_each(|(d, t)| *d += t);
    }
    DenseTensor::new(shape, data).expect("CP shape is validated at construction")
}

/// Tucker tensor `core ×₁ U⁽¹⁾ ×₂ … ×_d U⁽ᵈ⁾`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuckerTensor {
    pub core: DenseTensor,
    pub factors: Vec<Matrix>,
}

impl TuckerTensor {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if core.ndim() != factors.len() {
            return Err(Error::InvalidShape(format!(
                "core has {} dimensions but {} factors given",
                core.ndim(),
                factors.len()
            )));
        }
        for (s, f) in factors.iter().enumerate() {
            if f.cols() != core.shape()[s] {
                return Err(Error::ShapeMismatch {
                    left: core.shape().to_vec(),
                    right: vec![f.rows(), f.cols()],
                });
            }
        }
        Ok(Self { core, factors })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(Matrix::rows).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }

    pub fn to_dense(&self) -> DenseTensor {
        tucker_to_dense(self).expect("Tucker shapes are validated at construction")
    }
}

pub fn tucker_to_dense(t: &TuckerTensor) -> Result<DenseTensor> {
    let mut out = t.core.clone();
    for (s, f) in t.factors.iter().enumerate() {
        out = mode_product(&out, f, s)?;
    }
    Ok(out)
}

/// One tensor-train core of shape `left × mode × right`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtCore {
    pub left: usize,
    pub mode: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl TtCore {
    pub fn new(left: usize, mode: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if left == 0 || mode == 0 || right == 0 {
            return Err(Error::InvalidShape(format!(
                "TT core {left}x{mode}x{right}"
            )));
        }
        if data.len() != left * mode * right {
            return Err(Error::LengthMismatch {
                len: data.len(),
                expected: left * mode * right,
            });
        }
        Ok(Self {
            left,
            mode,
            right,
            data,
        })
    }

    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[(a * self.mode + i) * self.right + b]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtTensor {
    pub cores: Vec<TtCore>,
}

impl TtTensor {
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::Empty("TT core list"));
        }
        if cores[0].left != 1 || cores[cores.len() - 1].right != 1 {
            return Err(Error::InvalidShape("TT boundary ranks must be 1".into()));
        }
        for w in cores.windows(2) {
            if w[0].right != w[1].left {
                return Err(Error::InvalidShape(format!(
                    "TT chain mismatch: {} vs {}",
                    w[0].right, w[1].left
                )));
            }
        }
        Ok(Self { cores })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.mode).collect()
    }

    /// Bond ranks `r_0 … r_d` including the unit boundaries.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend(self.cores.iter().map(|c| c.right));
        r
    }

    pub fn to_dense(&self) -> DenseTensor {
        tt_to_dense(self)
    }
}

pub fn tt_to_dense(t: &TtTensor) -> DenseTensor {
    // acc: (prod of modes so far) × r_s, row-major.
    let mut acc = vec![1.0];
    let mut rows = 1usize;
    for core in &t.cores {
        let width = core.mode * core.right;
        let mut next = vec![0.0; rows * width];
        for row in 0..rows {
            let dst = &mut next[row * width..(row + 1) * width];
            for a in 0..core.left {
                let c = acc[row * core.left + a];
                if c == 0.0 {
                    continue;
                }
                let src = &core.data[a * width..(a + 1) * width];
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += c * s);
            }
        }
        acc = next;
        rows *= core.mode;
    }
    DenseTensor::new(t.shape(), acc).expect("TT chain is validated at construction")
}

/// Number of scalars stored by a format with uniform rank cap `rank`.
///
/// CP: `R·Σm_s`; Tucker: `R^d + R·Σm_s`; TT: `Σ r_{s-1}·m_s·r_s` where
/// interior ranks are capped at `R`.
pub fn parameter_count(kind: FormatKind, shape: &[usize], rank: usize) -> Result<u128> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::InvalidShape(format!("{shape:?}")));
    }
    if rank == 0 {
        return Err(Error::RankOutOfRange {
            rank,
            max: usize::MAX,
        });
    }
    let r = rank as u128;
    let sum: u128 = shape.iter().map(|&m| m as u128).sum();
    Ok(match kind {
        FormatKind::Canonical => r * sum,
        FormatKind::Tucker => r.pow(shape.len() as u32) + r * sum,
        FormatKind::TensorTrain => {
            let ranks = uniform_tt_ranks(shape, rank);
            shape
                .iter()
                .enumerate()
                .map(|(s, &m)| ranks[s] as u128 * m as u128 * ranks[s + 1] as u128)
                .sum()
        }
    })
}

/// TT bond ranks `r_0..r_d` under cap `rank`, limited by the unfolding sizes.
pub fn uniform_tt_ranks(shape: &[usize], rank: usize) -> Vec<usize> {
    let d = shape.len();
    let mut ranks = vec![1usize; d + 1];
    for s in 1..d {
        let left: u128 = shape[..s].iter().map(|&m| m as u128).product();
        let right: u128 = shape[s..].iter().map(|&m| m as u128).product();
        ranks[s] = (rank as u128).min(left).min(right) as usize;
    }
    ranks
}

fn gaussian_matrix(rng: &mut rand_chacha::ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, rng::gaussian_vec(rng, rows * cols)).expect("non-empty")
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    DenseTensor::zeros(shape).map(|_| ())
}

/// CP tensor with i.i.d. Gaussian factor entries, scaled to unit Frobenius norm.
pub fn random_cp(shape: &[usize], rank: usize, seed: u64) -> Result<CpTensor> {
    validate_shape(shape)?;
    let max: usize = shape.iter().product();
    if rank == 0 || rank > max {
        return Err(Error::RankOutOfRange { rank, max });
    }
    let mut rng = rng::stream(seed, rng::purpose::TRUTH);
    let factors: Vec<Matrix> = shape
        .iter()
        .map(|&m| gaussian_matrix(&mut rng, m, rank))
        .collect();
    let mut cp = CpTensor::new(factors, vec![1.0; rank])?;
    cp.normalize();
    let n = fro_norm(&cp.to_dense());
    if n == 0.0 {
        return Err(Error::InvalidParameter("degenerate random CP draw".into()));
    }
    cp.weights.iter_mut().for_each(|w| *w /= n);
    Ok(cp)
}

/// Tucker tensor with a Gaussian core and orthonormal bases of Gaussian
/// column spans, scaled to unit Frobenius norm.
pub fn random_tucker(shape: &[usize], rank: usize, seed: u64) -> Result<TuckerTensor> {
    validate_shape(shape)?;
    let max = *shape.iter().min().expect("non-empty shape");
    if rank == 0 || rank > max {
        return Err(Error::RankOutOfRange { rank, max });
    }
    let mut rng = rng::stream(seed, rng::purpose::TRUTH);
    let core_shape = vec![rank; shape.len()];
    let core_len = rank.pow(shape.len() as u32);
    let core = DenseTensor::new(core_shape, rng::gaussian_vec(&mut rng, core_len))?;
    let mut factors = Vec::with_capacity(shape.len());
    for &m in shape {
        let g = gaussian_matrix(&mut rng, m, rank);
        let q = orthonormalize_columns(&g)
            .ok_or_else(|| Error::InvalidParameter("degenerate random Tucker factor".into()))?;
        factors.push(q);
    }
    let mut t = TuckerTensor::new(core, factors)?;
    // Orthonormal factors preserve the norm, so scaling the core suffices.
    let n = fro_norm(&t.core);
    t.core = t.core.scaled(1.0 / n);
    Ok(t)
}

/// TT-SVD truncation of an i.i.d. Gaussian tensor, scaled to unit norm.
pub fn random_tt_via_ttsvd(shape: &[usize], rank: usize, seed: u64) -> Result<TtTensor> {
    validate_shape(shape)?;
    let ranks = uniform_tt_ranks(shape, usize::MAX);
    let max = ranks.iter().copied().max().unwrap_or(1);
    if rank == 0 || rank > max {
        return Err(Error::RankOutOfRange { rank, max });
    }
    let len: usize = shape.iter().product();
    let mut rng = rng::stream(seed, rng::purpose::TRUTH);
    let g = DenseTensor::new(shape.to_vec(), rng::gaussian_vec(&mut rng, len))?;
    let (mut tt, _) = crate::decompose::tt_svd(&g, rank)?;
    let n = fro_norm(&tt.to_dense());
    // The last core carries the scale after left-orthogonal sweeps.
    let last = tt.cores.len() - 1;
    tt.cores[last].data.iter_mut().for_each(|x| *x /= n);
    Ok(tt)
}
