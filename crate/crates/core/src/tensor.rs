//! Dense tensors and the index arithmetic shared by every format.
//!
//! Entries are stored with the **last index fastest**: the multi-index
//! `(i_1, …, i_d)` lives at offset `((i_1·m_2 + i_2)·m_3 + …)·m_d + i_d`.
//! [`kron`] follows the same order, so a rank-one tensor built from factors
//! `w⁽¹⁾ … w⁽ᵈ⁾` vectorizes to `w⁽¹⁾ ⊗ … ⊗ w⁽ᵈ⁾`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape(
            "tensor needs at least one dimension".into(),
        ));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(format!(
            "zero-sized dimension in {shape:?}"
        )));
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &m| acc.checked_mul(m))
        .ok_or_else(|| Error::InvalidShape(format!("{shape:?} overflows")))
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = check_shape(&shape)?;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                len: data.len(),
                expected,
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Tensor whose entry at each multi-index is `f(index)`.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_shape(shape)?;
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, shape);
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        index.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    /// Same data viewed under another shape with the same element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), self.data.clone())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Splits the shape around `mode` into `(left, m_mode, right)` extents.
    pub(crate) fn mode_extents(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.shape[..mode].iter().product();
        let right = self.shape[mode + 1..].iter().product();
        (left, self.shape[mode], right)
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Advances a multi-index in last-index-fastest order (wraps to zero).
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

pub fn vectorize(t: &DenseTensor) -> Vec<f64> {
    t.data.clone()
}

pub fn devectorize(v: Vec<f64>, shape: &[usize]) -> Result<DenseTensor> {
    DenseTensor::new(shape.to_vec(), v)
}

/// Mode-`mode` unfolding (0-based): an `m_mode × (M/m_mode)` matrix whose
/// column index enumerates the remaining indices in their original order.
pub fn unfold(t: &DenseTensor, mode: usize) -> Result<Matrix> {
    if mode >= t.ndim() {
        return Err(Error::ModeOutOfRange {
            mode,
            ndim: t.ndim(),
        });
    }
    let (left, m, right) = t.mode_extents(mode);
    let cols = left * right;
    let mut out = vec![0.0; t.len()];
    for l in 0..left {
        for i in 0..m {
            let src = &t.data[(l * m + i) * right..(l * m + i + 1) * right];
            out[i * cols + l * right..i * cols + (l + 1) * right].copy_from_slice(src);
        }
    }
    Matrix::new(m, cols, out)
}

/// Inverse of [`unfold`].
pub fn fold(a: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    let mut t = DenseTensor::zeros(shape)?;
    if mode >= shape.len() {
        return Err(Error::ModeOutOfRange {
            mode,
            ndim: shape.len(),
        });
    }
    let (left, m, right) = t.mode_extents(mode);
    if a.rows() != m || a.cols() != left * right {
        return Err(Error::ShapeMismatch {
            left: vec![a.rows(), a.cols()],
            right: vec![m, left * right],
        });
    }
    let cols = left * right;
    let src = a.data();
    for l in 0..left {
        for i in 0..m {
            t.data[(l * m + i) * right..(l * m + i + 1) * right]
                .copy_from_slice(&src[i * cols + l * right..i * cols + (l + 1) * right]);
        }
    }
    Ok(t)
}

/// Kronecker product of vectors, first factor slowest.
pub fn kron<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>> {
    if vectors.is_empty() {
        return Err(Error::Empty("kron factor list"));
    }
    let mut acc = vec![1.0];
    for v in vectors {
        let v = v.as_ref();
        if v.is_empty() {
            return Err(Error::Empty("kron factor"));
        }
        acc = kron_pair(&acc, v);
    }
    Ok(acc)
}

pub(crate) fn kron_pair(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

/// Frobenius inner product.
pub fn inner(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(crate::matrix::dot(&a.data, &b.data))
}

pub fn fro_norm(t: &DenseTensor) -> f64 {
    crate::matrix::norm2(&t.data)
}

/// Mode product `t ×_mode a`, replacing extent `m_mode` by `a.rows()`.
pub fn mode_product(t: &DenseTensor, a: &Matrix, mode: usize) -> Result<DenseTensor> {
    if mode >= t.ndim() {
        return Err(Error::ModeOutOfRange {
            mode,
            ndim: t.ndim(),
        });
    }
    let (left, m, right) = t.mode_extents(mode);
    if a.cols() != m {
        return Err(Error::ShapeMismatch {
            left: vec![a.rows(), a.cols()],
            right: t.shape.clone(),
        });
    }
    let p = a.rows();
    let mut shape = t.shape.clone();
    shape[mode] = p;
    let mut out = DenseTensor::zeros(&shape)?;
    for l in 0..left {
        for q in 0..p {
            let dst = &mut out.data[(l * p + q) * right..(l * p + q + 1) * right];
            for i in 0..m {
                let c = a[(q, i)];
                if c == 0.0 {
                    continue;
                }
                let src = &t.data[(l * m + i) * right..(l * m + i + 1) * right];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random(shape: &[usize], seed: u64) -> DenseTensor {
        let len = shape.iter().product();
        DenseTensor::new(
            shape.to_vec(),
            rng::gaussian_vec(&mut rng::stream(seed, 0), len),
        )
        .unwrap()
    }

    #[test]
    fn vectorize_uses_last_index_fastest() {
        let t = DenseTensor::from_fn(&[2, 2], |i| [[1.0, 2.0], [3.0, 4.0]][i[0]][i[1]]).unwrap();
        assert_eq!(vectorize(&t), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            vectorize(&DenseTensor::zeros(&[2, 2, 2]).unwrap()),
            vec![0.0; 8]
        );
    }

    #[test]
    fn devectorize_round_trip() {
        let t = random(&[3, 4, 5], 1);
        assert_eq!(devectorize(vectorize(&t), &[3, 4, 5]).unwrap(), t);
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(DenseTensor::zeros(&[]).is_err());
        assert!(DenseTensor::zeros(&[2, 0]).is_err());
        assert!(matches!(
            DenseTensor::new(vec![2, 2], vec![0.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn unfold_places_entries_by_index_formula() {
        let t = DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        for mode in 0..3 {
            let u = unfold(&t, mode).unwrap();
            assert_eq!((u.rows(), u.cols()), (2, 4));
            // Enumerate every multi-index and place it independently.
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let idx = [a, b, c];
                        let rest: Vec<usize> =
                            (0..3).filter(|&k| k != mode).map(|k| idx[k]).collect();
                        let col = rest[0] * 2 + rest[1];
                        assert_eq!(u[(idx[mode], col)], t.get(&idx));
                    }
                }
            }
        }
        let u = unfold(&t, 0).unwrap();
        assert_eq!(u.row(0), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(u.row(1), &[5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn unfold_one_dimensional_is_row() {
        let t = random(&[7], 2);
        let u = unfold(&t, 0).unwrap();
        assert_eq!((u.rows(), u.cols()), (7, 1));
        assert_eq!(u.data(), t.data());
    }

    #[test]
    fn unfold_rejects_bad_mode() {
        let t = random(&[2, 3], 3);
        assert!(matches!(unfold(&t, 2), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn kron_basics() {
        assert_eq!(
            kron(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(kron(&[vec![3.0], vec![-2.0]]).unwrap(), vec![-6.0]);
        assert!(kron::<Vec<f64>>(&[]).is_err());
        assert!(kron(&[vec![1.0], vec![]]).is_err());
    }

    #[test]
    fn kron_norm_is_multiplicative() {
        let x = rng::gaussian_vec(&mut rng::stream(4, 0), 5);
        let y = rng::gaussian_vec(&mut rng::stream(4, 1), 7);
        let k = kron(&[&x, &y]).unwrap();
        let n = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((n(&k) - n(&x) * n(&y)).abs() < 1e-12 * n(&k));
    }

    #[test]
    fn inner_and_norm() {
        let a = random(&[2, 3, 4], 5);
        let b = random(&[2, 3, 4], 6);
        let mut direct = 0.0;
        let mut sq = 0.0;
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    direct += a.get(&[i, j, k]) * b.get(&[i, j, k]);
                    sq += a.get(&[i, j, k]).powi(2);
                }
            }
        }
        assert!((inner(&a, &b).unwrap() - direct).abs() < 1e-12);
        assert!((fro_norm(&a).powi(2) - sq).abs() < 1e-12);
        assert_eq!(
            inner(&a, &DenseTensor::zeros(&[2, 3, 4]).unwrap()).unwrap(),
            0.0
        );
        assert!(inner(&a, &random(&[4, 3, 2], 1)).is_err());
        let e = |k: usize| {
            let mut t = DenseTensor::zeros(&[2, 2]).unwrap();
            t.data_mut()[k] = 1.0;
            t
        };
        assert_eq!(inner(&e(1), &e(1)).unwrap(), 1.0);
        assert_eq!(inner(&e(1), &e(2)).unwrap(), 0.0);
        let single = DenseTensor::new(vec![1], vec![5.0]).unwrap();
        assert_eq!(fro_norm(&single), 5.0);
        assert_eq!(fro_norm(&DenseTensor::zeros(&[3, 3]).unwrap()), 0.0);
    }

    #[test]
    fn mode_product_matches_unfolding_product() {
        let t = random(&[3, 4, 2], 7);
        let a = Matrix::from_fn(5, 4, |i, j| (i as f64) - 0.5 * j as f64);
        let p = mode_product(&t, &a, 1).unwrap();
        let expected = a.matmul(&unfold(&t, 1).unwrap()).unwrap();
        assert_eq!(p.shape(), &[3, 5, 2]);
        assert!(unfold(&p, 1).unwrap().sub(&expected).unwrap().fro_norm() < 1e-12);
    }
}
