//! Tensorized steering vectors `h(φ) = [1, e^{iφ}, e^{2iφ}, …]`.
//!
//! Any reshape of `h` is a complex rank-one tensor: with last-index-fastest
//! linearization, `h = ⊗_s [e^{i·j·stride_s·φ}]_j`. Complex data crosses the
//! public API as a pair of real tensors; rank checks go through the real
//! block embedding `[[X, −Y], [Y, X]]` of each complex unfolding, whose
//! singular values are those of `X + iY`, each repeated twice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decompose::{AlsOptions, ApproxReport};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::svd::svd;
use crate::tensor::{strides, unfold, DenseTensor};

/// Real and imaginary parts of `h(φ)` of length `elements`, reshaped to
/// `shape`.
pub fn steering_tensor(
    phi: f64,
    elements: usize,
    shape: &[usize],
) -> Result<(DenseTensor, DenseTensor)> {
    if !phi.is_finite() {
        return Err(Error::NonFinite);
    }
    let product: usize = shape.iter().product();
    if shape.is_empty() || product != elements {
        return Err(Error::InvalidShape(format!(
            "shape {shape:?} does not hold {elements} elements"
        )));
    }
    let re = (0..elements).map(|k| (k as f64 * phi).cos()).collect();
    let im = (0..elements).map(|k| (k as f64 * phi).sin()).collect();
    Ok((
        DenseTensor::new(shape.to_vec(), re)?,
        DenseTensor::new(shape.to_vec(), im)?,
    ))
}

fn check_pair(re: &DenseTensor, im: &DenseTensor) -> Result<()> {
    if re.shape() != im.shape() {
        return Err(Error::ShapeMismatch {
            left: re.shape().to_vec(),
            right: im.shape().to_vec(),
        });
    }
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Singular values of the complex mode-`mode` unfolding of `re + i·im`,
/// read off the real block embedding.
pub fn complex_unfolding_singular_values(
    re: &DenseTensor,
    im: &DenseTensor,
    mode: usize,
) -> Result<Vec<f64>> {
    check_pair(re, im)?;
    let x = unfold(re, mode)?;
    let y = unfold(im, mode)?;
    let (r, c) = (x.rows(), x.cols());
    let block = Matrix::from_fn(2 * r, 2 * c, |i, j| {
        let (bi, ii) = (i / r, i % r);
        let (bj, jj) = (j / c, j % c);
        match (bi, bj) {
            (0, 0) | (1, 1) => x[(ii, jj)],
            (0, 1) => -y[(ii, jj)],
            _ => y[(ii, jj)],
        }
    });
    let s = svd(&block)?;
    Ok(s.sigma.iter().step_by(2).copied().collect())
}

/// Second complex singular value of every mode unfolding (zero for an
/// exactly rank-one tensor).
pub fn rank_one_defects(re: &DenseTensor, im: &DenseTensor) -> Result<Vec<f64>> {
    (0..re.ndim())
        .map(|mode| {
            let s = complex_unfolding_singular_values(re, im, mode)?;
            Ok(s.get(1).copied().unwrap_or(0.0))
        })
        .collect()
}

fn to_complex(re: &DenseTensor, im: &DenseTensor) -> Vec<Complex64> {
    re.data()
        .iter()
        .zip(im.data())
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect()
}

fn complex_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn complex_kron(vectors: &[Vec<Complex64>]) -> Vec<Complex64> {
    vectors
        .iter()
        .fold(vec![Complex64::new(1.0, 0.0)], |acc, v| {
            let mut out = Vec::with_capacity(acc.len() * v.len());
            for a in &acc {
                out.extend(v.iter().map(|b| a * b));
            }
            out
        })
}

/// Complex rank-one CP approximation `λ·⊗_s u_s` with unit `u_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRankOne {
    pub weight: f64,
    pub factors: Vec<Vec<Complex64>>,
}

impl ComplexRankOne {
    /// Real and imaginary parts of the dense reconstruction.
    pub fn to_pair(&self) -> (DenseTensor, DenseTensor) {
        let shape: Vec<usize> = self.factors.iter().map(Vec::len).collect();
        let v = complex_kron(&self.factors);
        let re = v.iter().map(|z| self.weight * z.re).collect();
        let im = v.iter().map(|z| self.weight * z.im).collect();
        (
            DenseTensor::new(shape.clone(), re).expect("factor lengths"),
            DenseTensor::new(shape, im).expect("factor lengths"),
        )
    }
}

fn contract_except(
    t: &[Complex64],
    shape: &[usize],
    factors: &[Vec<Complex64>],
    mode: usize,
) -> Vec<Complex64> {
    let st = strides(shape);
    let m = shape[mode];
    let right = st[mode];
    let left = t.len() / (m * right);
    let lk = complex_kron(&factors[..mode]);
    let rk = complex_kron(&factors[mode + 1..]);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for l in 0..left {
        let lc = lk[l].conj();
        for (i, o) in out.iter_mut().enumerate() {
            let base = (l * m + i) * right;
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, r) in t[base..base + right].iter().zip(&rk) {
                acc += x * r.conj();
            }
            *o += lc * acc;
        }
    }
    out
}

/// Complex rank-one ALS on `re + i·im`: best of `opts.restarts` random
/// complex Gaussian starts, stopping on `opts.rel_tol` relative residual
/// change or `opts.max_sweeps`.
pub fn complex_rank1_als(
    re: &DenseTensor,
    im: &DenseTensor,
    opts: &AlsOptions,
) -> Result<(ComplexRankOne, ApproxReport)> {
    check_pair(re, im)?;
    opts.validate()?;
    let shape = re.shape().to_vec();
    let t = to_complex(re, im);
    let norm_t = complex_norm(&t);
    let mut best: Option<(ComplexRankOne, ApproxReport)> = None;
    for restart in 0..opts.restarts {
        let mut g = rng::stream(
            rng::trial_seed(opts.seed, restart as u64),
            rng::purpose::SOLVER,
        );
        let mut factors: Vec<Vec<Complex64>> = shape
            .iter()
            .map(|&m| {
                let v: Vec<Complex64> = (0..m)
                    .map(|_| Complex64::new(rng::gaussian(&mut g), rng::gaussian(&mut g)))
                    .collect();
                let n = complex_norm(&v);
                v.into_iter().map(|z| z / n).collect()
            })
            .collect();
        let mut weight = 0.0;
        let mut history = Vec::new();
        let mut prev = f64::INFINITY;
        let mut converged = false;
        for _ in 0..opts.max_sweeps {
            for s in 0..shape.len() {
                let u = contract_except(&t, &shape, &factors, s);
                let n = complex_norm(&u);
                weight = n;
                if n > 0.0 {
                    factors[s] = u.into_iter().map(|z| z / n).collect();
                }
            }
            let approx = complex_kron(&factors);
            let residual = t
                .iter()
                .zip(&approx)
                .map(|(x, a)| (x - a * weight).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if !residual.is_finite() {
                return Err(Error::NonFinite);
            }
            history.push(residual);
            if residual <= 1e-15 * norm_t
                || (prev.is_finite() && (prev - residual).abs() <= opts.rel_tol * prev)
            {
                converged = true;
                break;
            }
            prev = residual;
        }
        let report = ApproxReport {
            ranks: vec![1],
            residual: *history.last().expect("max_sweeps >= 1"),
            sweeps_used: history.len(),
            converged,
            history,
            discarded: Vec::new(),
        };
        if best
            .as_ref()
            .map_or(true, |(_, b)| report.residual < b.residual)
        {
            best = Some((ComplexRankOne { weight, factors }, report));
        }
    }
    Ok(best.expect("restarts >= 1"))
}

/// `count` phases uniform on `[0, 2π)`, phase `k` drawn from trial seed `k`.
pub fn random_phases(count: usize, seed: u64) -> Vec<f64> {
    (0..count as u64)
        .map(|k| {
            let mut g = rng::stream(rng::trial_seed(seed, k), rng::purpose::TRUTH);
            std::f64::consts::TAU * rng::uniform(&mut g)
        })
        .collect()
}

/// One steering-vector denoising trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringTrial {
    pub phi: f64,
    pub shape: Vec<usize>,
    pub seed: u64,
    pub noise_ratio: f64,
    /// Largest second complex singular value over all mode unfoldings of the
    /// clean tensor.
    pub rank_defect: f64,
    pub epsilon: f64,
    pub noise_norm: f64,
    pub residual: f64,
}

/// Tensorizes `h(φ)` to `shape`, adds complex Gaussian noise with
/// `‖N‖ = ratio·‖h‖` drawn from `seed`, and recovers it by complex rank-one
/// ALS.
pub fn steering_trial(
    phi: f64,
    shape: &[usize],
    ratio: f64,
    seed: u64,
    opts: &AlsOptions,
) -> Result<SteeringTrial> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise ratio {ratio}")));
    }
    let elements: usize = shape.iter().product();
    let (re, im) = steering_tensor(phi, elements, shape)?;
    let rank_defect = rank_one_defects(&re, &im)?.into_iter().fold(0.0, f64::max);
    let mut g = rng::stream(seed, rng::purpose::NOISE);
    let raw = rng::gaussian_vec(&mut g, 2 * elements);
    let raw_norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    let truth_norm = (elements as f64).sqrt();
    let scale = if raw_norm > 0.0 {
        ratio * truth_norm / raw_norm
    } else {
        0.0
    };
    let noise: Vec<f64> = raw.iter().map(|x| x * scale).collect();
    let noise_norm = noise.iter().map(|x| x * x).sum::<f64>().sqrt();
    let noisy_re = DenseTensor::new(
        shape.to_vec(),
        re.data()
            .iter()
            .zip(&noise[..elements])
            .map(|(a, b)| a + b)
            .collect(),
    )?;
    let noisy_im = DenseTensor::new(
        shape.to_vec(),
        im.data()
            .iter()
            .zip(&noise[elements..])
            .map(|(a, b)| a + b)
            .collect(),
    )?;
    let solver_opts = opts
        .clone()
        .with_seed(rng::trial_seed(seed, rng::purpose::SOLVER));
    let (fit, report) = complex_rank1_als(&noisy_re, &noisy_im, &solver_opts)?;
    let (are, aim) = fit.to_pair();
    let epsilon = are
        .data()
        .iter()
        .zip(aim.data())
        .zip(re.data().iter().zip(im.data()))
        .map(|((a, b), (x, y))| (a - x).powi(2) + (b - y).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(SteeringTrial {
        phi,
        shape: shape.to_vec(),
        seed,
        noise_ratio: ratio,
        rank_defect,
        epsilon,
        noise_norm,
        residual: report.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_angle_is_all_ones() {
        let (re, im) = steering_tensor(0.0, 16, &[4, 4]).unwrap();
        assert!(re.data().iter().all(|&x| x == 1.0));
        assert!(im.data().iter().all(|&x| x == 0.0));
        assert!(rank_one_defects(&re, &im)
            .unwrap()
            .iter()
            .all(|&s| s <= 1e-12));
    }

    #[test]
    fn matrix_tensorization_is_rank_one() {
        for phi in [0.3, 1.7, -2.9] {
            let (re, im) = steering_tensor(phi, 64, &[8, 8]).unwrap();
            let s = complex_unfolding_singular_values(&re, &im, 0).unwrap();
            assert!((s[0] - 8.0).abs() < 1e-10);
            assert!(s[1] <= 1e-10);
        }
    }

    #[test]
    fn generic_complex_matrix_is_not_flagged() {
        let re = DenseTensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let im = DenseTensor::new(vec![2, 2], vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(rank_one_defects(&re, &im).unwrap()[0] > 0.1);
    }

    #[test]
    fn shape_must_match_length() {
        assert!(steering_tensor(0.1, 16, &[4, 3]).is_err());
        assert!(steering_tensor(f64::NAN, 16, &[4, 4]).is_err());
    }

    #[test]
    fn noiseless_recovery_is_exact() {
        let t = steering_trial(0.8, &[4, 4, 4], 0.0, 5, &AlsOptions::default()).unwrap();
        assert!(t.epsilon < 1e-8, "{t:?}");
    }

    #[test]
    fn noisy_recovery_filters() {
        let t = steering_trial(1.1, &[4, 4, 4, 4], 0.1, 9, &AlsOptions::default()).unwrap();
        assert!((t.noise_norm - 0.1 * 16.0).abs() < 1e-12);
        assert!(t.epsilon < t.noise_norm);
        assert!(t.residual <= t.noise_norm);
    }
}
