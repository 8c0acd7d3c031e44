//! Noise injection and the per-trial measurements of a filtration
//! experiment.
//!
//! A trial perturbs a low-rank truth `T` by Gaussian noise `N`, applies an
//! approximation operator `P` to `T + N` and records
//!
//! * the filtration error `ε = ‖P(T + N) − T‖_F`,
//! * the fit residual `‖P(T + N) − (T + N)‖_F`,
//! * whether the fit is at least as good as the truth (`residual ≤ ‖N‖_F`).
//!
//! When that last condition holds, `ε² ≤ 2·(P(T+N) − T, N)_F` follows by
//! expanding the squared residual; [`guarantee_bound`] checks it per trial.

use serde::{Deserialize, Serialize};

use crate::decompose::{als_cp, AlsOptions};
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{fro_norm, inner, DenseTensor};

/// Absolute slack of the fit-quality comparison.
pub const HYPOTHESIS_SLACK: f64 = 1e-12;
/// Relative slack of the derivation-chain inequality.
pub const GUARANTEE_REL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseMode {
    /// Entries are i.i.d. standard normal.
    UnitVariance,
    /// Gaussian direction rescaled so that `‖N‖_F = ratio · ‖T‖_F`.
    TargetRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub ratio: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn ratio(ratio: f64, seed: u64) -> Self {
        Self {
            mode: NoiseMode::TargetRatio,
            ratio,
            seed,
        }
    }

    pub fn unit_variance(seed: u64) -> Self {
        Self {
            mode: NoiseMode::UnitVariance,
            ratio: 0.0,
            seed,
        }
    }

    /// A ratio of exactly zero is accepted as a noiseless control.
    pub fn validate(&self) -> Result<()> {
        if self.mode == NoiseMode::TargetRatio && !(self.ratio >= 0.0 && self.ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise ratio {}",
                self.ratio
            )));
        }
        Ok(())
    }
}

/// Returns `(t + noise, noise)`.
pub fn add_noise(t: &DenseTensor, spec: &NoiseSpec) -> Result<(DenseTensor, DenseTensor)> {
    spec.validate()?;
    let mut g = rng::stream(spec.seed, rng::purpose::NOISE);
    let raw = rng::gaussian_vec(&mut g, t.len());
    let mut noise = DenseTensor::new(t.shape().to_vec(), raw)?;
    if spec.mode == NoiseMode::TargetRatio {
        let target = spec.ratio * fro_norm(t);
        let current = fro_norm(&noise);
        noise = if current > 0.0 {
            noise.scaled(target / current)
        } else {
            DenseTensor::zeros(t.shape())?
        };
    }
    let noisy = t.add(&noise)?;
    Ok((noisy, noise))
}

/// `‖approx − truth‖_F`.
pub fn filtration_error(approx: &DenseTensor, truth: &DenseTensor) -> Result<f64> {
    Ok(fro_norm(&approx.sub(truth)?))
}

/// Whether the approximation fits the noisy data at least as well as the
/// truth does.
pub fn check_hypothesis(residual: f64, noise_norm: f64) -> bool {
    residual <= noise_norm + HYPOTHESIS_SLACK
}

/// Checks `ε² ≤ 2·(approx − truth, noise)_F` on a trial where the fit
/// hypothesis holds; trials where it fails are vacuously accepted.
///
/// The tolerance is `1e-9·(ε² + ‖N‖²)` plus the square of the hypothesis
/// slack carried through the expansion.
pub fn guarantee_bound(
    approx: &DenseTensor,
    truth: &DenseTensor,
    noise: &DenseTensor,
    residual: f64,
) -> Result<bool> {
    let noise_norm = fro_norm(noise);
    if !check_hypothesis(residual, noise_norm) {
        return Ok(true);
    }
    let diff = approx.sub(truth)?;
    let eps2 = fro_norm(&diff).powi(2);
    let rhs = 2.0 * inner(&diff, noise)?;
    let carried = 2.0 * HYPOTHESIS_SLACK * noise_norm + HYPOTHESIS_SLACK * HYPOTHESIS_SLACK;
    let tol = GUARANTEE_REL_SLACK * (eps2 + noise_norm * noise_norm) + carried;
    Ok(eps2 <= rhs + tol)
}

pub const KNORM_MAX_SWEEPS: usize = 10_000;
pub const KNORM_REL_TOL: f64 = 1e-15;

/// ALS settings for [`knorm_lower_bound`]. Real noise with no best rank-2
/// approximation drives ALS through long slow stretches, so the sweep
/// budget is far above the fitting default.
pub fn knorm_options(restarts: usize, seed: u64) -> AlsOptions {
    AlsOptions {
        max_sweeps: KNORM_MAX_SWEEPS,
        rel_tol: KNORM_REL_TOL,
        restarts,
        seed,
        ..AlsOptions::default()
    }
}

/// Lower estimate of `sup (N, V)_F` over unit-norm tensors of canonical
/// rank ≤ 2, obtained as `√(‖N‖² − r²)` where `r` is the best residual of
/// rank-2 ALS over `opts.restarts` starts.
///
/// Each restart draws from its own indexed stream, so raising the restart
/// count never lowers the estimate.
pub fn knorm_lower_bound(noise: &DenseTensor, opts: &AlsOptions) -> Result<f64> {
    let (_, rep) = als_cp(noise, 2, opts)?;
    let n2 = fro_norm(noise).powi(2);
    Ok((n2 - rep.residual * rep.residual).max(0.0).sqrt())
}

/// `ε ≈ C · r^α`, fitted in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub c: f64,
    pub alpha: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared: f64,
}

impl PowerLawFit {
    pub fn eval(&self, r: f64) -> f64 {
        self.c * r.powf(self.alpha)
    }
}

/// Least-squares line through `(ln r, ln ε)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points
        .iter()
        .any(|&(r, e)| !(r > 0.0 && e > 0.0 && r.is_finite() && e.is_finite()))
    {
        return Err(Error::InvalidParameter(
            "power-law points must be positive".into(),
        ));
    }
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs 3 distinct ranks, got {}",
            distinct.len()
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - alpha * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(PowerLawFit {
        c: intercept.exp(),
        alpha,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{random_cp, CpTensor};

    #[test]
    fn target_ratio_is_exact() {
        let t = random_cp(&[4, 4, 4], 1, 1).unwrap().to_dense();
        for ratio in [0.1, 10.0] {
            let (noisy, noise) = add_noise(&t, &NoiseSpec::ratio(ratio, 5)).unwrap();
            assert!((fro_norm(&noise) / fro_norm(&t) - ratio).abs() < 1e-12);
            assert!(fro_norm(&noisy.sub(&t).unwrap().sub(&noise).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let t = DenseTensor::zeros(&[3, 3]).unwrap();
        let a = add_noise(&t, &NoiseSpec::unit_variance(9)).unwrap().1;
        let b = add_noise(&t, &NoiseSpec::unit_variance(9)).unwrap().1;
        let c = add_noise(&t, &NoiseSpec::unit_variance(10)).unwrap().1;
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(NoiseSpec::ratio(-1.0, 0).validate().is_err());
    }

    #[test]
    fn filtration_error_basics() {
        let t = random_cp(&[3, 3], 1, 2).unwrap().to_dense();
        assert_eq!(filtration_error(&t, &t).unwrap(), 0.0);
        let (noisy, noise) = add_noise(&t, &NoiseSpec::ratio(0.3, 1)).unwrap();
        assert!((filtration_error(&noisy, &t).unwrap() - fro_norm(&noise)).abs() < 1e-15);
        assert!(filtration_error(&t, &DenseTensor::zeros(&[9]).unwrap()).is_err());
    }

    #[test]
    fn hypothesis_flag() {
        assert!(check_hypothesis(0.5, 1.0));
        assert!(!check_hypothesis(1.1, 1.0));
    }

    #[test]
    fn guarantee_exact_recovery_and_vacuous_case() {
        let t = random_cp(&[3, 3, 3], 1, 2).unwrap().to_dense();
        let (_, noise) = add_noise(&t, &NoiseSpec::ratio(0.1, 1)).unwrap();
        assert!(guarantee_bound(&t, &t, &noise, fro_norm(&noise)).unwrap());
        // A far-off approximation with a failing hypothesis is vacuous.
        let far = t.scaled(-5.0);
        assert!(guarantee_bound(&far, &t, &noise, 100.0).unwrap());
    }

    #[test]
    fn knorm_of_low_rank_noise_is_its_norm() {
        let a = CpTensor::rank_one(&[vec![1.0, 2.0, 0.0], vec![0.5, -1.0], vec![1.0, 1.0, 3.0]])
            .unwrap();
        let b = CpTensor::rank_one(&[vec![0.0, 1.0, -1.0], vec![2.0, 1.0], vec![1.0, -2.0, 0.5]])
            .unwrap();
        let n = a.to_dense().add(&b.to_dense()).unwrap();
        let k = knorm_lower_bound(&n, &AlsOptions::default().with_restarts(5)).unwrap();
        assert!((k - fro_norm(&n)).abs() < 1e-8, "{k} {}", fro_norm(&n));
    }

    #[test]
    fn knorm_never_exceeds_norm_and_grows_with_restarts() {
        let t = DenseTensor::zeros(&[4, 4, 4]).unwrap();
        let (_, n) = add_noise(&t, &NoiseSpec::unit_variance(3)).unwrap();
        let mut last = 0.0;
        for restarts in [1, 2, 4] {
            let k = knorm_lower_bound(&n, &AlsOptions::default().with_restarts(restarts)).unwrap();
            assert!(k <= fro_norm(&n));
            assert!(k >= last);
            last = k;
        }
    }

    #[test]
    fn power_law_fixtures() {
        let f = fit_power_law(&[(1.0, 2.0), (2.0, 2.0 * 2f64.sqrt()), (4.0, 4.0)]).unwrap();
        assert!((f.alpha - 0.5).abs() < 1e-12 && (f.c - 2.0).abs() < 1e-12);
        let flat = fit_power_law(&[(1.0, 3.0), (2.0, 3.0), (5.0, 3.0)]).unwrap();
        assert!(flat.alpha.abs() < 1e-12);
        let lin = fit_power_law(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (8.0, 8.0)]).unwrap();
        assert!((lin.alpha - 1.0).abs() < 1e-12 && (lin.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (1.0, 2.0), (2.0, 2.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 2.0)]).is_err());
    }
}
