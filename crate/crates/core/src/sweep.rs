//! Experiment drivers: rank-one dimension sweeps at fixed element count and
//! rank sweeps per format.
//!
//! Trials run on the ambient rayon pool and are collected in trial order.
//! Trials that share a seed index share their random streams across
//! configuration points (paired design): seed index `s` uses
//! `rng::trial_seed(master_seed, s)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{als_cp, divisor_schedule, hosvd, multigrid_als_rank1, tt_svd, AlsOptions};
use crate::error::{Error, Result};
use crate::formats::{random_cp, random_tt_via_ttsvd, random_tucker, FormatKind};
use crate::noise::{
    add_noise, check_hypothesis, filtration_error, fit_power_law, guarantee_bound,
    knorm_lower_bound, knorm_options, NoiseSpec, PowerLawFit,
};
use crate::rng;
use crate::tensor::{fro_norm, DenseTensor};

/// One denoising trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub trial: u64,
    pub format: FormatKind,
    pub shape: Vec<usize>,
    pub rank: usize,
    pub seed: u64,
    pub noise_ratio: f64,
    pub solver: String,
    /// `‖P(T + N) − T‖_F`.
    pub epsilon: f64,
    pub noise_norm: f64,
    /// `‖P(T + N) − (T + N)‖_F`.
    pub residual: f64,
    pub hypothesis_holds: bool,
    pub guarantee_holds: bool,
    /// Rank-two restricted-norm estimate of the noise, when requested.
    pub knorm: Option<f64>,
    /// Seconds spent in the trial. Excluded from determinism comparisons.
    pub wall_time: f64,
}

impl ExperimentRecord {
    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn elements(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Dimensions `d ≥ 2` with `d | m_exponent`, i.e. the uniform shapes
/// `[2^(m_exponent/d); d]` holding `2^m_exponent` elements.
pub fn admissible_dims(m_exponent: u32) -> Vec<usize> {
    (2..=m_exponent as usize)
        .filter(|d| m_exponent as usize % d == 0)
        .collect()
}

/// Rank-one solver used by [`dimension_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SweepSolver {
    /// Plain ALS from a random start.
    Als,
    /// Multi-grid bootstrap wherever `d` admits a coarser chain.
    Multigrid,
    /// Plain ALS; when its residual exceeds the noise norm and `d` admits a
    /// chain, the multi-grid result replaces it if it fits better.
    #[default]
    Fallback,
}

impl std::str::FromStr for SweepSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "als" => Ok(Self::Als),
            "multigrid" => Ok(Self::Multigrid),
            "fallback" => Ok(Self::Fallback),
            other => Err(Error::InvalidParameter(format!("unknown solver {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DimensionSweep {
    /// Total element count is `2^m_exponent`.
    pub m_exponent: u32,
    pub dims: Vec<usize>,
    pub ratios: Vec<f64>,
    pub seeds: usize,
    pub master_seed: u64,
    pub als: AlsOptions,
    pub solver: SweepSolver,
    /// Restarts of the rank-two noise estimate; `None` skips it.
    pub knorm_restarts: Option<usize>,
}

impl DimensionSweep {
    pub fn new(m_exponent: u32, ratios: Vec<f64>, seeds: usize) -> Self {
        Self {
            m_exponent,
            dims: admissible_dims(m_exponent),
            ratios,
            seeds,
            master_seed: 0,
            als: AlsOptions::default(),
            solver: SweepSolver::default(),
            knorm_restarts: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m_exponent == 0 || self.m_exponent > 40 {
            return Err(Error::InvalidParameter(format!(
                "m_exponent {}",
                self.m_exponent
            )));
        }
        for &d in &self.dims {
            if d == 0 || self.m_exponent as usize % d != 0 {
                return Err(Error::InvalidShape(format!(
                    "d = {d} does not divide the exponent {}",
                    self.m_exponent
                )));
            }
        }
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("seed count must be >= 1".into()));
        }
        for &r in &self.ratios {
            NoiseSpec::ratio(r, 0).validate()?;
        }
        self.als.validate()
    }
}

struct Measured {
    epsilon: f64,
    noise_norm: f64,
    residual: f64,
    hypothesis: bool,
    guarantee: bool,
}

fn measure(
    truth: &DenseTensor,
    noise: &DenseTensor,
    approx: &DenseTensor,
    residual: f64,
) -> Result<Measured> {
    let noise_norm = fro_norm(noise);
    Ok(Measured {
        epsilon: filtration_error(approx, truth)?,
        noise_norm,
        residual,
        hypothesis: check_hypothesis(residual, noise_norm),
        guarantee: guarantee_bound(approx, truth, noise, residual)?,
    })
}

/// Rank-one filtration error across dimensionalities at fixed element count.
pub fn dimension_sweep(cfg: &DimensionSweep) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &d in &cfg.dims {
        for &ratio in &cfg.ratios {
            for s in 0..cfg.seeds {
                jobs.push((jobs.len() as u64, d, ratio, s as u64));
            }
        }
    }
    jobs.par_iter()
        .map(|&(trial, d, ratio, s)| {
            let start = Instant::now();
            let m = 1usize << (cfg.m_exponent as usize / d);
            let shape = vec![m; d];
            let seed = rng::trial_seed(cfg.master_seed, s);
            let truth = random_cp(&shape, 1, seed)?.to_dense();
            let (noisy, noise) = add_noise(&truth, &NoiseSpec::ratio(ratio, seed))?;
            let opts = cfg
                .als
                .clone()
                .with_seed(rng::trial_seed(seed, rng::purpose::SOLVER));
            let schedule = divisor_schedule(d);
            let chain = schedule.len() > 1;
            let (cp, rep, solver) = match cfg.solver {
                SweepSolver::Multigrid if chain => {
                    let (cp, rep) = multigrid_als_rank1(&noisy, &schedule, &opts)?;
                    (cp, rep, "multigrid-als")
                }
                _ => {
                    let (cp, rep) = als_cp(&noisy, 1, &opts)?;
                    let retry = cfg.solver == SweepSolver::Fallback
                        && chain
                        && !check_hypothesis(rep.residual, fro_norm(&noise));
                    if retry {
                        let (mg, mrep) = multigrid_als_rank1(&noisy, &schedule, &opts)?;
                        if mrep.residual < rep.residual {
                            (mg, mrep, "multigrid-als")
                        } else {
                            (cp, rep, "als")
                        }
                    } else {
                        (cp, rep, "als")
                    }
                }
            };
            let approx = cp.to_dense().reshape(&shape)?;
            let m = measure(&truth, &noise, &approx, rep.residual)?;
            let knorm = match cfg.knorm_restarts {
                Some(restarts) => {
                    let kopts = knorm_options(restarts, rng::trial_seed(seed, rng::purpose::AUX));
                    Some(knorm_lower_bound(&noise, &kopts)?)
                }
                None => None,
            };
            Ok(ExperimentRecord {
                trial,
                format: FormatKind::Canonical,
                shape,
                rank: 1,
                seed,
                noise_ratio: ratio,
                solver: solver.to_string(),
                epsilon: m.epsilon,
                noise_norm: m.noise_norm,
                residual: m.residual,
                hypothesis_holds: m.hypothesis,
                guarantee_holds: m.guarantee,
                knorm,
                wall_time: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RankSweep {
    pub format: FormatKind,
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    pub ratio: f64,
    pub seeds: usize,
    pub master_seed: u64,
    /// Used for the canonical format only.
    pub als: AlsOptions,
}

impl RankSweep {
    pub fn new(
        format: FormatKind,
        shape: Vec<usize>,
        ranks: Vec<usize>,
        ratio: f64,
        seeds: usize,
    ) -> Self {
        Self {
            format,
            shape,
            ranks,
            ratio,
            seeds,
            master_seed: 0,
            als: AlsOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        DenseTensor::zeros(&self.shape)?;
        if self.ranks.len() < 3 {
            return Err(Error::InsufficientData(
                "rank sweep needs at least 3 ranks".into(),
            ));
        }
        if self.ranks.windows(2).any(|w| w[1] <= w[0]) || self.ranks[0] == 0 {
            return Err(Error::InvalidParameter(
                "ranks must be positive and ascending".into(),
            ));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("seed count must be >= 1".into()));
        }
        NoiseSpec::ratio(self.ratio, 0).validate()?;
        self.als.validate()
    }
}

/// Mean filtration error per rank.
pub fn mean_epsilon_by_rank(records: &[ExperimentRecord]) -> Vec<(usize, f64)> {
    let mut ranks: Vec<usize> = records.iter().map(|r| r.rank).collect();
    ranks.sort_unstable();
    ranks.dedup();
    ranks
        .into_iter()
        .map(|rank| {
            let sel: Vec<f64> = records
                .iter()
                .filter(|r| r.rank == rank)
                .map(|r| r.epsilon)
                .collect();
            (rank, sel.iter().sum::<f64>() / sel.len() as f64)
        })
        .collect()
}

/// Filtration error versus rank for one format, with a `C·r^α` fit of the
/// per-rank mean.
pub fn rank_sweep(cfg: &RankSweep) -> Result<(Vec<ExperimentRecord>, PowerLawFit)> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &rank in &cfg.ranks {
        for s in 0..cfg.seeds {
            jobs.push((jobs.len() as u64, rank, s as u64));
        }
    }
    let records: Vec<ExperimentRecord> = jobs
        .par_iter()
        .map(|&(trial, rank, s)| {
            let start = Instant::now();
            let seed = rng::trial_seed(cfg.master_seed, s);
            let truth = match cfg.format {
                FormatKind::Canonical => random_cp(&cfg.shape, rank, seed)?.to_dense(),
                FormatKind::Tucker => random_tucker(&cfg.shape, rank, seed)?.to_dense(),
                FormatKind::TensorTrain => random_tt_via_ttsvd(&cfg.shape, rank, seed)?.to_dense(),
            };
            let (noisy, noise) = add_noise(&truth, &NoiseSpec::ratio(cfg.ratio, seed))?;
            let (approx, residual, solver) = match cfg.format {
                FormatKind::Canonical => {
                    let opts = cfg
                        .als
                        .clone()
                        .with_seed(rng::trial_seed(seed, rng::purpose::SOLVER));
                    let (cp, rep) = als_cp(&noisy, rank, &opts)?;
                    (cp.to_dense(), rep.residual, "als")
                }
                FormatKind::Tucker => {
                    let (t, rep) = hosvd(&noisy, rank)?;
                    (t.to_dense(), rep.residual, "hosvd")
                }
                FormatKind::TensorTrain => {
                    let (t, rep) = tt_svd(&noisy, rank)?;
                    (t.to_dense(), rep.residual, "tt-svd")
                }
            };
            let m = measure(&truth, &noise, &approx, residual)?;
            Ok(ExperimentRecord {
                trial,
                format: cfg.format,
                shape: cfg.shape.clone(),
                rank,
                seed,
                noise_ratio: cfg.ratio,
                solver: solver.to_string(),
                epsilon: m.epsilon,
                noise_norm: m.noise_norm,
                residual: m.residual,
                hypothesis_holds: m.hypothesis,
                guarantee_holds: m.guarantee,
                knorm: None,
                wall_time: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = mean_epsilon_by_rank(&records)
        .into_iter()
        .map(|(r, e)| (r as f64, e))
        .collect();
    let fit = fit_power_law(&points)?;
    Ok((records, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_dimension_lists() {
        assert_eq!(admissible_dims(24), vec![2, 3, 4, 6, 8, 12, 24]);
        assert_eq!(admissible_dims(12), vec![2, 3, 4, 6, 12]);
    }

    #[test]
    fn indivisible_dimension_rejected() {
        let mut cfg = DimensionSweep::new(12, vec![0.1], 1);
        cfg.dims = vec![5];
        assert!(matches!(dimension_sweep(&cfg), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn zero_noise_recovers_truth() {
        let mut cfg = DimensionSweep::new(8, vec![0.0], 2);
        cfg.dims = vec![2, 4, 8];
        let recs = dimension_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 6);
        assert!(recs.iter().all(|r| r.epsilon <= 1e-10), "{recs:?}");
    }

    #[test]
    fn records_are_reproducible() {
        let mut cfg = DimensionSweep::new(6, vec![0.1, 1.0], 3);
        cfg.knorm_restarts = Some(2);
        let strip = |mut v: Vec<ExperimentRecord>| {
            v.iter_mut().for_each(|r| r.wall_time = 0.0);
            v
        };
        let a = strip(dimension_sweep(&cfg).unwrap());
        let b = strip(dimension_sweep(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].trial < w[1].trial));
        for r in &a {
            assert!(r.epsilon <= r.residual + r.noise_norm + 1e-12);
            assert!((r.epsilon - r.residual).abs() <= r.noise_norm + 1e-12);
            assert!(r.knorm.unwrap() <= r.noise_norm);
        }
    }

    #[test]
    fn rank_sweep_validation() {
        let cfg = RankSweep::new(FormatKind::Tucker, vec![4, 4, 4], vec![1, 2], 0.1, 2);
        assert!(rank_sweep(&cfg).is_err());
        let cfg = RankSweep::new(FormatKind::Tucker, vec![4, 4, 4], vec![1, 3, 2], 0.1, 2);
        assert!(rank_sweep(&cfg).is_err());
        let cfg = RankSweep::new(FormatKind::Tucker, vec![4, 4, 4], vec![1, 2, 5], 0.1, 2);
        assert!(rank_sweep(&cfg).is_err());
    }

    #[test]
    fn small_rank_sweep_runs_for_every_format() {
        for format in FormatKind::ALL {
            let cfg = RankSweep::new(format, vec![4, 4, 4], vec![1, 2, 3], 0.1, 2);
            let (recs, fit) = rank_sweep(&cfg).unwrap();
            assert_eq!(recs.len(), 6);
            assert!(fit.c > 0.0 && fit.alpha.is_finite());
        }
    }
}
