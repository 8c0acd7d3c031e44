use crate::error::{Error, Result};
use crate::formats::{cp_to_dense, CpTensor};
use crate::matrix::{norm2, solve_spd, Matrix};
use crate::rng;
use crate::tensor::{fro_norm, kron_pair, DenseTensor};

use super::{AlsInit, AlsOptions, ApproxReport};

/// Seed of restart `restart` under the options seed.
pub fn split_restart_seed(seed: u64, restart: usize) -> u64 {
    rng::trial_seed(seed, restart as u64)
}

/// Matricized tensor times Khatri–Rao product for `mode`:
/// `out[i, r] = Σ t[.., i, ..] · Π_{s≠mode} factors[s][i_s, r]`.
pub fn mttkrp(t: &DenseTensor, factors: &[Matrix], mode: usize) -> Result<Matrix> {
    let d = t.ndim();
    if factors.len() != d {
        return Err(Error::InvalidShape(format!(
            "{} factors for {d} modes",
            factors.len()
        )));
    }
    if mode >= d {
        return Err(Error::ModeOutOfRange { mode, ndim: d });
    }
    let rank = factors[0].cols();
    let (left, m, right) = t.mode_extents(mode);
    let khatri_rao = |modes: std::ops::Range<usize>| -> Vec<Vec<f64>> {
        (0..rank)
            .map(|r| {
                modes
                    .clone()
                    .fold(vec![1.0], |acc, s| kron_pair(&acc, &factors[s].column(r)))
            })
            .collect()
    };
    let lkr = khatri_rao(0..mode);
    let rkr = khatri_rao(mode + 1..d);
    let data = t.data();
    let mut out = Matrix::zeros(m, rank);
    let mut partial = vec![0.0; rank];
    for l in 0..left {
        for i in 0..m {
            let x = &data[(l * m + i) * right..(l * m + i + 1) * right];
            for (r, p) in partial.iter_mut().enumerate() {
                *p = crate::matrix::dot(x, &rkr[r]);
            }
            for r in 0..rank {
                out[(i, r)] += lkr[r][l] * partial[r];
            }
        }
    }
    Ok(out)
}

fn random_factors(shape: &[usize], rank: usize, seed: u64) -> Vec<Matrix> {
    let mut rng = rng::stream(seed, rng::purpose::SOLVER);
    shape
        .iter()
        .map(|&m| {
            let mut f =
                Matrix::new(m, rank, rng::gaussian_vec(&mut rng, m * rank)).expect("non-empty");
            for r in 0..rank {
                let col = f.column(r);
                let n = norm2(&col);
                if n > 0.0 {
                    f.set_column(r, &col.iter().map(|x| x / n).collect::<Vec<_>>());
                }
            }
            f
        })
        .collect()
}

struct Run {
    cp: CpTensor,
    residual: f64,
    sweeps: usize,
    converged: bool,
    history: Vec<f64>,
}

fn run_once(t: &DenseTensor, mut factors: Vec<Matrix>, opts: &AlsOptions) -> Result<Run> {
    let d = t.ndim();
    let rank = factors[0].cols();
    let norm_t = fro_norm(t);
    let mut weights = vec![1.0; rank];
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;

    for sweep in 1..=opts.max_sweeps {
        sweeps = sweep;
        for s in 0..d {
            let rhs = mttkrp(t, &factors, s)?;
            let mut h = Matrix::from_fn(rank, rank, |_, _| 1.0);
            for (q, f) in factors.iter().enumerate() {
                if q != s {
                    let g = f.gram();
                    for a in 0..rank {
                        for b in 0..rank {
                            h[(a, b)] *= g[(a, b)];
                        }
                    }
                }
            }
            let solved = solve_spd(&h, &rhs.transpose())?.transpose();
            for r in 0..rank {
                let col = solved.column(r);
                let n = norm2(&col);
                if n > 0.0 && n.is_finite() {
                    factors[s].set_column(r, &col.iter().map(|x| x / n).collect::<Vec<_>>());
                    weights[r] = n;
                } else {
                    weights[r] = 0.0;
                }
            }
        }
        let cp = CpTensor {
            factors: factors.clone(),
            weights: weights.clone(),
        };
        residual = fro_norm(&cp_to_dense(&cp).sub(t)?);
        if !residual.is_finite() {
            return Err(Error::NonFinite);
        }
        history.push(residual);
        if residual <= 1e-14 * norm_t
            || (prev.is_finite() && (prev - residual).abs() <= opts.rel_tol * prev)
        {
            converged = true;
            break;
        }
        prev = residual;
    }
    Ok(Run {
        cp: CpTensor { factors, weights },
        residual,
        sweeps,
        converged,
        history,
    })
}

/// Rank-`rank` CP approximation by alternating least squares.
///
/// Modes are updated in order `0..d` each sweep, factor columns are
/// renormalized after every update, and the best of `opts.restarts` runs is
/// returned (ties go to the lowest restart index).
pub fn als_cp(t: &DenseTensor, rank: usize, opts: &AlsOptions) -> Result<(CpTensor, ApproxReport)> {
    opts.validate()?;
    if rank == 0 {
        return Err(Error::RankOutOfRange {
            rank,
            max: usize::MAX,
        });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut best: Option<Run> = None;
    for restart in 0..opts.restarts {
        let init = match (&opts.init, restart) {
            (AlsInit::Provided(cp), 0) => {
                if cp.rank() != rank || cp.shape() != t.shape() {
                    return Err(Error::InvalidParameter(format!(
                        "provided initialization has shape {:?} rank {}, expected {:?} rank {rank}",
                        cp.shape(),
                        cp.rank(),
                        t.shape()
                    )));
                }
                let mut init = cp.clone();
                init.normalize();
                init.factors
            }
            _ => random_factors(t.shape(), rank, split_restart_seed(opts.seed, restart)),
        };
        let run = run_once(t, init, opts)?;
        if best.as_ref().map_or(true, |b| run.residual < b.residual) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");
    let report = ApproxReport {
        ranks: vec![rank],
        residual: best.residual,
        sweeps_used: best.sweeps,
        converged: best.converged,
        history: best.history,
        discarded: Vec::new(),
    };
    Ok((best.cp, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::random_cp;

    #[test]
    fn mttkrp_matches_unfolding_definition() {
        let t = DenseTensor::new(vec![2, 3, 2], (0..12).map(|x| x as f64 - 4.0).collect()).unwrap();
        let factors = random_factors(&[2, 3, 2], 2, 3);
        let out = mttkrp(&t, &factors, 1).unwrap();
        for j in 0..3 {
            for r in 0..2 {
                let mut direct = 0.0;
                for i in 0..2 {
                    for k in 0..2 {
                        direct += t.get(&[i, j, k]) * factors[0][(i, r)] * factors[2][(k, r)];
                    }
                }
                assert!((out[(j, r)] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_rank_one_recovered() {
        let truth = random_cp(&[4, 5, 3], 1, 2).unwrap().to_dense();
        let (_, rep) = als_cp(&truth, 1, &AlsOptions::default()).unwrap();
        assert!(rep.residual <= 1e-10, "{}", rep.residual);
        assert!(rep.converged);
    }

    #[test]
    fn residual_never_exceeds_input_norm_and_is_monotone() {
        for seed in 0..5 {
            let mut rng = rng::stream(seed, 9);
            let t = DenseTensor::new(vec![3, 4, 5], rng::gaussian_vec(&mut rng, 60)).unwrap();
            let (_, rep) = als_cp(&t, 2, &AlsOptions::default().with_seed(seed)).unwrap();
            assert!(rep.residual <= fro_norm(&t));
            for w in rep.history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", rep.history);
            }
        }
    }

    #[test]
    fn zero_tensor_gives_zero_residual() {
        let t = DenseTensor::zeros(&[3, 3]).unwrap();
        let (cp, rep) = als_cp(&t, 1, &AlsOptions::default()).unwrap();
        assert_eq!(rep.residual, 0.0);
        assert_eq!(cp.weights, vec![0.0]);
    }

    #[test]
    fn invalid_inputs() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, f64::INFINITY, 0.0, 1.0]).unwrap();
        assert!(matches!(
            als_cp(&t, 1, &AlsOptions::default()),
            Err(Error::NonFinite)
        ));
        let ok = DenseTensor::zeros(&[2, 2]).unwrap();
        assert!(als_cp(&ok, 0, &AlsOptions::default()).is_err());
        let bad = AlsOptions {
            restarts: 0,
            ..AlsOptions::default()
        };
        assert!(als_cp(&ok, 1, &bad).is_err());
    }

    #[test]
    fn provided_initialization_is_used() {
        let truth = random_cp(&[3, 3, 3], 1, 4).unwrap();
        let opts = AlsOptions {
            init: AlsInit::Provided(truth.clone()),
            max_sweeps: 1,
            ..AlsOptions::default()
        };
        let (_, rep) = als_cp(&truth.to_dense(), 1, &opts).unwrap();
        assert!(rep.residual < 1e-12);
    }
}
