use crate::error::{Error, Result};
use crate::formats::CpTensor;
use crate::matrix::{norm2, Matrix};
use crate::svd::truncated_svd;
use crate::tensor::DenseTensor;

use super::{als_cp, AlsInit, AlsOptions, ApproxReport};

/// Coarse-to-fine dimension chain ending at `d`, halving while the coarser
/// level keeps at least three dimensions (12 → [3, 6, 12]).
pub fn divisor_schedule(d: usize) -> Vec<usize> {
    let mut chain = vec![d];
    let mut cur = d;
    while cur % 2 == 0 && cur / 2 >= 3 {
        cur /= 2;
        chain.push(cur);
    }
    chain.reverse();
    chain
}

/// Splits `v` (length `m^parts`) into `parts` unit vectors of length `m`
/// whose Kronecker product, times the returned scale, best approximates `v`
/// by successive rank-one SVDs of `m × rest` reshapes.
pub fn split_kronecker_factor(v: &[f64], parts: usize, m: usize) -> Result<(Vec<Vec<f64>>, f64)> {
    if parts == 0 || m == 0 {
        return Err(Error::InvalidParameter(
            "parts and m must be positive".into(),
        ));
    }
    let expected = m.checked_pow(parts as u32);
    if expected != Some(v.len()) {
        return Err(Error::Schedule(format!(
            "length {} is not {m}^{parts}",
            v.len()
        )));
    }
    let mut out = Vec::with_capacity(parts);
    let mut rest = v.to_vec();
    let mut scale = 1.0;
    for _ in 0..parts - 1 {
        let cols = rest.len() / m;
        let s = truncated_svd(&Matrix::new(m, cols, rest)?, 1)?;
        out.push(s.u.column(0));
        rest = s.v.column(0);
        scale *= s.sigma[0];
    }
    let n = norm2(&rest);
    if n > 0.0 {
        rest.iter_mut().for_each(|x| *x /= n);
    }
    scale *= n;
    out.push(rest);
    Ok((out, scale))
}

fn level_side(total: usize, d: usize) -> Option<usize> {
    let m = (total as f64).powf(1.0 / d as f64).round() as usize;
    (m >= 1 && m.checked_pow(d as u32) == Some(total)).then_some(m)
}

/// Rank-one ALS bootstrapped through coarser reshapes of `t`.
///
/// `t` must have `d` equal dimensions and `schedule` must be strictly
/// increasing, each entry dividing the next, ending at `d`. Level `k` solves
/// the rank-one problem for `t` reshaped to `schedule[k]` dimensions; its
/// factors are split into Kronecker components that initialize level `k+1`.
pub fn multigrid_als_rank1(
    t: &DenseTensor,
    schedule: &[usize],
    opts: &AlsOptions,
) -> Result<(CpTensor, ApproxReport)> {
    let d = t.ndim();
    if schedule.is_empty() || *schedule.last().unwrap() != d {
        return Err(Error::Schedule(format!(
            "schedule {schedule:?} must end at d = {d}"
        )));
    }
    for w in schedule.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::Schedule(format!(
                "{} does not refine to {}",
                w[0], w[1]
            )));
        }
    }
    if t.shape().iter().any(|&m| m != t.shape()[0]) {
        return Err(Error::Schedule(
            "multigrid requires equal mode sizes".into(),
        ));
    }
    let total = t.len();
    let sides: Vec<usize> = schedule
        .iter()
        .map(|&dk| {
            level_side(total, dk)
                .ok_or_else(|| Error::Schedule(format!("{total} is not a {dk}-th power")))
        })
        .collect::<Result<_>>()?;

    let mut current: Option<CpTensor> = None;
    let mut report: Option<ApproxReport> = None;
    let mut total_sweeps = 0;
    for (level, (&dk, &mk)) in schedule.iter().zip(&sides).enumerate() {
        let reshaped = t.reshape(&vec![mk; dk])?;
        let mut level_opts = opts.clone();
        level_opts.seed = crate::rng::trial_seed(opts.seed, level as u64);
        if let Some(prev) = &current {
            let parts = dk / schedule[level - 1];
            let mut vectors = Vec::with_capacity(dk);
            let mut weight = prev.weights[0];
            for f in &prev.factors {
                let (pieces, scale) = split_kronecker_factor(&f.column(0), parts, mk)?;
                weight *= scale;
                vectors.extend(pieces);
            }
            let mut init = CpTensor::rank_one(&vectors)?;
            init.weights[0] *= weight;
            level_opts.init = AlsInit::Provided(init);
        }
        let (cp, rep) = als_cp(&reshaped, 1, &level_opts)?;
        total_sweeps += rep.sweeps_used;
        current = Some(cp);
        report = Some(rep);
    }
    let mut report = report.expect("non-empty schedule");
    report.sweeps_used = total_sweeps;
    Ok((current.expect("non-empty schedule"), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::random_cp;
    use crate::tensor::kron;

    #[test]
    fn schedules() {
        assert_eq!(divisor_schedule(12), vec![3, 6, 12]);
        assert_eq!(divisor_schedule(24), vec![3, 6, 12, 24]);
        assert_eq!(divisor_schedule(8), vec![4, 8]);
        assert_eq!(divisor_schedule(3), vec![3]);
    }

    #[test]
    fn exact_rank_one_through_three_levels() {
        let t = random_cp(&[2; 12], 1, 3).unwrap().to_dense();
        let (_, rep) = multigrid_als_rank1(&t, &[3, 6, 12], &AlsOptions::default()).unwrap();
        assert!(rep.residual <= 1e-8, "{}", rep.residual);
    }

    #[test]
    fn split_recovers_components_up_to_sign() {
        let a = vec![0.6, -0.8, 0.0, 0.0];
        let b = vec![0.5, 0.5, 0.5, -0.5];
        let v: Vec<f64> = kron(&[&a, &b]).unwrap().iter().map(|x| 3.0 * x).collect();
        let (parts, scale) = split_kronecker_factor(&v, 2, 4).unwrap();
        assert!((scale - 3.0).abs() < 1e-10);
        for (p, truth) in parts.iter().zip([&a, &b]) {
            let s = p[0].signum() * truth[0].signum();
            for (x, y) in p.iter().zip(truth.iter()) {
                assert!((s * x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn incompatible_schedules_rejected() {
        let t = DenseTensor::zeros(&[2; 12]).unwrap();
        let o = AlsOptions::default();
        assert!(matches!(
            multigrid_als_rank1(&t, &[3, 6], &o),
            Err(Error::Schedule(_))
        ));
        assert!(matches!(
            multigrid_als_rank1(&t, &[4, 6, 12], &o),
            Err(Error::Schedule(_))
        ));
        assert!(matches!(
            multigrid_als_rank1(&t, &[5, 12], &o),
            Err(Error::Schedule(_))
        ));
        let uneven = DenseTensor::zeros(&[2, 4]).unwrap();
        assert!(multigrid_als_rank1(&uneven, &[2], &o).is_err());
    }
}
