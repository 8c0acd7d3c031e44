//! Numerical witnesses for the geometry of rank-two Kronecker-structured
//! subspaces.
//!
//! A rank-two tensor is `W·c` with `W = [w₁ w₂]`, `w_j = ⊗_s w_j^(s)` and
//! unit factor columns. Writing each factor pair as
//! `w_{1,2}^(s) = (a_s ± α_s b_s)/√(1 + α_s²)` with orthonormal `a_s, b_s`
//! makes `cond₂(W^(s)) = 1/α_s`. This module evaluates the inequalities that
//! tie these quantities together, builds the well-conditioned replacement
//! basis used to cover ill-conditioned subspaces, and probes the canonical
//! example of a subspace reachable only in the limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, orthonormalize_columns, Matrix};
use crate::noise::fit_power_law;
use crate::rng;
use crate::svd::{svd, SvdResult};
use crate::tensor::kron;

const UNIT_TOL: f64 = 1e-10;

fn cosine(x: &[f64], y: &[f64]) -> f64 {
    dot(x, y) / (norm2(x) * norm2(y))
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

fn scaled(x: &[f64], c: f64) -> Vec<f64> {
    x.iter().map(|a| a * c).collect()
}

fn check_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            len: b.len(),
            expected: a.len(),
        });
    }
    Ok(())
}

/// `|cos(x, y) − cos(x̂, ŷ)|` together with `2η_x + 2η_y`, where
/// `η_x = ‖x − x̂‖/‖x‖` and `η_y = ‖y − ŷ‖/‖y‖`.
pub fn approximate_cosine_gap(
    x: &[f64],
    y: &[f64],
    x_hat: &[f64],
    y_hat: &[f64],
) -> Result<(f64, f64)> {
    check_same_len(x, y)?;
    check_same_len(x, x_hat)?;
    check_same_len(x, y_hat)?;
    for v in [x, y, x_hat, y_hat] {
        if !(norm2(v) > 0.0) {
            return Err(Error::InvalidParameter("cosine of a zero vector".into()));
        }
    }
    let eta_x = norm2(&sub(x, x_hat)) / norm2(x);
    let eta_y = norm2(&sub(y, y_hat)) / norm2(y);
    let gap = (cosine(x, y) - cosine(x_hat, y_hat)).abs();
    Ok((gap, 2.0 * eta_x + 2.0 * eta_y))
}

/// `cond₂` of a two-column matrix with unit columns and column cosine `γ`.
pub fn cond_from_cosine(gamma: f64) -> f64 {
    let g = gamma.abs().min(1.0);
    if g >= 1.0 {
        f64::INFINITY
    } else {
        ((1.0 + g) / (1.0 - g)).sqrt()
    }
}

/// `cond₂` of a two-column matrix from the eigenvalues of its Gram matrix.
pub fn cond_from_gram(w: &Matrix) -> f64 {
    let g = w.gram();
    let (p, q, r) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    let (hi, lo) = (mean + rad, mean - rad);
    if !(lo > 0.0) {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KronCondition {
    /// `Π_s (w₁^(s), w₂^(s))`.
    pub gamma: f64,
    /// `cond₂(W)` from `γ`.
    pub cond_full: f64,
    /// `cond₂(W)` from the Gram eigenvalues of the assembled `W`.
    pub cond_full_gram: f64,
    pub cond_per_dim: Vec<f64>,
}

impl KronCondition {
    /// `cond₂(W) ≤ min_s cond₂(W^(s))`, up to `tol` relative.
    pub fn holds(&self, tol: f64) -> bool {
        let min = self
            .cond_per_dim
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        self.cond_full <= min * (1.0 + tol)
    }
}

fn check_factor(f: &Matrix) -> Result<()> {
    if f.cols() != 2 {
        return Err(Error::InvalidShape(format!(
            "factor has {} columns, expected 2",
            f.cols()
        )));
    }
    for j in 0..2 {
        let n = norm2(&f.column(j));
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidParameter(format!(
                "factor column norm {n} is not 1"
            )));
        }
    }
    Ok(())
}

/// Condition numbers of `W = [⊗_s w₁^(s), ⊗_s w₂^(s)]` and of each
/// `W^(s) = [w₁^(s) w₂^(s)]`.
pub fn kron_condition_check(factors: &[Matrix]) -> Result<KronCondition> {
    if factors.is_empty() {
        return Err(Error::Empty("factor list"));
    }
    let mut gamma = 1.0;
    let mut per_dim = Vec::with_capacity(factors.len());
    for f in factors {
        check_factor(f)?;
        let g = dot(&f.column(0), &f.column(1));
        gamma *= g;
        per_dim.push(cond_from_cosine(g));
    }
    let w1 = kron(&factors.iter().map(|f| f.column(0)).collect::<Vec<_>>())?;
    let w2 = kron(&factors.iter().map(|f| f.column(1)).collect::<Vec<_>>())?;
    let w = Matrix::from_columns(&[w1, w2])?;
    Ok(KronCondition {
        gamma,
        cond_full: cond_from_cosine(gamma),
        cond_full_gram: cond_from_gram(&w),
        cond_per_dim: per_dim,
    })
}

fn complement_vector(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let k = (0..n)
        .min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()))
        .expect("non-empty");
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    let p = dot(&e, u);
    let v = sub(&e, &scaled(u, p));
    let nv = norm2(&v);
    scaled(&v, 1.0 / nv)
}

/// Closed-form thin SVD of `[c₁ c₂]` with unit columns:
/// `U = [(c₁+c₂)/‖c₁+c₂‖, (c₁−c₂)/‖c₁−c₂‖]`,
/// `σ = (‖c₁+c₂‖, ‖c₁−c₂‖)/√2`, `V = [[1, 1], [1, −1]]/√2`.
///
/// When `‖c₁+c₂‖ < ‖c₁−c₂‖` the sign of `c₂` is flipped first (and undone in
/// `V`). For `c₁ = ±c₂` the second singular value is zero and the second
/// left vector is an arbitrary unit vector orthogonal to the first.
pub fn two_column_svd(c1: &[f64], c2: &[f64]) -> Result<SvdResult> {
    check_same_len(c1, c2)?;
    if c1.len() < 2 {
        return Err(Error::InvalidShape(
            "two-column SVD needs at least two rows".into(),
        ));
    }
    for c in [c1, c2] {
        if (norm2(c) - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidParameter(
                "columns must have unit norm".into(),
            ));
        }
    }
    let flip = norm2(&add(c1, c2)) < norm2(&sub(c1, c2));
    let c2 = if flip { scaled(c2, -1.0) } else { c2.to_vec() };
    let plus = add(c1, &c2);
    let minus = sub(c1, &c2);
    let (np, nm) = (norm2(&plus), norm2(&minus));
    let u1 = scaled(&plus, 1.0 / np);
    let u2 = if nm > 1e-14 {
        scaled(&minus, 1.0 / nm)
    } else {
        complement_vector(&u1)
    };
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if flip { -1.0 } else { 1.0 };
    Ok(SvdResult {
        u: Matrix::from_columns(&[u1, u2])?,
        sigma: vec![np * h, nm * h],
        v: Matrix::new(2, 2, vec![h, h, s * h, -s * h])?,
    })
}

/// Factor pairs `w_{1,2}^(s) = (a_s ± α_s b_s)/√(1 + α_s²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank2FactorPair {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

/// Validates `(a_s, b_s, α_s)` and assembles the pair.
pub fn build_rank2_pair(
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    alpha: Vec<f64>,
) -> Result<Rank2FactorPair> {
    if a.is_empty() || a.len() != b.len() || a.len() != alpha.len() {
        return Err(Error::InvalidShape(format!(
            "{} a-vectors, {} b-vectors, {} coefficients",
            a.len(),
            b.len(),
            alpha.len()
        )));
    }
    for ((x, y), &al) in a.iter().zip(&b).zip(&alpha) {
        check_same_len(x, y)?;
        if (norm2(x) - 1.0).abs() > 1e-12
            || (norm2(y) - 1.0).abs() > 1e-12
            || dot(x, y).abs() > 1e-12
        {
            return Err(Error::InvalidParameter(
                "a_s, b_s must be orthonormal".into(),
            ));
        }
        if !(al > 0.0 && al <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {al} outside (0, 1]"
            )));
        }
    }
    Ok(Rank2FactorPair { a, b, alpha })
}

impl Rank2FactorPair {
    /// Recovers `(a_s, b_s, α_s)` from unit factor columns, flipping the sign
    /// of `c₂` where needed so that `‖c₁+c₂‖ ≥ ‖c₁−c₂‖`.
    pub fn from_columns(c1: &[Vec<f64>], c2: &[Vec<f64>]) -> Result<Self> {
        if c1.len() != c2.len() || c1.is_empty() {
            return Err(Error::InvalidShape("mismatched column lists".into()));
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut alpha = Vec::new();
        for (x, y) in c1.iter().zip(c2) {
            let s = two_column_svd(x, y)?;
            if !(s.sigma[1] > 0.0) {
                return Err(Error::InvalidParameter("collinear factor columns".into()));
            }
            a.push(s.u.column(0));
            b.push(s.u.column(1));
            alpha.push(s.sigma[1] / s.sigma[0]);
        }
        build_rank2_pair(a, b, alpha)
    }

    pub fn ndim(&self) -> usize {
        self.alpha.len()
    }

    /// `(w₁^(s), w₂^(s))` at mixing coefficient `coef`.
    fn columns_with(&self, s: usize, coef: f64) -> (Vec<f64>, Vec<f64>) {
        let n = 1.0 / (1.0 + coef * coef).sqrt();
        let w1 = self.a[s]
            .iter()
            .zip(&self.b[s])
            .map(|(x, y)| (x + coef * y) * n)
            .collect();
        let w2 = self.a[s]
            .iter()
            .zip(&self.b[s])
            .map(|(x, y)| (x - coef * y) * n)
            .collect();
        (w1, w2)
    }

    pub fn factor_columns(&self, s: usize) -> (Vec<f64>, Vec<f64>) {
        self.columns_with(s, self.alpha[s])
    }

    /// The per-dimension `m_s × 2` factor matrices.
    pub fn factor_matrices(&self) -> Vec<Matrix> {
        (0..self.ndim())
            .map(|s| {
                let (w1, w2) = self.factor_columns(s);
                Matrix::from_columns(&[w1, w2]).expect("equal lengths")
            })
            .collect()
    }

    pub fn factor_cond(&self, s: usize) -> f64 {
        1.0 / self.alpha[s]
    }

    fn full_columns_with(&self, coefs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (c1, c2): (Vec<_>, Vec<_>) = (0..self.ndim())
            .map(|s| self.columns_with(s, coefs[s]))
            .unzip();
        (kron(&c1).expect("non-empty"), kron(&c2).expect("non-empty"))
    }

    /// `w₁ = ⊗_s w₁^(s)` and `w₂ = ⊗_s w₂^(s)`.
    pub fn full_columns(&self) -> (Vec<f64>, Vec<f64>) {
        self.full_columns_with(&self.alpha)
    }

    /// The pair with every `α_s` replaced by `coefs[s]`.
    pub fn with_alpha(&self, coefs: Vec<f64>) -> Result<Self> {
        build_rank2_pair(self.a.clone(), self.b.clone(), coefs)
    }
}

/// Random pair with Gaussian orthonormalized `(a_s, b_s)` in `ℝ^m` and the
/// given coefficients.
pub fn random_rank2_pair(m: usize, alpha: Vec<f64>, seed: u64) -> Result<Rank2FactorPair> {
    if m < 2 {
        return Err(Error::InvalidShape(format!(
            "m = {m} leaves no room for an orthonormal pair"
        )));
    }
    let mut g = rng::stream(seed, rng::purpose::TRUTH);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for _ in 0..alpha.len() {
        let q = loop {
            let raw = Matrix::new(m, 2, rng::gaussian_vec(&mut g, 2 * m))?;
            if let Some(q) = orthonormalize_columns(&raw) {
                break q;
            }
        };
        a.push(q.column(0));
        b.push(q.column(1));
    }
    build_rank2_pair(a, b, alpha)
}

/// Orthonormal basis `[(w₁+w₂)/‖w₁+w₂‖, (w₁−w₂)/‖w₁−w₂‖]` of `span{w₁, w₂}`
/// for unit `w₁, w₂`.
fn sum_difference_basis(w1: &[f64], w2: &[f64]) -> Result<Matrix> {
    let p = add(w1, w2);
    let q = sub(w1, w2);
    let (np, nq) = (norm2(&p), norm2(&q));
    if !(nq > 0.0) || !(np > 0.0) {
        return Err(Error::InvalidParameter(
            "columns span a single direction".into(),
        ));
    }
    Matrix::from_columns(&[scaled(&p, 1.0 / np), scaled(&q, 1.0 / nq)])
}

/// `‖QQᵀ − Q̃Q̃ᵀ‖₂` for orthonormal bases of equal column count, i.e. the
/// sine of the largest principal angle.
pub fn projector_distance(q: &Matrix, q_tilde: &Matrix) -> Result<f64> {
    let c = q.transpose().matmul(q_tilde)?;
    let s = svd(&c)?;
    let smin = s.sigma.last().copied().unwrap_or(0.0).min(1.0);
    Ok((1.0 - smin * smin).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspacePair {
    pub q: Matrix,
    pub q_tilde: Matrix,
    /// `‖QQᵀ − Q̃Q̃ᵀ‖₂`.
    pub distance: f64,
    /// `cond₂(W̃)` of the replacement basis.
    pub cond_tilde: f64,
    /// Mixing coefficients of the replacement (equal to `α` when no
    /// replacement was needed).
    pub beta: Vec<f64>,
}

/// Well-conditioned replacement of the subspace spanned by `pair`.
///
/// If some factor already has `α_s ≥ 1/Ω`, the subspace itself has
/// `cond₂(W) ≤ Ω` and is returned unchanged. Otherwise every coefficient is
/// rescaled to `β = α/(Ω·max_s α_s)`, which lifts the largest to `1/Ω` and
/// keeps the direction of `α`.
pub fn conditioned_approximation(pair: &Rank2FactorPair, omega: f64) -> Result<SubspacePair> {
    let d = pair.ndim();
    if d < 2 || !(omega >= d as f64) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need Omega >= d >= 2, got Omega = {omega}, d = {d}"
        )));
    }
    let (w1, w2) = pair.full_columns();
    let q = sum_difference_basis(&w1, &w2)?;
    let max_alpha = pair.alpha.iter().copied().fold(0.0, f64::max);
    let beta: Vec<f64> = if max_alpha >= 1.0 / omega {
        pair.alpha.clone()
    } else {
        pair.alpha.iter().map(|a| a / (omega * max_alpha)).collect()
    };
    let (t1, t2) = pair.full_columns_with(&beta);
    let q_tilde = sum_difference_basis(&t1, &t2)?;
    let cond_tilde = cond_from_gram(&Matrix::from_columns(&[t1, t2])?);
    let distance = if beta == pair.alpha {
        0.0
    } else {
        projector_distance(&q, &q_tilde)?
    };
    Ok(SubspacePair {
        q,
        q_tilde,
        distance,
        cond_tilde,
        beta,
    })
}

/// Higher-order part of the odd expansion:
/// `(⊗_s(a_s + α_s b_s) − ⊗_s(a_s − α_s b_s))/2 − Σ_s α_s z_s`, where `z_s`
/// has `b_s` in slot `s` and `a` elsewhere.
pub fn tail_expansion(pair: &Rank2FactorPair) -> Vec<f64> {
    let d = pair.ndim();
    let plus: Vec<Vec<f64>> = (0..d)
        .map(|s| add(&pair.a[s], &scaled(&pair.b[s], pair.alpha[s])))
        .collect();
    let minus: Vec<Vec<f64>> = (0..d)
        .map(|s| sub(&pair.a[s], &scaled(&pair.b[s], pair.alpha[s])))
        .collect();
    let mut tail = scaled(
        &sub(
            &kron(&plus).expect("non-empty"),
            &kron(&minus).expect("non-empty"),
        ),
        0.5,
    );
    for s in 0..d {
        let z: Vec<&[f64]> = (0..d)
            .map(|k| {
                if k == s {
                    &pair.b[k][..]
                } else {
                    &pair.a[k][..]
                }
            })
            .collect();
        let z = kron(&z).expect("non-empty");
        for (t, v) in tail.iter_mut().zip(&z) {
            *t -= pair.alpha[s] * v;
        }
    }
    tail
}

/// The 8×2 orthonormal basis with first column `e₀` and second column
/// `(e₁ + e₃ + e₇)/√3`.
pub fn unbounded_example() -> Matrix {
    let r = 1.0 / 3f64.sqrt();
    let mut q = Matrix::zeros(8, 2);
    q[(0, 0)] = 1.0;
    for i in [1, 3, 7] {
        q[(i, 1)] = r;
    }
    q
}

/// The 8×2 orthonormal basis `[e₀, (e₁ + e₂ + e₄)/√3]`: `e₀ = e⊗e⊗e` and
/// the symmetric sum of the three tensors with one `f` factor (`e = [1, 0]`,
/// `f = [0, 1]`). It is the limit of `[⊗(e + t f), ⊗(e − t f)]` spans as
/// `t → 0`, whose condition numbers blow up, and no finite-condition basis
/// spans it.
pub fn border_rank_example() -> Matrix {
    let r = 1.0 / 3f64.sqrt();
    let mut q = Matrix::zeros(8, 2);
    q[(0, 0)] = 1.0;
    for i in [1, 2, 4] {
        q[(i, 1)] = r;
    }
    q
}

fn angle_basis(theta: &[f64], d: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let unit = |t: f64| vec![t.cos(), t.sin()];
    let c1: Vec<Vec<f64>> = (0..d).map(|s| unit(theta[s])).collect();
    let c2: Vec<Vec<f64>> = (0..d).map(|s| unit(theta[d + s])).collect();
    let gamma = (0..d).map(|s| (theta[s] - theta[d + s]).cos()).product();
    (
        kron(&c1).expect("non-empty"),
        kron(&c2).expect("non-empty"),
        gamma,
    )
}

/// `‖(I − P_W)·target‖_F` with `P_W` the orthogonal projector onto the
/// columns of `W`.
fn projection_residual(w1: &[f64], w2: &[f64], target: &Matrix) -> f64 {
    let g = [[dot(w1, w1), dot(w1, w2)], [dot(w1, w2), dot(w2, w2)]];
    let det = g[0][0] * g[1][1] - g[0][1] * g[0][1];
    let total: f64 = target.data().iter().map(|x| x * x).sum();
    if !(det > 0.0) {
        return total.sqrt();
    }
    let inv = [
        [g[1][1] / det, -g[0][1] / det],
        [-g[0][1] / det, g[0][0] / det],
    ];
    let mut captured = 0.0;
    for c in 0..target.cols() {
        let col = target.column(c);
        let b = [dot(w1, &col), dot(w2, &col)];
        captured += b[0] * (inv[0][0] * b[0] + inv[0][1] * b[1])
            + b[1] * (inv[1][0] * b[0] + inv[1][1] * b[1]);
    }
    (total - captured).max(0.0).sqrt()
}

/// Result of a condition-capped Kronecker fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CappedFit {
    pub omega: f64,
    pub residual: f64,
    /// `cond₂(W)` of the best basis found.
    pub cond: f64,
}

fn compass_search(theta: &mut [f64], target: &Matrix, d: usize, gamma_cap: f64) -> f64 {
    let eval = |t: &[f64]| -> Option<f64> {
        let (w1, w2, gamma) = angle_basis(t, d);
        (gamma.abs() <= gamma_cap).then(|| projection_residual(&w1, &w2, target))
    };
    let mut best = eval(theta).unwrap_or(f64::INFINITY);
    let mut step = 0.5;
    while step > 1e-11 {
        let mut improved = false;
        for k in 0..theta.len() {
            for dir in [1.0, -1.0] {
                let old = theta[k];
                theta[k] = old + dir * step;
                match eval(theta) {
                    Some(v) if v < best => {
                        best = v;
                        improved = true;
                    }
                    _ => theta[k] = old,
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Best approximation of the span of `target` (a `2^d × k` orthonormal
/// basis) by spans of `[⊗_s w₁^(s), ⊗_s w₂^(s)]` with unit `w_j^(s) ∈ ℝ²` and
/// `cond₂(W) ≤ Ω`, by multi-start compass search over the factor angles.
///
/// Each entry of `omegas` reuses the previous optimum as an extra start
/// (feasible because the constraint only loosens as `Ω` grows), so the
/// reported residuals are non-increasing when `omegas` is ascending.
pub fn capped_kron_fit(
    target: &Matrix,
    omegas: &[f64],
    starts: usize,
    seed: u64,
) -> Result<Vec<CappedFit>> {
    let rows = target.rows();
    let d = rows.trailing_zeros() as usize;
    if rows < 2 || rows != 1 << d {
        return Err(Error::InvalidShape(format!(
            "{rows} rows is not a power of two"
        )));
    }
    if starts == 0 {
        return Err(Error::InvalidParameter("starts must be >= 1".into()));
    }
    let mut g = rng::stream(seed, rng::purpose::AUX);
    let mut carried: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        if !(omega >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Omega = {omega} must be >= 1"
            )));
        }
        let cap = (omega * omega - 1.0) / (omega * omega + 1.0);
        let mut best_theta: Option<Vec<f64>> = None;
        let mut best = f64::INFINITY;
        let mut candidates: Vec<Vec<f64>> = carried.iter().cloned().collect();
        while candidates.len() < starts + carried.iter().count() {
            let theta: Vec<f64> = (0..2 * d)
                .map(|_| rng::gaussian(&mut g) * std::f64::consts::PI)
                .collect();
            let (_, _, gamma) = angle_basis(&theta, d);
            if gamma.abs() <= cap {
                candidates.push(theta);
            }
        }
        for mut theta in candidates {
            let r = compass_search(&mut theta, target, d, cap);
            if r < best {
                best = r;
                best_theta = Some(theta);
            }
        }
        let theta = best_theta.expect("at least one feasible start");
        let (_, _, gamma) = angle_basis(&theta, d);
        out.push(CappedFit {
            omega,
            residual: best,
            cond: cond_from_cosine(gamma),
        });
        carried = Some(theta);
    }
    Ok(out)
}

/// Violation counts and worst-case margins of the randomized lemma checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub trials: usize,
    pub cosine_violations: usize,
    pub condition_violations: usize,
    /// Largest `|cond via γ − cond via Gram|` relative to the Gram value.
    pub condition_max_disagreement: f64,
    pub svd_max_error: f64,
    pub tail_violations: usize,
    /// Largest `‖e_tail‖/‖α‖ ÷ (2‖α‖)`.
    pub tail_max_ratio: f64,
}

fn random_unit(g: &mut rand_chacha::ChaCha8Rng, m: usize) -> Vec<f64> {
    let v = rng::gaussian_vec(g, m);
    let n = norm2(&v);
    scaled(&v, 1.0 / n)
}

/// Runs `trials` randomized checks of each lemma: cosine perturbation in
/// dimension 8, Kronecker conditioning (`d ∈ 1..=4`, `m ∈ 2..=4`),
/// closed-form vs Jacobi two-column SVD in dimension 6, and the tail bound
/// at `d = 3`, `m ∈ {2, 3, 4}` with `‖α‖ < 0.9`.
pub fn verify_lemmas(trials: usize, seed: u64) -> Result<LemmaReport> {
    let mut g = rng::stream(seed, rng::purpose::AUX);
    let mut rep = LemmaReport {
        trials,
        ..LemmaReport::default()
    };
    for trial in 0..trials {
        let x = rng::gaussian_vec(&mut g, 8);
        let y = rng::gaussian_vec(&mut g, 8);
        let sx = 10f64.powf(-3.0 * rng::gaussian(&mut g).abs());
        let sy = 10f64.powf(-3.0 * rng::gaussian(&mut g).abs());
        let xh = add(&x, &scaled(&rng::gaussian_vec(&mut g, 8), sx));
        let yh = add(&y, &scaled(&rng::gaussian_vec(&mut g, 8), sy));
        let (gap, bound) = approximate_cosine_gap(&x, &y, &xh, &yh)?;
        if gap > bound + 1e-12 {
            rep.cosine_violations += 1;
        }

        let d = 1 + trial % 4;
        let m = 2 + (trial / 4) % 3;
        let factors: Vec<Matrix> = (0..d)
            .map(|_| {
                Matrix::from_columns(&[random_unit(&mut g, m), random_unit(&mut g, m)])
                    .expect("equal")
            })
            .collect();
        let kc = kron_condition_check(&factors)?;
        if !kc.holds(1e-12) {
            rep.condition_violations += 1;
        }
        let dis = (kc.cond_full - kc.cond_full_gram).abs() / kc.cond_full_gram;
        rep.condition_max_disagreement = rep.condition_max_disagreement.max(dis);

        let c1 = random_unit(&mut g, 6);
        let c2 = random_unit(&mut g, 6);
        let closed = two_column_svd(&c1, &c2)?;
        let numeric = svd(&Matrix::from_columns(&[c1, c2])?)?;
        for (a, b) in closed.sigma.iter().zip(&numeric.sigma) {
            rep.svd_max_error = rep.svd_max_error.max((a - b).abs());
        }

        let m = 2 + trial % 3;
        let alpha: Vec<f64> = (0..3)
            .map(|_| 0.02 + 0.49 * (0.5 + 0.5 * (rng::gaussian(&mut g)).tanh()))
            .collect();
        let pair = random_rank2_pair(m, alpha, rng::trial_seed(seed, trial as u64))?;
        let an = norm2(&pair.alpha);
        if an < 0.9 {
            let tail = norm2(&tail_expansion(&pair));
            let ratio = (tail / an) / (2.0 * an);
            rep.tail_max_ratio = rep.tail_max_ratio.max(ratio);
            if ratio > 1.0 + 1e-12 {
                rep.tail_violations += 1;
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySweep {
    pub omegas: Vec<f64>,
    /// One row of distances per random pair.
    pub distances: Vec<Vec<f64>>,
    /// Log-log slope of the mean distance against `Ω`.
    pub slope: f64,
    pub max_cond_excess: f64,
}

impl DecaySweep {
    pub fn monotone(&self) -> bool {
        self.distances
            .iter()
            .all(|row| row.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)))
    }
}

/// Projector distance of the conditioned replacement over ascending `Ω` for
/// `pairs` random ill-conditioned pairs. Pair `p` is fixed across `Ω`, with
/// `α_s = u_s/(4·Ω_max)` for `u_s ∈ [0.5, 1]`, so it violates every cap.
pub fn theorem2_decay(
    pairs: usize,
    omegas: &[f64],
    d: usize,
    m: usize,
    seed: u64,
) -> Result<DecaySweep> {
    if pairs == 0 || omegas.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least one pair and two Omega values".into(),
        ));
    }
    let omega_max = omegas.iter().copied().fold(0.0, f64::max);
    let mut distances = Vec::with_capacity(pairs);
    let mut max_cond_excess: f64 = 0.0;
    for p in 0..pairs {
        let pseed = rng::trial_seed(seed, p as u64);
        let mut g = rng::stream(pseed, rng::purpose::AUX);
        let u: Vec<f64> = (0..d)
            .map(|_| 0.5 + 0.25 * (1.0 + rng::gaussian(&mut g).tanh()))
            .collect();
        let pair = random_rank2_pair(m, u.iter().map(|x| x / (4.0 * omega_max)).collect(), pseed)?;
        let mut row = Vec::with_capacity(omegas.len());
        for &omega in omegas {
            let sp = conditioned_approximation(&pair, omega)?;
            max_cond_excess = max_cond_excess.max(sp.cond_tilde / omega - 1.0);
            row.push(sp.distance);
        }
        distances.push(row);
    }
    let points: Vec<(f64, f64)> = omegas
        .iter()
        .enumerate()
        .map(|(k, &o)| {
            (
                o,
                distances.iter().map(|r| r[k]).sum::<f64>() / pairs as f64,
            )
        })
        .collect();
    let slope = fit_power_law(&points)?.alpha;
    Ok(DecaySweep {
        omegas: omegas.to_vec(),
        distances,
        slope,
        max_cond_excess,
    })
}
