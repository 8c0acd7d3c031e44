//! Closed-form bound evaluators and the calibration of the Gaussian-width
//! constant `μ` against measured restricted-norm estimates.
//!
//! Everything that can overflow is evaluated in log space and exponentiated
//! at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::FormatKind;
use crate::sweep::ExperimentRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    Theorem1,
    EmpiricalRank1,
    ScaledTheorem1,
    RankCp,
    RankTt,
    RankTucker,
    NetLogCardinality,
}

/// Parameters a bound was evaluated at; unused ones stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub m: Option<f64>,
    pub d: Option<usize>,
    pub elements: Option<u64>,
    pub rank: Option<usize>,
    pub t: Option<f64>,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub zeta: Option<f64>,
    pub noise_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub kind: BoundKind,
    pub value: f64,
    /// The value overflowed `f64` and is reported as `+∞`.
    pub saturated: bool,
    pub inputs: BoundInputs,
}

impl BoundValue {
    fn finite(kind: BoundKind, value: f64, inputs: BoundInputs) -> Self {
        Self {
            kind,
            value,
            saturated: false,
            inputs,
        }
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} = {x} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// `μ·√(m·d²·ln m) + t`.
pub fn theorem1_bound(m: f64, d: usize, mu: f64, t: f64) -> Result<f64> {
    if !(m >= 2.0) || d < 2 {
        return Err(Error::InvalidParameter(format!(
            "need m >= 2 and d >= 2, got m = {m}, d = {d}"
        )));
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mu = {mu} must be positive"
        )));
    }
    check_nonneg("t", t)?;
    let d = d as f64;
    Ok(mu * (m * d * d * m.ln()).sqrt() + t)
}

/// `e^{−t²/4} + 2·e^{−m^{d/2}/8}`, clamped to `[0, 1]`.
pub fn theorem1_tail_probability(t: f64, m: f64, d: usize) -> Result<f64> {
    check_nonneg("t", t)?;
    if !(m >= 1.0) {
        return Err(Error::InvalidParameter(format!("m = {m}")));
    }
    let raw = (-t * t / 4.0).exp() + 2.0 * (-(m.powf(d as f64 / 2.0)) / 8.0).exp();
    Ok(raw.clamp(0.0, 1.0))
}

/// Smallest `t ≥ 0` with tail probability at most `level`, or `None` when
/// the second term alone already exceeds it.
pub fn theorem1_t_for_level(level: f64, m: f64, d: usize) -> Option<f64> {
    let floor = 2.0 * (-(m.powf(d as f64 / 2.0)) / 8.0).exp();
    let rest = level - floor;
    if !(rest > 0.0) {
        return None;
    }
    if rest >= 1.0 {
        return Some(0.0);
    }
    Some(2.0 * (-rest.ln()).sqrt())
}

/// Integer `m` with `m^d = elements`.
pub fn side_length(elements: u64, d: usize) -> Result<u64> {
    if d == 0 || elements == 0 {
        return Err(Error::InvalidParameter("d and M must be positive".into()));
    }
    let guess = (elements as f64).powf(1.0 / d as f64).round() as u64;
    for m in guess.saturating_sub(1)..=guess + 1 {
        if m >= 1 && m.checked_pow(d as u32) == Some(elements) {
            return Ok(m);
        }
    }
    Err(Error::InvalidShape(format!(
        "{elements} is not a {d}-th power"
    )))
}

/// `√(d·M^{1/d}/M)·‖N‖`: the observed rank-one asymptotic.
pub fn empirical_rank1_bound(d: usize, elements: u64, noise_norm: f64) -> Result<f64> {
    check_nonneg("noise_norm", noise_norm)?;
    let m = side_length(elements, d)? as f64;
    Ok((d as f64 * m / elements as f64).sqrt() * noise_norm)
}

/// Theorem 1 at `μ = 1` rewritten for a noise of norm `‖N‖`:
/// `√(d·M^{1/d}·ln M/M)·‖N‖`.
pub fn scaled_theorem1_bound(d: usize, elements: u64, noise_norm: f64) -> Result<f64> {
    let e = empirical_rank1_bound(d, elements, noise_norm)?;
    Ok(e * (elements as f64).ln().sqrt())
}

/// Rank-dependent empirical bound `√(d·R^p·M^{1/d}·ln d/M)·‖N‖` with
/// `p = 1` (CP), `2` (TT) or `d` (Tucker).
pub fn rank_bound(
    kind: FormatKind,
    d: usize,
    elements: u64,
    rank: usize,
    noise_norm: f64,
) -> Result<BoundValue> {
    if d < 2 || rank == 0 {
        return Err(Error::InvalidParameter(format!(
            "need d >= 2 and R >= 1, got d = {d}, R = {rank}"
        )));
    }
    check_nonneg("noise_norm", noise_norm)?;
    let m = side_length(elements, d)? as f64;
    let (bound_kind, power) = match kind {
        FormatKind::Canonical => (BoundKind::RankCp, 1.0),
        FormatKind::TensorTrain => (BoundKind::RankTt, 2.0),
        FormatKind::Tucker => (BoundKind::RankTucker, d as f64),
    };
    let inputs = BoundInputs {
        m: Some(m),
        d: Some(d),
        elements: Some(elements),
        rank: Some(rank),
        noise_norm: Some(noise_norm),
        ..BoundInputs::default()
    };
    if noise_norm == 0.0 {
        return Ok(BoundValue::finite(bound_kind, 0.0, inputs));
    }
    let df = d as f64;
    let log_value = 0.5
        * (df.ln() + power * (rank as f64).ln() + m.ln() + df.ln().ln() - (elements as f64).ln())
        + noise_norm.ln();
    let value = log_value.exp();
    Ok(BoundValue {
        kind: bound_kind,
        value,
        saturated: value.is_infinite(),
        inputs,
    })
}

/// `ln χ = 2md·ln(6Ω²/ζ)`, the log-cardinality of the constructive net.
pub fn net_log_cardinality(m: usize, d: usize, omega: f64, zeta: f64) -> Result<f64> {
    if d < 2 || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "need d >= 2, m >= 1, got m = {m}, d = {d}"
        )));
    }
    if !(omega >= d as f64) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Omega = {omega} must be >= d = {d}"
        )));
    }
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "zeta = {zeta} must lie in (0, 1]"
        )));
    }
    Ok(2.0 * m as f64 * d as f64 * (6.0 * omega * omega / zeta).ln())
}

/// Evaluates one bound kind from an input bundle. `Theorem1` uses `m, d,
/// mu, t`; the rank-one forms use `d, elements, noise_norm`; rank forms add
/// `rank`; the net uses `m, d, omega, zeta`.
pub fn evaluate(kind: BoundKind, inputs: &BoundInputs) -> Result<BoundValue> {
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| Error::InvalidParameter(format!("missing {name}")))
    };
    let d = inputs
        .d
        .ok_or_else(|| Error::InvalidParameter("missing d".into()));
    let elements = inputs
        .elements
        .ok_or_else(|| Error::InvalidParameter("missing M".into()));
    let value = match kind {
        BoundKind::Theorem1 => theorem1_bound(
            need("m", inputs.m)?,
            d?,
            need("mu", inputs.mu)?,
            inputs.t.unwrap_or(0.0),
        )?,
        BoundKind::EmpiricalRank1 => {
            empirical_rank1_bound(d?, elements?, need("noise_norm", inputs.noise_norm)?)?
        }
        BoundKind::ScaledTheorem1 => {
            scaled_theorem1_bound(d?, elements?, need("noise_norm", inputs.noise_norm)?)?
        }
        BoundKind::RankCp | BoundKind::RankTt | BoundKind::RankTucker => {
            let format = match kind {
                BoundKind::RankCp => FormatKind::Canonical,
                BoundKind::RankTt => FormatKind::TensorTrain,
                _ => FormatKind::Tucker,
            };
            let rank = inputs
                .rank
                .ok_or_else(|| Error::InvalidParameter("missing rank".into()))?;
            return rank_bound(
                format,
                d?,
                elements?,
                rank,
                need("noise_norm", inputs.noise_norm)?,
            );
        }
        BoundKind::NetLogCardinality => net_log_cardinality(
            need("m", inputs.m)? as usize,
            d?,
            need("omega", inputs.omega)?,
            need("zeta", inputs.zeta)?,
        )?,
    };
    Ok(BoundValue::finite(kind, value, inputs.clone()))
}

/// Coverage level targeted by [`calibrate_mu`].
pub const CALIBRATION_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCalibration {
    pub mu: f64,
    /// Fraction of records whose rescaled estimate lies below the bound.
    pub coverage: f64,
    pub records_used: usize,
    pub dims: Vec<usize>,
    /// The supremum proxy is a lower estimate, so `mu` is one as well.
    pub lower_estimate: bool,
}

/// Smallest `μ` such that every record's restricted-norm estimate, rescaled
/// to unit-variance noise (`knorm·√M/‖N‖`), lies below
/// `μ·√(m·d²·ln m) + t`, with `t` chosen per `(m, d)` for a
/// [`CALIBRATION_LEVEL`] tail probability.
///
/// Records without a restricted-norm estimate are ignored. Requires at least
/// ten usable records spanning three dimensionalities.
pub fn calibrate_mu(records: &[ExperimentRecord]) -> Result<MuCalibration> {
    let mut mu: f64 = f64::NEG_INFINITY;
    let mut used = Vec::new();
    for r in records {
        let Some(knorm) = r.knorm else { continue };
        if r.noise_norm <= 0.0 || r.shape.iter().any(|&s| s != r.shape[0]) {
            continue;
        }
        let d = r.dims();
        let m = r.shape[0] as f64;
        if d < 2 || m < 2.0 {
            continue;
        }
        let t = theorem1_t_for_level(CALIBRATION_LEVEL, m, d).ok_or_else(|| {
            Error::InsufficientData(format!(
                "no t reaches the coverage level at m = {m}, d = {d}"
            ))
        })?;
        let s = knorm * (r.elements() as f64).sqrt() / r.noise_norm;
        let scale = (m * (d * d) as f64 * m.ln()).sqrt();
        mu = mu.max((s - t) / scale);
        used.push(d);
    }
    let mut dims = used.clone();
    dims.sort_unstable();
    dims.dedup();
    if used.len() < 10 || dims.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable records over {} dimensionalities; need >= 10 over >= 3",
            used.len(),
            dims.len()
        )));
    }
    if !(mu > 0.0) {
        return Err(Error::InsufficientData(
            "every estimate lies below the t offset".into(),
        ));
    }
    Ok(MuCalibration {
        mu,
        coverage: 1.0,
        records_used: used.len(),
        dims,
        lower_estimate: true,
    })
}
