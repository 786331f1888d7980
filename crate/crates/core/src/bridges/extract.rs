//! Recovering an eigenfunction from two kernels that share a bridge.
//!
//! With both densities expressed w.r.t. `P`'s reference measure,
//! `psi_s(z) = p_{T-s}(z, b) / q_{T-s}(z, b)` is `psi(z)` up to a factor
//! depending on `s` only, and `psi_s(b) / psi_0(b) = e^{-lambda s}`.

use crate::error::{Error, Result};
use crate::measure_kernel::{ReferenceMeasure, TransitionKernel};

/// `m^Q / m^P` at `y`: converts a `Q` density into a density w.r.t. `m^P`.
fn conversion_factor(kp: &TransitionKernel, kq: &TransitionKernel, y: f64) -> Result<f64> {
    let same_kind = matches!(
        (kp.measure(), kq.measure()),
        (ReferenceMeasure::Lebesgue { .. }, ReferenceMeasure::Lebesgue { .. })
            | (ReferenceMeasure::FiniteWeights(_), ReferenceMeasure::FiniteWeights(_))
    );
    if !same_kind {
        return Err(Error::MeasureMismatch(format!(
            "{} and {} have reference measures of different kinds",
            kp.id(),
            kq.id()
        )));
    }
    let (mp, mq) = (kp.measure_density(y), kq.measure_density(y));
    if !(mp > 0.0 && mq > 0.0 && mp.is_finite() && mq.is_finite()) {
        return Err(Error::MeasureMismatch(format!(
            "measure densities at {y} are {mp} ({}) and {mq} ({})",
            kp.id(),
            kq.id()
        )));
    }
    Ok(mq / mp)
}

/// `psi_s(z) = p_{T-s}(z, b) / q_{T-s}(z, b)`, both w.r.t. `m^P`.
pub fn extract_eigen_ratio(
    kp: &TransitionKernel,
    kq: &TransitionKernel,
    b: f64,
    horizon: f64,
    s: f64,
    z: f64,
) -> Result<f64> {
    if !(0.0 <= s && s < horizon) {
        return Err(Error::TimeOrdering(format!("need 0 <= s < horizon, got s = {s}, horizon = {horizon}")));
    }
    let r = horizon - s;
    let p = kp.density(r, z, b)?;
    let q = kq.density(r, z, b)? * conversion_factor(kp, kq, b)?;
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain(format!("densities at ({z}, {b}) must be positive: {p}, {q}")));
    }
    Ok(p / q)
}

/// `lambda_s / s` with `lambda_s = -log(psi_s(b) / psi_0(b))`.
pub fn extract_lambda(kp: &TransitionKernel, kq: &TransitionKernel, b: f64, horizon: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("need s > 0 to read off lambda, got {s}")));
    }
    let r0 = extract_eigen_ratio(kp, kq, b, horizon, 0.0, b)?;
    let rs = extract_eigen_ratio(kp, kq, b, horizon, s, b)?;
    Ok(-(rs / r0).ln() / s)
}

/// `psi_0(z) / psi_0(anchor)` at each `z`.
pub fn extract_psi(
    kp: &TransitionKernel,
    kq: &TransitionKernel,
    b: f64,
    horizon: f64,
    anchor: f64,
    zs: &[f64],
) -> Result<Vec<f64>> {
    let base = extract_eigen_ratio(kp, kq, b, horizon, 0.0, anchor)?;
    zs.iter().map(|&z| Ok(extract_eigen_ratio(kp, kq, b, horizon, 0.0, z)? / base)).collect()
}

/// Largest relative deviation of `[psi_0(z)/psi_s(z)] / [psi_0(b)/psi_s(b)]`
/// from 1 over the given `s` and `z` values.
pub fn s_independence_spread(
    kp: &TransitionKernel,
    kq: &TransitionKernel,
    b: f64,
    horizon: f64,
    ss: &[f64],
    zs: &[f64],
) -> Result<f64> {
    let mut spread: f64 = 0.0;
    for &s in ss {
        let reference =
            extract_eigen_ratio(kp, kq, b, horizon, 0.0, b)? / extract_eigen_ratio(kp, kq, b, horizon, s, b)?;
        for &z in zs {
            let v = extract_eigen_ratio(kp, kq, b, horizon, 0.0, z)? / extract_eigen_ratio(kp, kq, b, horizon, s, z)?;
            spread = spread.max((v / reference - 1.0).abs());
        }
    }
    Ok(spread)
}
