//! Recovering an h-transform from one shared bridge.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_chain::model::ChainModel;

const BRIDGE_TOL: f64 = 1e-10;
const RATIO_TOL: f64 = 1e-8;
const LINEARITY_TOL: f64 = 1e-8;
const VERIFY_TOL: f64 = 1e-9;
const S_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub psi: Option<Vec<f64>>,
    pub psi_hat: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub verified: bool,
    pub diagnostic: String,
}

impl Recovery {
    fn rejected(diagnostic: String) -> Self {
        Recovery { psi: None, psi_hat: None, lambda: None, verified: false, diagnostic }
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

/// Given that the `(x0, t0, y0)` bridges of `P` and `Q` agree, extracts
/// `psi_s[z] = P_{t0-s}[z][y0] / Q_{t0-s}[z][y0]` (densities w.r.t. `m^P`;
/// the weights cancel), checks that `psi_0 / psi_s` is constant in `z`,
/// reads `lambda` off `-log(psi_s[y0] / psi_0[y0]) = lambda s`, and verifies
/// that the h-transform of `P` by `(psi, lambda)` is `Q`.
pub fn recover_from_single_bridge(cp: &ChainModel, cq: &ChainModel, x0: usize, t0: f64, y0: usize) -> Result<Recovery> {
    if cp.n() != cq.n() {
        return Err(Error::GridMismatch(format!("{} vs {} states", cp.n(), cq.n())));
    }
    cp.state(x0)?;
    cp.state(y0)?;
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::Domain(format!("t0 must be positive, got {t0}")));
    }
    let n = cp.n();
    let ss: Vec<f64> = (1..=S_POINTS).map(|k| t0 * k as f64 / (S_POINTS + 1) as f64).collect();

    let pt = cp.transition_matrix(t0)?;
    let qt = cq.transition_matrix(t0)?;
    let mut psi_s = Vec::with_capacity(S_POINTS);
    let mut bridge_gap: f64 = 0.0;
    for &s in &ss {
        let (ps, qs) = (cp.transition_matrix(s)?, cq.transition_matrix(s)?);
        let (pr, qr) = (cp.transition_matrix(t0 - s)?, cq.transition_matrix(t0 - s)?);
        for z in 0..n {
            let u = ps[(x0, z)] * pr[(z, y0)] / pt[(x0, y0)];
            let v = qs[(x0, z)] * qr[(z, y0)] / qt[(x0, y0)];
            bridge_gap = bridge_gap.max((u - v).abs());
        }
        psi_s.push((0..n).map(|z| pr[(z, y0)] / qr[(z, y0)]).collect::<Vec<f64>>());
    }
    if bridge_gap > BRIDGE_TOL {
        return Ok(Recovery::rejected(format!("the ({x0}, {t0}, {y0}) bridges differ by {bridge_gap:.3e}")));
    }

    let psi0: Vec<f64> = (0..n).map(|z| pt[(z, y0)] / qt[(z, y0)]).collect();
    for (k, ps) in psi_s.iter().enumerate() {
        let ratios: Vec<f64> = psi0.iter().zip(ps).map(|(a, b)| a / b).collect();
        let spread = ratios.iter().map(|r| (r / ratios[y0] - 1.0).abs()).fold(0.0, f64::max);
        if spread > RATIO_TOL {
            return Ok(Recovery::rejected(format!(
                "psi_0 / psi_s is not constant in z at s = {}: relative spread {spread:.3e}",
                ss[k]
            )));
        }
    }

    let rates: Vec<f64> = psi_s.iter().zip(&ss).map(|(ps, s)| -(ps[y0] / psi0[y0]).ln() / s).collect();
    let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda = rates.iter().sum::<f64>() / rates.len() as f64;
    let tolerance = LINEARITY_TOL * lambda.abs().max(1.0);
    if hi - lo > tolerance {
        return Err(Error::LinearityViolation { spread: hi - lo, tolerance });
    }

    let psi: Vec<f64> = psi0.iter().map(|v| v / psi0[0]).collect();
    let transformed = match cp.h_transform(&psi, lambda) {
        Ok(c) => c,
        Err(e) => {
            return Ok(Recovery {
                psi: Some(psi),
                psi_hat: None,
                lambda: Some(lambda),
                verified: false,
                diagnostic: format!("recovered pair is not an eigenpair of P: {e}"),
            })
        }
    };
    let psi_hat = cp.dual().perron()?.psi;

    let mut matrix_gap: f64 = 0.0;
    for t in [t0 / 2.0, t0, 2.0 * t0] {
        let a = transformed.transition_matrix(t)?;
        let b = cq.transition_matrix(t)?;
        matrix_gap = matrix_gap.max((a - b).amax());
    }
    let expected_m = normalized(transformed.weights().as_slice());
    let actual_m = normalized(cq.weights().as_slice());
    let measure_gap = expected_m.iter().zip(&actual_m).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    let verified = matrix_gap <= VERIFY_TOL && measure_gap <= VERIFY_TOL;
    let diagnostic =
        format!("transition matrices differ by {matrix_gap:.3e}; reference weights by {measure_gap:.3e} (relative)");
    Ok(Recovery { psi: Some(psi), psi_hat: Some(psi_hat), lambda: Some(lambda), verified, diagnostic })
}
