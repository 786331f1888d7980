use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_chain::model::ChainModel;
use crate::par::{map_indexed, Exec};

/// One `(x, t, y, s)` point of a bridge comparison grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgePoint {
    pub x: usize,
    pub t: f64,
    pub y: usize,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BridgeComparison {
    pub equal: bool,
    pub max_deviation: f64,
    pub argmax: Option<BridgePoint>,
}

fn bridge_from(ps: &DMatrix<f64>, prest: &DMatrix<f64>, pt: &DMatrix<f64>, x: usize, y: usize) -> Vec<f64> {
    let norm = pt[(x, y)];
    (0..ps.ncols()).map(|z| ps[(x, z)] * prest[(z, y)] / norm).collect()
}

/// Law of `X_s` under the `(x, t, y)` bridge:
/// `v[z] = P_s[x][z] P_{t-s}[z][y] / P_t[x][y]`.
pub fn chain_bridge_distribution(chain: &ChainModel, x: usize, t: f64, y: usize, s: f64) -> Result<Vec<f64>> {
    chain.state(x)?;
    chain.state(y)?;
    if !(0.0 < s && s < t) {
        return Err(Error::TimeOrdering(format!("need 0 < s < t, got s = {s}, t = {t}")));
    }
    let ps = chain.transition_matrix(s)?;
    let prest = chain.transition_matrix(t - s)?;
    let pt = chain.transition_matrix(t)?;
    Ok(bridge_from(&ps, &prest, &pt, x, y))
}

/// Cartesian grid with `s = frac * t` for each fraction.
pub fn bridge_grid(xs: &[usize], ts: &[f64], ys: &[usize], s_fracs: &[f64]) -> Vec<BridgePoint> {
    let mut out = Vec::new();
    for &x in xs {
        for &t in ts {
            for &y in ys {
                for &f in s_fracs {
                    out.push(BridgePoint { x, t, y, s: f * t });
                }
            }
        }
    }
    out
}

/// Compares bridge laws of two chains over `grid` in the sup norm.
/// Transition matrices are computed once per distinct `(t, s)` pair.
pub fn bridges_equal(
    cx: &ChainModel,
    cy: &ChainModel,
    grid: &[BridgePoint],
    tol: f64,
    exec: Exec,
) -> Result<BridgeComparison> {
    if cx.n() != cy.n() {
        return Err(Error::GridMismatch(format!("{} vs {} states", cx.n(), cy.n())));
    }
    for p in grid {
        cx.state(p.x)?;
        cx.state(p.y)?;
        if !(0.0 < p.s && p.s < p.t) {
            return Err(Error::TimeOrdering(format!("need 0 < s < t, got s = {}, t = {}", p.s, p.t)));
        }
    }
    let mut times: Vec<(f64, f64)> = grid.iter().map(|p| (p.t, p.s)).collect();
    times.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    times.dedup();
    let per_time = map_indexed(exec, times.len(), |k| -> Result<(f64, Option<BridgePoint>)> {
        let (t, s) = times[k];
        let mats = |c: &ChainModel| -> Result<_> {
            Ok((c.transition_matrix(s)?, c.transition_matrix(t - s)?, c.transition_matrix(t)?))
        };
        let (a, b) = (mats(cx)?, mats(cy)?);
        let mut best = (0.0, None);
        for p in grid.iter().filter(|p| p.t == t && p.s == s) {
            let u = bridge_from(&a.0, &a.1, &a.2, p.x, p.y);
            let v = bridge_from(&b.0, &b.1, &b.2, p.x, p.y);
            let d = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if best.1.is_none() || d > best.0 {
                best = (d, Some(*p));
            }
        }
        Ok(best)
    });
    let mut max_deviation = 0.0;
    let mut argmax = None;
    for r in per_time {
        let (d, p) = r?;
        if argmax.is_none() || d > max_deviation {
            max_deviation = d;
            argmax = p;
        }
    }
    Ok(BridgeComparison { equal: max_deviation <= tol, max_deviation, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn sums_to_one_and_pins() {
        let c = ChainModel::random_sub_markov(5, 3).unwrap();
        let v = chain_bridge_distribution(&c, 1, 1.0, 3, 0.4).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let near = chain_bridge_distribution(&c, 1, 1.0, 3, 1e-7).unwrap();
        assert!(near[1] > 1.0 - 1e-5);
    }

    #[test]
    fn two_state_closed_form() {
        let c = ChainModel::new(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]), DVector::from_element(2, 1.0))
            .unwrap();
        let v = chain_bridge_distribution(&c, 0, 2.0, 0, 1.0).unwrap();
        let p = |t: f64| (1.0 + (-2.0 * t).exp()) / 2.0;
        assert!((v[0] - p(1.0) * p(1.0) / p(2.0)).abs() < 1e-15);
    }

    #[test]
    fn time_errors() {
        let c = ChainModel::random_conservative(3, 1).unwrap();
        assert!(matches!(chain_bridge_distribution(&c, 0, 1.0, 1, 1.0), Err(Error::TimeOrdering(_))));
    }

    #[test]
    fn self_comparison_is_exact() {
        let c = ChainModel::random_sub_markov(4, 7).unwrap();
        let grid = bridge_grid(&[0, 3], &[0.5, 1.5], &[1, 2], &[0.25, 0.5]);
        let r = bridges_equal(&c, &c, &grid, 0.0, Exec::default()).unwrap();
        assert!(r.equal);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn h_transform_shares_bridges_random_chain_does_not() {
        let c = ChainModel::random_sub_markov(6, 11).unwrap();
        let p = c.perron().unwrap();
        let q = c.h_transform(&p.psi, p.lambda).unwrap();
        let grid = bridge_grid(&[0, 2, 5], &[0.4, 1.0, 2.0], &[0, 3, 5], &[0.25, 0.5, 0.75]);
        let r = bridges_equal(&c, &q, &grid, 1e-10, Exec::default()).unwrap();
        assert!(r.equal, "{r:?}");
        let other = ChainModel::random_sub_markov(6, 12).unwrap();
        let r = bridges_equal(&c, &other, &grid, 1e-10, Exec::default()).unwrap();
        assert!(!r.equal && r.max_deviation > 1e-3);
        assert!(r.argmax.is_some());
    }
}
