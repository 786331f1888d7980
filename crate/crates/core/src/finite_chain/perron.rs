use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100_000;
pub const TOLERANCE: f64 = 1e-13;

/// Perron pair of a matrix with non-negative off-diagonal entries and an
/// irreducible pattern: power iteration on `G + cI`, which is non-negative
/// and primitive once `c` exceeds the largest diagonal magnitude.
/// Normalized so `psi[0] = 1`.
pub fn perron_pair(g: &DMatrix<f64>) -> Result<(DVector<f64>, f64)> {
    let n = g.nrows();
    let shift = g.diagonal().iter().map(|d| d.abs()).fold(0.0, f64::max) + 1.0;
    let mut a = g.clone();
    for i in 0..n {
        a[(i, i)] += shift;
    }
    let mut v = DVector::from_element(n, 1.0);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut next = &a * &v;
        let top = next.max();
        if !(top > 0.0 && top.is_finite()) {
            return Err(Error::NotConverged { iterations: 0, residual: f64::NAN });
        }
        next /= top;
        change = (&next - &v).amax();
        v = next;
        if change <= TOLERANCE {
            let v = &v / v[0];
            let gv = g * &v;
            let lambda = gv.dot(&v) / v.dot(&v);
            return Ok((v, lambda));
        }
    }
    Err(Error::NotConverged { iterations: MAX_ITERATIONS, residual: change })
}
