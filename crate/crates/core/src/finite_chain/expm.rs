use nalgebra::DMatrix;

/// Maximum absolute row sum.
pub(crate) fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e^A` by scaling and squaring: `A / 2^d` has norm at most 1/2, its
/// exponential is summed as a Taylor series until the next term is below
/// `1e-16` relative to the partial sum, and the result is squared `d` times.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = norm_inf(a);
    let mut depth = 0u32;
    while norm / 2f64.powi(depth as i32) > 0.5 {
        depth += 1;
    }
    let scaled = a / 2f64.powi(depth as i32);
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=60 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if norm_inf(&term) <= 1e-16 * norm_inf(&sum) {
            break;
        }
    }
    for _ in 0..depth {
        sum = &sum * &sum;
    }
    sum
}
