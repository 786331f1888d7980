use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{Method, TestReport};
use crate::error::{Error, Result};

const MIN_PERMUTATIONS: usize = 200;
const BLOCK: usize = 256;

/// Energy-distance two-sample test on equal-length vectors (path values on a
/// shared grid) with a label-permutation p-value `(1 + #{T_perm >= T}) / (P + 1)`.
///
/// Every permutation statistic is a quadratic form `s^T D s` in a +/-1 label
/// vector, so all of them come out of one pass over the distance matrix `D`
/// in row blocks, multiplied against the stacked label matrix.
pub fn energy_distance_test<V, R>(
    paths_a: &[V],
    paths_b: &[V],
    n_permutations: usize,
    rng: &mut R,
) -> Result<TestReport>
where
    V: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    if n_permutations < MIN_PERMUTATIONS {
        return Err(Error::Domain(format!(
            "energy test needs at least {MIN_PERMUTATIONS} permutations, got {n_permutations}"
        )));
    }
    let (na, nb) = (paths_a.len(), paths_b.len());
    if na < 2 || nb < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: na.min(nb) });
    }
    let dim = paths_a[0].as_ref().len();
    if dim == 0 {
        return Err(Error::GridMismatch("paths have no grid points".into()));
    }
    if let Some(bad) = paths_a.iter().chain(paths_b).find(|p| p.as_ref().len() != dim) {
        return Err(Error::GridMismatch(format!(
            "path of length {} where {dim} grid values were expected",
            bad.as_ref().len()
        )));
    }
    let n = na + nb;
    let points: Vec<f64> = paths_a.iter().chain(paths_b).flat_map(|p| p.as_ref().iter().copied()).collect();
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("path values must be finite".into()));
    }

    let cols = n_permutations + 1;
    let mut signs = DMatrix::<f64>::zeros(n, cols);
    for i in 0..n {
        signs[(i, 0)] = if i < na { 1.0 } else { -1.0 };
    }
    let mut order: Vec<usize> = (0..n).collect();
    for p in 1..cols {
        order.shuffle(rng);
        for (rank, &i) in order.iter().enumerate() {
            signs[(i, p)] = if rank < na { 1.0 } else { -1.0 };
        }
    }

    let mut quad = vec![0.0; cols];
    let mut row_sums = vec![0.0; n];
    let mut block = DMatrix::<f64>::zeros(BLOCK, n);
    for start in (0..n).step_by(BLOCK) {
        let rows = BLOCK.min(n - start);
        if rows < BLOCK {
            block = DMatrix::zeros(rows, n);
        }
        for j in 0..n {
            let pj = &points[j * dim..(j + 1) * dim];
            for r in 0..rows {
                let pi = &points[(start + r) * dim..(start + r + 1) * dim];
                let d2: f64 = pi.iter().zip(pj).map(|(a, b)| (a - b) * (a - b)).sum();
                block[(r, j)] = d2.sqrt();
            }
        }
        for r in 0..rows {
            row_sums[start + r] = block.row(r).sum();
        }
        let prod = &block * &signs;
        for (p, q) in quad.iter_mut().enumerate() {
            for r in 0..rows {
                *q += signs[(start + r, p)] * prod[(r, p)];
            }
        }
    }
    let total: f64 = row_sums.iter().sum();
    let (naf, nbf) = (na as f64, nb as f64);
    let stat = |p: usize| {
        let rs: f64 = row_sums.iter().enumerate().map(|(i, r)| r * signs[(i, p)]).sum();
        let aa = 0.25 * (total + 2.0 * rs + quad[p]);
        let bb = 0.25 * (total - 2.0 * rs + quad[p]);
        let ab = 0.25 * (total - quad[p]);
        naf * nbf / (naf + nbf) * (2.0 * ab / (naf * nbf) - aa / (naf * naf) - bb / (nbf * nbf))
    };
    let observed = stat(0);
    // Floating slack scaled by the mean pairwise distance, so exact ties count.
    let slack = 1e-9 * total / (n as f64 * n as f64);
    let exceed = (1..cols).filter(|&p| stat(p) >= observed - slack).count();
    Ok(TestReport {
        method: Method::Energy,
        statistic: observed,
        p_value: (1 + exceed) as f64 / cols as f64,
        n_a: na,
        n_b: nb,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::rng::RngPolicy;
    use rand_distr::StandardNormal;

    fn brute_energy(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let d = |x: &Vec<f64>, y: &Vec<f64>| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        let mean = |xs: &[Vec<f64>], ys: &[Vec<f64>]| {
            let mut s = 0.0;
            for x in xs {
                for y in ys {
                    s += d(x, y);
                }
            }
            s / (xs.len() * ys.len()) as f64
        };
        let (n, m) = (a.len() as f64, b.len() as f64);
        n * m / (n + m) * (2.0 * mean(a, b) - mean(a, a) - mean(b, b))
    }

    fn pool(seed: u64, n: usize, dim: usize, shift: f64) -> Vec<Vec<f64>> {
        let mut rng = RngPolicy::new(seed).stream(0);
        (0..n).map(|_| (0..dim).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect()).collect()
    }

    #[test]
    fn statistic_matches_direct_double_sum() {
        // 300 points crosses a block boundary.
        let a = pool(1, 170, 3, 0.0);
        let b = pool(2, 130, 3, 0.2);
        let mut rng = RngPolicy::new(3).stream(0);
        let r = energy_distance_test(&a, &b, 200, &mut rng).unwrap();
        let direct = brute_energy(&a, &b);
        assert!((r.statistic - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn identical_pools_give_p_near_one() {
        let a = pool(4, 200, 4, 0.0);
        let mut rng = RngPolicy::new(5).stream(0);
        let r = energy_distance_test(&a, &a, 200, &mut rng).unwrap();
        assert!(r.statistic.abs() < 1e-9);
        assert!(r.p_value > 0.99, "{}", r.p_value);
    }

    #[test]
    fn detects_shifted_pools() {
        let a = pool(6, 300, 4, 0.0);
        let b = pool(7, 300, 4, 0.4);
        let mut rng = RngPolicy::new(8).stream(0);
        let r = energy_distance_test(&a, &b, 300, &mut rng).unwrap();
        assert!(r.p_value < 0.01);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn null_rejection_rate_is_near_nominal() {
        let reps = 60;
        let rejections = (0..reps)
            .filter(|&k| {
                let a = pool(100 + 2 * k, 60, 3, 0.0);
                let b = pool(101 + 2 * k, 60, 3, 0.0);
                let mut rng = RngPolicy::new(k).stream(1);
                energy_distance_test(&a, &b, 200, &mut rng).unwrap().p_value < 0.05
            })
            .count();
        assert!(rejections <= 9, "{rejections} of {reps}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = pool(1, 10, 3, 0.0);
        let b = pool(2, 10, 4, 0.0);
        let mut rng = RngPolicy::new(1).stream(0);
        assert!(matches!(energy_distance_test(&a, &b, 200, &mut rng), Err(Error::GridMismatch(_))));
        assert!(matches!(energy_distance_test(&a, &a, 199, &mut rng), Err(Error::Domain(_))));
    }

    #[test]
    fn same_seed_same_report() {
        let a = pool(1, 50, 2, 0.0);
        let b = pool(2, 50, 2, 0.1);
        let r1 = energy_distance_test(&a, &b, 200, &mut RngPolicy::new(9).stream(0)).unwrap();
        let r2 = energy_distance_test(&a, &b, 200, &mut RngPolicy::new(9).stream(0)).unwrap();
        assert_eq!(r1, r2);
    }
}
