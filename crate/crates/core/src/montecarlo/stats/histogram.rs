use crate::error::{Error, Result};
use crate::quadrature::Quadrature;

const MIN_BINS: usize = 10;

/// Total-variation distance between binned empirical frequencies and the
/// per-bin mass of a probability density on `window`. Mass outside the
/// window (empirical and model) is treated as one extra bin.
pub fn histogram_tv(
    samples: &[f64],
    density: impl Fn(f64) -> f64,
    bins: usize,
    window: (f64, f64),
    q: &Quadrature,
) -> Result<f64> {
    if bins < MIN_BINS {
        return Err(Error::Domain(format!("need at least {MIN_BINS} bins, got {bins}")));
    }
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::EmptyWindow(format!("[{lo}, {hi}]")));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    for &x in samples {
        if (lo..=hi).contains(&x) {
            counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
        } else {
            outside += 1;
        }
    }
    let n = samples.len() as f64;
    let mut tv = 0.0;
    let mut model_inside = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let a = lo + i as f64 * width;
        let b = if i + 1 == bins { hi } else { a + width };
        let mass = q.integrate(&density, a, b)?;
        model_inside += mass;
        tv += (c as f64 / n - mass).abs();
    }
    tv += (outside as f64 / n - (1.0 - model_inside).max(0.0)).abs();
    Ok(0.5 * tv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::rng::RngPolicy;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn phi(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngPolicy::new(seed).stream(0);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn self_consistent_samples() {
        let q = Quadrature::default();
        let xs = normals(1_000_000, 11);
        let tv = histogram_tv(&xs, phi, 60, (-5.0, 5.0), &q).unwrap();
        assert!(tv < 0.02, "{tv}");
        let small = normals(10_000, 12);
        assert!(histogram_tv(&small, phi, 10, (-4.0, 4.0), &q).unwrap() < 0.05);
    }

    #[test]
    fn point_mass_against_normal_is_far() {
        let q = Quadrature::default();
        let tv = histogram_tv(&vec![0.0; 1000], phi, 1000, (-5.0, 5.0), &q).unwrap();
        assert!(tv > 0.99, "{tv}");
    }

    #[test]
    fn outside_mass_counts() {
        let q = Quadrature::default();
        let tv = histogram_tv(&[100.0; 10], phi, 10, (-5.0, 5.0), &q).unwrap();
        assert!((tv - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bad_arguments() {
        let q = Quadrature::default();
        assert!(matches!(histogram_tv(&[0.0], phi, 9, (-1.0, 1.0), &q), Err(Error::Domain(_))));
        assert!(matches!(histogram_tv(&[0.0], phi, 10, (1.0, 1.0), &q), Err(Error::EmptyWindow(_))));
    }
}
