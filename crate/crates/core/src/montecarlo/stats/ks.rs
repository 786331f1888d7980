use super::{Method, TestReport};
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 50;

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("samples contain NaN".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov distance `sup |F_a - F_b|`; ties handled by
/// advancing both empirical CDFs past equal values together.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small lambda.
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1..=50 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * c).exp();
            cdf += term;
            if term < 1e-17 * cdf.max(1e-300) {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn asymptotic_p(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d)
}

/// Two-sample KS test with the asymptotic Kolmogorov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestReport> {
    for n in [a.len(), b.len()] {
        if n < MIN_SAMPLES {
            return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: n });
        }
    }
    let d = ks_statistic(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    Ok(TestReport {
        method: Method::Ks,
        statistic: d,
        p_value: asymptotic_p(d, na * nb / (na + nb)),
        n_a: a.len(),
        n_b: b.len(),
        seed: None,
    })
}

/// One-sample KS test against a continuous CDF (`n_b` is reported as 0).
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestReport> {
    if a.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: a.len() });
    }
    let a = sorted(a)?;
    let n = a.len() as f64;
    let d = a.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    });
    Ok(TestReport { method: Method::Ks, statistic: d, p_value: asymptotic_p(d, n), n_a: a.len(), n_b: 0, seed: None })
}

/// Asymptotic critical distance `c(alpha) / sqrt(n_eff)` with
/// `c(alpha) = sqrt(-ln(alpha/2) / 2)`.
pub fn ks_critical_value(n_eff: f64, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / n_eff.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::rng::RngPolicy;
    use crate::montecarlo::stats::normal_cdf;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut rng = RngPolicy::new(seed).stream(0);
        (0..n).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn identical_samples() {
        let a = normals(1, 500, 0.0);
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn hand_computed_statistic_with_ties() {
        let a = [1.0, 2.0, 2.0, 3.0];
        let b = [2.0, 4.0];
        // After 1: 1/4 vs 0; after 2: 3/4 vs 1/2; after 3: 1 vs 1/2.
        assert_eq!(ks_statistic(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn survival_function_values() {
        // Tabulated Kolmogorov quantiles.
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_survival(0.8276) - 0.5).abs() < 1e-3);
        // The two series agree where they meet.
        let lo = kolmogorov_survival(1.18 - 1e-12);
        let hi = kolmogorov_survival(1.18);
        assert!((lo - hi).abs() < 1e-12);
        assert!((ks_critical_value(1.0, 0.01) - 1.6276).abs() < 1e-4);
    }

    #[test]
    fn null_calibration() {
        let reps = 200;
        let rejections = (0..reps)
            .filter(|&r| {
                let a = normals(1000 + 2 * r, 10_000, 0.0);
                let b = normals(1001 + 2 * r, 10_000, 0.0);
                ks_two_sample(&a, &b).unwrap().p_value < 0.05
            })
            .count();
        let rate = rejections as f64 / reps as f64;
        assert!((0.02..=0.09).contains(&rate), "false-positive rate {rate}");
    }

    #[test]
    fn detects_shift() {
        let a = normals(5, 10_000, 0.0);
        let b = normals(6, 10_000, 0.5);
        assert!(ks_two_sample(&a, &b).unwrap().p_value < 1e-6);
    }

    #[test]
    fn one_sample_against_true_cdf() {
        let a = normals(8, 20_000, 0.0);
        assert!(ks_one_sample(&a, normal_cdf).unwrap().p_value > 0.01);
        assert!(ks_one_sample(&a, |x| normal_cdf(x - 0.1)).unwrap().p_value < 1e-6);
    }

    #[test]
    fn too_few_samples() {
        let a = normals(1, 49, 0.0);
        let b = normals(2, 100, 0.0);
        assert!(matches!(ks_two_sample(&a, &b), Err(Error::InsufficientSamples { needed: 50, got: 49 })));
        assert!(ks_two_sample(&b, &[f64::NAN; 60]).is_err());
    }
}
