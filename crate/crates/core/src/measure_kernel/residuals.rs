//! Numerical residuals of the standing hypotheses: normalisation,
//! Chapman–Kolmogorov, duality, the eigen-equation, and the generator
//! relation between a kernel and its h-transform.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::measure_kernel::eigen::Eigenpair;
use crate::measure_kernel::kernel::TransitionKernel;
use crate::measure_kernel::measure::ScalarFn;
use crate::quadrature::Quadrature;

/// A bounded test function supported on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub f: ScalarFn,
    pub lo: f64,
    pub hi: f64,
}

impl TestFunction {
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("indicator needs a < b, got [{a}, {b}]")));
        }
        Ok(TestFunction { f: ScalarFn::new(format!("1[{a},{b}]"), |_| 1.0), lo: a, hi: b })
    }

    pub fn smooth(f: ScalarFn, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Domain(format!("empty support [{lo}, {hi}]")));
        }
        Ok(TestFunction { f, lo, hi })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.lo && x <= self.hi {
            self.f.eval(x)
        } else {
            0.0
        }
    }
}

/// Runs a fallible integrand under quadrature, surfacing the first error.
fn integrate_fallible(q: &Quadrature, a: f64, b: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let failure = RefCell::new(None);
    let v = q.integrate(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        a,
        b,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    v
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `|∫ p_t(x,y) psi(y) m(dy) - e^{lambda t} psi(x)| / (e^{lambda t} psi(x))`.
pub fn eigen_residual(kernel: &TransitionKernel, eig: &Eigenpair, t: f64, x: f64, q: &Quadrature) -> Result<f64> {
    let lhs = kernel.integrate_against(t, x, |y| eig.psi.eval(y), q)?;
    let rhs = (eig.lambda * t).exp() * eig.psi.eval(x);
    Ok((lhs - rhs).abs() / rhs)
}

/// `|∫ p_t(x,z) p_s(z,y) m(dz) - p_{t+s}(x,y)| / p_{t+s}(x,y)`.
pub fn chapman_kolmogorov_residual(
    kernel: &TransitionKernel,
    s: f64,
    t: f64,
    x: f64,
    y: f64,
    q: &Quadrature,
) -> Result<f64> {
    kernel.check(s, x, y)?;
    let direct = kernel.density(t + s, x, y)?;
    let support = kernel.support();
    // Gaussian-product centre of the integrand in z.
    let centre = (s * x + t * y) / (s + t);
    let composed = q.integrate_line(
        |z| {
            let m = kernel.measure_density(z);
            if m == 0.0 {
                0.0
            } else {
                kernel.density_raw(t, x, z) * kernel.density_raw(s, z, y) * m
            }
        },
        support.lo,
        support.hi,
        centre.clamp(support.lo, support.hi),
        t.max(s).sqrt(),
        kernel.breakpoints(),
    )?;
    Ok((composed - direct).abs() / direct)
}

/// `|∫ f P_t g dm - ∫ P^_t f g dm|`, relative to the larger of the two.
pub fn duality_residual(
    kernel: &TransitionKernel,
    t: f64,
    f: &TestFunction,
    g: &TestFunction,
    q: &Quadrature,
) -> Result<f64> {
    let support = kernel.support();
    let inner_q = Quadrature { abs_tol: q.abs_tol * 1e-2, rel_tol: q.rel_tol * 1e-2, ..*q };
    let clip = |tf: &TestFunction| (tf.lo.max(support.lo), tf.hi.min(support.hi));
    let (fa, fb) = clip(f);
    let (ga, gb) = clip(g);
    if !(fa < fb) || !(ga < gb) {
        return Ok(0.0);
    }
    let forward = integrate_fallible(q, fa, fb, |x| {
        kernel.check(t, x, x)?;
        let pg = inner_q.integrate(|y| kernel.density_raw(t, x, y) * g.eval(y) * kernel.measure_density(y), ga, gb)?;
        Ok(f.eval(x) * pg * kernel.measure_density(x))
    })?;
    let backward = integrate_fallible(q, ga, gb, |y| {
        kernel.check(t, y, y)?;
        let pf =
            inner_q.integrate(|x| kernel.dual_density_raw(t, y, x) * f.eval(x) * kernel.measure_density(x), fa, fb)?;
        Ok(g.eval(y) * pf * kernel.measure_density(y))
    })?;
    Ok(relative(forward, backward))
}

/// `|∫ p_t(x,y) m(dy) - 1|`.
pub fn normalization_residual(kernel: &TransitionKernel, t: f64, x: f64, q: &Quadrature) -> Result<f64> {
    Ok((kernel.integrate_against(t, x, |_| 1.0, q)? - 1.0).abs())
}

/// `exp ∫_0^x mu(y) dy`.
pub fn psi_from_drift(mu: impl Fn(f64) -> f64, x: f64, q: &Quadrature) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("state must be finite, got {x}")));
    }
    Ok(q.integrate(mu, 0.0, x)?.exp())
}

/// `|psi''(x)/rho - lambda psi(x)| / psi(x)` with a central second difference
/// and Brownian speed density `rho = 2`.
pub fn local_eigen_residual(eig: &Eigenpair, x: f64, h: f64) -> f64 {
    const RHO: f64 = 2.0;
    let psi = |z: f64| eig.psi.eval(z);
    let second = (psi(x + h) - 2.0 * psi(x) + psi(x - h)) / (h * h);
    (second / RHO - eig.lambda * psi(x)).abs() / psi(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorCheck {
    /// `((Q_t f - f) - (P_t f - f)) / t`.
    pub estimate: f64,
    /// `2 mu(x)/rho(x) f'(x)`.
    pub expected: f64,
    pub residual: f64,
}

/// Compares `L^Y f - L^X f`, estimated by `(Q_t f - P_t f)/t`, with the drift
/// term `2 mu/rho f'` where `mu = (log psi)'` and `rho` is the speed density
/// of X. `kernel_y` must be `kernel_x` or an h-transform of it.
pub fn generator_drift_residual(
    kernel_x: &TransitionKernel,
    kernel_y: &TransitionKernel,
    f: &TestFunction,
    x: f64,
    t: f64,
    q: &Quadrature,
) -> Result<GeneratorCheck> {
    let mu = if kernel_y.id() == kernel_x.id() {
        0.0
    } else {
        match kernel_y.h_parts() {
            Some((base, eig)) if base.id() == kernel_x.id() => eig.drift(x),
            _ => {
                return Err(Error::MeasureMismatch(format!(
                    "{} is not an h-transform of {}",
                    kernel_y.id(),
                    kernel_x.id()
                )))
            }
        }
    };
    let rho = kernel_x
        .speed_density(x)
        .ok_or_else(|| Error::Domain(format!("{} is not a diffusion on natural scale", kernel_x.id())))?;
    let h = 1e-5 * (1.0 + x.abs());
    let f_prime = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
    let fine = Quadrature { abs_tol: q.abs_tol.min(1e-12), ..*q };
    let py = kernel_y.integrate_against_on(t, x, |y| f.eval(y), f.lo, f.hi, &fine)?;
    let px = kernel_x.integrate_against_on(t, x, |y| f.eval(y), f.lo, f.hi, &fine)?;
    let estimate = (py - px) / t;
    let expected = 2.0 * mu / rho * f_prime;
    Ok(GeneratorCheck { estimate, expected, residual: (estimate - expected).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure_kernel::catalog::*;
    use crate::measure_kernel::kernel::{h_transform, FlipVariant};

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn eigen_residual_examples() {
        let g = gaussian_kernel();
        assert!(eigen_residual(&g, &Eigenpair::trivial(), 1.0, 0.0, &q()).unwrap() < 1e-10);
        let cosh = Eigenpair::cosh(1.0, 0.0).unwrap();
        assert!(eigen_residual(&g, &cosh, 1.0, 0.0, &q()).unwrap() < 1e-8);
        let wrong = Eigenpair::new(cosh.psi.clone(), cosh.psi_hat.clone(), 0.4);
        let r = eigen_residual(&g, &wrong, 1.0, 0.0, &q()).unwrap();
        // Oracle: ∫ phi_1(y) cosh(y) dy = e^{1/2}, so the residual is e^{0.1} - 1.
        assert!((r - (0.1f64.exp() - 1.0)).abs() < 1e-9, "{r}");
    }

    #[test]
    fn chapman_kolmogorov_examples() {
        assert!(chapman_kolmogorov_residual(&gaussian_kernel(), 0.5, 0.5, 0.0, 0.0, &q()).unwrap() < 1e-8);
        let tanh = tanh_drift_kernel(1.0, 0.0).unwrap();
        assert!(chapman_kolmogorov_residual(&tanh, 0.3, 0.7, -1.0, 2.0, &q()).unwrap() < 1e-8);
        let flip = flipped_bessel_kernel(FlipVariant::X);
        assert!(chapman_kolmogorov_residual(&flip, 1.0, 1.0, 0.5, -0.5, &q()).unwrap() < 1e-6);
    }

    #[test]
    fn duality_examples() {
        let g = gaussian_kernel();
        let f = TestFunction::indicator(-0.5, 1.5).unwrap();
        assert!(duality_residual(&g, 0.8, &f, &f, &q()).unwrap() < 1e-9);
        let f = TestFunction::indicator(0.0, 1.0).unwrap();
        let h = TestFunction::indicator(1.0, 2.0).unwrap();
        assert!(duality_residual(&g, 1.0, &f, &h, &q()).unwrap() < 1e-8);
        let flip = flipped_bessel_kernel(FlipVariant::X);
        let f = TestFunction::indicator(0.5, 1.0).unwrap();
        let h = TestFunction::indicator(-1.0, -0.5).unwrap();
        assert!(duality_residual(&flip, 1.0, &f, &h, &q()).unwrap() < 1e-6);
    }

    #[test]
    fn duality_of_asymmetric_h_transform() {
        // psi != psi_hat: the dual is the transform of the dual by (psi_hat, psi).
        let eig =
            Eigenpair::new(Eigenpair::exponential(0.5).unwrap().psi, Eigenpair::exponential(-0.5).unwrap().psi, 0.125);
        let k = h_transform(&gaussian_kernel(), &eig);
        assert!(!k.is_self_dual());
        let f = TestFunction::indicator(-1.0, 0.0).unwrap();
        let g = TestFunction::indicator(0.5, 2.0).unwrap();
        assert!(duality_residual(&k, 0.6, &f, &g, &q()).unwrap() < 1e-8);
    }

    #[test]
    fn normalization_examples() {
        assert!(normalization_residual(&gaussian_kernel(), 1.0, 0.0, &q()).unwrap() < 1e-10);
        let tanh = tanh_drift_kernel(1.0, 0.0).unwrap();
        assert!(normalization_residual(&tanh, 2.0, 3.0, &q()).unwrap() < 1e-8);
        assert!(normalization_residual(&bessel3_kernel(), 1.0, 0.0, &q()).unwrap() < 1e-8);
    }

    #[test]
    fn bessel_normalization_on_fixed_grid() {
        let fixed = Quadrature::fixed_grid(4096).unwrap();
        assert!(normalization_residual(&bessel3_kernel(), 1.0, 0.0, &fixed).unwrap() < 1e-8);
    }

    #[test]
    fn psi_from_drift_examples() {
        assert_eq!(psi_from_drift(|_| 0.0, 2.3, &q()).unwrap(), 1.0);
        let v = psi_from_drift(|_| 0.7, -1.5, &q()).unwrap();
        assert!((v - (-1.05f64).exp()).abs() < 1e-14);
        let v = psi_from_drift(f64::tanh, 1.0, &q()).unwrap();
        assert!((v - 1.0f64.cosh()).abs() < 1e-12);
        assert!((v - 1.543081).abs() < 1e-6);
    }

    #[test]
    fn local_eigen_residual_examples() {
        assert_eq!(local_eigen_residual(&Eigenpair::trivial(), 0.3, 1e-4), 0.0);
        assert!(local_eigen_residual(&Eigenpair::cosh(1.0, 0.0).unwrap(), 0.7, 1e-4) < 1e-6);
        assert!(local_eigen_residual(&Eigenpair::exponential(2.0).unwrap(), 0.0, 1e-4) < 1e-6);
        let wrong = Eigenpair::symmetric(Eigenpair::cosh(1.0, 0.0).unwrap().psi, 0.3);
        assert!(local_eigen_residual(&wrong, 0.7, 1e-4) > 0.1);
    }

    #[test]
    fn generator_drift_examples() {
        let g = gaussian_kernel();
        let sin = TestFunction::smooth(ScalarFn::new("sin", f64::sin), -20.0, 20.0).unwrap();
        let same = generator_drift_residual(&g, &g, &sin, 0.4, 1e-3, &q()).unwrap();
        assert!(same.residual < 1e-9, "{same:?}");

        let drift = constant_drift_kernel(1.0).unwrap();
        let c = generator_drift_residual(&g, &drift, &sin, 0.0, 1e-3, &q()).unwrap();
        assert!((c.expected - 1.0).abs() < 1e-9);
        assert!(c.residual < 5e-3, "{c:?}");

        let tanh = tanh_drift_kernel(1.0, 0.0).unwrap();
        let id = TestFunction::smooth(ScalarFn::new("x", |x| x), -10.0, 10.0).unwrap();
        let c = generator_drift_residual(&g, &tanh, &id, 1.0, 1e-3, &q()).unwrap();
        assert!((c.expected - 1.0f64.tanh()).abs() < 1e-9);
        assert!(c.residual < 5e-3, "{c:?}");
    }

    #[test]
    fn generator_residual_is_first_order_in_t() {
        let g = gaussian_kernel();
        let tanh = tanh_drift_kernel(1.0, 0.0).unwrap();
        let f = TestFunction::smooth(ScalarFn::new("sin", f64::sin), -20.0, 20.0).unwrap();
        let r: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&t| generator_drift_residual(&g, &tanh, &f, 0.5, t, &q()).unwrap().residual)
            .collect();
        assert!(r[1] < 0.2 * r[0] && r[2] < 0.2 * r[1], "{r:?}");
    }

    #[test]
    fn generator_rejects_unrelated_pair() {
        let f = TestFunction::indicator(0.0, 1.0).unwrap();
        let err =
            generator_drift_residual(&bessel3_kernel(), &tanh_drift_kernel(1.0, 0.0).unwrap(), &f, 0.5, 0.01, &q());
        assert!(matches!(err, Err(Error::MeasureMismatch(_))));
    }

    #[test]
    fn test_function_validation() {
        assert!(TestFunction::indicator(1.0, 1.0).is_err());
        let f = TestFunction::indicator(0.0, 1.0).unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(1.5), 0.0);
    }
}
