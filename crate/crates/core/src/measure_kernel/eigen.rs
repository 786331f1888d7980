use crate::error::{Error, Result};
use crate::measure_kernel::measure::ScalarFn;

/// A positive eigenfunction `psi` of a semigroup, a positive co-eigenfunction
/// `psi_hat` of its dual, and the shared eigenvalue `lambda` (1/time):
/// `P_t psi = e^{lambda t} psi`, `P^_t psi_hat = e^{lambda t} psi_hat`.
///
/// Catalog pairs are normalised so `psi(0) = 1`.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub psi: ScalarFn,
    pub psi_hat: ScalarFn,
    pub lambda: f64,
    symmetric: bool,
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}

impl Eigenpair {
    pub fn new(psi: ScalarFn, psi_hat: ScalarFn, lambda: f64) -> Self {
        Eigenpair { psi, psi_hat, lambda, symmetric: false }
    }

    /// `psi_hat = psi`; the natural choice for self-dual kernels.
    pub fn symmetric(psi: ScalarFn, lambda: f64) -> Self {
        Eigenpair { psi_hat: psi.clone(), psi, lambda, symmetric: true }
    }

    pub fn trivial() -> Self {
        Eigenpair::symmetric(ScalarFn::constant(1.0), 0.0)
    }

    /// `psi(x) = e^{kx}`, `lambda = k^2/2` (Brownian motion).
    pub fn exponential(k: f64) -> Result<Self> {
        let k = finite("k", k)?;
        Ok(Eigenpair::symmetric(ScalarFn::new(format!("exp({k}x)"), move |x| (k * x).exp()), 0.5 * k * k))
    }

    /// `psi(x) = cosh(kx + c) / cosh(c)`, `lambda = k^2/2` (Brownian motion).
    pub fn cosh(k: f64, c: f64) -> Result<Self> {
        let (k, c) = (finite("k", k)?, finite("c", c)?);
        let norm = c.cosh();
        Ok(Eigenpair::symmetric(
            ScalarFn::new(format!("cosh({k}x+{c})/cosh({c})"), move |x| (k * x + c).cosh() / norm),
            0.5 * k * k,
        ))
    }

    /// `psi(x) = sinh(k|x|) / (k|x|)`, `lambda = k^2/2` (Bessel(3) radius).
    pub fn bessel_sinh(k: f64) -> Result<Self> {
        let k = finite("k", k)?;
        Ok(Eigenpair::symmetric(
            ScalarFn::new(format!("sinh({k}|x|)/({k}|x|)"), move |x| sinhc(k * x.abs())),
            0.5 * k * k,
        ))
    }

    /// `(1/psi, 1/psi_hat, -lambda)`: undoes an h-transform by this pair.
    pub fn reciprocal(&self) -> Self {
        Eigenpair {
            psi: self.psi.reciprocal(),
            psi_hat: self.psi_hat.reciprocal(),
            lambda: -self.lambda,
            symmetric: self.symmetric,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `(log psi)'(x)` by central differences.
    pub fn drift(&self, x: f64) -> f64 {
        let h = 1e-5 * (1.0 + x.abs());
        ((self.psi.eval(x + h)).ln() - (self.psi.eval(x - h)).ln()) / (2.0 * h)
    }

    pub fn label(&self) -> String {
        format!("psi={}, psi_hat={}, lambda={}", self.psi.label(), self.psi_hat.label(), self.lambda)
    }
}

/// `sinh(u)/u`, continuous at 0.
pub fn sinhc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 + u * u / 6.0
    } else {
        u.sinh() / u
    }
}
