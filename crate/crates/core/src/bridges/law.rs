use crate::bridges::path::PathSample;
use crate::error::{Error, Result};
use crate::measure_kernel::{Eigenpair, TransitionKernel};
use crate::quadrature::Quadrature;

/// A bridge law, determined by a kernel and `(x, t, y)`.
#[derive(Debug, Clone)]
pub struct BridgeSpec {
    kernel: TransitionKernel,
    x: f64,
    t: f64,
    y: f64,
    /// `p_t(x, y)`, cached.
    norm: f64,
}

impl BridgeSpec {
    pub fn new(kernel: TransitionKernel, x: f64, t: f64, y: f64) -> Result<Self> {
        let norm = kernel.density(t, x, y)?;
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain(format!("p_{t}({x}, {y}) = {norm} for {}; bridge undefined", kernel.id())));
        }
        Ok(BridgeSpec { kernel, x, t, y, norm })
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// The spec with the same endpoints on another kernel.
    pub fn with_kernel(&self, kernel: TransitionKernel) -> Result<Self> {
        Self::new(kernel, self.x, self.t, self.y)
    }

    /// `p_{s2-s}(z, z2) p_{t-s2}(z2, y) / p_{t-s}(z, y)`, a density in `z2`
    /// w.r.t. the kernel's reference measure.
    pub fn transition_density(&self, z: f64, s: f64, z2: f64, s2: f64) -> Result<f64> {
        if !(0.0 <= s && s < s2 && s2 < self.t) {
            return Err(Error::TimeOrdering(format!("need 0 <= s < s2 < t, got s = {s}, s2 = {s2}, t = {}", self.t)));
        }
        let k = &self.kernel;
        let den = k.density(self.t - s, z, self.y)?;
        if !(den > 0.0) {
            return Err(Error::Domain(format!("p_{}({z}, {}) vanishes", self.t - s, self.y)));
        }
        Ok(k.density(s2 - s, z, z2)? * k.density(self.t - s2, z2, self.y)? / den)
    }

    /// [`transition_density`](Self::transition_density) w.r.t. Lebesgue
    /// measure; this is the form in which bridges of different kernels compare.
    pub fn transition_density_lebesgue(&self, z: f64, s: f64, z2: f64, s2: f64) -> Result<f64> {
        Ok(self.transition_density(z, s, z2, s2)? * self.kernel.measure_density(z2))
    }

    /// `p_s(x, z) p_{t-s}(z, y) / p_t(x, y)` w.r.t. the reference measure.
    pub fn marginal_density(&self, s: f64, z: f64) -> Result<f64> {
        if !(0.0 < s && s < self.t) {
            return Err(Error::TimeOrdering(format!("need 0 < s < t, got s = {s}, t = {}", self.t)));
        }
        let k = &self.kernel;
        Ok(k.density(s, self.x, z)? * k.density(self.t - s, z, self.y)? / self.norm)
    }

    pub fn marginal_density_lebesgue(&self, s: f64, z: f64) -> Result<f64> {
        Ok(self.marginal_density(s, z)? * self.kernel.measure_density(z))
    }

    /// Integral of the Lebesgue marginal at time `s` over `[lo, hi]`
    /// intersected with the support.
    pub fn marginal_mass(&self, s: f64, lo: f64, hi: f64, q: &Quadrature) -> Result<f64> {
        if !(0.0 < s && s < self.t) {
            return Err(Error::TimeOrdering(format!("need 0 < s < t, got s = {s}, t = {}", self.t)));
        }
        let sup = self.kernel.support();
        let (lo, hi) = (lo.max(sup.lo), hi.min(sup.hi));
        if !(lo < hi) {
            return Ok(0.0);
        }
        let k = &self.kernel;
        let (x, y, t) = (self.x, self.y, self.t);
        let centre = x + s / t * (y - x);
        let scale = (s * (t - s) / t).sqrt();
        q.integrate_line(
            |z| k.density_raw(s, x, z) * k.density_raw(t - s, z, y) * k.measure_density(z) / self.norm,
            lo,
            hi,
            centre,
            scale,
            k.breakpoints(),
        )
    }

    /// Bridge marginal CDF at time `s`.
    pub fn marginal_cdf(&self, s: f64, z: f64, q: &Quadrature) -> Result<f64> {
        self.marginal_mass(s, f64::NEG_INFINITY, z, q)
    }

    /// `p_{t-s}(X_s, y) / p_t(x, y)`: the density of the bridge law w.r.t.
    /// the unpinned law, on the information up to time `s`.
    pub fn likelihood_ratio(&self, path: &PathSample, s: f64) -> Result<f64> {
        if !(0.0 <= s && s < self.t) {
            return Err(Error::TimeOrdering(format!("need 0 <= s < t, got {s}")));
        }
        let xs = path.value_at(s)?;
        Ok(self.kernel.density(self.t - s, xs, self.y)? / self.norm)
    }
}

/// `bridge_transition_density` as a free function.
pub fn bridge_transition_density(spec: &BridgeSpec, z: f64, s: f64, z2: f64, s2: f64) -> Result<f64> {
    spec.transition_density(z, s, z2, s2)
}

pub fn bridge_marginal_density(spec: &BridgeSpec, s: f64, z: f64) -> Result<f64> {
    spec.marginal_density(s, z)
}

pub fn bridge_likelihood_ratio(spec: &BridgeSpec, path: &PathSample, s: f64) -> Result<f64> {
    spec.likelihood_ratio(path, s)
}

/// Multiplicative functional `Z_s = e^{-lambda s} psi(X_s) / psi(X_0)`.
pub fn multiplicative_functional(eig: &Eigenpair, path: &PathSample, s: f64) -> Result<f64> {
    let x0 = path.values()[0];
    let xs = path.value_at(s)?;
    Ok((-eig.lambda * s).exp() * eig.psi.eval(xs) / eig.psi.eval(x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridges::path::TimeGrid;
    use crate::measure_kernel::{flipped_bessel_kernel, gaussian_kernel, tanh_drift_kernel, FlipVariant};
    use std::f64::consts::PI;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn gaussian_bridge_midpoint_density() {
        let spec = BridgeSpec::new(gaussian_kernel(), 0.0, 1.0, 0.0).unwrap();
        let v = spec.transition_density(0.0, 0.0, 0.0, 0.5).unwrap();
        assert!((v - (2.0 / PI).sqrt()).abs() < 1e-14);
        // N(0, 1/4) everywhere.
        for z in [-1.0, 0.3, 0.9] {
            let m = spec.marginal_density(0.5, z).unwrap();
            let exact = (-2.0 * z * z).exp() * (2.0 / PI).sqrt();
            assert!((m - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn pinning_near_horizon() {
        let spec = BridgeSpec::new(gaussian_kernel(), 0.0, 1.0, 0.7).unwrap();
        let s2 = 1.0 - 1e-6;
        let eps = 0.01;
        let mass = q().integrate(|w| spec.transition_density(0.2, 0.5, w, s2).unwrap(), 0.7 - eps, 0.7 + eps).unwrap();
        assert!(mass > 1.0 - 1e-9, "{mass}");
    }

    #[test]
    fn tanh_and_gaussian_bridges_agree() {
        let g = BridgeSpec::new(gaussian_kernel(), 0.0, 1.0, 0.5).unwrap();
        let h = g.with_kernel(tanh_drift_kernel(1.0, 0.0).unwrap()).unwrap();
        for (z, s, z2, s2) in [(0.0, 0.0, 0.3, 0.25), (1.2, 0.4, -0.7, 0.9), (-2.0, 0.1, 2.0, 0.2)] {
            let a = g.transition_density_lebesgue(z, s, z2, s2).unwrap();
            let b = h.transition_density_lebesgue(z, s, z2, s2).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn time_ordering_errors() {
        let spec = BridgeSpec::new(gaussian_kernel(), 0.0, 1.0, 0.0).unwrap();
        assert!(matches!(spec.transition_density(0.0, 0.5, 0.0, 0.5), Err(Error::TimeOrdering(_))));
        assert!(matches!(spec.transition_density(0.0, 0.2, 0.0, 1.0), Err(Error::TimeOrdering(_))));
        assert!(matches!(spec.marginal_density(0.0, 0.0), Err(Error::TimeOrdering(_))));
    }

    #[test]
    fn marginals_normalize() {
        let specs = [
            BridgeSpec::new(gaussian_kernel(), 0.0, 1.0, 0.5).unwrap(),
            BridgeSpec::new(tanh_drift_kernel(2.0, 1.0).unwrap(), -1.0, 2.0, 0.5).unwrap(),
            BridgeSpec::new(flipped_bessel_kernel(FlipVariant::X), 0.0, 1.0, 1.0).unwrap(),
            BridgeSpec::new(flipped_bessel_kernel(FlipVariant::Y), -0.5, 1.5, 1.0).unwrap(),
        ];
        for spec in &specs {
            for s in [0.05, 0.5, 0.95] {
                let s = s * spec.t();
                let m = spec.marginal_mass(s, f64::NEG_INFINITY, f64::INFINITY, &q()).unwrap();
                assert!((m - 1.0).abs() < 1e-6, "{} s={s}: {m}", spec.kernel().id());
            }
        }
    }

    #[test]
    fn marginal_concentrates_at_start() {
        let spec = BridgeSpec::new(gaussian_kernel(), 0.3, 1.0, -1.0).unwrap();
        let m = spec.marginal_mass(1e-6, 0.29, 0.31, &q()).unwrap();
        assert!(m > 1.0 - 1e-9);
    }

    #[test]
    fn flipped_bridge_negative_mass_matches_parity_closed_form() {
        let spec = BridgeSpec::new(flipped_bessel_kernel(FlipVariant::X), 0.0, 1.0, 1.0).unwrap();
        let w = |u: f64, same: bool| if same { (1.0 + (-2.0 * u).exp()) / 2.0 } else { (1.0 - (-2.0 * u).exp()) / 2.0 };
        for s in [0.01, 0.3] {
            let neg = spec.marginal_mass(s, f64::NEG_INFINITY, 0.0, &q()).unwrap();
            let exact = w(s, false) * w(1.0 - s, false) / w(1.0, true);
            assert!((neg - exact).abs() < 1e-9, "s={s}: {neg} vs {exact}");
        }
        let tiny = spec.marginal_mass(1e-9, f64::NEG_INFINITY, 0.0, &q()).unwrap();
        assert!(tiny < 1e-9);
    }

    #[test]
    fn likelihood_ratio_values() {
        let spec = BridgeSpec::new(gaussian_kernel(), 0.0, 1.0, 0.0).unwrap();
        let path = PathSample::new(TimeGrid::uniform(2, 1.0).unwrap(), vec![0.0, 0.0, 0.4], false).unwrap();
        assert_eq!(spec.likelihood_ratio(&path, 0.0).unwrap(), 1.0);
        assert!((spec.likelihood_ratio(&path, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(spec.likelihood_ratio(&path, 0.25), Err(Error::MissingGridPoint(0.25)));
    }

    #[test]
    fn functional_is_multiplicative() {
        let eig = Eigenpair::cosh(1.0, 0.0).unwrap();
        let grid = TimeGrid::uniform(4, 2.0).unwrap();
        let path = PathSample::new(grid, vec![0.1, -0.4, 1.3, 0.2, 2.2], false).unwrap();
        let whole = multiplicative_functional(&eig, &path, 2.0).unwrap();
        let first = multiplicative_functional(&eig, &path, 0.5).unwrap();
        let rest = multiplicative_functional(&eig, &path.shifted(0.5).unwrap(), 1.5).unwrap();
        assert!((whole - first * rest).abs() <= 1e-15 * whole);
    }
}
