use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure_kernel::eigen::Eigenpair;
use crate::measure_kernel::measure::{ReferenceMeasure, ScalarFn, Support};
use crate::quadrature::Quadrature;

/// Which side of the origin a state counts as, for sign conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// The two flipped-Bessel processes differ only in how they treat state 0:
/// `X` counts 0 as positive, `Y` counts it as negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipVariant {
    X,
    Y,
}

impl FlipVariant {
    pub fn side(self, x: f64) -> Side {
        let positive = match self {
            FlipVariant::X => x >= 0.0,
            FlipVariant::Y => x > 0.0,
        };
        if positive {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

#[derive(Debug)]
pub(crate) enum Law {
    Gaussian,
    Bessel3,
    FlippedBessel(FlipVariant),
    HTransform { base: TransitionKernel, eigen: Eigenpair },
}

/// A transition density `p_t(x, y)` with respect to the kernel's own
/// reference measure, so `P_t f(x) = ∫ p_t(x,y) f(y) m(dy)`.
///
/// Kernels are immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    law: Arc<Law>,
    measure: ReferenceMeasure,
    id: String,
}

#[inline]
pub(crate) fn gaussian_density(t: f64, d: f64) -> f64 {
    (-d * d / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Bessel(3) density w.r.t. `y^2 dy` between radii `a, b >= 0`:
/// `(2/t) phi_t(b - a) (1 - e^{-u}) / u` with `u = 2ab/t`, which reduces to
/// the entrance law `sqrt(2/pi) t^{-3/2} e^{-b^2/2t}` at `a = 0`.
#[inline]
pub(crate) fn bessel3_density(t: f64, a: f64, b: f64) -> f64 {
    let u = 2.0 * a * b / t;
    let ratio = if u < 1e-8 { 1.0 - 0.5 * u } else { -(-u).exp_m1() / u };
    2.0 / t * gaussian_density(t, b - a) * ratio
}

/// Probability that a unit-rate Poisson clock has even (`same = true`) or
/// odd parity at time `t`.
#[inline]
pub(crate) fn parity_weight(t: f64, same: bool) -> f64 {
    let e = (-2.0 * t).exp();
    if same {
        0.5 * (1.0 + e)
    } else {
        -0.5 * (-2.0 * t).exp_m1()
    }
}

impl TransitionKernel {
    pub(crate) fn from_law(law: Law, measure: ReferenceMeasure, id: impl Into<String>) -> Self {
        TransitionKernel { law: Arc::new(law), measure, id: id.into() }
    }

    pub(crate) fn law(&self) -> &Law {
        &self.law
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn measure(&self) -> &ReferenceMeasure {
        &self.measure
    }

    pub fn support(&self) -> Support {
        self.measure.support().unwrap_or(Support::REAL_LINE)
    }

    /// Lebesgue density of the reference measure at `y`.
    pub fn measure_density(&self, y: f64) -> f64 {
        self.measure.density_at(y)
    }

    /// Points where densities are discontinuous in the spatial variables.
    pub fn breakpoints(&self) -> &'static [f64] {
        match self.law() {
            Law::FlippedBessel(_) => &[0.0],
            Law::HTransform { base, .. } => base.breakpoints(),
            _ => &[],
        }
    }

    /// The underlying kernel and eigenpair if this kernel is an h-transform.
    pub fn h_parts(&self) -> Option<(&TransitionKernel, &Eigenpair)> {
        match self.law() {
            Law::HTransform { base, eigen } => Some((base, eigen)),
            _ => None,
        }
    }

    /// Strips every h-transform layer. Bridges of `self` and `root()` coincide.
    pub fn root(&self) -> &TransitionKernel {
        match self.law() {
            Law::HTransform { base, .. } => base.root(),
            _ => self,
        }
    }

    /// Density of the speed measure w.r.t. Lebesgue when the kernel is a
    /// diffusion on natural scale with generator `(1/rho) d^2/dx^2`.
    pub fn speed_density(&self, _x: f64) -> Option<f64> {
        match self.law() {
            Law::Gaussian => Some(2.0),
            _ => None,
        }
    }

    pub fn is_self_dual(&self) -> bool {
        match self.law() {
            Law::HTransform { base, eigen } => base.is_self_dual() && eigen.is_symmetric(),
            _ => true,
        }
    }

    pub(crate) fn check(&self, t: f64, x: f64, y: f64) -> Result<()> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time must be positive and finite, got {t}")));
        }
        let s = self.support();
        if !s.contains(x) || !s.contains(y) {
            return Err(Error::Domain(format!(
                "states ({x}, {y}) outside support [{}, {}] of {}",
                s.lo, s.hi, self.id
            )));
        }
        Ok(())
    }

    /// `p_t(x, y)` w.r.t. this kernel's reference measure.
    pub fn density(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        self.check(t, x, y)?;
        Ok(self.density_raw(t, x, y))
    }

    /// Unchecked [`density`](Self::density) for inner loops.
    pub fn density_raw(&self, t: f64, x: f64, y: f64) -> f64 {
        match self.law() {
            Law::Gaussian => gaussian_density(t, y - x),
            Law::Bessel3 => bessel3_density(t, x.abs(), y.abs()),
            Law::FlippedBessel(v) => bessel3_density(t, x.abs(), y.abs()) * parity_weight(t, v.side(x) == v.side(y)),
            Law::HTransform { base, eigen } => {
                (-eigen.lambda * t).exp() * base.density_raw(t, x, y) / (eigen.psi.eval(x) * eigen.psi_hat.eval(y))
            }
        }
    }

    /// Dual density `p^_t(x, y)`, computed structurally (not by swapping
    /// arguments) so duality checks compare two independent routes.
    pub fn dual_density(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        self.check(t, x, y)?;
        Ok(self.dual_density_raw(t, x, y))
    }

    pub fn dual_density_raw(&self, t: f64, x: f64, y: f64) -> f64 {
        match self.law() {
            Law::HTransform { base, eigen } => {
                (-eigen.lambda * t).exp() * base.dual_density_raw(t, x, y) / (eigen.psi_hat.eval(x) * eigen.psi.eval(y))
            }
            _ => self.density_raw(t, y, x),
        }
    }

    /// Density of `P_t(x, dy)` w.r.t. Lebesgue measure: `p_t(x,y) rho(y)`.
    pub fn lebesgue_density(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        Ok(self.density(t, x, y)? * self.measure_density(y))
    }

    /// `∫ p_t(x, y) f(y) m(dy)` over `[lo, hi]` intersected with the support.
    pub fn integrate_against_on(
        &self,
        t: f64,
        x: f64,
        f: impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        q: &Quadrature,
    ) -> Result<f64> {
        self.check(t, x, x)?;
        let s = self.support();
        let (lo, hi) = (lo.max(s.lo), hi.min(s.hi));
        if !(lo < hi) {
            return Ok(0.0);
        }
        q.integrate_line(
            |y| {
                let w = self.density_raw(t, x, y) * self.measure_density(y);
                if w == 0.0 {
                    0.0
                } else {
                    w * f(y)
                }
            },
            lo,
            hi,
            x,
            t.sqrt(),
            self.breakpoints(),
        )
    }

    /// `P_t f(x) = ∫ p_t(x, y) f(y) m(dy)` over the whole support.
    pub fn integrate_against(&self, t: f64, x: f64, f: impl Fn(f64) -> f64, q: &Quadrature) -> Result<f64> {
        self.integrate_against_on(t, x, f, f64::NEG_INFINITY, f64::INFINITY, q)
    }
}

/// Doob h-transform: density `e^{-lambda t} p_t(x,y) / (psi(x) psi_hat(y))`
/// w.r.t. the measure `psi psi_hat m`. Equivalently
/// `Q_t(x, dy) = e^{-lambda t} psi(y)/psi(x) P_t(x, dy)`.
///
/// The pair is not checked against the kernel; see
/// [`eigen_residual`](crate::measure_kernel::eigen_residual).
pub fn h_transform(kernel: &TransitionKernel, eig: &Eigenpair) -> TransitionKernel {
    let factor = eig.psi.product(&eig.psi_hat);
    let measure = kernel.measure().reweighted(&factor);
    let id = format!("h[{}; {}]", kernel.id(), eig.psi.label());
    TransitionKernel::from_law(Law::HTransform { base: kernel.clone(), eigen: eig.clone() }, measure, id)
}

/// Measure density function of a kernel, if it has one.
pub fn measure_density_fn(kernel: &TransitionKernel) -> Option<ScalarFn> {
    kernel.measure().density_fn().cloned()
}
