//! Closed-form kernels and their string identifiers
//! (`gaussian`, `drift:k`, `tanh:k:c`, `bessel3`, `flipbessel:X|Y`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure_kernel::eigen::Eigenpair;
use crate::measure_kernel::kernel::{
    bessel3_density, h_transform, parity_weight, FlipVariant, Law, Side, TransitionKernel,
};
use crate::measure_kernel::measure::{ReferenceMeasure, ScalarFn, Support};

/// Standard Brownian motion, Lebesgue reference measure.
pub fn gaussian_kernel() -> TransitionKernel {
    TransitionKernel::from_law(Law::Gaussian, ReferenceMeasure::lebesgue(Support::REAL_LINE), "gaussian")
}

/// Brownian motion with drift `k`, as the h-transform of Brownian motion by
/// `e^{kx}`; its reference measure is the speed measure `e^{2kx} dx`.
pub fn constant_drift_kernel(k: f64) -> Result<TransitionKernel> {
    Ok(h_transform(&gaussian_kernel(), &Eigenpair::exponential(k)?).with_id(format!("drift:{k}")))
}

/// Brownian motion with drift `k tanh(kx + c)`, as the h-transform of
/// Brownian motion by `cosh(kx + c)/cosh(c)` with `lambda = k^2/2`.
pub fn tanh_drift_kernel(k: f64, c: f64) -> Result<TransitionKernel> {
    Ok(h_transform(&gaussian_kernel(), &Eigenpair::cosh(k, c)?).with_id(format!("tanh:{k}:{c}")))
}

/// Bessel(3) on `[0, ∞)`, density w.r.t. `y^2 dy`.
pub fn bessel3_kernel() -> TransitionKernel {
    TransitionKernel::from_law(
        Law::Bessel3,
        ReferenceMeasure::with_density(Support::HALF_LINE, ScalarFn::new("y^2", |y| y * y)),
        "bessel3",
    )
}

/// Bessel(3) radius with a sign flipped at the jumps of an independent
/// unit-rate Poisson clock. Density w.r.t. `y^2 dy` on the line:
/// `b_t(|x|, |y|) (1 ± e^{-2t})/2`, `+` when `y` lies on the side the
/// variant assigns to `x`.
pub fn flipped_bessel_kernel(variant: FlipVariant) -> TransitionKernel {
    let id = match variant {
        FlipVariant::X => "flipbessel:X",
        FlipVariant::Y => "flipbessel:Y",
    };
    TransitionKernel::from_law(
        Law::FlippedBessel(variant),
        ReferenceMeasure::with_density(Support::REAL_LINE, ScalarFn::new("y^2", |y| y * y)),
        id,
    )
}

/// One-sided limit `lim_{x -> 0±} p_t(x, y)` of either flipped-Bessel kernel.
pub fn flipped_bessel_zero_limit(t: f64, from: Side, y: f64) -> f64 {
    let target = if y >= 0.0 { Side::Plus } else { Side::Minus };
    bessel3_density(t, 0.0, y.abs()) * parity_weight(t, from == target)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelId {
    Gaussian,
    Drift(f64),
    Tanh(f64, f64),
    Bessel3,
    FlipBessel(FlipVariant),
}

impl KernelId {
    pub fn kernel(&self) -> Result<TransitionKernel> {
        match *self {
            KernelId::Gaussian => Ok(gaussian_kernel()),
            KernelId::Drift(k) => constant_drift_kernel(k),
            KernelId::Tanh(k, c) => tanh_drift_kernel(k, c),
            KernelId::Bessel3 => Ok(bessel3_kernel()),
            KernelId::FlipBessel(v) => Ok(flipped_bessel_kernel(v)),
        }
    }

    /// SDE drift `mu` for kernels of the form `dY = dB + mu(Y) dt`.
    pub fn drift(&self) -> Option<ScalarFn> {
        match *self {
            KernelId::Gaussian => Some(ScalarFn::constant(0.0)),
            KernelId::Drift(k) => Some(ScalarFn::constant(k)),
            KernelId::Tanh(k, c) => Some(ScalarFn::new(format!("{k}tanh({k}x+{c})"), move |x| k * (k * x + c).tanh())),
            _ => None,
        }
    }

    /// A known positive eigenpair of the kernel itself.
    pub fn eigenpair(&self) -> Result<Eigenpair> {
        match *self {
            KernelId::Gaussian => Eigenpair::cosh(1.0, 0.0),
            KernelId::Drift(k) => Ok(Eigenpair::exponential(k)?.reciprocal()),
            KernelId::Tanh(k, c) => Ok(Eigenpair::cosh(k, c)?.reciprocal()),
            KernelId::Bessel3 | KernelId::FlipBessel(_) => Eigenpair::bessel_sinh(1.0),
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelId::Gaussian => write!(f, "gaussian"),
            KernelId::Drift(k) => write!(f, "drift:{k}"),
            KernelId::Tanh(k, c) => write!(f, "tanh:{k}:{c}"),
            KernelId::Bessel3 => write!(f, "bessel3"),
            KernelId::FlipBessel(FlipVariant::X) => write!(f, "flipbessel:X"),
            KernelId::FlipBessel(FlipVariant::Y) => write!(f, "flipbessel:Y"),
        }
    }
}

fn real(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("expected a decimal number, got {s:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse(format!("parameter must be finite, got {s:?}")))
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["gaussian"] => Ok(KernelId::Gaussian),
            ["bessel3"] => Ok(KernelId::Bessel3),
            ["drift", k] => Ok(KernelId::Drift(real(k)?)),
            ["tanh", k, c] => Ok(KernelId::Tanh(real(k)?, real(c)?)),
            ["flipbessel", "X"] => Ok(KernelId::FlipBessel(FlipVariant::X)),
            ["flipbessel", "Y"] => Ok(KernelId::FlipBessel(FlipVariant::Y)),
            _ => Err(Error::Parse(format!("unknown kernel id {s:?}"))),
        }
    }
}

/// Resolves a catalog identifier to its kernel.
pub fn parse_kernel(id: &str) -> Result<TransitionKernel> {
    id.parse::<KernelId>()?.kernel()
}
