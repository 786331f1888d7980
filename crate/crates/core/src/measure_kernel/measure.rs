use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A shareable real function with a printable label.
#[derive(Clone)]
pub struct ScalarFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    label: String,
}

impl ScalarFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFn { f: Arc::new(f), label: label.into() }
    }

    pub fn constant(c: f64) -> Self {
        ScalarFn::new(format!("{c}"), move |_| c)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn reciprocal(&self) -> Self {
        let inner = self.clone();
        ScalarFn::new(format!("1/({})", self.label), move |x| 1.0 / inner.eval(x))
    }

    pub fn product(&self, other: &ScalarFn) -> Self {
        let (a, b) = (self.clone(), other.clone());
        ScalarFn::new(format!("({})*({})", self.label, other.label), move |x| a.eval(x) * b.eval(x))
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.label)
    }
}

/// A real interval. Finite endpoints belong to the interval (Bessel(3) may
/// start at its entrance point 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const REAL_LINE: Support = Support { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const HALF_LINE: Support = Support { lo: 0.0, hi: f64::INFINITY };

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone)]
pub enum ReferenceMeasure {
    /// `rho(x) dx` on an interval.
    Lebesgue { support: Support, density: ScalarFn },
    /// Positive weights on `{0, .., n-1}`.
    FiniteWeights(Vec<f64>),
}

impl ReferenceMeasure {
    pub fn lebesgue(support: Support) -> Self {
        ReferenceMeasure::Lebesgue { support, density: ScalarFn::constant(1.0) }
    }

    pub fn with_density(support: Support, density: ScalarFn) -> Self {
        ReferenceMeasure::Lebesgue { support, density }
    }

    pub fn finite(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("reference weights must be finite and positive".into()));
        }
        Ok(ReferenceMeasure::FiniteWeights(weights))
    }

    pub fn support(&self) -> Option<Support> {
        match self {
            ReferenceMeasure::Lebesgue { support, .. } => Some(*support),
            ReferenceMeasure::FiniteWeights(_) => None,
        }
    }

    /// Density w.r.t. Lebesgue measure, or the weight of state `x as usize`.
    pub fn density_at(&self, x: f64) -> f64 {
        match self {
            ReferenceMeasure::Lebesgue { density, .. } => density.eval(x),
            ReferenceMeasure::FiniteWeights(w) => w.get(x as usize).copied().unwrap_or(0.0),
        }
    }

    pub fn density_fn(&self) -> Option<&ScalarFn> {
        match self {
            ReferenceMeasure::Lebesgue { density, .. } => Some(density),
            ReferenceMeasure::FiniteWeights(_) => None,
        }
    }

    /// The measure `factor * self`.
    pub fn reweighted(&self, factor: &ScalarFn) -> Self {
        match self {
            ReferenceMeasure::Lebesgue { support, density } => {
                ReferenceMeasure::Lebesgue { support: *support, density: density.product(factor) }
            }
            ReferenceMeasure::FiniteWeights(w) => ReferenceMeasure::FiniteWeights(
                w.iter().enumerate().map(|(i, wi)| wi * factor.eval(i as f64)).collect(),
            ),
        }
    }
}
