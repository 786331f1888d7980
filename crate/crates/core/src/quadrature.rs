//! One-dimensional quadrature for densities on intervals and on the line.
//!
//! The adaptive scheme is globally adaptive Gauss–Kronrod (7/15 pair): the
//! panel with the largest `|K15 - G7|` is bisected until the summed error
//! estimate drops below `max(abs_tol, rel_tol * |I|)`. Unbounded ranges are
//! handled by integrating a window of `truncation` scale units around a
//! centre and then adding outward panels until they stop contributing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// QUADPACK tables, kept at their published precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Adaptive,
    /// Composite Simpson rule with a fixed number of intervals per panel.
    FixedGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub scheme: Scheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Half-width of the central window, in units of the caller's scale.
    pub truncation: f64,
    /// Intervals per panel for [`Scheme::FixedGrid`].
    pub grid_points: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            scheme: Scheme::Adaptive,
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 4000,
            truncation: 10.0,
            grid_points: 4096,
        }
    }
}

/// Value and error estimate of a panel or a whole integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single Gauss–Kronrod panel: returns `(K15, G7)`.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, gauss * half)
}

/// The 15 Kronrod nodes and weights on `[a, b]`, for callers that need the
/// integrand values themselves (e.g. per-node Monte Carlo estimates).
pub fn kronrod_nodes(a: f64, b: f64) -> Vec<(f64, f64)> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = Vec::with_capacity(15);
    for j in 0..7 {
        out.push((centre - half * XGK[j], half * WGK[j]));
        out.push((centre + half * XGK[j], half * WGK[j]));
    }
    out.push((centre, half * WGK[7]));
    out
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        Quadrature { abs_tol, rel_tol, ..Quadrature::default() }.validated()
    }

    pub fn fixed_grid(grid_points: usize) -> Result<Self> {
        Quadrature { scheme: Scheme::FixedGrid, grid_points, ..Quadrature::default() }.validated()
    }

    pub fn with_truncation(self, truncation: f64) -> Result<Self> {
        Quadrature { truncation, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let ok = self.abs_tol > 0.0
            && self.rel_tol > 0.0
            && self.truncation > 0.0
            && self.truncation.is_finite()
            && self.max_subdivisions > 0
            && self.grid_points >= 2;
        if ok {
            Ok(self)
        } else {
            Err(Error::Domain(format!("invalid quadrature settings {self:?}")))
        }
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// Integral of `f` over the finite interval `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<f64> {
        self.integrate_estimate(&f, a, b).map(|e| e.value)
    }

    pub fn integrate_estimate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Result<Estimate> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("finite interval required, got [{a}, {b}]")));
        }
        if a == b {
            return Ok(Estimate { value: 0.0, error: 0.0 });
        }
        if a > b {
            return self.integrate_estimate(f, b, a).map(|e| Estimate { value: -e.value, error: e.error });
        }
        match self.scheme {
            Scheme::Adaptive => self.adaptive(f, a, b),
            Scheme::FixedGrid => {
                let fine = simpson(f, a, b, self.grid_points);
                let coarse = simpson(f, a, b, self.grid_points / 2);
                Ok(Estimate { value: fine, error: (fine - coarse).abs() / 15.0 })
            }
        }
    }

    fn adaptive<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Result<Estimate> {
        let make = |a: f64, b: f64| {
            let (k, g) = gauss_kronrod_15(f, a, b);
            Panel { a, b, value: k, error: (k - g).abs() }
        };
        let first = make(a, b);
        let mut value = first.value;
        let mut error = first.error;
        let mut heap = BinaryHeap::new();
        heap.push(first);
        let mut panels = 1;
        while error > self.tolerance(value) {
            if !value.is_finite() {
                return Err(Error::QuadratureNotConverged { estimate: value, error_bound: error });
            }
            if panels >= self.max_subdivisions {
                return Err(Error::QuadratureNotConverged { estimate: value, error_bound: error });
            }
            let worst = heap.pop().expect("heap holds every live panel");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // Panel at floating-point resolution; keep its estimate.
                error -= worst.error;
                heap.push(Panel { error: 0.0, ..worst });
                if heap.iter().all(|p| p.error == 0.0) {
                    break;
                }
                continue;
            }
            let left = make(worst.a, mid);
            let right = make(mid, worst.b);
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            heap.push(left);
            heap.push(right);
            panels += 1;
        }
        // Re-sum to shed the drift of incremental updates.
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        Ok(Estimate { value, error })
    }

    fn integrate_split<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut lo = a;
        for c in cuts.into_iter().chain(std::iter::once(b)) {
            total += self.integrate(f, lo, c)?;
            lo = c;
        }
        Ok(total)
    }

    /// Integral of `f` over `[lo, hi]`, either end possibly infinite.
    ///
    /// The mass is assumed to sit within a few `scale` units of `centre`;
    /// integration starts on `centre ± truncation * scale` and grows outward
    /// panel by panel. `breakpoints` mark discontinuities (e.g. a sign change
    /// of a flipped process at 0).
    pub fn integrate_line<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        centre: f64,
        scale: f64,
        breakpoints: &[f64],
    ) -> Result<f64> {
        if !(lo < hi) || !(scale > 0.0) || !centre.is_finite() {
            return Err(Error::Domain(format!("bad integration range [{lo}, {hi}] around {centre} at scale {scale}")));
        }
        let width = self.truncation * scale;
        let centre = centre.clamp(lo.max(-f64::MAX), hi.min(f64::MAX));
        let core_lo = lo.max(centre - width);
        let core_hi = hi.min(centre + width);
        let mut total = if core_lo < core_hi { self.integrate_split(&f, core_lo, core_hi, breakpoints)? } else { 0.0 };

        const MAX_PANELS: usize = 2000;
        for direction in [1.0, -1.0] {
            let mut edge = if direction > 0.0 { core_hi } else { core_lo };
            let limit = if direction > 0.0 { hi } else { lo };
            let mut panels = 0;
            while edge != limit {
                let next = if direction > 0.0 { (edge + width).min(limit) } else { (edge - width).max(limit) };
                let (a, b) = if direction > 0.0 { (edge, next) } else { (next, edge) };
                let part = self.integrate_split(&f, a, b, breakpoints)?;
                total += part;
                edge = next;
                panels += 1;
                if part.abs() <= 1e-3 * self.tolerance(total) && limit.is_infinite() {
                    break;
                }
                if panels >= MAX_PANELS {
                    return Err(Error::QuadratureNotConverged { estimate: total, error_bound: part.abs() });
                }
            }
        }
        Ok(total)
    }
}
