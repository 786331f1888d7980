//! Path samplers. Bridges are filled in left to right from the exact
//! bridge transition densities, so no refinement scheme is involved.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bridges::law::BridgeSpec;
use crate::bridges::path::{PathPool, PathSample, TimeGrid};
use crate::error::{Error, Result};
use crate::measure_kernel::kernel::{bessel3_density, parity_weight, Law};
use crate::measure_kernel::{FlipVariant, Side, Support, TransitionKernel};
use crate::montecarlo::rng::RngPolicy;
use crate::par::{try_collect_draws, Exec};

/// Proposal draws allowed per accepted value.
pub const REJECTION_BUDGET: usize = 10_000;

const COARSE_POINTS: usize = 48;
const SCAN_POINTS: usize = 256;
const SD_INFLATION: f64 = 1.25;
const ENVELOPE_SLACK: f64 = 1.2;

/// How a bridge conditional is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Closed forms where available. h-transformed kernels sample the bridge
    /// of their root kernel, which is the same law.
    #[default]
    Auto,
    /// Rejection sampling against the kernel's own bridge density, with no
    /// reference to any other kernel.
    Generic,
}

struct Proposal {
    mean: f64,
    sd: f64,
    envelope: f64,
    mass: f64,
}

fn normal_pdf(w: f64, mean: f64, sd: f64) -> f64 {
    let u = (w - mean) / sd;
    (-0.5 * u * u).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Weighted mean, standard deviation and total mass of `f` on a uniform
/// grid over `[a, b]`.
fn moments(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let h = (b - a) / (COARSE_POINTS - 1) as f64;
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..COARSE_POINTS {
        let w = a + i as f64 * h;
        let v = f(w);
        if v.is_finite() && v > 0.0 {
            m0 += v;
            m1 += v * w;
            m2 += v * w * w;
        }
    }
    if m0 <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let mean = m1 / m0;
    let var = (m2 / m0 - mean * mean).max(0.0);
    (mean, var.sqrt().max(h), m0 * h)
}

fn clip(support: Support, a: f64, b: f64) -> (f64, f64) {
    (a.max(support.lo), b.min(support.hi))
}

/// Gaussian proposal matched to `f` in two coarse passes, starting from a
/// guess `(m0, s0)`, with an envelope from a scan of `f / g`.
fn fit_proposal(f: &impl Fn(f64) -> f64, support: Support, m0: f64, s0: f64) -> Result<Proposal> {
    let (a, b) = clip(support, m0 - 10.0 * s0, m0 + 10.0 * s0);
    let (mean, sd, mass) = moments(f, a, b);
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("bridge conditional vanishes near {m0} (scale {s0})")));
    }
    let (a, b) = clip(support, mean - 8.0 * sd, mean + 8.0 * sd);
    let refined = moments(f, a, b);
    let (mean, sd, mass) = if refined.2 > 0.0 { refined } else { (mean, sd, mass) };
    let sd = SD_INFLATION * sd;
    let (a, b) = (mean - 6.0 * sd, mean + 6.0 * sd);
    let h = (b - a) / (SCAN_POINTS - 1) as f64;
    let mut ratio: f64 = 0.0;
    for i in 0..SCAN_POINTS {
        let w = a + i as f64 * h;
        if support.contains(w) {
            let r = f(w) / normal_pdf(w, mean, sd);
            if r.is_finite() {
                ratio = ratio.max(r);
            }
        }
    }
    if !(ratio > 0.0) {
        return Err(Error::Domain(format!("empty envelope scan around {mean}")));
    }
    Ok(Proposal { mean, sd, envelope: ENVELOPE_SLACK * ratio, mass })
}

fn rejection_draw<R: Rng + ?Sized>(
    f: &impl Fn(f64) -> f64,
    support: Support,
    m0: f64,
    s0: f64,
    rng: &mut R,
) -> Result<f64> {
    let p = fit_proposal(f, support, m0, s0)?;
    for _ in 0..REJECTION_BUDGET {
        let w = p.mean + p.sd * rng.sample::<f64, _>(StandardNormal);
        if !support.contains(w) {
            continue;
        }
        let u: f64 = rng.random();
        if u * p.envelope * normal_pdf(w, p.mean, p.sd) < f(w) {
            return Ok(w);
        }
    }
    Err(Error::RejectionBudget { tries: REJECTION_BUDGET, acceptance_rate: p.mass / p.envelope })
}

fn gaussian_guess(z: f64, h: f64, r: f64, y: f64) -> (f64, f64) {
    (z + h / (h + r) * (y - z), (h * r / (h + r)).sqrt())
}

/// Bessel(3) bridge conditional for the radius: from `a` over `h`, with `b`
/// to be reached after a further `r`.
fn bessel_bridge_step<R: Rng + ?Sized>(a: f64, h: f64, r: f64, b: f64, rng: &mut R) -> Result<f64> {
    let f = |w: f64| bessel3_density(h, a, w) * w * w * bessel3_density(r, w, b);
    let (m0, s0) = gaussian_guess(a, h, r, b);
    rejection_draw(&f, Support::HALF_LINE, m0, s0, rng)
}

fn side_sign(side: Side) -> f64 {
    match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    }
}

/// Flipped-Bessel bridge step. The conditional density factorizes into a
/// radial Bessel(3) bridge term and a sign term, so the sign is drawn from
/// its two-point law and only the radius goes through rejection.
fn flipped_bridge_step<R: Rng + ?Sized>(v: FlipVariant, z: f64, h: f64, r: f64, y: f64, rng: &mut R) -> Result<f64> {
    let (from, to) = (v.side(z), v.side(y));
    let weight = |side: Side| parity_weight(h, side == from) * parity_weight(r, side == to);
    let (wp, wm) = (weight(Side::Plus), weight(Side::Minus));
    let side = if rng.random::<f64>() * (wp + wm) < wp { Side::Plus } else { Side::Minus };
    let radius = bessel_bridge_step(z.abs(), h, r, y.abs(), rng)?;
    Ok(side_sign(side) * radius)
}

fn generic_bridge_step<R: Rng + ?Sized>(
    k: &TransitionKernel,
    z: f64,
    h: f64,
    r: f64,
    y: f64,
    rng: &mut R,
) -> Result<f64> {
    let f = |w: f64| k.density_raw(h, z, w) * k.density_raw(r, w, y) * k.measure_density(w);
    let (m0, s0) = gaussian_guess(z, h, r, y);
    rejection_draw(&f, k.support(), m0, s0, rng)
}

fn bridge_step<R: Rng + ?Sized>(
    k: &TransitionKernel,
    route: Route,
    z: f64,
    h: f64,
    r: f64,
    y: f64,
    rng: &mut R,
) -> Result<f64> {
    if route == Route::Generic {
        return generic_bridge_step(k, z, h, r, y, rng);
    }
    match k.root().law() {
        Law::Gaussian => {
            let (mean, sd) = gaussian_guess(z, h, r, y);
            Ok(mean + sd * rng.sample::<f64, _>(StandardNormal))
        }
        Law::Bessel3 => bessel_bridge_step(z, h, r, y, rng),
        Law::FlippedBessel(v) => flipped_bridge_step(*v, z, h, r, y, rng),
        Law::HTransform { .. } => unreachable!("root() strips h-transforms"),
    }
}

fn check_horizon(grid: &TimeGrid, t: f64) -> Result<()> {
    if (grid.horizon() - t).abs() > 1e-12 * t {
        return Err(Error::Domain(format!("grid ends at {} but horizon is {t}", grid.horizon())));
    }
    Ok(())
}

fn bridge_values<R: Rng + ?Sized>(spec: &BridgeSpec, grid: &TimeGrid, route: Route, rng: &mut R) -> Result<Vec<f64>> {
    let n = grid.len();
    let (times, to_go) = (grid.times(), grid.time_to_go());
    let mut values = Vec::with_capacity(n);
    values.push(spec.x());
    for i in 1..n - 1 {
        let z = values[i - 1];
        let w = bridge_step(spec.kernel(), route, z, times[i] - times[i - 1], to_go[i], spec.y(), rng)?;
        values.push(w);
    }
    values.push(spec.y());
    Ok(values)
}

/// One bridge path on `grid`, endpoints pinned exactly.
pub fn sample_bridge<R: Rng + ?Sized>(spec: &BridgeSpec, grid: &TimeGrid, rng: &mut R) -> Result<PathSample> {
    sample_bridge_with(spec, grid, Route::Auto, rng)
}

pub fn sample_bridge_with<R: Rng + ?Sized>(
    spec: &BridgeSpec,
    grid: &TimeGrid,
    route: Route,
    rng: &mut R,
) -> Result<PathSample> {
    check_horizon(grid, spec.t())?;
    PathSample::new(grid.clone(), bridge_values(spec, grid, route, rng)?, true)
}

/// `n` bridge paths; draw `i` uses the stream fixed by [`crate::par`], so the
/// pool does not depend on `exec`.
pub fn sample_bridges(
    spec: &BridgeSpec,
    grid: &TimeGrid,
    n: usize,
    route: Route,
    policy: &RngPolicy,
    exec: Exec,
) -> Result<PathPool> {
    check_horizon(grid, spec.t())?;
    let rows = try_collect_draws(exec, policy, n, |rng| bridge_values(spec, grid, route, rng))?;
    PathPool::from_rows(grid.clone(), rows, true)
}

fn forward_step<R: Rng + ?Sized>(k: &TransitionKernel, z: f64, h: f64, rng: &mut R) -> Result<f64> {
    let radial = |a: f64, rng: &mut R| {
        let sd = h.sqrt();
        let w: [f64; 3] = std::array::from_fn(|_| sd * rng.sample::<f64, _>(StandardNormal));
        ((a + w[0]).powi(2) + w[1] * w[1] + w[2] * w[2]).sqrt()
    };
    match k.law() {
        Law::Gaussian => Ok(z + h.sqrt() * rng.sample::<f64, _>(StandardNormal)),
        Law::Bessel3 => Ok(radial(z, rng)),
        Law::FlippedBessel(v) => {
            let keep = rng.random::<f64>() < parity_weight(h, true);
            let side = match (v.side(z), keep) {
                (s, true) => s,
                (Side::Plus, false) => Side::Minus,
                (Side::Minus, false) => Side::Plus,
            };
            Ok(side_sign(side) * radial(z.abs(), rng))
        }
        Law::HTransform { .. } => {
            let f = |w: f64| k.density_raw(h, z, w) * k.measure_density(w);
            rejection_draw(&f, k.support(), z, h.sqrt(), rng)
        }
    }
}

fn forward_values<R: Rng + ?Sized>(k: &TransitionKernel, x: f64, grid: &TimeGrid, rng: &mut R) -> Result<Vec<f64>> {
    let times = grid.times();
    let mut values = Vec::with_capacity(times.len());
    values.push(x);
    for w in times.windows(2) {
        let z = *values.last().expect("non-empty");
        values.push(forward_step(k, z, w[1] - w[0], rng)?);
    }
    Ok(values)
}

/// Unpinned path of `kernel` from `x`, sampled exactly on `grid`.
pub fn sample_forward<R: Rng + ?Sized>(
    kernel: &TransitionKernel,
    x: f64,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<PathSample> {
    kernel.check(grid.horizon(), x, x)?;
    PathSample::new(grid.clone(), forward_values(kernel, x, grid, rng)?, false)
}

pub fn sample_forward_pool(
    kernel: &TransitionKernel,
    x: f64,
    grid: &TimeGrid,
    n: usize,
    policy: &RngPolicy,
    exec: Exec,
) -> Result<PathPool> {
    kernel.check(grid.horizon(), x, x)?;
    let rows = try_collect_draws(exec, policy, n, |rng| forward_values(kernel, x, grid, rng))?;
    PathPool::from_rows(grid.clone(), rows, false)
}
