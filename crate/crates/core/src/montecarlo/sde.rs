//! Forward simulation: Euler–Maruyama for `dY = dB + mu(Y) dt`, and the
//! sign-flipped Bessel(3) process driven by a 3D Brownian motion and an
//! independent unit-rate Poisson clock.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::bridges::path::{PathSample, TimeGrid};
use crate::error::{Error, Result};
use crate::measure_kernel::{FlipVariant, Side};

fn check_steps(t: f64, dt: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) || !(dt > 0.0) || dt > t {
        return Err(Error::Domain(format!("need 0 < dt <= t, got dt = {dt}, t = {t}")));
    }
    Ok(())
}

/// Step sizes: `floor(t/dt)` full steps and a final partial step.
fn steps(t: f64, dt: f64) -> impl Iterator<Item = f64> {
    let full = (t / dt).floor() as usize;
    let rest = t - full as f64 * dt;
    let tail = (rest > 1e-12 * t).then_some(rest);
    std::iter::repeat_n(dt, full).chain(tail)
}

/// Endpoint of `y <- y + mu(y) h + sqrt(h) xi` over `[0, t]`.
pub fn euler_maruyama<R: Rng + ?Sized>(mu: &impl Fn(f64) -> f64, x0: f64, t: f64, dt: f64, rng: &mut R) -> Result<f64> {
    check_steps(t, dt)?;
    let mut y = x0;
    for h in steps(t, dt) {
        let xi: f64 = rng.sample(StandardNormal);
        y += mu(y) * h + h.sqrt() * xi;
    }
    Ok(y)
}

/// Full Euler–Maruyama path, recorded at every step.
pub fn euler_maruyama_path<R: Rng + ?Sized>(
    mu: &impl Fn(f64) -> f64,
    x0: f64,
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<PathSample> {
    check_steps(t, dt)?;
    let mut times = vec![0.0];
    let mut values = vec![x0];
    let (mut s, mut y) = (0.0, x0);
    for h in steps(t, dt) {
        let xi: f64 = rng.sample(StandardNormal);
        y += mu(y) * h + h.sqrt() * xi;
        s += h;
        times.push(s);
        values.push(y);
    }
    *times.last_mut().expect("at least one step") = t;
    PathSample::new(TimeGrid::new(times, t)?, values, false)
}

fn sign_of(side: Side) -> f64 {
    match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    }
}

/// Signed endpoint `±(-1)^{N(t)} Z_t` started at `x0`. `Z_t` is the norm of
/// a 3D Brownian motion started at `(|x0|, 0, 0)`, exact in law; the outer
/// sign is the variant's convention for `x0`.
pub fn poisson_flip_simulate<R: Rng + ?Sized>(x0: f64, t: f64, variant: FlipVariant, rng: &mut R) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || !x0.is_finite() {
        return Err(Error::Domain(format!("need t > 0 and finite x0, got t = {t}, x0 = {x0}")));
    }
    let sd = t.sqrt();
    let w: [f64; 3] = std::array::from_fn(|_| sd * rng.sample::<f64, _>(StandardNormal));
    let radius = ((x0.abs() + w[0]).powi(2) + w[1] * w[1] + w[2] * w[2]).sqrt();
    let mut flips = 0u32;
    let mut clock: f64 = rng.sample(Exp1);
    while clock <= t {
        flips += 1;
        clock += rng.sample::<f64, _>(Exp1);
    }
    let parity = if flips.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(sign_of(variant.side(x0)) * parity * radius)
}

/// Path of the flipped Bessel process on a `dt` grid. The 3D driver takes
/// Gaussian increments over each step; flips happen at exact Poisson times.
pub fn poisson_flip_path<R: Rng + ?Sized>(
    x0: f64,
    t: f64,
    dt: f64,
    variant: FlipVariant,
    rng: &mut R,
) -> Result<PathSample> {
    check_steps(t, dt)?;
    let mut w = [x0.abs(), 0.0, 0.0];
    let base = sign_of(variant.side(x0));
    let mut clock: f64 = rng.sample(Exp1);
    let mut parity = 1.0;
    let mut times = vec![0.0];
    let mut values = vec![x0];
    let mut s = 0.0;
    for h in steps(t, dt) {
        for c in w.iter_mut() {
            *c += h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        }
        s += h;
        while clock <= s {
            parity = -parity;
            clock += rng.sample::<f64, _>(Exp1);
        }
        times.push(s);
        values.push(base * parity * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt());
    }
    *times.last_mut().expect("at least one step") = t;
    PathSample::new(TimeGrid::new(times, t)?, values, false)
}
