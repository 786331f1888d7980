use crate::bridges::law::BridgeSpec;
use crate::bridges::path::TimeGrid;
use crate::bridges::sampler::{sample_bridges, sample_forward_pool, Route};
use crate::error::{Error, Result};
use crate::measure_kernel::TransitionKernel;
use crate::montecarlo::rng::RngPolicy;
use crate::montecarlo::stats::mc_mean_with_se;
use crate::par::Exec;
use crate::quadrature::{kronrod_nodes, Quadrature};

const PANELS: usize = 8;
/// Quadrature nodes whose weight falls below this fraction of the largest
/// are skipped; their contribution is below the quadrature tolerance.
const NEGLIGIBLE: f64 = 1e-13;

/// Both sides of `E^x[F g(X_t)] = ∫ P^{x,y}_t(F) g(y) p_t(x, y) m(dy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisintegrationReport {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    pub residual: f64,
}

impl DisintegrationReport {
    pub fn combined_se(&self) -> f64 {
        self.lhs_se.hypot(self.rhs_se)
    }

    /// `residual < 3` combined standard errors, plus `slack` for the
    /// deterministic quadrature error.
    pub fn within_contract(&self, slack: f64) -> bool {
        self.residual < 3.0 * self.combined_se() + slack
    }
}

/// Left side by forward simulation; right side by Gauss–Kronrod quadrature
/// over the endpoint with a Monte Carlo bridge estimate of `F` at each node.
/// `functional` sees path values on `grid`.
#[allow(clippy::too_many_arguments)]
pub fn disintegration_residual(
    kernel: &TransitionKernel,
    x: f64,
    grid: &TimeGrid,
    functional: impl Fn(&[f64]) -> f64 + Sync,
    g: impl Fn(f64) -> f64 + Sync,
    n_samples: usize,
    q: &Quadrature,
    policy: &RngPolicy,
    exec: Exec,
) -> Result<DisintegrationReport> {
    if n_samples < 2 {
        return Err(Error::DegenerateSample(n_samples));
    }
    let t = grid.horizon();
    let forward = sample_forward_pool(kernel, x, grid, n_samples, &policy.derive(0), exec)?;
    let last = grid.len() - 1;
    let lhs_values: Vec<f64> = forward.rows().iter().map(|r| functional(r) * g(r[last])).collect();
    let (lhs, lhs_se) = mc_mean_with_se(&lhs_values)?;

    let support = kernel.support();
    let width = q.truncation * t.sqrt();
    let (lo, hi) = ((x - width).max(support.lo), (x + width).min(support.hi));
    let mut cuts = vec![lo];
    cuts.extend(kernel.breakpoints().iter().copied().filter(|&c| c > lo && c < hi));
    cuts.push(hi);
    let mut nodes = Vec::new();
    for piece in cuts.windows(2) {
        let h = (piece[1] - piece[0]) / PANELS as f64;
        for p in 0..PANELS {
            let a = piece[0] + p as f64 * h;
            for (y, w) in kronrod_nodes(a, a + h) {
                let weight = w * kernel.density(t, x, y)? * kernel.measure_density(y);
                nodes.push((y, weight));
            }
        }
    }
    let top = nodes.iter().map(|n| n.1).fold(0.0, f64::max);
    nodes.retain(|&(_, w)| w > NEGLIGIBLE * top);
    let per_node = (n_samples / nodes.len()).max(64);

    let mut rhs = 0.0;
    let mut rhs_var = 0.0;
    for (j, &(y, weight)) in nodes.iter().enumerate() {
        let spec = BridgeSpec::new(kernel.clone(), x, t, y)?;
        let pool = sample_bridges(&spec, grid, per_node, Route::Auto, &policy.derive(j as u64 + 1), exec)?;
        let values: Vec<f64> = pool.rows().iter().map(|r| functional(r)).collect();
        let (m, se) = mc_mean_with_se(&values)?;
        let c = weight * g(y);
        rhs += c * m;
        rhs_var += (c * se).powi(2);
    }
    Ok(DisintegrationReport { lhs, lhs_se, rhs, rhs_se: rhs_var.sqrt(), residual: (lhs - rhs).abs() })
}
