use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_chain::expm::{expm, norm_inf};
use crate::finite_chain::perron::perron_pair;
use crate::montecarlo::rng::RngPolicy;

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite-state chain: generator `G` and reference weights `m`.
///
/// `G` may be sub-Markov (row sums `<= 0`, the deficit being a killing
/// rate); this is what makes a non-constant Perron vector possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    g: DMatrix<f64>,
    m: DVector<f64>,
}

/// Perron pair `G psi = lambda psi`, `psi > 0`, `psi[0] = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronPair {
    pub psi: Vec<f64>,
    pub lambda: f64,
}

fn strongly_connected(g: &DMatrix<f64>) -> bool {
    let n = g.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { g[(i, j)] } else { g[(j, i)] };
                if i != j && w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

impl ChainModel {
    pub fn new(g: DMatrix<f64>, m: DVector<f64>) -> Result<Self> {
        let n = g.nrows();
        if n == 0 || g.ncols() != n || m.len() != n {
            return Err(Error::Domain(format!("generator {}x{} with {} weights", g.nrows(), g.ncols(), m.len())));
        }
        if g.iter().chain(m.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite generator or weight entry".into()));
        }
        if m.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Domain("reference weights must be positive".into()));
        }
        for i in 0..n {
            let scale = g.row(i).iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            if (0..n).any(|j| j != i && g[(i, j)] < 0.0) {
                return Err(Error::Domain(format!("negative off-diagonal rate in row {i}")));
            }
            if g.row(i).sum() > ROW_SUM_TOL * scale {
                return Err(Error::Domain(format!("row {i} sums to {} > 0", g.row(i).sum())));
            }
        }
        if !strongly_connected(&g) {
            return Err(Error::Domain("generator is not irreducible".into()));
        }
        Ok(ChainModel { g, m })
    }

    /// Like [`new`](Self::new) but also requires row sums of 0.
    pub fn conservative(g: DMatrix<f64>, m: DVector<f64>) -> Result<Self> {
        let chain = Self::new(g, m)?;
        if !chain.is_conservative() {
            return Err(Error::Domain("generator rows must sum to 0".into()));
        }
        Ok(chain)
    }

    /// Conservative chain with off-diagonal rates uniform on `[0, 1]` and its
    /// stationary distribution as reference weights.
    pub fn random_conservative(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("random chains need at least 2 states".into()));
        }
        let mut rng = RngPolicy::new(seed).stream(0);
        let mut g = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g[(i, j)] = rng.random::<f64>();
                }
            }
            g[(i, i)] = -g.row(i).sum();
        }
        let m = stationary(&g)?;
        Self::conservative(g, m)
    }

    /// `G0 - diag(v)` with `G0` from [`random_conservative`](Self::random_conservative),
    /// killing rates `v` uniform on `[0, 1]`, and `G0`'s stationary weights
    /// (so the dual chain is sub-Markov too).
    pub fn random_sub_markov(n: usize, seed: u64) -> Result<Self> {
        let base = Self::random_conservative(n, seed)?;
        let mut rng = RngPolicy::new(seed).stream(1);
        let mut g = base.g;
        for i in 0..n {
            g[(i, i)] -= rng.random::<f64>();
        }
        Self::new(g, base.m)
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.m
    }

    pub fn is_conservative(&self) -> bool {
        (0..self.n()).all(|i| {
            let scale = self.g.row(i).iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            self.g.row(i).sum().abs() <= ROW_SUM_TOL * scale
        })
    }

    /// `P_t = e^{tG}`.
    pub fn transition_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        Ok(expm(&(&self.g * t)))
    }

    /// `p_t(x, y) = P_t[x][y] / m[y]`.
    pub fn density(&self, t: f64, x: usize, y: usize) -> Result<f64> {
        self.state(x)?;
        self.state(y)?;
        Ok(self.transition_matrix(t)?[(x, y)] / self.m[y])
    }

    pub(crate) fn state(&self, x: usize) -> Result<()> {
        if x < self.n() {
            Ok(())
        } else {
            Err(Error::Domain(format!("state {x} outside 0..{}", self.n())))
        }
    }

    pub fn perron(&self) -> Result<PerronPair> {
        let (psi, lambda) = perron_pair(&self.g)?;
        Ok(PerronPair { psi: psi.iter().copied().collect(), lambda })
    }

    /// `max |G psi - lambda psi|`.
    pub fn eigen_residual(&self, psi: &[f64], lambda: f64) -> Result<f64> {
        let v = self.vector(psi)?;
        Ok((&self.g * &v - &v * lambda).amax())
    }

    fn vector(&self, v: &[f64]) -> Result<DVector<f64>> {
        if v.len() != self.n() {
            return Err(Error::GridMismatch(format!("vector of length {} for {} states", v.len(), self.n())));
        }
        Ok(DVector::from_column_slice(v))
    }

    /// Dual generator `G^[y][x] = m[x] G[x][y] / m[y]` with the same weights.
    pub fn dual(&self) -> ChainModel {
        let n = self.n();
        let g = DMatrix::from_fn(n, n, |y, x| self.m[x] * self.g[(x, y)] / self.m[y]);
        ChainModel { g, m: self.m.clone() }
    }

    /// `D^{-1} G D - lambda I` with `D = diag(psi)`; no eigen check.
    pub fn conjugated_generator(&self, psi: &[f64], lambda: f64) -> Result<DMatrix<f64>> {
        let v = self.vector(psi)?;
        let n = self.n();
        Ok(DMatrix::from_fn(n, n, |x, z| {
            let base = self.g[(x, z)] * v[z] / v[x];
            if x == z {
                base - lambda
            } else {
                base
            }
        }))
    }

    /// Doob h-transform. Requires `G psi = lambda psi` to `1e-10` (relative
    /// to `|G| max psi`). The new weights are `m psi psi_hat`, with `psi_hat`
    /// the Perron vector of the dual chain.
    pub fn h_transform(&self, psi: &[f64], lambda: f64) -> Result<ChainModel> {
        let v = self.vector(psi)?;
        if v.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Domain("psi must be strictly positive".into()));
        }
        let tolerance = 1e-10 * norm_inf(&self.g).max(1.0) * v.amax();
        let residual = self.eigen_residual(psi, lambda)?;
        if !(residual <= tolerance) {
            return Err(Error::EigenPrecondition { residual, tolerance });
        }
        let n = self.n();
        let mut g = self.conjugated_generator(psi, lambda)?;
        for x in 0..n {
            // Set the diagonal so rows sum to 0 exactly in floating point.
            let off: f64 = (0..n).filter(|&z| z != x).map(|z| g[(x, z)]).sum();
            g[(x, x)] = -off;
        }
        let psi_hat = self.dual().perron()?.psi;
        let m = DVector::from_fn(n, |i, _| self.m[i] * v[i] * psi_hat[i]);
        ChainModel::new(g, m)
    }

    /// `max_{a,b} |m[a] P_t[a][b] - m[b] P^_t[b][a]|`: the duality identity on
    /// basis functions.
    pub fn duality_residual(&self, t: f64) -> Result<f64> {
        let p = self.transition_matrix(t)?;
        let ph = self.dual().transition_matrix(t)?;
        let n = self.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.m[a] * p[(a, b)] - self.m[b] * ph[(b, a)]).abs());
            }
        }
        Ok(worst)
    }
}

/// Stationary distribution of a conservative irreducible generator.
pub fn stationary(g: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = g.nrows();
    let mut a = g.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or_else(|| Error::Domain("singular stationary system".into()))?;
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Domain("stationary distribution is not positive".into()));
    }
    Ok(pi)
}

/// Perron pair as a free function.
pub fn perron_eigen(chain: &ChainModel) -> Result<PerronPair> {
    chain.perron()
}

pub fn chain_h_transform(chain: &ChainModel, psi: &[f64], lambda: f64) -> Result<ChainModel> {
    chain.h_transform(psi, lambda)
}

pub fn dual_chain(chain: &ChainModel) -> ChainModel {
    chain.dual()
}

pub fn transition_matrix(chain: &ChainModel, t: f64) -> Result<DMatrix<f64>> {
    chain.transition_matrix(t)
}
