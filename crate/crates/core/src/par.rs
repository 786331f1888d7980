//! Data-parallel dispatch for Monte Carlo batches.
//!
//! Work is cut into fixed-size chunks and chunk `c` always draws from RNG
//! stream `c`, so results are bit-identical whichever [`Exec`] runs them and
//! however many worker threads exist. Without the `parallel` feature every
//! call runs on the current thread.

use crate::montecarlo::rng::{RngPolicy, StreamRng};

/// Draws per RNG stream.
pub const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Runs `f` over `0..n`, preserving order.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Produces `n` draws. Draw `i` is generated by stream `i / CHUNK`, in order.
pub fn collect_draws<T, F>(exec: Exec, policy: &RngPolicy, n: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng) -> T + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let blocks = map_indexed(exec, chunks, |c| {
        let mut rng = policy.stream(c as u64);
        let len = CHUNK.min(n - c * CHUNK);
        (0..len).map(|_| draw(&mut rng)).collect::<Vec<T>>()
    });
    blocks.into_iter().flatten().collect()
}

/// Fallible variant of [`collect_draws`]; the first error in draw order wins.
pub fn try_collect_draws<T, E, F>(exec: Exec, policy: &RngPolicy, n: usize, draw: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(&mut StreamRng) -> Result<T, E> + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let blocks = map_indexed(exec, chunks, |c| {
        let mut rng = policy.stream(c as u64);
        let len = CHUNK.min(n - c * CHUNK);
        (0..len).map(|_| draw(&mut rng)).collect::<Result<Vec<T>, E>>()
    });
    let mut out = Vec::with_capacity(n);
    for block in blocks {
        out.extend(block?);
    }
    Ok(out)
}

/// Maximum of `f` over `0..n` together with the index attaining it.
/// Ties resolve to the lowest index, so the result is order independent.
pub fn max_indexed<F>(exec: Exec, n: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(exec, n, f).into_iter().enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if b >= v || v.is_nan() => best,
        _ => Some((i, v)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn draws_do_not_depend_on_execution_mode() {
        let policy = RngPolicy::new(11);
        let n = 3 * CHUNK + 17;
        let a = collect_draws(Exec::Sequential, &policy, n, |r| r.random::<u64>());
        let b = collect_draws(Exec::Parallel, &policy, n, |r| r.random::<u64>());
        assert_eq!(a.len(), n);
        assert_eq!(a, b);
    }

    #[test]
    fn first_error_is_reported() {
        let policy = RngPolicy::new(1);
        let counter = std::sync::atomic::AtomicUsize::new(0);
        let r: Result<Vec<u8>, usize> = try_collect_draws(Exec::Sequential, &policy, 10, |_| {
            let k = counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            if k >= 4 {
                Err(k)
            } else {
                Ok(0)
            }
        });
        assert_eq!(r, Err(4));
    }

    #[test]
    fn max_prefers_lowest_index_on_ties() {
        let m = max_indexed(Exec::Parallel, 6, |i| if i % 3 == 1 { 5.0 } else { 1.0 });
        assert_eq!(m, Some((1, 5.0)));
        assert_eq!(max_indexed(Exec::Sequential, 0, |_| 0.0), None);
    }
}
