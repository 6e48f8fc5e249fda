//! Execution policy. Every data-parallel loop in the crate goes through
//! these helpers so that a run can be pinned to one thread, and so that
//! builds without the `parallel` feature still compile.
//!
//! Reductions are done over fixed-size chunks whose partial sums are
//! combined in index order, so the result does not depend on the policy
//! or on the number of worker threads.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by [`sum`] and [`dot`].
pub const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel. Output order is index order.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Map over a slice, possibly in parallel.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Apply `f(i, &mut out[i])` to every element.
pub fn for_each_mut<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            for (k, x) in chunk.iter_mut().enumerate() {
                f(c * CHUNK + k, x);
            }
        });
        return;
    }
    let _ = exec;
    for (i, x) in out.iter_mut().enumerate() {
        f(i, x);
    }
}

/// Deterministic `sum_{i<n} f(i)`.
pub fn sum<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map_range(exec, chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut s = 0.0;
        for i in lo..hi {
            s += f(i);
        }
        s
    });
    partial.into_iter().sum()
}

pub fn dot(exec: Exec, a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(exec, a.len(), |i| a[i] * b[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reductions_match_across_policies() {
        let v: Vec<f64> = (0..10_000).map(|i| ((i as f64) * 0.37).sin()).collect();
        let a = dot(Exec::Sequential, &v, &v);
        let b = dot(Exec::Parallel, &v, &v);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_keeps_order() {
        let v = map_range(Exec::Parallel, 5000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
