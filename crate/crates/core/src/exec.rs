//! Execution strategy for data-parallel per-sample work.
//!
//! With the `parallel` feature (on by default) the per-sample maps run on the
//! rayon global pool. Without it every [`Exec`] degrades to a plain loop.
//! Outputs are always written by index, so results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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

/// Smallest run of indices handed to one worker.
#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 256;

/// Maps `f` over `0..n` with per-worker scratch state from `init`.
pub fn map_indexed_init<S, T, I, F>(exec: Exec, n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..n).into_par_iter().with_min_len(MIN_CHUNK).map_init(&init, &f).collect(),
        _ => {
            let mut scratch = init();
            (0..n).map(|i| f(&mut scratch, i)).collect()
        }
    }
}

pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_init(exec, n, || (), |_, i| f(i))
}

/// Maps over owned items, preserving order.
pub fn map_items<A, T, F>(exec: Exec, items: Vec<A>, f: F) -> Vec<T>
where
    A: Send,
    T: Send,
    F: Fn(A) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.into_par_iter().map(f).collect(),
        _ => items.into_iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = map_indexed(Exec::Sequential, 1000, f);
        let b = map_indexed(Exec::Parallel, 1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn map_items_preserves_order() {
        let out = map_items(Exec::Parallel, (0..100).collect(), |x: u32| x * 2);
        assert_eq!(out, (0..100).map(|x| x * 2).collect::<Vec<_>>());
    }
}
