//! Order-preserving map over independent work units.

/// How independent work units are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// Uses the rayon global pool when built with the `parallel` feature;
    /// otherwise identical to `Sequential`.
    #[default]
    Parallel,
}

/// Maps `f` over `items`, returning results in input order.
pub fn par_map<T, R, F>(items: &[T], mode: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == Parallelism::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}
