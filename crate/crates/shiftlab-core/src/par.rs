//! Thin data-parallel layer for grid scans.
//!
//! With the `parallel` feature (default) scans fan out over a rayon pool;
//! without it the same helpers run sequentially. Results are ordered either
//! way, so callers see identical output.

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Map `f` over a slice, collecting results in order.
#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Cap the global worker count (used by the CLI for `SHIFTLAB_THREADS`).
/// Returns the effective thread count. A no-op (always 1) when the
/// `parallel` feature is off. Safe to call more than once; only the first
/// call can change the pool size.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: Option<usize>) -> usize {
    if let Some(n) = n {
        let n = n.max(1);
        // Ignore the error: the global pool may already be initialized.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: Option<usize>) -> usize {
    1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_preserves_order() {
        let out = map_range(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn map_slice_preserves_order() {
        let items: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let out = map_slice(&items, |x| x + 1.0);
        assert_eq!(out, (1..=50).map(|i| i as f64).collect::<Vec<_>>());
    }
}
