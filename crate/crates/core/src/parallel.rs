//! Replica-parallel map with results returned in index order.

use rayon::prelude::*;

use crate::Error;

/// Runs `f(0..n)` on `workers` threads (0 means one per core) and returns the
/// results in index order, so reductions over them are scheduling-independent.
pub fn map_indexed<R, F>(workers: usize, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if workers == 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// Fallible variant; the first error in index order is returned.
pub fn try_map_indexed<R, F>(workers: usize, n: usize, f: F) -> Result<Vec<R>, Error>
where
    R: Send,
    F: Fn(usize) -> Result<R, Error> + Sync + Send,
{
    map_indexed(workers, n, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let out = map_indexed(4, 1000, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, v)| *v == i * i));
    }
}
