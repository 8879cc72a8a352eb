//! Ordered index-parallel map. With the `parallel` feature the work runs on
//! the current rayon pool; without it, or through the `_sequential`
//! variants, it runs in index order on the calling thread. Both produce the
//! same vector because each task only reads its own index.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_sequential(n, f)
    }
}

pub fn map_indexed_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(n, f).into_iter().collect()
}

/// Runs `f` inside a pool of `threads` workers (parallel builds only).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
                return pool.install(f);
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = map_indexed(1000, f);
        let b = map_indexed_sequential(1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn first_error_by_index_wins() {
        let r: Result<Vec<usize>, usize> = try_map_indexed(100, |i| if i % 30 == 29 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(29));
    }
}
