//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature, `jobs == 1` runs on the calling thread,
//! `jobs == 0` uses the global rayon pool and any other value a dedicated
//! pool of that size. Without the feature everything is sequential. Output
//! order always matches input order.

#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match jobs {
        1 => items.iter().map(f).collect(),
        0 => items.par_iter().map(f).collect(),
        j => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
            Err(_) => items.iter().map(f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(_jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Whether the crate was built with the rayon backend.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..200).collect();
        let seq = par_map(1, &xs, |x| x * x);
        for jobs in [0, 2, 3] {
            assert_eq!(par_map(jobs, &xs, |x| x * x), seq);
        }
    }
}
