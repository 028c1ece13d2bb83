//! Data-parallel helpers with a sequential fallback.
//!
//! Work is always split into the same fixed-size chunks and the per-chunk
//! results come back in chunk order, so reductions done by the caller are
//! bit-identical whichever path runs.

/// How batch work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool; same as `Sequential` without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Maps `f(chunk_index, chunk)` over fixed-size chunks of `items`, returning
/// results in chunk order.
pub fn map_chunks<T, R, F>(items: &[T], chunk_size: usize, exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync + Send,
{
    let chunk_size = chunk_size.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items
            .par_chunks(chunk_size)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect();
    }
    let _ = exec;
    items
        .chunks(chunk_size)
        .enumerate()
        .map(|(i, c)| f(i, c))
        .collect()
}

/// Maps `f` over `items`, preserving order.
pub fn map_items<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(&f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_results_keep_order() {
        let items: Vec<u32> = (0..103).collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let sums = map_chunks(&items, 10, exec, |i, c| (i, c.iter().sum::<u32>()));
            assert_eq!(sums.len(), 11);
            assert!(sums.iter().enumerate().all(|(k, (i, _))| k == *i));
            assert_eq!(sums.iter().map(|(_, s)| s).sum::<u32>(), 103 * 102 / 2);
        }
    }

    #[test]
    fn float_reduction_is_identical_across_modes() {
        let items: Vec<f64> = (0..1000).map(|k| (k as f64 * 0.37).sin() * 1e-3).collect();
        let reduce = |exec| {
            map_chunks(&items, 16, exec, |_, c| c.iter().sum::<f64>())
                .into_iter()
                .fold(0.0, |a, b| a + b)
        };
        assert_eq!(
            reduce(Execution::Sequential).to_bits(),
            reduce(Execution::Parallel).to_bits()
        );
    }
}
