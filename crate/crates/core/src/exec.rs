//! Execution strategy for the data-parallel loops.
//!
//! With the `parallel` feature, [`Execution::Parallel`] runs on the rayon
//! global pool; without it every strategy falls back to the sequential path.

/// How a batch loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    Parallel,
    /// Parallel once the batch is at least `threshold` items long.
    #[default]
    Auto,
}

/// Batches below this size are never worth a fork-join.
pub const AUTO_THRESHOLD: usize = 2048;

impl Execution {
    pub fn is_parallel(self, len: usize) -> bool {
        if !cfg!(feature = "parallel") {
            return false;
        }
        match self {
            Execution::Sequential => false,
            Execution::Parallel => true,
            Execution::Auto => len >= AUTO_THRESHOLD,
        }
    }
}

/// Order-preserving map over a slice.
pub fn map_slice<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel(items.len()) {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_under_every_strategy() {
        let xs: Vec<u32> = (0..5000).collect();
        let seq = map_slice(&xs, Execution::Sequential, |x| x * 3);
        let par = map_slice(&xs, Execution::Parallel, |x| x * 3);
        let auto = map_slice(&xs, Execution::Auto, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(seq, auto);
    }
}
