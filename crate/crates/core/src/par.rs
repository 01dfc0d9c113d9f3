//! Data-parallel helpers. With the `parallel` feature these fan out over
//! rayon; without it every call runs sequentially in order.

/// Execution strategy for the data-parallel entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to [`Execution::Sequential`].
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f` over `items`, preserving input order in the output.
pub fn map<T, R, F>(exec: Execution, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }
        _ => items.into_iter().map(f).collect(),
    }
}

/// Runs `f` on every element of `items` with exclusive access.
pub fn for_each_mut<T, F>(exec: Execution, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Send + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter_mut().enumerate().for_each(|(i, item)| f(i, item));
        }
        _ => items.iter_mut().enumerate().for_each(|(i, item)| f(i, item)),
    }
}

/// Maximum of `f` over `0..n` evaluated in chunks.
pub fn max_over_range<F>(exec: Execution, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    const CHUNK: usize = 4096;
    let chunks: Vec<(usize, usize)> = (0..n).step_by(CHUNK).map(|lo| (lo, (lo + CHUNK).min(n))).collect();
    map(exec, chunks, |(lo, hi)| (lo..hi).map(&f).fold(0.0f64, f64::max))
        .into_iter()
        .fold(0.0, f64::max)
}

pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let xs: Vec<u32> = (0..1000).collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let ys = map(exec, xs.clone(), |x| x * 2);
            assert_eq!(ys, xs.iter().map(|x| x * 2).collect::<Vec<_>>());
        }
    }

    #[test]
    fn max_over_range_matches_sequential() {
        let f = |i: usize| ((i * 7919) % 10007) as f64;
        let expected = (0..20_000).map(f).fold(0.0, f64::max);
        assert_eq!(max_over_range(Execution::Parallel, 20_000, f), expected);
        assert_eq!(max_over_range(Execution::Sequential, 20_000, f), expected);
    }
}
