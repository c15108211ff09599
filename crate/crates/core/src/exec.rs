//! Line-parallel execution with a sequential fallback.
//!
//! Grid work is split into independent azimuth lines. Results always come back in
//! line order, so outputs do not depend on the worker count. Without the `parallel`
//! feature every policy runs sequentially.

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "PFA_RD_GEO_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// The global rayon pool.
    #[default]
    Parallel,
    /// A dedicated pool with this many workers.
    Threads(usize),
}

impl Exec {
    /// `Threads(n)` when `PFA_RD_GEO_THREADS` holds a positive integer, else `Parallel`.
    pub fn from_env() -> Exec {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .map_or(Exec::Parallel, Exec::Threads)
    }
}

/// Evaluates `f(0..n)` under the given policy, preserving index order.
pub fn map_indexed<T, F>(n: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match exec {
            Exec::Sequential => {}
            Exec::Parallel => return (0..n).into_par_iter().map(f).collect(),
            Exec::Threads(threads) => {
                match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                    Ok(pool) => return pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                    Err(e) => log::warn!("thread pool unavailable ({e}); running sequentially"),
                }
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = exec;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let expect: Vec<usize> = (0..1000).map(|i| i * i).collect();
        for exec in [Exec::Sequential, Exec::Parallel, Exec::Threads(3)] {
            assert_eq!(map_indexed(1000, exec, |i| i * i), expect);
        }
    }
}
