//! Thin switch between rayon and plain iteration.
//!
//! With the `parallel` feature off every helper runs on the calling thread. All
//! helpers preserve input order, so results do not depend on the worker count.

/// Number of workers requested through `CCCD_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var("CCCD_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
}

/// Maps `f` over `items`, keeping order.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Runs `op` with at most `threads` workers. `0` means the global default.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    let cap = env_threads();
    let threads = match (threads, cap) {
        (0, None) => return op(),
        (0, Some(c)) => c,
        (t, Some(c)) => t.min(c),
        (t, None) => t,
    };
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(op),
        Err(_) => op(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_threads<R: Send>(_threads: usize, op: impl FnOnce() -> R + Send) -> R {
    op()
}

/// True when the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
