//! Worker-count control for the rayon-based parallel sections.

use crate::error::{Error, Result};

/// Runs `f` inside a dedicated pool of `workers` threads, or in the global
/// pool when `workers` is `None`.
pub fn run_with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("worker count must be positive".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
