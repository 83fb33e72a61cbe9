//! Replication runner. Tasks are keyed by index and results come back in
//! index order, so any fold over them is independent of the worker count.

use crate::error::Result;

/// Runs `task(0..reps)` on `workers` threads (sequentially for `workers <= 1`
/// or without the `parallel` feature) and returns the results in index order.
pub fn replicate<T, F>(reps: u64, workers: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        return pool.install(|| (0..reps).into_par_iter().map(&task).collect());
    }
    let _ = workers;
    (0..reps).map(task).collect()
}

/// True when the crate was built with the rayon backend.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
