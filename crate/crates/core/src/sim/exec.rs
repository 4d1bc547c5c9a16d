//! Trial execution with per-trial random streams.
//!
//! Trial `i` of grid point `g` always draws from the ChaCha8 stream
//! `(g << 32) | i` of the master seed, so results do not depend on how trials
//! are spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    Serial,
    /// `workers = 0` uses every available core. Runs serially when the crate is
    /// built without the `parallel` feature.
    Parallel {
        workers: usize,
    },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { workers: 0 }
    }
}

impl Execution {
    pub fn with_workers(workers: usize) -> Self {
        if workers == 1 {
            Execution::Serial
        } else {
            Execution::Parallel { workers }
        }
    }
}

/// The random stream of one trial.
pub fn trial_rng(master_seed: u64, grid_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((grid_index as u64) << 32) | trial as u64);
    rng
}

/// Runs `f(0..count)` and returns the results in index order.
pub fn map_trials<T, F>(exec: Execution, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match exec {
        Execution::Serial => (0..count).map(f).collect(),
        Execution::Parallel { workers } => parallel_map(workers, count, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(_workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_of_schedule() {
        let draw = |i: usize| -> Result<u64> { Ok(trial_rng(9, 1, i).random()) };
        let serial = map_trials(Execution::Serial, 64, draw).unwrap();
        for workers in [0, 2, 3] {
            assert_eq!(
                map_trials(Execution::Parallel { workers }, 64, draw).unwrap(),
                serial
            );
        }
        assert_ne!(serial[0], serial[1]);
        let a: u64 = trial_rng(9, 0, 5).random();
        let b: u64 = trial_rng(9, 1, 5).random();
        assert_ne!(a, b);
    }

    #[test]
    fn errors_propagate() {
        let r: Result<Vec<()>> = map_trials(Execution::default(), 10, |i| {
            if i == 7 {
                Err(Error::EmptySequence)
            } else {
                Ok(())
            }
        });
        assert_eq!(r.unwrap_err(), Error::EmptySequence);
    }
}
