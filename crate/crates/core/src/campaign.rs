//! Deterministic parallel Monte Carlo.
//!
//! Trial `i` always draws from stream `i` of the campaign's factory, and
//! per-trial results are integer tallies combined with a commutative,
//! associative `+`. The total is therefore the same for any thread count or
//! scheduling order.

use std::ops::Add;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::StreamFactory;

pub fn run_trials<T, F>(factory: &StreamFactory, samples: u64, trial: F) -> T
where
    T: Default + Add<Output = T> + Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..samples)
        .into_par_iter()
        .map(|i| trial(i, &mut factory.stream(i)))
        .reduce(T::default, |a, b| a + b)
}

/// Fallible variant: the error of the lowest failing trial index wins, so
/// the reported error is also schedule independent.
pub fn try_run_trials<T, E, F>(factory: &StreamFactory, samples: u64, trial: F) -> Result<T, E>
where
    T: Default + Add<Output = T> + Send,
    E: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T, E> + Sync,
{
    (0..samples)
        .into_par_iter()
        .map(|i| trial(i, &mut factory.stream(i)).map_err(|e| (i, e)))
        .reduce(
            || Ok(T::default()),
            |a, b| match (a, b) {
                (Ok(x), Ok(y)) => Ok(x + y),
                (Err(x), Err(y)) => Err(if x.0 <= y.0 { x } else { y }),
                (Err(e), _) | (_, Err(e)) => Err(e),
            },
        )
        .map_err(|(_, e)| e)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Count {
    pub trials: u64,
    pub hits: u64,
}

impl Count {
    pub fn one(hit: bool) -> Self {
        Self {
            trials: 1,
            hits: hit as u64,
        }
    }
}

impl Add for Count {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            hits: self.hits + o.hits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinomialEstimate {
    pub samples: u64,
    pub successes: u64,
    pub estimate: f64,
    pub stderr: f64,
}

impl BinomialEstimate {
    pub fn new(samples: u64, successes: u64) -> Self {
        let estimate = if samples == 0 {
            0.0
        } else {
            successes as f64 / samples as f64
        };
        let stderr = if samples == 0 {
            0.0
        } else {
            (estimate * (1.0 - estimate) / samples as f64).sqrt()
        };
        Self {
            samples,
            successes,
            estimate,
            stderr,
        }
    }

    /// |estimate - p| within `k` binomial standard deviations of `p`.
    pub fn within_sigma(&self, p: f64, k: f64) -> bool {
        let sigma = (p * (1.0 - p) / self.samples as f64).sqrt();
        (self.estimate - p).abs() <= k * sigma + 1e-15
    }
}

impl From<Count> for BinomialEstimate {
    fn from(c: Count) -> Self {
        Self::new(c.trials, c.hits)
    }
}
