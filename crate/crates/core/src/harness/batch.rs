//! Batch execution over seeds and per-metric summaries.
//!
//! Runs share only the immutable scenario, so with the `parallel` feature
//! they are spread over the rayon pool. Results come back in seed order
//! either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::{run, RunMetrics, RunResult, Scenario};
use crate::error::HarnessError;

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
pub fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Sample mean and sample standard deviation. With a single sample the
/// deviation is zero and `single` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub single: bool,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat { mean: f64::NAN, std: f64::NAN, n, single: false };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std, n, single: n == 1 }
    }
}

impl std::fmt::Display for Stat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} +- {:.3}", self.mean, self.std)?;
        if self.single {
            write!(f, " (single run)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub scenario: String,
    pub v_cruise: f64,
    pub runs: usize,
    pub completed: usize,
    pub collided: usize,
    pub failed: usize,
    pub v_max: Stat,
    pub v_avg_rrt: Stat,
    pub f_rrt: Stat,
    pub plans_per_sim_second: Stat,
    pub d_trv: Stat,
    pub expansions: Stat,
    pub runtime: Stat,
}

impl BatchSummary {
    pub fn from_metrics(scenario: &Scenario, metrics: &[RunMetrics]) -> Self {
        let stat = |f: fn(&RunMetrics) -> f64| Stat::of(&metrics.iter().map(f).collect::<Vec<_>>());
        Self {
            scenario: scenario.name.clone(),
            v_cruise: scenario.dynamics.v_cruise,
            runs: metrics.len(),
            completed: metrics.iter().filter(|m| m.completed).count(),
            collided: metrics.iter().filter(|m| m.collided).count(),
            failed: metrics.iter().filter(|m| !m.completed && !m.collided).count(),
            v_max: stat(|m| m.v_max),
            v_avg_rrt: stat(|m| m.v_avg_rrt),
            f_rrt: stat(|m| m.f_rrt),
            plans_per_sim_second: stat(|m| m.plans_per_sim_second),
            d_trv: stat(|m| m.d_trv),
            expansions: stat(|m| m.expansions as f64),
            runtime: stat(|m| m.runtime),
        }
    }

    /// Completion tally as `completed|total`.
    pub fn cmpl(&self) -> String {
        format!("{:02}|{:02}", self.completed, self.runs)
    }
}

fn check_seeds(seeds: &[u64]) -> Result<(), HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::InvalidScenario("a batch needs at least one seed".into()));
    }
    Ok(())
}

/// Runs every seed one after another.
pub fn batch_sequential(scenario: &Scenario, seeds: &[u64]) -> Result<(Vec<RunResult>, BatchSummary), HarnessError> {
    check_seeds(seeds)?;
    let results = seeds.iter().map(|&s| run(scenario, s)).collect::<Result<Vec<_>, _>>()?;
    let metrics: Vec<RunMetrics> = results.iter().map(|r| r.metrics.clone()).collect();
    Ok((results, BatchSummary::from_metrics(scenario, &metrics)))
}

/// Runs the seeds on the rayon pool.
#[cfg(feature = "parallel")]
pub fn batch_parallel(scenario: &Scenario, seeds: &[u64]) -> Result<(Vec<RunResult>, BatchSummary), HarnessError> {
    check_seeds(seeds)?;
    let results = seeds.par_iter().map(|&s| run(scenario, s)).collect::<Result<Vec<_>, _>>()?;
    let metrics: Vec<RunMetrics> = results.iter().map(|r| r.metrics.clone()).collect();
    Ok((results, BatchSummary::from_metrics(scenario, &metrics)))
}

/// [`batch_parallel`] when the `parallel` feature is on, else
/// [`batch_sequential`].
pub fn batch(scenario: &Scenario, seeds: &[u64]) -> Result<(Vec<RunResult>, BatchSummary), HarnessError> {
    #[cfg(feature = "parallel")]
    {
        batch_parallel(scenario, seeds)
    }
    #[cfg(not(feature = "parallel"))]
    {
        batch_sequential(scenario, seeds)
    }
}
