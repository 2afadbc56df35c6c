//! Many independent simulations at once.

use std::sync::Arc;

use crate::engine::{run, CircuitTopology, EngineError, SimTrace, SpikeTrain};
use crate::par;

#[derive(Debug, Clone)]
pub struct Job {
    pub topology: Arc<CircuitTopology>,
    pub inputs: Vec<SpikeTrain>,
    pub horizon: usize,
    pub seed: u64,
}

impl Job {
    pub fn run(&self) -> Result<SimTrace, EngineError> {
        run(&self.topology, &self.inputs, self.horizon, self.seed)
    }
}

/// Runs every job, in parallel when the `parallel` feature is enabled.
pub fn run_batch(jobs: &[Job]) -> Vec<Result<SimTrace, EngineError>> {
    par::map(jobs, Job::run)
}

pub fn run_batch_sequential(jobs: &[Job]) -> Vec<Result<SimTrace, EngineError>> {
    par::map_sequential(jobs, Job::run)
}

/// Runs every job and reduces each trace right away, which keeps memory flat
/// for large suites.
pub fn map_batch<R, F>(jobs: &[Job], reduce: F) -> Vec<Result<R, EngineError>>
where
    R: Send,
    F: Fn(&Job, SimTrace) -> R + Sync + Send,
{
    par::map(jobs, |job| job.run().map(|trace| reduce(job, trace)))
}
