//! Trial execution. Trials are split into fixed-size chunks of consecutive
//! indices; each chunk is reduced on its own and the chunk results are merged
//! in index order, so the output does not depend on the worker count.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::protocols::{ChannelMetrics, MetricsAccumulator, ProtocolConfig, TrialContext, TrialRecord};

pub const CHUNK_TRIALS: u64 = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    /// Rayon worker pool; sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

fn chunk_bounds(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(CHUNK_TRIALS))
        .map(|c| (c * CHUNK_TRIALS, ((c + 1) * CHUNK_TRIALS).min(trials)))
        .collect()
}

fn reduce_chunk(ctx: &TrialContext, (lo, hi): (u64, u64)) -> MetricsAccumulator {
    let mut acc = MetricsAccumulator::default();
    for i in lo..hi {
        acc.push(&ctx.run_trial(i));
    }
    acc
}

fn map_chunks<T: Send>(trials: u64, exec: Execution, f: impl Fn((u64, u64)) -> T + Sync) -> Vec<T> {
    let chunks = chunk_bounds(trials);
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            chunks.into_par_iter().map(&f).collect()
        }
        _ => chunks.into_iter().map(f).collect(),
    }
}

/// Metrics over trials `0..trials` of a prepared context.
pub fn run_context(ctx: &TrialContext, trials: u64, exec: Execution) -> ChannelMetrics {
    let parts = map_chunks(trials, exec, |b| reduce_chunk(ctx, b));
    let mut total = MetricsAccumulator::default();
    for p in &parts {
        total.merge(p);
    }
    total.finish(ctx.config().attempt_rate)
}

pub fn run_metrics_with(cfg: &ProtocolConfig, exec: Execution) -> Result<ChannelMetrics> {
    let ctx = TrialContext::new(cfg)?;
    Ok(run_context(&ctx, cfg.trials, exec))
}

pub fn run_metrics(cfg: &ProtocolConfig) -> Result<ChannelMetrics> {
    run_metrics_with(cfg, Execution::Parallel)
}

/// All trial records, in trial-index order.
pub fn run_trials_with(cfg: &ProtocolConfig, exec: Execution) -> Result<Vec<TrialRecord>> {
    let ctx = TrialContext::new(cfg)?;
    let parts = map_chunks(cfg.trials, exec, |(lo, hi)| {
        (lo..hi).map(|i| ctx.run_trial(i)).collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

pub fn run_trials(cfg: &ProtocolConfig) -> Result<Vec<TrialRecord>> {
    run_trials_with(cfg, Execution::Parallel)
}
