use serde::{Deserialize, Serialize};

use super::TrialRecord;
use crate::herald::HeraldKind;

/// Counts per [`HeraldKind`], indexed by [`HeraldKind::index`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTally(pub [u64; 5]);

impl OutcomeTally {
    pub fn record(&mut self, kind: HeraldKind) {
        self.0[kind.index()] += 1;
    }

    pub fn get(&self, kind: HeraldKind) -> u64 {
        self.0[kind.index()]
    }

    /// Everything except `NoClick`.
    pub fn heralds(&self) -> u64 {
        self.0[1..].iter().sum()
    }

    pub fn merge(&mut self, other: &OutcomeTally) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Aggregate link metrics over a batch of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    /// Mean Bell fidelity of accepted trials; `None` when nothing was accepted.
    pub fidelity_mean: Option<f64>,
    /// Standard error of `fidelity_mean`; needs at least two accepted trials.
    pub fidelity_sem: Option<f64>,
    /// Delivered pairs per second: `attempt_rate * accepted / attempts`.
    pub ebit_rate: f64,
    pub success_fraction: f64,
    pub outcome_histogram: OutcomeTally,
    pub trials: u64,
    pub accepted: u64,
    pub attempts: u64,
}

impl ChannelMetrics {
    pub fn heralds(&self) -> u64 {
        self.outcome_histogram.heralds()
    }
}

/// Order-preserving accumulator; merging chunk results in index order gives
/// the same bits regardless of how many workers produced them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsAccumulator {
    trials: u64,
    accepted: u64,
    attempts: u64,
    fid: CompensatedSum,
    fid_sq: CompensatedSum,
    histogram: OutcomeTally,
}

impl MetricsAccumulator {
    pub fn push(&mut self, rec: &TrialRecord) {
        self.trials += 1;
        self.attempts += rec.attempts_consumed;
        self.histogram.merge(&rec.outcomes);
        if let Some(f) = rec.fidelity.filter(|_| rec.accepted) {
            self.accepted += 1;
            self.fid.add(f);
            self.fid_sq.add(f * f);
        }
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.trials += other.trials;
        self.accepted += other.accepted;
        self.attempts += other.attempts;
        self.fid.merge(&other.fid);
        self.fid_sq.merge(&other.fid_sq);
        self.histogram.merge(&other.histogram);
    }

    pub fn finish(&self, attempt_rate: f64) -> ChannelMetrics {
        let n = self.accepted as f64;
        let mean = (self.accepted > 0).then(|| self.fid.value() / n);
        let sem = mean.filter(|_| self.accepted > 1).map(|m| {
            let var = ((self.fid_sq.value() - n * m * m) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        });
        let ebit_rate = if self.attempts > 0 {
            attempt_rate * self.accepted as f64 / self.attempts as f64
        } else {
            0.0
        };
        ChannelMetrics {
            fidelity_mean: mean,
            fidelity_sem: sem,
            ebit_rate,
            success_fraction: if self.trials > 0 {
                self.accepted as f64 / self.trials as f64
            } else {
                0.0
            },
            outcome_histogram: self.histogram,
            trials: self.trials,
            accepted: self.accepted,
            attempts: self.attempts,
        }
    }
}

pub fn estimate_metrics(records: &[TrialRecord], attempt_rate: f64) -> ChannelMetrics {
    let mut acc = MetricsAccumulator::default();
    for r in records {
        acc.push(r);
    }
    acc.finish(attempt_rate)
}
