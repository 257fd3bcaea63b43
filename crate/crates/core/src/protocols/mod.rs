//! Protocol state machines: one-click, two-click, EPL 2-to-1 and Chi 3-to-1.

mod distill;
mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use distill::{
    chi_checks, epl_kraus_map, epl_kraus_operator, parity_check, ChiLocals, Distilled, ParityCheck,
};
pub use metrics::{estimate_metrics, ChannelMetrics, MetricsAccumulator, OutcomeTally};

use crate::channels::{decay_qubits, GateNoiseParams, MemoryParams};
use crate::error::{Error, Result};
use crate::herald::{AttemptParams, Herald, HeraldKind, HeraldMode, HeraldSampling};
use crate::sampling::{derive_stream, tags, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    OneClick,
    TwoClick,
    Epl,
    Chi,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::OneClick,
        Protocol::TwoClick,
        Protocol::Epl,
        Protocol::Chi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::OneClick => "one_click",
            Protocol::TwoClick => "two_click",
            Protocol::Epl => "epl",
            Protocol::Chi => "chi",
        }
    }

    pub fn herald_mode(self) -> HeraldMode {
        match self {
            Protocol::TwoClick => HeraldMode::TwoClick,
            _ => HeraldMode::OneClick,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "one_click" | "1c" => Ok(Protocol::OneClick),
            "two_click" | "2c" | "barrett_kok" => Ok(Protocol::TwoClick),
            "epl" => Ok(Protocol::Epl),
            "chi" | "chi3" => Ok(Protocol::Chi),
            other => Err(Error::Config(format!(
                "unknown protocol {other:?} (expected one_click, two_click, epl or chi)"
            ))),
        }
    }
}

pub const MAX_WAIT_CEILING: u64 = 1_000_000;
pub const DEFAULT_MAX_TRIAL_ATTEMPTS: u64 = 10_000_000;
pub const DEFAULT_TRIALS: u64 = 5000;

/// `10 * ceil(attempt_rate * t1)`, clamped to `[1, 10^6]`; infinite T1 gives `10^6`.
pub fn default_max_wait(attempt_rate: f64, t1: f64) -> u64 {
    if !t1.is_finite() {
        return MAX_WAIT_CEILING;
    }
    let w = 10.0 * (attempt_rate * t1).ceil();
    (w as u64).clamp(1, MAX_WAIT_CEILING)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    pub attempt: AttemptParams,
    /// Heralding attempts per second.
    pub attempt_rate: f64,
    pub memory: MemoryParams,
    pub gate: GateNoiseParams,
    /// Attempts the stored pair may wait for the next herald; `None` uses
    /// [`default_max_wait`].
    pub max_wait_attempts: Option<u64>,
    /// Attempts after which a trial is abandoned unaccepted.
    pub max_trial_attempts: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub herald_sampling: HeraldSampling,
}

impl ProtocolConfig {
    pub fn new(protocol: Protocol, attempt: AttemptParams, attempt_rate: f64) -> Self {
        Self {
            protocol,
            attempt,
            attempt_rate,
            memory: MemoryParams::IDEAL,
            gate: GateNoiseParams::PERFECT,
            max_wait_attempts: None,
            max_trial_attempts: DEFAULT_MAX_TRIAL_ATTEMPTS,
            trials: DEFAULT_TRIALS,
            master_seed: 0,
            herald_sampling: HeraldSampling::default(),
        }
    }

    pub fn with_protocol(&self, protocol: Protocol) -> Self {
        Self {
            protocol,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.attempt.validate()?;
        self.memory.validate()?;
        self.gate.validate()?;
        if !(self.attempt_rate > 0.0 && self.attempt_rate.is_finite()) {
            return Err(Error::Domain {
                what: "attempt_rate_hz",
                value: self.attempt_rate,
                range: "(0, inf)",
            });
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.max_wait_attempts == Some(0) {
            return Err(Error::Config("max_wait_attempts must be at least 1".into()));
        }
        if self.max_trial_attempts == 0 {
            return Err(Error::Config("max_trial_attempts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective_max_wait(&self) -> u64 {
        self.max_wait_attempts
            .unwrap_or_else(|| default_max_wait(self.attempt_rate, self.memory.t1))
    }
}

/// Outcome of one Monte Carlo trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub accepted: bool,
    /// Bell fidelity of the delivered pair; present iff `accepted`.
    pub fidelity: Option<f64>,
    pub attempts_consumed: u64,
    /// Herald outcomes seen during the trial (a capped wait counts as `NoClick`).
    pub outcomes: OutcomeTally,
    /// Storage time of the stored pair(s) in the final round, in seconds.
    pub wait_time: f64,
    /// Distillation rounds that reached the parity check.
    pub rounds: u32,
}

impl TrialRecord {
    fn empty() -> Self {
        Self {
            accepted: false,
            fidelity: None,
            attempts_consumed: 0,
            outcomes: OutcomeTally::default(),
            wait_time: 0.0,
            rounds: 0,
        }
    }

    fn accept(&mut self, fidelity: f64) {
        self.accepted = true;
        self.fidelity = Some(fidelity);
    }
}

enum Tables {
    None,
    Epl(Box<[[Distilled; 4]; 4]>),
    Chi(Vec<Distilled>),
}

/// Per-configuration state shared by all trials: prepared samplers and, for
/// ideal memories, the distillation outcome of every herald combination.
pub struct TrialContext {
    cfg: ProtocolConfig,
    herald: Herald,
    max_wait: u64,
    chi_locals: Option<ChiLocals>,
    tables: Tables,
}

impl TrialContext {
    pub fn new(cfg: &ProtocolConfig) -> Result<Self> {
        Self::with_chi_locals(cfg, None)
    }

    pub fn with_chi_locals(cfg: &ProtocolConfig, chi_locals: Option<ChiLocals>) -> Result<Self> {
        cfg.validate()?;
        if let Some(l) = &chi_locals {
            for u in [&l.alice, &l.bob] {
                if u.rows() != 2 || !u.is_unitary(crate::qstate::STATE_TOL) {
                    return Err(Error::InvalidMatrix("a single-qubit unitary"));
                }
            }
        }
        let herald = Herald::new(cfg.attempt, cfg.protocol.herald_mode(), cfg.herald_sampling)?;
        let tables = match cfg.protocol {
            _ if !cfg.memory.is_ideal() => Tables::None,
            Protocol::Epl => Tables::Epl(Box::new(distill::epl_table(cfg.gate)?)),
            Protocol::Chi => Tables::Chi(distill::chi_table(cfg.gate, chi_locals.as_ref())?),
            _ => Tables::None,
        };
        Ok(Self {
            max_wait: cfg.effective_max_wait(),
            cfg: cfg.clone(),
            herald,
            chi_locals,
            tables,
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn run_trial(&self, trial_index: u64) -> TrialRecord {
        let mut rng = derive_stream(self.cfg.master_seed, trial_index, tags::HERALD);
        let mut accept = derive_stream(self.cfg.master_seed, trial_index, tags::ACCEPT);
        match self.cfg.protocol {
            Protocol::OneClick | Protocol::TwoClick => self.heralded(&mut rng),
            Protocol::Epl => self.epl(&mut rng, &mut accept),
            Protocol::Chi => self.chi(&mut rng, &mut accept),
        }
    }

    fn heralded(&self, rng: &mut RngStream) -> TrialRecord {
        let mut rec = TrialRecord::empty();
        let (kind, used) = self.herald.until_success(rng, self.cfg.max_trial_attempts);
        rec.attempts_consumed = used;
        rec.outcomes.record(kind);
        if let Some(f) = kind.bell_fidelity() {
            rec.accept(f);
        }
        rec
    }

    /// Heralds one pair within `cap` attempts (bounded by the trial budget).
    fn herald_pair(&self, rng: &mut RngStream, rec: &mut TrialRecord, cap: u64) -> Option<(HeraldKind, u64)> {
        let left = self.cfg.max_trial_attempts.saturating_sub(rec.attempts_consumed);
        if left == 0 {
            return None;
        }
        let (kind, used) = self.herald.until_success(rng, cap.min(left));
        rec.attempts_consumed += used;
        rec.outcomes.record(kind);
        kind.is_herald().then_some((kind, used))
    }

    fn budget_left(&self, rec: &TrialRecord) -> bool {
        rec.attempts_consumed < self.cfg.max_trial_attempts
    }

    fn seconds(&self, attempts: u64) -> f64 {
        attempts as f64 / self.cfg.attempt_rate
    }

    fn stored(&self, kind: HeraldKind, t: f64) -> crate::qstate::DensityMatrix {
        let rho = kind.state().expect("heralded kinds carry a state");
        decay_qubits(&rho, &self.cfg.memory, t, &[0, 1]).expect("memory parameters validated")
    }

    fn epl_outcome(&self, mem: HeraldKind, data: HeraldKind, t: f64) -> Distilled {
        if let Tables::Epl(table) = &self.tables {
            return table[distill::slot(mem)][distill::slot(data)];
        }
        let check = parity_check(&self.stored(mem, t), &data.state().expect("heralded"), self.cfg.gate)
            .expect("two-qubit inputs");
        match check.data {
            Some(rho) if check.prob > 0.0 => Distilled {
                prob: check.prob,
                fidelity: crate::qstate::fidelity_to_bell(&rho),
            },
            _ => Distilled {
                prob: 0.0,
                fidelity: 0.0,
            },
        }
    }

    fn epl(&self, rng: &mut RngStream, accept: &mut RngStream) -> TrialRecord {
        let mut rec = TrialRecord::empty();
        while self.budget_left(&rec) {
            let Some((mem, _)) = self.herald_pair(rng, &mut rec, u64::MAX) else {
                break;
            };
            let Some((data, wait)) = self.herald_pair(rng, &mut rec, self.max_wait) else {
                continue;
            };
            let t = self.seconds(wait);
            let d = self.epl_outcome(mem, data, t);
            rec.rounds += 1;
            if accept.uniform() < d.prob {
                rec.wait_time = t;
                rec.accept(d.fidelity);
                break;
            }
        }
        rec
    }

    fn chi_outcome(&self, first: HeraldKind, second: HeraldKind, data: HeraldKind, t1: f64, t2: f64) -> Distilled {
        if let Tables::Chi(table) = &self.tables {
            return table[distill::chi_slot(first, second, data)];
        }
        chi_checks(
            &self.stored(first, t1),
            &self.stored(second, t2),
            &data.state().expect("heralded"),
            self.cfg.gate,
            self.chi_locals.as_ref(),
        )
        .expect("two-qubit inputs")
    }

    fn chi(&self, rng: &mut RngStream, accept: &mut RngStream) -> TrialRecord {
        let mut rec = TrialRecord::empty();
        while self.budget_left(&rec) {
            let Some((first, _)) = self.herald_pair(rng, &mut rec, u64::MAX) else {
                break;
            };
            let Some((second, w2)) = self.herald_pair(rng, &mut rec, self.max_wait) else {
                continue;
            };
            let Some((data, w3)) = self.herald_pair(rng, &mut rec, self.max_wait) else {
                continue;
            };
            let t1 = self.seconds(w2 + w3);
            let t2 = self.seconds(w3);
            let d = self.chi_outcome(first, second, data, t1, t2);
            rec.rounds += 1;
            if accept.uniform() < d.prob {
                rec.wait_time = t1;
                rec.accept(d.fidelity);
                break;
            }
        }
        rec
    }
}

fn run_checked(cfg: &ProtocolConfig, expected: Protocol, trial_index: u64) -> Result<TrialRecord> {
    if cfg.protocol != expected {
        return Err(Error::Config(format!(
            "configuration is for {}, not {}",
            cfg.protocol, expected
        )));
    }
    Ok(TrialContext::new(cfg)?.run_trial(trial_index))
}

pub fn run_one_click(cfg: &ProtocolConfig, trial_index: u64) -> Result<TrialRecord> {
    run_checked(cfg, Protocol::OneClick, trial_index)
}

pub fn run_two_click(cfg: &ProtocolConfig, trial_index: u64) -> Result<TrialRecord> {
    run_checked(cfg, Protocol::TwoClick, trial_index)
}

pub fn run_epl(cfg: &ProtocolConfig, trial_index: u64) -> Result<TrialRecord> {
    run_checked(cfg, Protocol::Epl, trial_index)
}

pub fn run_chi(cfg: &ProtocolConfig, trial_index: u64) -> Result<TrialRecord> {
    run_checked(cfg, Protocol::Chi, trial_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(protocol: Protocol, p_e: f64, eta: f64, n_add: f64) -> ProtocolConfig {
        let mut c = ProtocolConfig::new(protocol, AttemptParams::new(p_e, eta, n_add).unwrap(), 1e6);
        c.master_seed = 11;
        c
    }

    #[test]
    fn max_wait_rule() {
        assert_eq!(default_max_wait(1e5, 3e-4), 300);
        assert_eq!(default_max_wait(1e6, f64::INFINITY), MAX_WAIT_CEILING);
        assert_eq!(default_max_wait(1e6, 10.0), MAX_WAIT_CEILING);
        assert_eq!(default_max_wait(1.0, 1e-9), 10);
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in Protocol::ALL {
            assert_eq!(p.name().parse::<Protocol>().unwrap(), p);
        }
        assert!("three_click".parse::<Protocol>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(Protocol::Epl, 0.5, 0.1, 0.1);
        c.validate().unwrap();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = cfg(Protocol::Epl, 0.5, 0.1, 0.1);
        c.attempt_rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg(Protocol::Epl, 0.5, 0.1, 0.1);
        c.max_wait_attempts = Some(0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn wrong_protocol_is_rejected() {
        assert!(run_epl(&cfg(Protocol::OneClick, 0.5, 0.1, 0.1), 0).is_err());
        assert!(run_one_click(&cfg(Protocol::OneClick, 0.5, 0.1, 0.1), 0).is_ok());
    }

    #[test]
    fn trials_are_deterministic() {
        for p in Protocol::ALL {
            let ctx = TrialContext::new(&cfg(p, 0.4, 0.3, 0.05)).unwrap();
            for i in 0..20 {
                assert_eq!(ctx.run_trial(i), ctx.run_trial(i));
            }
        }
    }

    #[test]
    fn records_are_consistent() {
        for p in Protocol::ALL {
            let ctx = TrialContext::new(&cfg(p, 0.4, 0.3, 0.05)).unwrap();
            for i in 0..200 {
                let r = ctx.run_trial(i);
                assert!(r.attempts_consumed >= 1);
                assert_eq!(r.accepted, r.fidelity.is_some());
                if let Some(f) = r.fidelity {
                    assert!((0.0..=1.0 + 1e-12).contains(&f));
                }
            }
        }
    }

    #[test]
    fn epl_zero_noise_is_pure() {
        let ctx = TrialContext::new(&cfg(Protocol::Epl, 0.5, 1.0, 0.0)).unwrap();
        for i in 0..500 {
            let r = ctx.run_trial(i);
            assert_eq!(r.fidelity, Some(1.0));
        }
    }

    #[test]
    fn trial_budget_aborts() {
        let mut c = cfg(Protocol::Epl, 0.5, 0.0, 0.0);
        c.max_trial_attempts = 1000;
        let r = TrialContext::new(&c).unwrap().run_trial(0);
        assert!(!r.accepted);
        assert_eq!(r.attempts_consumed, 1000);
    }

    #[test]
    fn decayed_path_matches_table_path_without_decay() {
        let ideal = cfg(Protocol::Epl, 0.3, 0.2, 0.05);
        let mut slow = ideal.clone();
        slow.memory.t1 = 1e300;
        slow.max_wait_attempts = Some(MAX_WAIT_CEILING);
        let a = TrialContext::new(&ideal).unwrap();
        let b = TrialContext::new(&slow).unwrap();
        for i in 0..200 {
            let (ra, rb) = (a.run_trial(i), b.run_trial(i));
            assert_eq!(ra.accepted, rb.accepted);
            assert_eq!(ra.attempts_consumed, rb.attempts_consumed);
            if let (Some(fa), Some(fb)) = (ra.fidelity, rb.fidelity) {
                assert!((fa - fb).abs() < 1e-12);
            }
        }
    }
}
