//! TOML configuration files.
//!
//! Flat top-level keys describe one protocol configuration; an optional
//! `[sweep]` table turns the file into a sweep. Times are seconds, rates Hz;
//! `inf` is accepted for `t1_s` and `t2phi_s`.
//!
//! ```toml
//! protocol = "epl"            # required: one_click | two_click | epl | chi
//! preset = "s3"               # optional; explicit keys below override it
//! path_efficiency = 1.0       # scales a preset's eta (presets only)
//! eta = 0.3
//! n_add = 0.001
//! p_e = 0.5
//! attempt_rate_hz = 1e6
//! t1_s = inf
//! t2phi_s = inf
//! env_excitation = 0.0
//! gate_epsilon = 1.0
//! max_wait_attempts = 1000    # default 10 * ceil(rate * T1), within [1, 1e6]
//! max_trial_attempts = 10000000
//! trials = 5000
//! seed = 42
//! herald_sampling = "skip_ahead"  # or per_attempt
//! pe_policy = "fixed"         # or max_fidelity | max_rate
//! pe_grid = 21
//!
//! [sweep]
//! protocols = ["two_click", "epl"]   # default: [protocol]
//! eta_over_n_add = 10                # optional coupling
//!
//! [[sweep.axis]]
//! param = "eta"
//! values = [0.01, 0.1, 1.0]
//!
//! [[sweep.axis]]
//! param = "n_add"
//! log_start = -3                     # 10^-3 .. 10^-1, 5 points
//! log_stop = -1
//! points = 5
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use qlink::protocols::{DEFAULT_MAX_TRIAL_ATTEMPTS, DEFAULT_TRIALS};
use qlink::sweeps::{Coupling, SweepAxis, SweepParam, DEFAULT_PE_GRID};
use qlink::{
    find_preset, AttemptParams, HeraldSampling, PePolicy, Protocol,
    ProtocolConfig, SweepSpec,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_P_E: f64 = 0.5;
pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_N_ADD: f64 = 0.1;
pub const DEFAULT_ATTEMPT_RATE_HZ: f64 = 1e6;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    protocol: Option<Protocol>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path_efficiency: Option<f64>,
    eta: Option<f64>,
    n_add: Option<f64>,
    p_e: Option<f64>,
    attempt_rate_hz: Option<f64>,
    t1_s: Option<f64>,
    t2phi_s: Option<f64>,
    env_excitation: Option<f64>,
    gate_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_wait_attempts: Option<u64>,
    max_trial_attempts: Option<u64>,
    trials: Option<u64>,
    seed: Option<u64>,
    herald_sampling: Option<HeraldSampling>,
    pe_policy: Option<PePolicy>,
    pe_grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    protocols: Option<Vec<Protocol>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta_over_n_add: Option<f64>,
    #[serde(default, rename = "axis")]
    axes: Vec<RawAxis>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    param: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
}

/// A resolved configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct Loaded {
    pub config: ProtocolConfig,
    pub pe_policy: PePolicy,
    pub pe_grid: usize,
    pub sweep: Option<SweepSpec>,
}

impl Loaded {
    /// Sweep described by the file, or a single-point sweep of the base config.
    pub fn sweep_spec(&self) -> SweepSpec {
        let mut spec = self.sweep.clone().unwrap_or_else(|| SweepSpec::new(self.config.clone()));
        spec.base = self.config.clone();
        spec.pe_policy = self.pe_policy;
        spec.pe_grid = self.pe_grid;
        spec
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.config.master_seed = seed;
        if let Some(s) = &mut self.sweep {
            s.base.master_seed = seed;
        }
    }

    pub fn set_trials(&mut self, trials: u64) {
        self.config.trials = trials;
        if let Some(s) = &mut self.sweep {
            s.base.trials = trials;
        }
    }
}

pub fn load_config(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse_config(text: &str) -> Result<Loaded> {
    let raw: RawConfig = toml::from_str(text)?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<Loaded> {
    let Some(protocol) = raw.protocol else {
        bail!("missing required key `protocol` (one_click, two_click, epl or chi)");
    };
    let mut cfg = ProtocolConfig::new(
        protocol,
        AttemptParams {
            p_e: DEFAULT_P_E,
            eta: DEFAULT_ETA,
            n_add: DEFAULT_N_ADD,
        },
        DEFAULT_ATTEMPT_RATE_HZ,
    );
    cfg.master_seed = DEFAULT_SEED;
    cfg.trials = DEFAULT_TRIALS;
    cfg.max_trial_attempts = DEFAULT_MAX_TRIAL_ATTEMPTS;
    match (&raw.preset, raw.path_efficiency) {
        (Some(name), pe) => {
            let preset = find_preset(name)?.with_path_efficiency(pe.unwrap_or(1.0))?;
            preset.apply(&mut cfg);
        }
        (None, Some(_)) => bail!("`path_efficiency` only applies together with `preset`"),
        (None, None) => {}
    }
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut cfg.attempt.eta, raw.eta);
    set(&mut cfg.attempt.n_add, raw.n_add);
    set(&mut cfg.attempt.p_e, raw.p_e);
    set(&mut cfg.attempt_rate, raw.attempt_rate_hz);
    set(&mut cfg.memory.t1, raw.t1_s);
    set(&mut cfg.memory.t2phi, raw.t2phi_s);
    set(&mut cfg.memory.env_excitation, raw.env_excitation);
    set(&mut cfg.gate.epsilon, raw.gate_epsilon);
    cfg.max_wait_attempts = raw.max_wait_attempts.or(cfg.max_wait_attempts);
    cfg.max_trial_attempts = raw.max_trial_attempts.unwrap_or(cfg.max_trial_attempts);
    cfg.trials = raw.trials.unwrap_or(cfg.trials);
    cfg.master_seed = raw.seed.unwrap_or(cfg.master_seed);
    cfg.herald_sampling = raw.herald_sampling.unwrap_or_default();
    cfg.validate()?;

    let pe_policy = raw.pe_policy.unwrap_or_default();
    let pe_grid = raw.pe_grid.unwrap_or(DEFAULT_PE_GRID);
    let sweep = raw.sweep.map(|s| resolve_sweep(s, &cfg)).transpose()?;
    let loaded = Loaded {
        config: cfg,
        pe_policy,
        pe_grid,
        sweep,
    };
    loaded.sweep_spec().validate()?;
    Ok(loaded)
}

fn resolve_sweep(raw: RawSweep, base: &ProtocolConfig) -> Result<SweepSpec> {
    let mut spec = SweepSpec::new(base.clone());
    if let Some(p) = raw.protocols {
        spec.protocols = p;
    }
    spec.coupling = raw
        .eta_over_n_add
        .map(|eta_over_n_add| Coupling::FixedRatio { eta_over_n_add });
    spec.axes = raw
        .axes
        .into_iter()
        .map(resolve_axis)
        .collect::<Result<_>>()?;
    if spec.axes.is_empty() {
        bail!("[sweep] needs at least one [[sweep.axis]]");
    }
    Ok(spec)
}

fn resolve_axis(raw: RawAxis) -> Result<SweepAxis> {
    let param: SweepParam = raw.param.parse()?;
    let values = match (raw.values, raw.log_start, raw.log_stop, raw.points) {
        (Some(v), None, None, None) => v,
        (None, Some(a), Some(b), Some(n)) if n >= 2 => (0..n)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect(),
        (None, Some(a), Some(_), Some(1)) => vec![10f64.powf(a)],
        _ => bail!(
            "sweep axis `{param}` needs either `values` or all of `log_start`, `log_stop`, `points`"
        ),
    };
    Ok(SweepAxis { param, values })
}

fn raw_from(cfg: &ProtocolConfig, pe_policy: PePolicy, pe_grid: usize) -> RawConfig {
    RawConfig {
        protocol: Some(cfg.protocol),
        preset: None,
        path_efficiency: None,
        eta: Some(cfg.attempt.eta),
        n_add: Some(cfg.attempt.n_add),
        p_e: Some(cfg.attempt.p_e),
        attempt_rate_hz: Some(cfg.attempt_rate),
        t1_s: Some(cfg.memory.t1),
        t2phi_s: Some(cfg.memory.t2phi),
        env_excitation: Some(cfg.memory.env_excitation),
        gate_epsilon: Some(cfg.gate.epsilon),
        max_wait_attempts: cfg.max_wait_attempts,
        max_trial_attempts: Some(cfg.max_trial_attempts),
        trials: Some(cfg.trials),
        seed: Some(cfg.master_seed),
        herald_sampling: Some(cfg.herald_sampling),
        pe_policy: Some(pe_policy),
        pe_grid: Some(pe_grid),
        sweep: None,
    }
}

/// Fully explicit TOML for a resolved configuration; `parse_config` reads it
/// back to an equal value.
pub fn emit(loaded: &Loaded) -> Result<String> {
    let mut raw = raw_from(&loaded.config, loaded.pe_policy, loaded.pe_grid);
    raw.sweep = loaded.sweep.as_ref().map(|s| RawSweep {
        protocols: Some(s.protocols.clone()),
        eta_over_n_add: s.coupling.map(|Coupling::FixedRatio { eta_over_n_add }| eta_over_n_add),
        axes: s
            .axes
            .iter()
            .map(|a| RawAxis {
                param: a.param.name().to_string(),
                values: Some(a.values.clone()),
                ..RawAxis::default()
            })
            .collect(),
    });
    Ok(toml::to_string(&raw)?)
}

/// TOML for a single configuration (as used for one sweep row).
pub fn emit_config(cfg: &ProtocolConfig) -> Result<String> {
    Ok(toml::to_string(&raw_from(cfg, PePolicy::Fixed, DEFAULT_PE_GRID))?)
}
