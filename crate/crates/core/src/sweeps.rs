//! Parameter grids, coupled sweeps and excitation-probability optimization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{ChannelMetrics, Protocol, ProtocolConfig};
use crate::runner::run_metrics;
use crate::sampling::mix_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Eta,
    NAdd,
    PE,
    AttemptRateHz,
    T1S,
    T2phiS,
    GateEpsilon,
    EnvExcitation,
}

impl SweepParam {
    pub const ALL: [SweepParam; 8] = [
        SweepParam::Eta,
        SweepParam::NAdd,
        SweepParam::PE,
        SweepParam::AttemptRateHz,
        SweepParam::T1S,
        SweepParam::T2phiS,
        SweepParam::GateEpsilon,
        SweepParam::EnvExcitation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::NAdd => "n_add",
            SweepParam::PE => "p_e",
            SweepParam::AttemptRateHz => "attempt_rate_hz",
            SweepParam::T1S => "t1_s",
            SweepParam::T2phiS => "t2phi_s",
            SweepParam::GateEpsilon => "gate_epsilon",
            SweepParam::EnvExcitation => "env_excitation",
        }
    }

    pub fn set(self, cfg: &mut ProtocolConfig, value: f64) {
        match self {
            SweepParam::Eta => cfg.attempt.eta = value,
            SweepParam::NAdd => cfg.attempt.n_add = value,
            SweepParam::PE => cfg.attempt.p_e = value,
            SweepParam::AttemptRateHz => cfg.attempt_rate = value,
            SweepParam::T1S => cfg.memory.t1 = value,
            SweepParam::T2phiS => cfg.memory.t2phi = value,
            SweepParam::GateEpsilon => cfg.gate.epsilon = value,
            SweepParam::EnvExcitation => cfg.memory.env_excitation = value,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SweepParam::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown sweep parameter {s:?} (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Ties `n_add` to `eta` at every point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    FixedRatio { eta_over_n_add: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PePolicy {
    #[default]
    Fixed,
    MaxFidelity,
    MaxRate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Fidelity,
    Rate,
}

pub const MIN_PE_GRID: usize = 11;
pub const DEFAULT_PE_GRID: usize = 21;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ProtocolConfig,
    pub protocols: Vec<Protocol>,
    /// Cartesian product in the listed order; the last axis varies fastest.
    pub axes: Vec<SweepAxis>,
    pub coupling: Option<Coupling>,
    pub pe_policy: PePolicy,
    pub pe_grid: usize,
}

impl SweepSpec {
    pub fn new(base: ProtocolConfig) -> Self {
        Self {
            protocols: vec![base.protocol],
            base,
            axes: Vec::new(),
            coupling: None,
            pe_policy: PePolicy::Fixed,
            pe_grid: DEFAULT_PE_GRID,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.protocols.is_empty() {
            return Err(Error::Config("sweep lists no protocols".into()));
        }
        for (i, axis) in self.axes.iter().enumerate() {
            if axis.values.is_empty() {
                return Err(Error::Config(format!("sweep axis {} is empty", axis.param)));
            }
            if self.axes[..i].iter().any(|a| a.param == axis.param) {
                return Err(Error::Config(format!("sweep axis {} listed twice", axis.param)));
            }
        }
        if let Some(Coupling::FixedRatio { eta_over_n_add }) = self.coupling {
            if !(eta_over_n_add > 0.0 && eta_over_n_add.is_finite()) {
                return Err(Error::Domain {
                    what: "eta_over_n_add",
                    value: eta_over_n_add,
                    range: "(0, inf)",
                });
            }
            if self.axes.iter().any(|a| a.param == SweepParam::NAdd) {
                return Err(Error::Config("n_add cannot be swept while coupled to eta".into()));
            }
        }
        if self.pe_policy != PePolicy::Fixed {
            if self.axes.iter().any(|a| a.param == SweepParam::PE) {
                return Err(Error::Config("p_e cannot be swept while it is optimized".into()));
            }
            if self.pe_grid < MIN_PE_GRID {
                return Err(Error::Config(format!("pe_grid must be at least {MIN_PE_GRID}")));
            }
        }
        for p in self.points() {
            for &proto in &self.protocols {
                self.config_at(&p, proto).validate()?;
            }
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        let total: usize = self.axes.iter().map(|a| a.values.len()).product();
        (0..total)
            .map(|index| {
                let mut rest = index;
                let mut values = vec![(SweepParam::Eta, 0.0); self.axes.len()];
                for (slot, axis) in values.iter_mut().zip(&self.axes).rev() {
                    let n = axis.values.len();
                    *slot = (axis.param, axis.values[rest % n]);
                    rest /= n;
                }
                SweepPoint { index, values }
            })
            .collect()
    }

    /// Configuration for one point and protocol, before any `p_e` optimization.
    pub fn config_at(&self, point: &SweepPoint, protocol: Protocol) -> ProtocolConfig {
        let mut cfg = self.base.with_protocol(protocol);
        for &(param, value) in &point.values {
            param.set(&mut cfg, value);
        }
        if let Some(Coupling::FixedRatio { eta_over_n_add }) = self.coupling {
            cfg.attempt.n_add = cfg.attempt.eta / eta_over_n_add;
        }
        cfg.master_seed = mix_seed(self.base.master_seed, point.index as u64);
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub values: Vec<(SweepParam, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point_index: usize,
    /// Fully resolved configuration, including the `p_e` actually used.
    pub config: ProtocolConfig,
    pub metrics: ChannelMetrics,
}

pub fn run_point(spec: &SweepSpec, point: &SweepPoint) -> Result<Vec<SweepRow>> {
    spec.protocols
        .iter()
        .map(|&proto| {
            let mut cfg = spec.config_at(point, proto);
            let metrics = match spec.pe_policy {
                PePolicy::Fixed => run_metrics(&cfg)?,
                policy => {
                    let objective = if policy == PePolicy::MaxFidelity {
                        Objective::Fidelity
                    } else {
                        Objective::Rate
                    };
                    let best = optimize_pe(&cfg, objective, spec.pe_grid)?;
                    cfg.attempt.p_e = best.p_e;
                    best.metrics
                }
            };
            Ok(SweepRow {
                point_index: point.index,
                config: cfg,
                metrics,
            })
        })
        .collect()
}

/// Rows for every point and protocol, ordered by point then protocol.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for point in spec.points() {
        rows.extend(run_point(spec, &point)?);
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeOptimum {
    pub p_e: f64,
    pub metrics: ChannelMetrics,
    /// Every `(p_e, score)` evaluated, coarse grid first.
    pub evaluated: Vec<(f64, f64)>,
}

fn score(m: &ChannelMetrics, objective: Objective) -> f64 {
    match objective {
        Objective::Fidelity => m.fidelity_mean.unwrap_or(f64::NEG_INFINITY),
        Objective::Rate => m.ebit_rate,
    }
}

/// Grid search over `p_e` in `(0, 1)` followed by one refinement pass.
///
/// The coarse grid is `i / (grid + 1)` for `i = 1..=grid`; the refinement
/// places `grid` points evenly inside one coarse step either side of the
/// coarse argmax. All candidates share the configuration's seed, so they see
/// the same random streams.
pub fn optimize_pe(cfg: &ProtocolConfig, objective: Objective, grid: usize) -> Result<PeOptimum> {
    if grid < MIN_PE_GRID {
        return Err(Error::Config(format!("p_e grid must have at least {MIN_PE_GRID} points")));
    }
    let step = 1.0 / (grid as f64 + 1.0);
    let eval = |p_e: f64| -> Result<(f64, f64, ChannelMetrics)> {
        let mut c = cfg.clone();
        c.attempt.p_e = p_e;
        let m = run_metrics(&c)?;
        Ok((p_e, score(&m, objective), m))
    };
    let mut evaluated = Vec::new();
    let mut best: Option<(f64, f64, ChannelMetrics)> = None;
    let mut consider = |cand: (f64, f64, ChannelMetrics), evaluated: &mut Vec<(f64, f64)>| {
        evaluated.push((cand.0, cand.1));
        if best.as_ref().is_none_or(|b| cand.1 > b.1) {
            best = Some(cand);
        }
    };
    for i in 1..=grid {
        consider(eval(i as f64 * step)?, &mut evaluated);
    }
    let centre = evaluated
        .iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, &(p, s)| if s > acc.1 { (p, s) } else { acc })
        .0;
    for j in 1..=grid {
        let p = centre - step + 2.0 * step * j as f64 / (grid as f64 + 1.0);
        if p > 0.0 && p < 1.0 && (p - centre).abs() > 1e-15 {
            consider(eval(p)?, &mut evaluated);
        }
    }
    let (p_e, _, metrics) = best.expect("grid is non-empty");
    Ok(PeOptimum {
        p_e,
        metrics,
        evaluated,
    })
}
