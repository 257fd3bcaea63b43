//! Monte Carlo simulation of transducer-linked remote entanglement.
//!
//! Maps device parameters (end-to-end efficiency `eta`, added noise `n_add`,
//! attempt rate, memory `T1`/`T2phi`, CNOT quality) to Bell-pair fidelity
//! and ebit rate for one-click and two-click heralding and for EPL 2-to-1 and
//! Chi 3-to-1 distillation.
//!
//! ```
//! use qlink::{run_metrics, AttemptParams, Protocol, ProtocolConfig};
//!
//! let mut cfg = ProtocolConfig::new(Protocol::TwoClick, AttemptParams::new(0.5, 0.1, 1e-3)?, 1e6);
//! cfg.trials = 2000;
//! let m = run_metrics(&cfg)?;
//! assert!(m.fidelity_mean.unwrap() > 0.95);
//! # Ok::<(), qlink::Error>(())
//! ```

pub mod analytic;
pub mod channels;
mod error;
pub mod herald;
pub mod presets;
pub mod protocols;
pub mod qstate;
pub mod runner;
pub mod sampling;
pub mod sweeps;

pub use channels::{GateNoiseParams, MemoryParams};
pub use error::{Error, Result};
pub use herald::{AttemptParams, HeraldKind, HeraldMode, HeraldOutcome, HeraldSampling};
pub use presets::{find_preset, list_presets, ScenarioPreset};
pub use protocols::{ChannelMetrics, Protocol, ProtocolConfig, TrialContext, TrialRecord};
pub use qstate::{DensityMatrix, KrausChannel};
pub use runner::{run_metrics, run_metrics_with, run_trials, Execution};
pub use sweeps::{optimize_pe, run_sweep, Objective, PePolicy, SweepSpec};
