//! Named parameter sets: link scenarios and published transducer devices.
//!
//! There is deliberately no `s1` entry; define that scenario in a config file.

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::protocols::ProtocolConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Scenario,
    /// Device-level efficiency; scale by the optical path efficiency to get
    /// the end-to-end `eta`.
    Device,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioPreset {
    pub name: &'static str,
    pub kind: PresetKind,
    pub description: &'static str,
    pub eta: f64,
    pub n_add: f64,
    /// Hz. Continuous-wave devices use their bandwidth.
    pub attempt_rate: f64,
    /// Seconds; infinite when not part of the preset.
    pub t1: f64,
    pub t2phi: f64,
}

impl ScenarioPreset {
    /// Multiplies `eta` by the optical path efficiency (fiber coupling,
    /// filters, detectors).
    pub fn with_path_efficiency(&self, path_efficiency: f64) -> Result<Self> {
        check_range("path_efficiency", path_efficiency, 0.0, 1.0, "[0, 1]")?;
        Ok(Self {
            eta: self.eta * path_efficiency,
            ..self.clone()
        })
    }

    /// Writes the preset's link and memory parameters into `cfg`.
    pub fn apply(&self, cfg: &mut ProtocolConfig) {
        cfg.attempt.eta = self.eta;
        cfg.attempt.n_add = self.n_add;
        cfg.attempt_rate = self.attempt_rate;
        cfg.memory.t1 = self.t1;
        cfg.memory.t2phi = self.t2phi;
    }
}

const INF: f64 = f64::INFINITY;

const fn scenario(
    name: &'static str,
    description: &'static str,
    eta: f64,
    n_add: f64,
    attempt_rate: f64,
    t1: f64,
) -> ScenarioPreset {
    ScenarioPreset {
        name,
        kind: PresetKind::Scenario,
        description,
        eta,
        n_add,
        attempt_rate,
        t1,
        t2phi: INF,
    }
}

const fn device(
    name: &'static str,
    description: &'static str,
    eta: f64,
    n_add: f64,
    attempt_rate: f64,
) -> ScenarioPreset {
    ScenarioPreset {
        name,
        kind: PresetKind::Device,
        description,
        eta,
        n_add,
        attempt_rate,
        t1: INF,
        t2phi: INF,
    }
}

static REGISTRY: [ScenarioPreset; 10] = [
    scenario("present", "present-day transducer link with a 300 us memory", 1e-4, 0.5, 1e5, 3e-4),
    scenario("present-no-t1", "present-day transducer link, memory without relaxation", 1e-4, 0.5, 1e5, INF),
    scenario("s2", "1000x efficiency and 50x lower noise than present", 0.1, 0.01, 1e6, 1e-3),
    scenario("s3", "high-efficiency, low-noise link", 0.3, 1e-3, 1e6, 1e-2),
    device("bulk-linbo3", "bulk LiNbO3 electro-optic, pulsed at 0.5 kHz", 0.087, 0.16, 500.0),
    device("thin-film-linbo3", "thin-film LiNbO3 electro-optic, CW (30 MHz bandwidth)", 0.009, 0.12, 30e6),
    device("sin-membrane", "SiN membrane electro-optomechanic, CW (12 kHz bandwidth)", 0.47, 3.2, 12e3),
    device("si-linbo3-pom-100khz", "Si/LiNbO3 piezo-optomechanic, pulsed at 100 kHz", 5.2e-5, 6.0, 100e3),
    device("si-linbo3-pom-170khz", "Si/LiNbO3 piezo-optomechanic, pulsed at 170 kHz", 0.05, 5.0, 170e3),
    device("si-om", "Si optomechanic, CW (18 MHz bandwidth)", 0.0047, 0.58, 18e6),
];

pub fn list_presets() -> Vec<ScenarioPreset> {
    REGISTRY.to_vec()
}

pub fn find_preset(name: &str) -> Result<ScenarioPreset> {
    REGISTRY
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .cloned()
        .ok_or_else(|| Error::PresetNotFound(name.to_string()))
}
