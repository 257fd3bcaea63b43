//! Result files: CSV or JSON rows plus a JSON manifest next to each output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use clap::ValueEnum;
use qlink::{ChannelMetrics, ProtocolConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 15] = [
    "protocol",
    "eta",
    "n_add",
    "p_e",
    "attempt_rate_hz",
    "t1_s",
    "t2phi_s",
    "gate_epsilon",
    "trials",
    "heralds",
    "accepted",
    "fidelity_mean",
    "fidelity_sem",
    "ebit_rate_hz",
    "seed",
];

/// One output row. Fidelity fields are empty (CSV) or null (JSON) when no
/// trial was accepted; in JSON an infinite time is also written as null.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub protocol: String,
    pub eta: f64,
    pub n_add: f64,
    pub p_e: f64,
    pub attempt_rate_hz: f64,
    pub t1_s: f64,
    pub t2phi_s: f64,
    pub gate_epsilon: f64,
    pub trials: u64,
    pub heralds: u64,
    pub accepted: u64,
    pub fidelity_mean: Option<f64>,
    pub fidelity_sem: Option<f64>,
    pub ebit_rate_hz: f64,
    pub seed: u64,
}

impl Row {
    pub fn new(cfg: &ProtocolConfig, m: &ChannelMetrics) -> Self {
        Row {
            protocol: cfg.protocol.name().to_string(),
            eta: cfg.attempt.eta,
            n_add: cfg.attempt.n_add,
            p_e: cfg.attempt.p_e,
            attempt_rate_hz: cfg.attempt_rate,
            t1_s: cfg.memory.t1,
            t2phi_s: cfg.memory.t2phi,
            gate_epsilon: cfg.gate.epsilon,
            trials: m.trials,
            heralds: m.heralds(),
            accepted: m.accepted,
            fidelity_mean: m.fidelity_mean,
            fidelity_sem: m.fidelity_sem,
            ebit_rate_hz: m.ebit_rate,
            seed: cfg.master_seed,
        }
    }
}

pub fn render(rows: &[Row], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)?;
            for row in rows {
                w.serialize(row)?;
            }
            Ok(w.into_inner()?)
        }
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(rows)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

/// Provenance record written to `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub master_seed: u64,
    pub threads: Option<usize>,
    /// Resolved configuration in the input file format; running it again
    /// reproduces the output.
    pub config_toml: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputDigest>,
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `bytes` to `out` (or stdout) and returns its digest.
pub fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<Option<OutputDigest>> {
    match out {
        Some(path) => {
            fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
            Ok(Some(OutputDigest {
                path: path.to_path_buf(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            }))
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(None)
        }
    }
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = manifest_path(out);
    let mut text = serde_json::to_vec_pretty(manifest)?;
    text.push(b'\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qlink::{AttemptParams, Protocol};

    #[test]
    fn csv_header_and_empty_fidelity() {
        let cfg = ProtocolConfig::new(Protocol::Epl, AttemptParams::new(0.5, 0.1, 0.1).unwrap(), 1e6);
        let m = ChannelMetrics {
            fidelity_mean: None,
            fidelity_sem: None,
            ebit_rate: 0.0,
            success_fraction: 0.0,
            outcome_histogram: Default::default(),
            trials: 3,
            accepted: 0,
            attempts: 30,
        };
        let text = String::from_utf8(render(&[Row::new(&cfg, &m)], Format::Csv).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "epl,0.1,0.1,0.5,1000000.0,inf,inf,1.0,3,0,0,,,0.0,0");
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("a/b.csv")), PathBuf::from("a/b.csv.manifest.json"));
        assert_eq!(sha256_hex(b"abc").len(), 64);
        assert!(sha256_hex(b"").starts_with("e3b0c442"));
    }
}
