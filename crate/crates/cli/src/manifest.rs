//! Run manifest: what ran, with which inputs, what came out.
//!
//! The manifest is a run report, not a result artifact: it carries wall-clock
//! timings, so it is the one output file exempt from byte-identical rerun
//! comparisons. Every result file is listed with its SHA-256 checksum.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Serialize)]
pub struct CutoffStabilityRecord {
    pub n_max: usize,
    pub n_max_check: usize,
    pub compared: usize,
    pub max_shift: f64,
    /// Whether every compared eigenvalue stayed within 1e-6 of the enlarged
    /// basis. Strong pumping legitimately fails this; the value above is the
    /// honest diagnostic either way.
    pub pass: bool,
}

/// Fixed identification tolerances, echoed so a reader of the artifacts can
/// interpret them without the source.
#[derive(Serialize)]
pub struct Tolerances {
    pub zero_mode_rel: f64,
    pub degeneracy_cluster_rel: f64,
    pub structural_zero_rel: f64,
    pub spectral_identity: f64,
    pub keldysh_positivity: f64,
    pub sum_rule: f64,
    pub ndos_threshold_rel: f64,
    pub ndos_omega_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            zero_mode_rel: 1e-9,
            degeneracy_cluster_rel: 1e-8,
            structural_zero_rel: 1e-10,
            spectral_identity: 1e-9,
            keldysh_positivity: 1e-10,
            sum_rule: 1e-8,
            ndos_threshold_rel: 1e-6,
            ndos_omega_min: 1e-3,
        }
    }
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub gamma: f64,
    pub config: RunConfig,
    pub tolerances: Tolerances,
    pub stages_ms: BTreeMap<&'static str, u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_stability: Option<CutoffStabilityRecord>,
    /// Command-specific scalar diagnostics (sum rule, occupation, areas).
    pub summary: BTreeMap<&'static str, f64>,
    pub warnings: Vec<String>,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn new(command: &'static str, config: &RunConfig) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            gamma: crate::config::GAMMA,
            config: config.clone(),
            tolerances: Tolerances::default(),
            stages_ms: BTreeMap::new(),
            cutoff_stability: None,
            summary: BTreeMap::new(),
            warnings: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Tracks per-stage wall-clock times as the command progresses.
pub struct StageClock {
    last: Instant,
}

impl StageClock {
    pub fn start() -> Self {
        StageClock {
            last: Instant::now(),
        }
    }

    /// Record the time since the previous mark under `name`.
    pub fn mark(&mut self, manifest: &mut RunManifest, name: &'static str) {
        let now = Instant::now();
        manifest
            .stages_ms
            .insert(name, now.duration_since(self.last).as_millis());
        self.last = now;
    }
}

/// Write a result file and append its checksum record.
pub fn write_output(
    manifest: &mut RunManifest,
    out_dir: &Path,
    name: &str,
    contents: &str,
) -> Result<(), CliError> {
    let path = out_dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let digest = Sha256::digest(contents.as_bytes());
    manifest.outputs.push(OutputRecord {
        path: name.to_string(),
        sha256: format!("{digest:x}"),
        bytes: contents.len() as u64,
    });
    Ok(())
}
