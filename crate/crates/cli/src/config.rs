//! Pipeline configuration: versioned JSON schema with fail-fast parsing.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Only schema version currently understood.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus_dir: PathBuf,
    pub models_file: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationParams {
    pub session_duration: f64,
    pub group_size: usize,
    pub n_groups: usize,
    pub n_images: usize,
    pub n_categories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Turn-taking window for conversation graphs, seconds.
    pub tau_turn: f64,
    /// Proximity distance threshold, length units.
    pub d_thresh: f64,
    /// Proximity resampling grid step, seconds.
    pub grid_dt: f64,
    /// Idle-speed threshold for location features, length units per second.
    pub v_idle: f64,
    /// Event-series bin count for DFT features.
    pub n_bins: usize,
    /// Candidate mixture sizes for model selection.
    pub k_range: Vec<usize>,
}

/// Full pipeline configuration. Unknown keys are rejected so typos fail
/// fast instead of silently falling back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub paths: Paths,
    pub simulation: SimulationParams,
    pub thresholds: Thresholds,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            paths: Paths {
                corpus_dir: PathBuf::from("corpus"),
                models_file: PathBuf::from("out/models.json"),
                output_dir: PathBuf::from("out"),
            },
            simulation: SimulationParams {
                session_duration: 600.0,
                group_size: 4,
                n_groups: 12,
                n_images: 28,
                n_categories: 6,
            },
            thresholds: Thresholds {
                tau_turn: 2.0,
                d_thresh: 1.5,
                grid_dt: 0.5,
                v_idle: 0.05,
                n_bins: 256,
                k_range: (1..=8).collect(),
            },
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported config schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        let t = &self.thresholds;
        for (name, v) in [
            ("tau_turn", t.tau_turn),
            ("d_thresh", t.d_thresh),
            ("grid_dt", t.grid_dt),
            ("v_idle", t.v_idle),
            ("session_duration", self.simulation.session_duration),
        ] {
            if !(v > 0.0) {
                bail!("threshold {name} must be positive, got {v}");
            }
        }
        if t.n_bins < 2 {
            bail!("n_bins must be at least 2");
        }
        if t.k_range.is_empty() {
            bail!("k_range must be non-empty");
        }
        Ok(())
    }

    /// Stable hash of the semantic parameters (simulation, thresholds,
    /// seed, schema version). Paths are excluded so relocating artifact
    /// directories does not change stamped hashes.
    pub fn config_hash(&self) -> String {
        let semantic = serde_json::json!({
            "schema_version": self.schema_version,
            "simulation": self.simulation,
            "thresholds": self.thresholds,
            "seed": self.seed,
        });
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_string(&semantic).expect("config serializes"));
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
