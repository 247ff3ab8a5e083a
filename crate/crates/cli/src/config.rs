//! Generation configuration file handling.

use lesionforge::lesion::{LesionType, SamplingParams};
use lesionforge::refine::RefineConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;

fn default_workers() -> usize {
    1
}

fn default_grid() -> usize {
    64
}

/// Optional in-pipeline refinement settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineSection {
    pub enabled: bool,
    /// `oracle`, `zero`, `smooth`, or `external:<command>`.
    #[serde(default = "default_predictor")]
    pub predictor: String,
    #[serde(default)]
    pub config: RefineConfig,
}

fn default_predictor() -> String {
    "smooth".to_string()
}

/// Batch generation settings. Per-sample seeds derive from the global seed
/// plus the lesion type and sample index, so outputs are independent of
/// worker scheduling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Output grid edge in voxels (samples are cropped around the lesion);
    /// 0 keeps whole template volumes.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Requested sample count per lesion type key.
    pub counts: BTreeMap<String, usize>,
    /// Inline sampling parameters; defaults when omitted.
    #[serde(default)]
    pub sampling_params: Option<SamplingParams>,
    #[serde(default)]
    pub refine: Option<RefineSection>,
}

impl GenerationConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<(GenerationConfig, String)> {
        let bytes = std::fs::read(path)?;
        let config: GenerationConfig = serde_json::from_slice(&bytes)?;
        config.validate()?;
        Ok((config, hash_hex(&bytes)))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        for key in self.counts.keys() {
            LesionType::from_key(key)?;
        }
        if let Some(params) = &self.sampling_params {
            params.validate()?;
        }
        if let Some(refine) = &self.refine {
            refine.config.validate()?;
        }
        Ok(())
    }

    pub fn sampling(&self) -> SamplingParams {
        self.sampling_params.clone().unwrap_or_default()
    }
}

/// SHA-256 hex digest, used for config hashes and run ids.
pub fn hash_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
