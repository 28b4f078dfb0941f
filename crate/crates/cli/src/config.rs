//! `--config` file: a TOML manifest mirroring the command-line flags.
//!
//! ```toml
//! seed = 7
//!
//! [paths]
//! labels = "seg.nii.gz"
//! sdf_dir = "sdfs"
//! out = "shards"
//!
//! [synth]
//! max_noise_std = 10.0
//!
//! [synth.deformation]
//! max_rotation_deg = 15.0
//!
//! [fit]
//! max_iters = 300
//!
//! [acquisition]
//! orientation = "axial"
//! spacing_mm = 5.0
//! thickness_mm = 5.0
//! ```

use std::path::{Path, PathBuf};

use cortexforge::fit::FitConfig;
use cortexforge::sdf::DEFAULT_CLIP_MM;
use cortexforge::synth::SynthConfig;
use cortexforge::AcquisitionParams;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Environment variable consulted when neither `--seed` nor the config
/// file sets a seed.
pub const SEED_ENV: &str = "CORTEXFORGE_SEED";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub labels: Option<PathBuf>,
    pub sdf_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub template: Option<PathBuf>,
    pub lh_mask: Option<PathBuf>,
    pub rh_mask: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdfSection {
    pub clip_mm: f64,
}

impl Default for SdfSection {
    fn default() -> Self {
        SdfSection { clip_mm: DEFAULT_CLIP_MM }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub fit: FitConfig,
    pub sdf: SdfSection,
    /// Fixed acquisition for every synthesised pair; overrides
    /// `synth.acquisition`.
    pub acquisition: Option<AcquisitionParams>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        Ok(config)
    }

    /// Synthesis settings with the top-level acquisition override applied.
    pub fn synth_config(&self) -> CliResult<SynthConfig> {
        let mut synth = self.synth.clone();
        if let Some(a) = self.acquisition {
            synth.acquisition = Some(a);
        }
        synth.validate()?;
        Ok(synth)
    }

    pub fn fit_config(&self) -> CliResult<FitConfig> {
        self.fit.validate()?;
        Ok(self.fit)
    }

    /// Flag, then config file, then `CORTEXFORGE_SEED`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> CliResult<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }
}

/// The flag value if given, else the config value, else a usage error
/// naming the flag.
pub fn require_path(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    flag.or_else(|| config.clone())
        .ok_or_else(|| CliError::usage(format!("missing required input --{name}")))
}
