//! On-disk layout consumed by the trainer:
//! `<out>/<seed>/image.nii.gz`, `<out>/<seed>/sdf_{lw,lp,rw,rp}.nii.gz` and
//! `<out>/<seed>/provenance.json`.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Provenance, TrainingPair, SDF_CHANNELS};
use crate::sdf::{SdfGrid, DEFAULT_CLIP_MM};
use crate::volume::{load_nifti, save_nifti, GridKind};
use crate::{Error, Result};

/// Writes `pair` under `out/<seed>/` and returns that directory.
pub fn write_shard(pair: &TrainingPair, out: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = out.as_ref().join(pair.provenance.seed.to_string());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    save_nifti(&pair.image, dir.join("image.nii.gz"))?;
    for (target, name) in pair.targets.iter().zip(SDF_CHANNELS) {
        target.save(dir.join(format!("sdf_{name}.nii.gz")))?;
    }
    let path = dir.join("provenance.json");
    let json = serde_json::to_string_pretty(&pair.provenance).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(dir)
}

/// Reads a shard directory written by [`write_shard`].
pub fn load_shard(dir: impl AsRef<Path>) -> Result<TrainingPair> {
    let dir = dir.as_ref();
    let image = load_nifti(dir.join("image.nii.gz"))?;
    if image.kind() != GridKind::Intensity {
        return Err(Error::Kind { expected: "intensity", found: image.kind().name() });
    }
    let mut targets = Vec::with_capacity(4);
    for name in SDF_CHANNELS {
        targets.push(SdfGrid::load(dir.join(format!("sdf_{name}.nii.gz")), DEFAULT_CLIP_MM)?);
    }
    let targets: [SdfGrid; 4] = targets.try_into().expect("four channels");
    let path = dir.join("provenance.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let provenance: Provenance =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Ok(TrainingPair { image, targets, provenance })
}
