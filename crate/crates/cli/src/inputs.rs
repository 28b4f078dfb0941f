//! Loading and normalising volumes handed to the subcommands.

use std::path::{Path, PathBuf};

use cortexforge::volume::{conform_to_isotropic, load_nifti};
use cortexforge::{GridKind, SdfGrid, VoxelGrid};

use crate::error::{CliError, CliResult};

/// Checks existence up front so a missing file reports the flag it came from.
pub fn existing(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} {} does not exist", path.display())))
    }
}

/// A label volume. Float files with only non-negative integral values
/// (the usual float32 segmentation export) are accepted as labels.
pub fn load_labels(path: &Path) -> CliResult<VoxelGrid> {
    existing(path, "label volume")?;
    let grid = load_nifti(path)?;
    match grid.kind() {
        GridKind::Label | GridKind::Mask => Ok(grid),
        GridKind::Intensity if grid.data().iter().all(|&v| v >= 0.0 && v.fract() == 0.0) => {
            Ok(grid.with_kind(GridKind::Label)?)
        }
        other => Err(CliError::usage(format!(
            "{} holds {} values, expected a label volume",
            path.display(),
            other.name()
        ))),
    }
}

/// A binary mask; any non-zero voxel of a label or intensity file is
/// foreground.
pub fn load_mask(path: &Path) -> CliResult<VoxelGrid> {
    existing(path, "mask")?;
    let grid = load_nifti(path)?;
    match grid.kind() {
        GridKind::Mask => Ok(grid),
        GridKind::Label | GridKind::Intensity => Ok(grid.nonzero_mask()),
        other => Err(CliError::usage(format!(
            "{} holds {} values, expected a mask",
            path.display(),
            other.name()
        ))),
    }
}

/// `sdf_<channel>` or, failing that, the network output `pred_sdf_<channel>`,
/// compressed or not.
pub fn find_sdf(dir: &Path, channel: &str) -> CliResult<PathBuf> {
    let candidates = [
        format!("sdf_{channel}.nii.gz"),
        format!("sdf_{channel}.nii"),
        format!("pred_sdf_{channel}.nii.gz"),
        format!("pred_sdf_{channel}.nii"),
    ];
    candidates
        .iter()
        .map(|name| dir.join(name))
        .find(|p| p.is_file())
        .ok_or_else(|| {
            CliError::usage(format!(
                "no sdf_{channel}.nii[.gz] or pred_sdf_{channel}.nii[.gz] in {}",
                dir.display()
            ))
        })
}

pub fn load_sdf(dir: &Path, channel: &str, default_clip_mm: f64) -> CliResult<SdfGrid> {
    let path = find_sdf(dir, channel)?;
    log::debug!("loading {}", path.display());
    Ok(SdfGrid::load(&path, default_clip_mm)?)
}

/// Resamples to 1 mm isotropic unless the grid already is.
pub fn conform(grid: &VoxelGrid) -> CliResult<Option<VoxelGrid>> {
    if grid.is_isotropic(1.0, 1e-6) {
        return Ok(None);
    }
    Ok(Some(conform_to_isotropic(grid, 1.0)?))
}
