//! Voxel grids, world/voxel geometry, resampling, binary morphology and
//! NIfTI-1 persistence.

mod affine;
pub mod filter;
mod grid;
mod morphology;
pub mod nifti;
mod resample;

pub use affine::Affine;
pub use grid::{GridKind, VoxelGrid};
pub use morphology::binary_fill_holes;
pub use nifti::{load_nifti, save_nifti};
pub use resample::{conform_to_isotropic, resample, Interpolation};
pub(crate) use resample::resample_with;
