use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::{Error, Result, Vec3};

use super::{Affine, VoxelGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    Trilinear,
    Nearest,
}

/// Samples `grid` on a new lattice.
///
/// Each output voxel takes the input value at the world point given by
/// `target_affine`. Points outside the input footprint take the kind's
/// outside value (0, or `+clip` for SDFs).
pub fn resample(
    grid: &VoxelGrid,
    target_affine: &Affine,
    target_shape: [usize; 3],
    method: Interpolation,
) -> Result<VoxelGrid> {
    if grid.kind().is_discrete() && method != Interpolation::Nearest {
        return Err(Error::Precondition(format!(
            "{} grids must be resampled with nearest-neighbour interpolation",
            grid.kind().name()
        )));
    }
    if target_shape == grid.shape() && target_affine == grid.affine() {
        return Ok(grid.clone());
    }
    // voxel_out -> voxel_in
    let map = grid.affine().inverse_linear() * target_affine.linear();
    let offset = grid.affine().world_to_voxel(&target_affine.translation());
    resample_with(grid, target_affine, target_shape, method, |v| map * v + offset)
}

/// Resamples on `target_affine`/`target_shape`, mapping each output voxel
/// index to an input voxel coordinate through `to_input`.
pub(crate) fn resample_with<F>(
    grid: &VoxelGrid,
    target_affine: &Affine,
    target_shape: [usize; 3],
    method: Interpolation,
    to_input: F,
) -> Result<VoxelGrid>
where
    F: Fn(Vec3) -> Vec3 + Sync,
{
    let [nx, ny, _] = target_shape;
    let outside = grid.kind().outside_value();
    let mut data = vec![0.0f32; target_shape.iter().product()];
    data.par_chunks_mut(nx * ny)
        .enumerate()
        .for_each(|(k, slab)| {
            for j in 0..ny {
                for i in 0..nx {
                    let u = to_input(Vec3::new(i as f64, j as f64, k as f64));
                    slab[i + nx * j] = match method {
                        Interpolation::Trilinear => grid
                            .trilinear_at_voxel(&u)
                            .map(|v| v as f32)
                            .unwrap_or(outside),
                        Interpolation::Nearest => grid.nearest_at_voxel(&u).unwrap_or(outside),
                    };
                }
            }
        });
    VoxelGrid::new(target_shape, data, target_affine.clone(), grid.kind())
}

/// Resamples to an isotropic grid of `voxel_mm` in a canonical orientation.
///
/// Output axis `a` is the input axis whose direction is most aligned with
/// world axis `a`, flipped to point along the positive world direction, so
/// the output linear part has a positive determinant. The world field of
/// view of the input (the union of its voxel footprints) is preserved and
/// the output shape is `ceil(extent / voxel_mm)` per axis. Discrete kinds
/// use nearest-neighbour interpolation, others trilinear.
pub fn conform_to_isotropic(grid: &VoxelGrid, voxel_mm: f64) -> Result<VoxelGrid> {
    if !(voxel_mm > 0.0 && voxel_mm.is_finite()) {
        return Err(Error::Precondition(format!("voxel size {voxel_mm} must be positive")));
    }
    let linear = grid.affine().linear();
    let spacing = grid.spacing();
    let shape = grid.shape();

    let perm = canonical_permutation(&linear)?;
    let mut out_linear = Matrix3::zeros();
    let mut out_shape = [0usize; 3];
    // World position of the input footprint corner that becomes the output
    // voxel footprint corner.
    let mut corner_voxel = Vec3::zeros();
    for out_axis in 0..3 {
        let in_axis = perm[out_axis];
        let dir = linear.column(in_axis).into_owned();
        let sign = if dir[out_axis] >= 0.0 { 1.0 } else { -1.0 };
        let unit = dir * (sign / spacing[in_axis]);
        out_linear.set_column(out_axis, &(unit * voxel_mm));
        let extent = shape[in_axis] as f64 * spacing[in_axis];
        out_shape[out_axis] = ((extent / voxel_mm) - 1e-6).ceil().max(1.0) as usize;
        corner_voxel[in_axis] = if sign > 0.0 {
            -0.5
        } else {
            shape[in_axis] as f64 - 0.5
        };
    }
    let corner_world = grid.affine().voxel_to_world(&corner_voxel);
    let half = out_linear * Vec3::new(0.5, 0.5, 0.5);
    let target = Affine::from_parts(out_linear, corner_world + half)?;

    let method = if grid.kind().is_discrete() {
        Interpolation::Nearest
    } else {
        Interpolation::Trilinear
    };
    resample(grid, &target, out_shape, method)
}

/// For each world axis, the input axis most aligned with it.
fn canonical_permutation(linear: &Matrix3<f64>) -> Result<[usize; 3]> {
    let mut dirs = [Vec3::zeros(); 3];
    for (a, d) in dirs.iter_mut().enumerate() {
        *d = linear.column(a).normalize();
    }
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let score = |p: &[usize; 3]| -> f64 { (0..3).map(|w| dirs[p[w]][w].abs()).sum() };
    perms
        .iter()
        .copied()
        .max_by(|a, b| score(a).total_cmp(&score(b)))
        .ok_or_else(|| Error::Geometry("no canonical permutation".into()))
}
