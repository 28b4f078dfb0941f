//! Synthetic fixtures shared by the criterion benches.

use cortexforge::{Affine, GridKind, SdfGrid, Vec3, VoxelGrid};

/// Centre of an `n`³ grid with the identity affine.
pub fn grid_center(n: usize) -> Vec3 {
    Vec3::repeat((n as f64 - 1.0) / 2.0)
}

/// Analytic signed distance to a sphere of `radius` at the grid centre,
/// clipped at 5 mm.
pub fn sphere_sdf(n: usize, radius: f64) -> SdfGrid {
    let c = grid_center(n);
    let g = VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Intensity, |i, j, k| {
        ((Vec3::new(i as f64, j as f64, k as f64) - c).norm() - radius) as f32
    })
    .expect("valid grid");
    SdfGrid::from_values(&g, 5.0).expect("finite values")
}

/// Concentric white matter (label 2, radius `wm`) and cortex (label 3, out
/// to `pial`) with matching SDFs in lw/lp/rw/rp order.
pub fn concentric_phantom(n: usize, wm: f64, pial: f64) -> (VoxelGrid, [SdfGrid; 4]) {
    let c = grid_center(n);
    let labels = VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Label, |i, j, k| {
        let d = (Vec3::new(i as f64, j as f64, k as f64) - c).norm();
        if d < wm {
            2.0
        } else if d < pial {
            3.0
        } else {
            0.0
        }
    })
    .expect("valid grid");
    let (w, p) = (sphere_sdf(n, wm), sphere_sdf(n, pial));
    (labels, [w.clone(), p.clone(), w, p])
}

/// Binary ball of `radius` voxels at the grid centre.
pub fn ball_mask(n: usize, radius: f64) -> VoxelGrid {
    let c = grid_center(n);
    VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Mask, |i, j, k| {
        f32::from((Vec3::new(i as f64, j as f64, k as f64) - c).norm() < radius)
    })
    .expect("valid grid")
}
