use crate::mesh::{
    detect_self_intersections, extract_isosurface, largest_component, smooth, validate, TriangleMesh,
    TAUBIN_LAMBDA, TAUBIN_MU,
};
use crate::volume::filter::gaussian_blur;
use crate::volume::{binary_fill_holes, GridKind, VoxelGrid};
use crate::{Error, Result};

/// Taubin iterations applied to the tessellated mask.
pub const SMOOTHING_ITERATIONS: usize = 10;

/// Gaussian widths (voxels) tried in turn when the mask surface has handles.
pub const TOPOLOGY_SIGMAS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

/// Genus-0 starting surface for a binary mask.
///
/// Fills cavities, tessellates at 0.5, keeps the largest component and
/// applies Taubin smoothing. If the result has handles, the mask is blurred
/// with increasing width and re-thresholded until the surface is a sphere.
pub fn init_surface(mask: &VoxelGrid) -> Result<TriangleMesh> {
    if mask.kind() != GridKind::Mask {
        return Err(Error::Kind { expected: "mask", found: mask.kind().name() });
    }
    if mask.data().iter().all(|&v| v == 0.0) {
        return Err(Error::EmptySurface("mask has no foreground voxels".into()));
    }
    if mask.touches_boundary() {
        return Err(Error::Precondition(
            "mask touches the grid boundary; pad the volume by at least one voxel".into(),
        ));
    }
    let filled = binary_fill_holes(mask)?;
    let mut last_genus = 0;
    for sigma in std::iter::once(None).chain(TOPOLOGY_SIGMAS.iter().copied().map(Some)) {
        let candidate = match sigma {
            None => filled.clone(),
            Some(s) => {
                let blurred = blur_and_threshold(&filled, s)?;
                if blurred.data().iter().all(|&v| v == 0.0) {
                    break;
                }
                binary_fill_holes(&blurred)?
            }
        };
        let mesh = tessellate(&candidate)?;
        let diag = validate(&mesh);
        if diag.manifold && diag.oriented && diag.genus == 0 && diag.components == 1 {
            if let Some(s) = sigma {
                log::info!("mask surface reached genus 0 after blurring with sigma {s}");
            }
            return Ok(mesh);
        }
        last_genus = diag.genus;
        log::debug!("mask surface has genus {} (sigma {:?})", diag.genus, sigma);
    }
    Err(Error::Topology(format!(
        "mask surface keeps genus {last_genus} after blurring up to sigma {}",
        TOPOLOGY_SIGMAS[TOPOLOGY_SIGMAS.len() - 1]
    )))
}

fn blur_and_threshold(mask: &VoxelGrid, sigma: f64) -> Result<VoxelGrid> {
    let data: Vec<f64> = mask.data().iter().map(|&v| v as f64).collect();
    let blurred = gaussian_blur(&data, mask.shape(), sigma);
    let bits = blurred.iter().map(|&v| f32::from(v > 0.5)).collect();
    mask.with_data(bits, GridKind::Mask)
}

fn tessellate(mask: &VoxelGrid) -> Result<TriangleMesh> {
    let raw = largest_component(&extract_isosurface(mask, 0.5)?)?;
    let smoothed = smooth(&raw, SMOOTHING_ITERATIONS, TAUBIN_LAMBDA, TAUBIN_MU);
    // Smoothing thin structures can fold the surface; keep the raw
    // tessellation in that case.
    if detect_self_intersections(&smoothed).is_empty() {
        Ok(smoothed)
    } else {
        Ok(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Affine;
    use crate::Vec3;

    fn mask(n: usize, f: impl Fn(Vec3) -> bool) -> VoxelGrid {
        let c = (n as f64 - 1.0) / 2.0;
        VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Mask, |i, j, k| {
            f32::from(f(Vec3::new(i as f64 - c, j as f64 - c, k as f64 - c)))
        })
        .unwrap()
    }

    #[test]
    fn solid_sphere_gives_clean_sphere() {
        let m = init_surface(&mask(24, |p| p.norm() < 8.0)).unwrap();
        let d = validate(&m);
        assert!(d.is_sphere_like(), "{d:?}");
        assert!(detect_self_intersections(&m).is_empty());
    }

    #[test]
    fn interior_cavity_is_filled() {
        let m = init_surface(&mask(24, |p| p.norm() < 8.0 && p.norm() > 3.0)).unwrap();
        assert_eq!(validate(&m).components, 1);
        assert_eq!(validate(&m).genus, 0);
    }

    #[test]
    fn torus_never_yields_handles() {
        let torus = |p: Vec3| {
            let q = ((p.x * p.x + p.y * p.y).sqrt() - 6.0).hypot(p.z);
            q < 2.0
        };
        match init_surface(&mask(24, torus)) {
            Ok(m) => assert_eq!(validate(&m).genus, 0),
            Err(e) => assert!(matches!(e, Error::Topology(_)), "{e}"),
        }
        // a thin-walled ring closes its hole under blurring
        let ring = |p: Vec3| ((p.x * p.x + p.y * p.y).sqrt() - 2.5).hypot(p.z) < 1.6;
        match init_surface(&mask(16, ring)) {
            Ok(m) => assert_eq!(validate(&m).genus, 0),
            Err(e) => assert!(matches!(e, Error::Topology(_)), "{e}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let touching = mask(8, |p| p.x < 0.0);
        assert!(matches!(init_surface(&touching), Err(Error::Precondition(_))));
        let empty = mask(8, |_| false);
        assert!(matches!(init_surface(&empty), Err(Error::EmptySurface(_))));
        let label = mask(8, |p| p.norm() < 2.0).with_kind(GridKind::Label).unwrap();
        assert!(matches!(init_surface(&label), Err(Error::Kind { .. })));
    }
}
