//! Clipped signed distance fields: construction from meshes and continuous
//! sampling with analytic gradients.

mod distance;

pub use distance::{Closest, MeshDistance};

use std::path::Path;

use rayon::prelude::*;

use crate::mesh::{detect_self_intersections, validate, TriangleMesh};
use crate::volume::{load_nifti, save_nifti, GridKind, VoxelGrid};
use crate::{Error, Result, Vec3};

/// Default saturation distance in mm.
pub const DEFAULT_CLIP_MM: f64 = 5.0;

/// Saturates `value` to `[-clip_mm, clip_mm]`.
pub fn clip(value: f64, clip_mm: f64) -> f64 {
    value.clamp(-clip_mm, clip_mm)
}

/// A voxel grid of signed distances (mm, negative inside), saturated at
/// `±clip_mm`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfGrid {
    grid: VoxelGrid,
    clip_mm: f64,
}

impl SdfGrid {
    /// Wraps a grid of kind `sdf`.
    pub fn new(grid: VoxelGrid) -> Result<Self> {
        match grid.kind() {
            GridKind::Sdf { clip_mm } => Ok(SdfGrid { grid, clip_mm }),
            other => Err(Error::Kind { expected: "sdf", found: other.name() }),
        }
    }

    /// Interprets any scalar grid as signed distances, clipping every value
    /// to `±clip_mm`. Non-finite values are rejected.
    pub fn from_values(grid: &VoxelGrid, clip_mm: f64) -> Result<Self> {
        if !(clip_mm > 0.0 && clip_mm.is_finite()) {
            return Err(Error::Precondition(format!("clip {clip_mm} must be positive")));
        }
        if let Some(v) = grid.data().iter().find(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("sdf value {v} is not finite")));
        }
        let data = grid.data().iter().map(|&v| clip(v as f64, clip_mm) as f32).collect();
        Ok(SdfGrid { grid: grid.with_data(data, GridKind::Sdf { clip_mm })?, clip_mm })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn into_grid(self) -> VoxelGrid {
        self.grid
    }

    pub fn clip_mm(&self) -> f64 {
        self.clip_mm
    }

    /// Trilinear value at a world point; `+clip_mm` outside the grid.
    pub fn sample(&self, p: &Vec3) -> f64 {
        self.grid.trilinear_at_world(p).map_or(self.clip_mm, |v| clip(v, self.clip_mm))
    }

    /// Gradient (world mm per mm) of the trilinear interpolant at `p`.
    ///
    /// Zero unless `p` lies at least one voxel inside the grid on every axis.
    /// On cell boundaries the lower cell's polynomial is used.
    pub fn sample_gradient(&self, p: &Vec3) -> Vec3 {
        self.sample_with_gradient(p).1
    }

    /// Value and gradient in one lookup.
    pub fn sample_with_gradient(&self, p: &Vec3) -> (f64, Vec3) {
        let u = self.grid.affine().world_to_voxel(p);
        let Some(cell) = self.grid.cell_of(&u) else {
            return (self.clip_mm, Vec3::zeros());
        };
        let value = clip(self.grid.trilinear_in_cell(&cell), self.clip_mm);
        let shape = self.grid.shape();
        let interior = (0..3).all(|a| u[a] >= 1.0 && u[a] <= shape[a] as f64 - 2.0);
        if !interior {
            return (value, Vec3::zeros());
        }
        let c = self.grid.cell_corners(&cell);
        let [tx, ty, tz] = cell.frac;
        let lerp = |a: f64, b: f64, t: f64| (1.0 - t) * a + t * b;
        // d/dx: difference along x, bilinear in (y, z)
        let gx = lerp(
            lerp(c[0][0][1] - c[0][0][0], c[0][1][1] - c[0][1][0], ty),
            lerp(c[1][0][1] - c[1][0][0], c[1][1][1] - c[1][1][0], ty),
            tz,
        );
        let gy = lerp(
            lerp(c[0][1][0] - c[0][0][0], c[0][1][1] - c[0][0][1], tx),
            lerp(c[1][1][0] - c[1][0][0], c[1][1][1] - c[1][0][1], tx),
            tz,
        );
        let gz = lerp(
            lerp(c[1][0][0] - c[0][0][0], c[1][0][1] - c[0][0][1], tx),
            lerp(c[1][1][0] - c[0][1][0], c[1][1][1] - c[0][1][1], tx),
            ty,
        );
        let g = self.grid.affine().inverse_linear().transpose() * Vec3::new(gx, gy, gz);
        (value, g)
    }

    /// Loads a NIfTI SDF. Files without an `sdf:clip=` description (such as
    /// network predictions) are read as distances saturated at
    /// `default_clip_mm`. Values are clipped on load either way.
    pub fn load(path: impl AsRef<Path>, default_clip_mm: f64) -> Result<Self> {
        let grid = load_nifti(path)?;
        match grid.kind() {
            GridKind::Sdf { .. } => SdfGrid::new(grid),
            GridKind::Intensity | GridKind::Label => SdfGrid::from_values(&grid, default_clip_mm),
            GridKind::Mask => Err(Error::Kind { expected: "sdf", found: "mask" }),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_nifti(&self.grid, path)
    }
}

/// Signed distance from the voxel centres of `template` to a closed,
/// outward-oriented, self-intersection-free mesh, clipped to `±clip_mm`.
pub fn mesh_to_sdf(mesh: &TriangleMesh, template: &VoxelGrid, clip_mm: f64) -> Result<SdfGrid> {
    if !(clip_mm > 0.0 && clip_mm.is_finite()) {
        return Err(Error::Precondition(format!("clip {clip_mm} must be positive")));
    }
    if mesh.is_empty() {
        return Err(Error::EmptySurface("cannot compute an SDF of an empty mesh".into()));
    }
    let diag = validate(mesh);
    if !(diag.manifold && diag.oriented) {
        return Err(Error::Precondition(format!(
            "SDF sign needs a closed oriented mesh ({} boundary, {} non-manifold edges, oriented: {})",
            diag.boundary_edges, diag.nonmanifold_edges, diag.oriented
        )));
    }
    let hits = detect_self_intersections(mesh);
    if !hits.is_empty() {
        return Err(Error::Precondition(format!(
            "SDF sign needs a self-intersection-free mesh ({} intersecting face pairs)",
            hits.len()
        )));
    }
    let md = MeshDistance::new(mesh);
    let [nx, ny, _] = template.shape();
    let mut data = vec![0.0f32; template.len()];
    data.par_chunks_mut(nx * ny).enumerate().for_each(|(k, slab)| {
        for j in 0..ny {
            for i in 0..nx {
                let p = template.voxel_center_world(i, j, k);
                slab[j * nx + i] = clip(md.signed_distance(&p), clip_mm) as f32;
            }
        }
    });
    let grid = template.with_data(data, GridKind::Sdf { clip_mm })?;
    Ok(SdfGrid { grid, clip_mm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;
    use crate::volume::Affine;
    use rand::{Rng, SeedableRng};

    fn template(n: usize) -> VoxelGrid {
        VoxelGrid::filled([n, n, n], 0.0, Affine::identity(), GridKind::Intensity).unwrap()
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip(7.3, 5.0), 5.0);
        assert_eq!(clip(-2.0, 5.0), -2.0);
        assert_eq!(clip(-9.0, 5.0), -5.0);
    }

    #[test]
    fn sphere_sdf_center_vertex_and_band() {
        let c = Vec3::new(31.5, 31.5, 31.5);
        let mesh = icosphere(c, 20.0, 4);
        let sdf = mesh_to_sdf(&mesh, &template(64), 5.0).unwrap();
        assert_eq!(sdf.sample(&c), -5.0);
        let md = MeshDistance::new(&mesh);
        assert!(md.signed_distance(&mesh.vertices[7]).abs() < 1e-6);
        let mut worst: f64 = 0.0;
        for k in 0..64 {
            for j in 0..64 {
                for i in 0..64 {
                    let p = Vec3::new(i as f64, j as f64, k as f64);
                    let exact = (p - c).norm() - 20.0;
                    if exact.abs() <= 5.0 {
                        worst = worst.max((sdf.grid().get(i, j, k) as f64 - exact).abs());
                    }
                }
            }
        }
        assert!(worst < 0.2, "max error {worst}");
    }

    #[test]
    fn sample_at_centers_and_midpoints() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a = Affine::from_spacing([1.5, 0.8, 2.0], Vec3::new(-3.0, 4.0, 1.0)).unwrap();
        let g = VoxelGrid::from_fn([6, 5, 4], a, GridKind::Sdf { clip_mm: 5.0 }, |_, _, _| {
            rng.random_range(-5.0..5.0f32)
        })
        .unwrap();
        let sdf = SdfGrid::new(g.clone()).unwrap();
        for (i, j, k) in [(0, 0, 0), (3, 2, 1), (5, 4, 3)] {
            assert_eq!(sdf.sample(&g.voxel_center_world(i, j, k)), g.get(i, j, k) as f64);
        }
        let mid = (g.voxel_center_world(2, 1, 1) + g.voxel_center_world(2, 2, 1)) / 2.0;
        let mean = (g.get(2, 1, 1) as f64 + g.get(2, 2, 1) as f64) / 2.0;
        assert!((sdf.sample(&mid) - mean).abs() < 1e-9);
        assert_eq!(sdf.sample(&Vec3::new(1e6, 0.0, 0.0)), 5.0);
    }

    /// Independent scalar-by-scalar interpolation: weights over all eight
    /// corners, no cell bookkeeping shared with the implementation.
    fn naive_trilinear(g: &VoxelGrid, u: Vec3) -> f64 {
        let [nx, ny, nz] = g.shape();
        let clamp = |x: f64, n: usize| x.clamp(0.0, (n - 1) as f64);
        let (x, y, z) = (clamp(u.x, nx), clamp(u.y, ny), clamp(u.z, nz));
        let mut acc = 0.0;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let w = (1.0 - (x - i as f64).abs()).max(0.0)
                        * (1.0 - (y - j as f64).abs()).max(0.0)
                        * (1.0 - (z - k as f64).abs()).max(0.0);
                    acc += w * g.get(i, j, k) as f64;
                }
            }
        }
        acc
    }

    #[test]
    fn sample_matches_naive_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a = Affine::from_spacing([1.0, 1.3, 0.7], Vec3::new(2.0, -1.0, 0.5)).unwrap();
        let g = VoxelGrid::from_fn([7, 6, 5], a, GridKind::Sdf { clip_mm: 5.0 }, |_, _, _| {
            rng.random_range(-5.0..5.0f32)
        })
        .unwrap();
        let sdf = SdfGrid::new(g.clone()).unwrap();
        for _ in 0..500 {
            let u = Vec3::new(rng.random_range(-0.5..6.5), rng.random_range(-0.5..5.5), rng.random_range(-0.5..4.5));
            let p = g.affine().voxel_to_world(&u);
            assert!((sdf.sample(&p) - naive_trilinear(&g, u)).abs() < 1e-6);
        }
    }

    #[test]
    fn sample_is_continuous_and_bounded() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let g = VoxelGrid::from_fn([6, 6, 6], Affine::identity(), GridKind::Sdf { clip_mm: 3.0 }, |_, _, _| {
            rng.random_range(-3.0..3.0f32)
        })
        .unwrap();
        let sdf = SdfGrid::new(g).unwrap();
        for _ in 0..1000 {
            let p = Vec3::new(rng.random_range(-1.0..7.0), rng.random_range(-1.0..7.0), rng.random_range(-1.0..7.0));
            let v = sdf.sample(&p);
            assert!(v.abs() <= 3.0);
            let q = p + Vec3::new(1e-9, -1e-9, 1e-9) / 3f64.sqrt();
            if sdf.grid().trilinear_at_world(&q).is_some() == sdf.grid().trilinear_at_world(&p).is_some() {
                assert!((sdf.sample(&q) - v).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn gradient_of_linear_field_under_affine() {
        let lin = nalgebra::Matrix3::new(1.2, 0.3, 0.0, -0.2, 0.9, 0.1, 0.0, 0.2, 1.5);
        let a = Affine::from_parts(lin, Vec3::new(3.0, -2.0, 1.0)).unwrap();
        // f(p) = p_x at every voxel centre
        let g = VoxelGrid::from_fn([8, 8, 8], a.clone(), GridKind::Sdf { clip_mm: 50.0 }, |i, j, k| {
            a.voxel_to_world(&Vec3::new(i as f64, j as f64, k as f64)).x as f32
        })
        .unwrap();
        let sdf = SdfGrid::new(g).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let u = Vec3::new(rng.random_range(1.0..6.0), rng.random_range(1.0..6.0), rng.random_range(1.0..6.0));
            let grad = sdf.sample_gradient(&a.voxel_to_world(&u));
            assert!((grad - Vec3::x()).norm() < 1e-5, "{grad}");
        }
        assert_eq!(sdf.sample_gradient(&a.voxel_to_world(&Vec3::new(0.5, 3.0, 3.0))), Vec3::zeros());
    }

    #[test]
    fn gradient_matches_finite_differences_and_eikonal() {
        let c = Vec3::new(15.5, 15.5, 15.5);
        let mesh = icosphere(c, 8.0, 3);
        let sdf = mesh_to_sdf(&mesh, &template(32), 5.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let h = 1e-3;
        let mut checked = 0;
        while checked < 300 {
            let p = c + Vec3::new(rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0), rng.random_range(-12.0..12.0));
            let frac_ok = (0..3).all(|a| {
                let f = p[a] - p[a].floor();
                f > 2.0 * h && f < 1.0 - 2.0 * h
            });
            let r = (p - c).norm();
            if !frac_ok || (r - 8.0).abs() > 3.5 {
                continue;
            }
            checked += 1;
            let g = sdf.sample_gradient(&p);
            for a in 0..3 {
                let mut e = Vec3::zeros();
                e[a] = h;
                let fd = (sdf.sample(&(p + e)) - sdf.sample(&(p - e))) / (2.0 * h);
                assert!((fd - g[a]).abs() < 1e-5, "axis {a}: fd {fd} vs {}", g[a]);
            }
            assert!((g.norm() - 1.0).abs() < 0.15, "eikonal {}", g.norm());
        }
    }

    #[test]
    fn rejects_open_and_self_intersecting_meshes() {
        let mut open = icosphere(Vec3::new(8.0, 8.0, 8.0), 4.0, 2);
        open.faces.pop();
        assert!(matches!(mesh_to_sdf(&open, &template(16), 5.0), Err(Error::Precondition(_))));
        let a = icosphere(Vec3::new(7.0, 8.0, 8.0), 3.0, 2);
        let b = icosphere(Vec3::new(9.0, 8.0, 8.0), 3.0, 2);
        let both = TriangleMesh::merged(&[&a, &b]);
        assert!(matches!(mesh_to_sdf(&both, &template(16), 5.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn nifti_round_trip_and_clip_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = icosphere(Vec3::new(8.0, 8.0, 8.0), 5.0, 2);
        let sdf = mesh_to_sdf(&mesh, &template(16), 3.0).unwrap();
        let p = dir.path().join("s.nii.gz");
        sdf.save(&p).unwrap();
        assert_eq!(SdfGrid::load(&p, 5.0).unwrap(), sdf);

        let raw = VoxelGrid::from_fn([4, 4, 4], Affine::identity(), GridKind::Intensity, |i, _, _| i as f32 * 4.0 - 6.0)
            .unwrap();
        let p = dir.path().join("pred.nii");
        save_nifti(&raw, &p).unwrap();
        let loaded = SdfGrid::load(&p, 5.0).unwrap();
        assert_eq!(loaded.clip_mm(), 5.0);
        assert_eq!(loaded.grid().get(0, 0, 0), -5.0);
        assert_eq!(loaded.grid().get(3, 0, 0), 5.0);
        assert_eq!(loaded.grid().get(1, 0, 0), -2.0);
    }

    #[test]
    fn extracted_zero_set_stays_close_to_source() {
        let c = Vec3::new(31.5, 31.5, 31.5);
        let mesh = icosphere(c, 20.0, 4);
        let sdf = mesh_to_sdf(&mesh, &template(64), 5.0).unwrap();
        let iso = crate::mesh::extract_isosurface(sdf.grid(), 0.0).unwrap();
        let md = MeshDistance::new(&mesh);
        let back = MeshDistance::new(&iso);
        let ab: f64 = iso.vertices.iter().map(|v| md.unsigned_distance(v)).sum::<f64>() / iso.vertex_count() as f64;
        let ba: f64 = mesh.vertices.iter().map(|v| back.unsigned_distance(v)).sum::<f64>() / mesh.vertex_count() as f64;
        assert!((ab + ba) / 2.0 < 0.3, "{ab} {ba}");
    }
}
