use nalgebra::Matrix3;
use rayon::prelude::*;

use super::FitConfig;
use crate::mesh::{vertex_frames, TriangleMesh, VertexFrame};
use crate::sdf::SdfGrid;
use crate::{Result, Vec3};

/// Spring metric `λ1 n nᵀ + λ2 (e1 e1ᵀ + e2 e2ᵀ)` of one vertex frame.
pub(super) fn spring_metric(f: &VertexFrame, config: &FitConfig) -> Matrix3<f64> {
    f.normal * f.normal.transpose() * config.lambda1
        + (f.tangent1 * f.tangent1.transpose() + f.tangent2 * f.tangent2.transpose()) * config.lambda2
}

/// Placement energy with the given (frozen) frames:
///
/// `Σ_v tanh(D(x_v))² + Σ_v Σ_{u∈N(v)} λ1 [n_v·d]² + λ2 ([e1_v·d]² + [e2_v·d]²)`,
/// with `d = x_v − x_u` over the 1-ring, each edge counted from both ends.
pub fn energy_with_frames(
    vertices: &[Vec3],
    neighbors: &[Vec<usize>],
    frames: &[VertexFrame],
    sdf: &SdfGrid,
    config: &FitConfig,
) -> f64 {
    let terms: Vec<f64> = (0..vertices.len())
        .into_par_iter()
        .map(|v| {
            let t = sdf.sample(&vertices[v]).tanh();
            let f = &frames[v];
            let springs: f64 = neighbors[v]
                .iter()
                .map(|&u| {
                    let d = vertices[v] - vertices[u];
                    config.lambda1 * f.normal.dot(&d).powi(2)
                        + config.lambda2 * (f.tangent1.dot(&d).powi(2) + f.tangent2.dot(&d).powi(2))
                })
                .sum();
            t * t + springs
        })
        .collect();
    terms.iter().sum()
}

/// Energy and its exact gradient with the frames held constant.
pub fn gradient_with_frames(
    vertices: &[Vec3],
    neighbors: &[Vec<usize>],
    frames: &[VertexFrame],
    sdf: &SdfGrid,
    config: &FitConfig,
) -> (f64, Vec<Vec3>) {
    let metrics: Vec<Matrix3<f64>> = frames.iter().map(|f| spring_metric(f, config)).collect();
    let per_vertex: Vec<(f64, Vec3)> = (0..vertices.len())
        .into_par_iter()
        .map(|v| {
            let x = vertices[v];
            let (d, grad_d) = sdf.sample_with_gradient(&x);
            let t = d.tanh();
            let mut energy = t * t;
            // d/dD tanh(D)² = 2 tanh(D) (1 − tanh(D)²)
            let mut g = grad_d * (2.0 * t * (1.0 - t * t));
            for &u in &neighbors[v] {
                let diff = x - vertices[u];
                let mv = &metrics[v];
                energy += diff.dot(&(mv * diff));
                // v's own spring plus the mirrored spring owned by u
                g += (mv + metrics[u]) * diff * 2.0;
            }
            (energy, g)
        })
        .collect();
    let energy = per_vertex.iter().map(|(e, _)| e).sum();
    (energy, per_vertex.into_iter().map(|(_, g)| g).collect())
}

/// Energy and frozen-frame gradient at the mesh's current frames.
pub fn energy_and_gradient(
    mesh: &TriangleMesh,
    sdf: &SdfGrid,
    config: &FitConfig,
) -> Result<(f64, Vec<Vec3>)> {
    let frames = vertex_frames(mesh)?;
    let neighbors = mesh.neighbors();
    Ok(gradient_with_frames(&mesh.vertices, &neighbors, &frames, sdf, config))
}

/// Mean of `|D(x_v)|` over the vertices.
pub fn mean_abs_sdf(mesh: &TriangleMesh, sdf: &SdfGrid) -> f64 {
    if mesh.vertices.is_empty() {
        return 0.0;
    }
    mesh.vertices.iter().map(|v| sdf.sample(v).abs()).sum::<f64>() / mesh.vertex_count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;
    use crate::volume::{Affine, GridKind, VoxelGrid};
    use rand::{Rng, SeedableRng};

    fn sphere_sdf(r: f64) -> (SdfGrid, Vec3) {
        let c = Vec3::new(15.5, 15.5, 15.5);
        let g = VoxelGrid::from_fn([32, 32, 32], Affine::identity(), GridKind::Sdf { clip_mm: 5.0 }, |i, j, k| {
            ((Vec3::new(i as f64, j as f64, k as f64) - c).norm() - r).clamp(-5.0, 5.0) as f32
        })
        .unwrap();
        (SdfGrid::new(g).unwrap(), c)
    }

    #[test]
    fn zero_sdf_without_springs_is_stationary() {
        let g = VoxelGrid::filled([16, 16, 16], 0.0, Affine::identity(), GridKind::Sdf { clip_mm: 5.0 }).unwrap();
        let sdf = SdfGrid::new(g).unwrap();
        let mesh = icosphere(Vec3::new(8.0, 8.0, 8.0), 4.0, 2);
        let cfg = FitConfig { lambda1: 0.0, lambda2: 0.0, ..FitConfig::default() };
        let (e, g) = energy_and_gradient(&mesh, &sdf, &cfg).unwrap();
        assert_eq!(e, 0.0);
        assert!(g.iter().all(|v| *v == Vec3::zeros()));
    }

    #[test]
    fn planar_patch_has_no_normal_spring_energy() {
        let n = 5;
        let vertices: Vec<Vec3> = (0..n * n).map(|i| Vec3::new((i % n) as f64, (i / n) as f64, 3.0)).collect();
        let mut faces = Vec::new();
        for y in 0..n - 1 {
            for x in 0..n - 1 {
                let v = y * n + x;
                faces.push([v, v + 1, v + n + 1]);
                faces.push([v, v + n + 1, v + n]);
            }
        }
        let mesh = TriangleMesh::new(vertices, faces).unwrap();
        let zero = SdfGrid::new(
            VoxelGrid::filled([8, 8, 8], 0.0, Affine::identity(), GridKind::Sdf { clip_mm: 5.0 }).unwrap(),
        )
        .unwrap();
        let frames = vertex_frames(&mesh).unwrap();
        let nb = mesh.neighbors();
        let only_normal = FitConfig { lambda1: 1.0, lambda2: 0.0, ..FitConfig::default() };
        let only_tangent = FitConfig { lambda1: 0.0, lambda2: 1.0, ..FitConfig::default() };
        assert!(energy_with_frames(&mesh.vertices, &nb, &frames, &zero, &only_normal).abs() < 1e-20);
        assert!(energy_with_frames(&mesh.vertices, &nb, &frames, &zero, &only_tangent) > 0.0);
    }

    #[test]
    fn clipped_vertex_contributes_tanh5_squared() {
        let (sdf, c) = sphere_sdf(3.0);
        let mut mesh = icosphere(c, 3.0, 1);
        mesh.vertices[0] = c + Vec3::new(10.0, 0.0, 0.0);
        let frames = vertex_frames(&mesh).unwrap();
        let nb = mesh.neighbors();
        let cfg = FitConfig { lambda1: 0.0, lambda2: 0.0, ..FitConfig::default() };
        let with = energy_with_frames(&mesh.vertices, &nb, &frames, &sdf, &cfg);
        let others: f64 = mesh.vertices[1..].iter().map(|v| sdf.sample(v).tanh().powi(2)).sum();
        assert!((with - others - 5.0f64.tanh().powi(2)).abs() < 1e-12);
        assert!((with - others - 0.999_818).abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let (sdf, c) = sphere_sdf(7.0);
        let mut mesh = icosphere(c, 6.0, 2);
        for v in &mut mesh.vertices {
            *v += Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        }
        let cfg = FitConfig { lambda1: 0.05, lambda2: 0.02, ..FitConfig::default() };
        let frames = vertex_frames(&mesh).unwrap();
        let nb = mesh.neighbors();
        let (_, g) = gradient_with_frames(&mesh.vertices, &nb, &frames, &sdf, &cfg);
        let h = 1e-5;
        let (mut worst, mut scale) = (0.0f64, 0.0f64);
        for v in 0..mesh.vertex_count() {
            for a in 0..3 {
                let x = mesh.vertices[v][a];
                if (x - h).floor() != (x + h).floor() {
                    continue;
                }
                let mut xs = mesh.vertices.clone();
                xs[v][a] = x + h;
                let ep = energy_with_frames(&xs, &nb, &frames, &sdf, &cfg);
                xs[v][a] = x - h;
                let em = energy_with_frames(&xs, &nb, &frames, &sdf, &cfg);
                let fd = (ep - em) / (2.0 * h);
                worst = worst.max((fd - g[v][a]).abs());
                scale = scale.max(fd.abs());
            }
        }
        assert!(worst / scale < 1e-4, "relative error {}", worst / scale);
    }

    #[test]
    fn energy_reported_by_both_entry_points_agrees() {
        let (sdf, c) = sphere_sdf(7.0);
        let mesh = icosphere(c, 6.5, 2);
        let cfg = FitConfig::default();
        let (e, _) = energy_and_gradient(&mesh, &sdf, &cfg).unwrap();
        let frames = vertex_frames(&mesh).unwrap();
        let e2 = energy_with_frames(&mesh.vertices, &mesh.neighbors(), &frames, &sdf, &cfg);
        assert!((e - e2).abs() < 1e-9 * e.abs().max(1.0));
    }
}
