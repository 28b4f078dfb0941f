use super::TriangleMesh;
use crate::Vec3;

pub const TAUBIN_LAMBDA: f64 = 0.5;
pub const TAUBIN_MU: f64 = -0.53;

/// Taubin smoothing with uniform umbrella weights.
///
/// Each iteration applies a shrinking step with `lambda` then an inflating
/// step with `mu`. Vertices on boundary edges stay fixed.
pub fn smooth(mesh: &TriangleMesh, iterations: usize, lambda: f64, mu: f64) -> TriangleMesh {
    let neighbors = mesh.neighbors();
    let pinned = boundary_vertices(mesh);
    let mut x = mesh.vertices.clone();
    for _ in 0..iterations {
        for factor in [lambda, mu] {
            let next: Vec<Vec3> = x
                .iter()
                .enumerate()
                .map(|(v, p)| {
                    let ring = &neighbors[v];
                    if pinned[v] || ring.is_empty() {
                        return *p;
                    }
                    let mean = ring.iter().fold(Vec3::zeros(), |s, &u| s + x[u]) / ring.len() as f64;
                    p + (mean - p) * factor
                })
                .collect();
            x = next;
        }
    }
    TriangleMesh { vertices: x, faces: mesh.faces.clone() }
}

fn boundary_vertices(mesh: &TriangleMesh) -> Vec<bool> {
    use std::collections::HashMap;
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut pinned = vec![false; mesh.vertex_count()];
    for ((a, b), n) in count {
        if n == 1 {
            pinned[a] = true;
            pinned[b] = true;
        }
    }
    pinned
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;
    use rand::{Rng, SeedableRng};

    #[test]
    fn removes_noise_without_shrinking_much() {
        let clean = icosphere(Vec3::zeros(), 10.0, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut noisy = clean.clone();
        for v in &mut noisy.vertices {
            *v *= 1.0 + rng.random_range(-0.05..0.05f64);
        }
        let dev = |m: &TriangleMesh| {
            let r: Vec<f64> = m.vertices.iter().map(|v| v.norm()).collect();
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.len() as f64;
            (mean, var.sqrt())
        };
        let out = smooth(&noisy, 10, TAUBIN_LAMBDA, TAUBIN_MU);
        let (mean, spread) = dev(&out);
        assert!(spread < dev(&noisy).1 / 2.0, "{spread} vs {}", dev(&noisy).1);
        assert!((mean - 10.0).abs() < 0.3, "mean radius {mean}");
    }

    #[test]
    fn zero_iterations_is_identity() {
        let m = icosphere(Vec3::zeros(), 1.0, 1);
        assert_eq!(smooth(&m, 0, TAUBIN_LAMBDA, TAUBIN_MU), m);
    }

    #[test]
    fn plane_interior_is_fixed_point() {
        let n = 6;
        let vertices = (0..n * n).map(|i| Vec3::new((i % n) as f64, (i / n) as f64, 2.0)).collect();
        let mut faces = Vec::new();
        for y in 0..n - 1 {
            for x in 0..n - 1 {
                let v = y * n + x;
                faces.push([v, v + 1, v + n + 1]);
                faces.push([v, v + n + 1, v + n]);
            }
        }
        let m = TriangleMesh::new(vertices, faces).unwrap();
        let out = smooth(&m, 5, TAUBIN_LAMBDA, TAUBIN_MU);
        for (a, b) in out.vertices.iter().zip(&m.vertices) {
            assert!((a - b).norm() < 1e-12);
        }
        let frames = crate::mesh::vertex_frames(&m).unwrap();
        assert_eq!(frames[n + 1].normal, Vec3::z());
    }

    #[test]
    fn boundary_is_pinned() {
        let mut m = icosphere(Vec3::zeros(), 1.0, 2);
        m.faces.truncate(m.faces.len() - 5);
        let pinned = boundary_vertices(&m);
        assert!(pinned.iter().any(|&p| p));
        let out = smooth(&m, 3, TAUBIN_LAMBDA, TAUBIN_MU);
        for (v, p) in pinned.iter().enumerate() {
            if *p {
                assert_eq!(out.vertices[v], m.vertices[v]);
            }
        }
    }
}
