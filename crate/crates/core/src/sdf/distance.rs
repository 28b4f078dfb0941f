use std::collections::HashMap;

use crate::geometry::{closest_point_on_triangle, point_triangle_distance_sq, Bvh, TriangleFeature};
use crate::mesh::TriangleMesh;
use crate::Vec3;

/// Closest-point queries against a fixed triangle mesh, with signs from
/// angle-weighted pseudonormals.
pub struct MeshDistance<'a> {
    mesh: &'a TriangleMesh,
    bvh: Bvh,
    face_normals: Vec<Vec3>,
    vertex_normals: Vec<Vec3>,
    edge_normals: HashMap<(usize, usize), Vec3>,
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy)]
pub struct Closest {
    pub face: usize,
    pub point: Vec3,
    pub distance: f64,
}

impl<'a> MeshDistance<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Self {
        let boxes: Vec<_> = (0..mesh.face_count()).map(|f| mesh.face_aabb(f)).collect();
        let bvh = Bvh::build(&boxes);
        let face_normals: Vec<Vec3> = (0..mesh.face_count())
            .map(|f| mesh.face_cross(f).try_normalize(0.0).unwrap_or_else(Vec3::zeros))
            .collect();
        let mut vertex_normals = vec![Vec3::zeros(); mesh.vertex_count()];
        let mut edge_normals: HashMap<(usize, usize), Vec3> = HashMap::new();
        for (f, face) in mesh.faces.iter().enumerate() {
            let n = face_normals[f];
            let t = mesh.triangle(f);
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                *edge_normals.entry((a.min(b), a.max(b))).or_insert_with(Vec3::zeros) += n;
                let u = t[(k + 1) % 3] - t[k];
                let w = t[(k + 2) % 3] - t[k];
                let angle = u.angle(&w);
                if angle.is_finite() {
                    vertex_normals[face[k]] += n * angle;
                }
            }
        }
        MeshDistance { mesh, bvh, face_normals, vertex_normals, edge_normals }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.mesh
    }

    fn dist_sq(&self, p: &Vec3, f: usize) -> f64 {
        let [a, b, c] = self.mesh.triangle(f);
        point_triangle_distance_sq(p, &a, &b, &c)
    }

    /// Nearest surface point, `None` only for an empty mesh.
    pub fn closest(&self, p: &Vec3) -> Option<Closest> {
        let (face, d2) = self.bvh.nearest(p, |f| self.dist_sq(p, f))?;
        let [a, b, c] = self.mesh.triangle(face);
        let (point, _) = closest_point_on_triangle(p, &a, &b, &c);
        Some(Closest { face, point, distance: d2.sqrt() })
    }

    pub fn unsigned_distance(&self, p: &Vec3) -> f64 {
        self.closest(p).map_or(f64::INFINITY, |c| c.distance)
    }

    /// Signed distance, negative inside. Assumes a closed, outward-oriented
    /// mesh; `+inf` for an empty mesh.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let Some((face, d2)) = self.bvh.nearest(p, |f| self.dist_sq(p, f)) else {
            return f64::INFINITY;
        };
        let [a, b, c] = self.mesh.triangle(face);
        let (q, feature) = closest_point_on_triangle(p, &a, &b, &c);
        let ids = self.mesh.faces[face];
        let normal = match feature {
            TriangleFeature::Face => self.face_normals[face],
            TriangleFeature::Vertex(k) => self.vertex_normals[ids[k]],
            TriangleFeature::Edge(k) => {
                let (u, v) = (ids[k], ids[(k + 1) % 3]);
                self.edge_normals[&(u.min(v), u.max(v))]
            }
        };
        let d = d2.sqrt();
        if (p - q).dot(&normal) < 0.0 {
            -d
        } else {
            d
        }
    }
}
