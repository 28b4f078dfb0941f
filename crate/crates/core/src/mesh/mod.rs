//! Oriented triangle meshes and the differential quantities the placement
//! energy needs.

mod frames;
mod intersect;
mod marching_cubes;
pub mod ply;
mod primitives;
mod smooth;
mod topology;

pub use frames::{vertex_frames, VertexFrame};

pub use intersect::{detect_self_intersections, detect_self_intersections_brute};
pub use marching_cubes::extract_isosurface;
pub use primitives::{icosphere, torus};
pub use smooth::{smooth, TAUBIN_LAMBDA, TAUBIN_MU};
pub use topology::{largest_component, validate, MeshDiagnostics};

use crate::geometry::Aabb;
use crate::{Error, Result, Vec3};

/// Vertex positions (world mm) and counter-clockwise faces (outward normal).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&v| v >= n)) {
            return Err(Error::Precondition(format!(
                "face {f:?} references a vertex beyond {n}"
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Precondition("mesh has non-finite vertex coordinates".into()));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Cross product of two edges: normal direction times twice the area.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_cross(f).norm()
    }

    pub fn face_aabb(&self, f: usize) -> Aabb {
        Aabb::from_points(self.triangle(f).iter())
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Unique undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |i| (f[i].min(f[(i + 1) % 3]), f[i].max(f[(i + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Sorted 1-ring (edge-sharing vertices) of every vertex.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut n = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edges() {
            n[a].push(b);
            n[b].push(a);
        }
        n.iter_mut().for_each(|v| v.sort_unstable());
        n
    }

    /// Enclosed volume (positive for outward-oriented closed meshes).
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])))
            .sum::<f64>()
            / 6.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn centroid(&self) -> Vec3 {
        if self.vertices.is_empty() {
            return Vec3::zeros();
        }
        self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64
    }

    /// Faces sharing at least one vertex index.
    pub fn faces_adjacent(&self, f: usize, g: usize) -> bool {
        let (a, b) = (&self.faces[f], &self.faces[g]);
        a.iter().any(|v| b.contains(v))
    }

    pub fn translated(&self, offset: &Vec3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Faces with repeated indices or area at most `1e-12` mm².
    pub fn degenerate_faces(&self) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| {
                let [a, b, c] = self.faces[f];
                a == b || b == c || a == c || self.face_area(f) <= 1e-12
            })
            .collect()
    }

    /// Concatenates meshes, offsetting face indices.
    pub fn merged(meshes: &[&TriangleMesh]) -> TriangleMesh {
        let mut out = TriangleMesh::default();
        for m in meshes {
            let off = out.vertices.len();
            out.vertices.extend_from_slice(&m.vertices);
            out.faces
                .extend(m.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        }
        out
    }
}

