use std::collections::HashMap;

use serde::Serialize;

use super::TriangleMesh;
use crate::{Error, Result};

/// Topological diagnostics of a triangle mesh.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeshDiagnostics {
    /// Every edge is shared by exactly two faces.
    pub manifold: bool,
    /// Each shared edge appears once in each direction.
    pub oriented: bool,
    pub components: usize,
    pub euler_characteristic: i64,
    /// `(2 * components - euler_characteristic) / 2`; meaningful for closed
    /// oriented meshes.
    pub genus: i64,
    pub boundary_edges: usize,
    pub nonmanifold_edges: usize,
    pub degenerate_faces: usize,
}

impl MeshDiagnostics {
    /// Closed, oriented, single-component genus-0 surface.
    pub fn is_sphere_like(&self) -> bool {
        self.manifold && self.oriented && self.components == 1 && self.genus == 0
    }
}

pub fn validate(mesh: &TriangleMesh) -> MeshDiagnostics {
    // directed edge -> multiplicity
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &mesh.faces {
        for i in 0..3 {
            *directed.entry((f[i], f[(i + 1) % 3])).or_default() += 1;
        }
    }
    let mut undirected: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for (&(a, b), &n) in &directed {
        let e = undirected.entry((a.min(b), a.max(b))).or_default();
        if a < b {
            e.0 += n;
        } else {
            e.1 += n;
        }
    }
    let mut boundary = 0;
    let mut nonmanifold = 0;
    let mut oriented = true;
    for &(fwd, bwd) in undirected.values() {
        match fwd + bwd {
            1 => boundary += 1,
            2 => {}
            _ => nonmanifold += 1,
        }
        if fwd > 1 || bwd > 1 {
            oriented = false;
        }
    }

    let components = vertex_components(mesh).1;
    let chi = mesh.vertices.len() as i64 - undirected.len() as i64 + mesh.faces.len() as i64;
    MeshDiagnostics {
        manifold: boundary == 0 && nonmanifold == 0,
        oriented,
        components,
        euler_characteristic: chi,
        genus: (2 * components as i64 - chi) / 2,
        boundary_edges: boundary,
        nonmanifold_edges: nonmanifold,
        degenerate_faces: mesh.degenerate_faces().len(),
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Root per vertex and the number of connected components (isolated
/// vertices count as their own component).
fn vertex_components(mesh: &TriangleMesh) -> (Vec<usize>, usize) {
    let n = mesh.vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for f in &mesh.faces {
        for i in 1..3 {
            let (a, b) = (find(&mut parent, f[0]), find(&mut parent, f[i]));
            if a != b {
                // smaller index becomes the root so roots are component minima
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    let count = (0..n).filter(|&v| roots[v] == v).count();
    (roots, count)
}

/// The connected component with the most faces; ties go to the component
/// holding the lowest vertex index. Unused vertices are dropped and indices
/// compacted in original order.
pub fn largest_component(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    if mesh.faces.is_empty() {
        return Err(Error::EmptySurface("mesh has no faces".into()));
    }
    let (roots, _) = vertex_components(mesh);
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for f in &mesh.faces {
        *counts.entry(roots[f[0]]).or_default() += 1;
    }
    // roots are the minimum vertex index of each component
    let (&best_root, _) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("non-empty");

    let mut remap = vec![usize::MAX; mesh.vertices.len()];
    let mut vertices = Vec::new();
    for (v, r) in roots.iter().enumerate() {
        if *r == best_root {
            remap[v] = vertices.len();
            vertices.push(mesh.vertices[v]);
        }
    }
    let faces = mesh
        .faces
        .iter()
        .filter(|f| roots[f[0]] == best_root)
        .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
        .collect();
    Ok(TriangleMesh { vertices, faces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosphere, torus};
    use crate::Vec3;

    fn tetra(offset: Vec3) -> TriangleMesh {
        let v = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        TriangleMesh {
            vertices: v.iter().map(|p| p + offset).collect(),
            faces: vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        }
    }

    #[test]
    fn euler_characteristics() {
        let d = validate(&icosphere(Vec3::zeros(), 1.0, 1));
        assert_eq!((d.euler_characteristic, d.genus, d.components), (2, 0, 1));
        assert!(d.manifold && d.oriented);

        let d = validate(&torus(Vec3::zeros(), 5.0, 1.0, 16, 8));
        assert_eq!((d.euler_characteristic, d.genus), (0, 1));

        let a = icosphere(Vec3::zeros(), 1.0, 1);
        let b = icosphere(Vec3::new(5.0, 0.0, 0.0), 1.0, 1);
        let d = validate(&TriangleMesh::merged(&[&a, &b]));
        assert_eq!((d.components, d.euler_characteristic, d.genus), (2, 4, 0));
    }

    #[test]
    fn open_and_misoriented_meshes_flagged() {
        let mut m = tetra(Vec3::zeros());
        m.faces.pop();
        let d = validate(&m);
        assert!(!d.manifold);
        assert_eq!(d.boundary_edges, 3);

        let mut m = tetra(Vec3::zeros());
        m.faces[0] = [0, 1, 2];
        let d = validate(&m);
        assert!(d.manifold && !d.oriented);
    }

    #[test]
    fn largest_component_selection() {
        let s = icosphere(Vec3::zeros(), 1.0, 1);
        assert_eq!(largest_component(&s).unwrap(), s);

        let t = tetra(Vec3::new(10.0, 0.0, 0.0));
        let both = TriangleMesh::merged(&[&t, &s]);
        assert_eq!(largest_component(&both).unwrap(), s);

        // tie: the component containing vertex 0 wins
        let t2 = tetra(Vec3::new(-10.0, 0.0, 0.0));
        let tie = TriangleMesh::merged(&[&t2, &t]);
        assert_eq!(largest_component(&tie).unwrap(), t2);

        assert!(matches!(
            largest_component(&TriangleMesh::default()),
            Err(Error::EmptySurface(_))
        ));
    }
}
