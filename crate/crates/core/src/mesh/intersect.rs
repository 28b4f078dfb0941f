use rayon::prelude::*;

use super::TriangleMesh;
use crate::geometry::{triangles_intersect, Bvh};

/// All pairs `(i, j)`, `i < j`, of faces that share no vertex index and
/// intersect as closed triangles, in ascending order.
pub fn detect_self_intersections(mesh: &TriangleMesh) -> Vec<(usize, usize)> {
    let boxes: Vec<_> = (0..mesh.face_count()).map(|f| mesh.face_aabb(f)).collect();
    let bvh = Bvh::build(&boxes);
    let mut out: Vec<(usize, usize)> = bvh
        .overlapping_pairs()
        .into_par_iter()
        .filter(|&(i, j)| !mesh.faces_adjacent(i, j) && faces_intersect(mesh, i, j))
        .collect();
    out.sort_unstable();
    out
}

fn faces_intersect(mesh: &TriangleMesh, i: usize, j: usize) -> bool {
    let a = mesh.triangle(i);
    let b = mesh.triangle(j);
    triangles_intersect(&a, &b)
}

/// Quadratic reference used by tests and benchmarks.
#[doc(hidden)]
pub fn detect_self_intersections_brute(mesh: &TriangleMesh) -> Vec<(usize, usize)> {
    let n = mesh.face_count();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if !mesh.faces_adjacent(i, j) && faces_intersect(mesh, i, j) {
                out.push((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosphere, torus};
    use crate::Vec3;

    #[test]
    fn clean_closed_meshes_have_none() {
        assert!(detect_self_intersections(&icosphere(Vec3::zeros(), 10.0, 3)).is_empty());
        assert!(detect_self_intersections(&torus(Vec3::zeros(), 10.0, 3.0, 32, 16)).is_empty());
    }

    #[test]
    fn overlapping_spheres_match_brute_force() {
        let a = icosphere(Vec3::zeros(), 5.0, 2);
        let b = icosphere(Vec3::new(6.0, 0.5, 0.3), 4.0, 2);
        let m = TriangleMesh::merged(&[&a, &b]);
        let fast = detect_self_intersections(&m);
        assert!(!fast.is_empty());
        assert_eq!(fast, detect_self_intersections_brute(&m));
        let off = a.face_count();
        assert!(fast.iter().all(|&(i, j)| i < off && j >= off));
    }

    #[test]
    fn pushed_vertex_creates_intersection() {
        let mut m = icosphere(Vec3::zeros(), 5.0, 2);
        let v = 0;
        let p = m.vertices[v];
        m.vertices[v] = -p * 1.5;
        let found = detect_self_intersections(&m);
        assert!(!found.is_empty());
        assert_eq!(found, detect_self_intersections_brute(&m));
    }
}
