use super::TriangleMesh;
use crate::{Error, Result, Vec3};

/// Orthonormal frame at a vertex: outward normal plus two tangents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexFrame {
    pub normal: Vec3,
    pub tangent1: Vec3,
    pub tangent2: Vec3,
}

impl VertexFrame {
    /// Completes a unit normal to a right-handed frame. The first tangent
    /// is built from the coordinate axis least aligned with the normal.
    pub fn from_normal(normal: Vec3) -> Self {
        let a = normal.map(f64::abs);
        let axis = if a.x <= a.y && a.x <= a.z {
            Vec3::x()
        } else if a.y <= a.z {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let tangent1 = (axis - normal * normal.dot(&axis)).normalize();
        let tangent2 = normal.cross(&tangent1);
        Self { normal, tangent1, tangent2 }
    }
}

/// Area-weighted vertex normals, completed to orthonormal frames.
///
/// Fails with `DegenerateVertex` for a vertex whose incident faces have no
/// net area (including isolated vertices).
pub fn vertex_frames(mesh: &TriangleMesh) -> Result<Vec<VertexFrame>> {
    let mut acc = vec![Vec3::zeros(); mesh.vertex_count()];
    for (f, face) in mesh.faces.iter().enumerate() {
        let c = mesh.face_cross(f);
        for &v in face {
            acc[v] += c;
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(v, n)| {
            let len = n.norm();
            if !(len > 1e-12) {
                return Err(Error::DegenerateVertex(v));
            }
            Ok(VertexFrame::from_normal(n / len))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::icosphere;
    use proptest::prelude::*;

    #[test]
    fn sphere_normals_are_radial() {
        let c = Vec3::new(1.0, 2.0, 3.0);
        let m = icosphere(c, 5.0, 3);
        let frames = vertex_frames(&m).unwrap();
        for (v, fr) in m.vertices.iter().zip(&frames) {
            assert!(fr.normal.dot(&(v - c).normalize()) > 0.999);
        }
    }

    #[test]
    fn isolated_vertex_is_degenerate() {
        let mut m = icosphere(Vec3::zeros(), 1.0, 0);
        m.vertices.push(Vec3::new(9.0, 9.0, 9.0));
        let n = m.vertices.len() - 1;
        assert!(matches!(vertex_frames(&m), Err(Error::DegenerateVertex(v)) if v == n));
    }

    proptest! {
        #[test]
        fn frame_is_orthonormal_right_handed(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
            let n = Vec3::new(x, y, z);
            prop_assume!(n.norm() > 1e-3);
            let f = VertexFrame::from_normal(n.normalize());
            for (a, b) in [(f.normal, f.tangent1), (f.normal, f.tangent2), (f.tangent1, f.tangent2)] {
                prop_assert!(a.dot(&b).abs() < 1e-12);
            }
            for t in [f.normal, f.tangent1, f.tangent2] {
                prop_assert!((t.norm() - 1.0).abs() < 1e-12);
            }
            prop_assert!((f.tangent1.cross(&f.tangent2) - f.normal).norm() < 1e-12);
        }
    }
}
