use nalgebra::{Matrix3, Matrix4, Vector4};

use crate::{Error, Result, Vec3};

const MIN_ABS_DET: f64 = 1e-9;

/// Voxel-index (continuous) to world-millimetre mapping.
///
/// The linear block is guaranteed invertible and the last row is exactly
/// `(0, 0, 0, 1)`; the inverse of the linear block is cached.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    matrix: Matrix4<f64>,
    inv_linear: Matrix3<f64>,
}

impl Affine {
    pub fn new(matrix: Matrix4<f64>) -> Result<Self> {
        let last = matrix.row(3);
        if last[0] != 0.0 || last[1] != 0.0 || last[2] != 0.0 || last[3] != 1.0 {
            return Err(Error::Geometry(format!(
                "affine last row must be (0,0,0,1), found {last}"
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("affine has non-finite entries".into()));
        }
        let linear: Matrix3<f64> = matrix.fixed_view::<3, 3>(0, 0).into_owned();
        let det = linear.determinant();
        if det.abs() <= MIN_ABS_DET {
            return Err(Error::Geometry(format!(
                "affine linear part is singular (det = {det:e})"
            )));
        }
        let inv_linear = linear
            .try_inverse()
            .ok_or_else(|| Error::Geometry("affine linear part is not invertible".into()))?;
        Ok(Affine { matrix, inv_linear })
    }

    pub fn identity() -> Self {
        Affine {
            matrix: Matrix4::identity(),
            inv_linear: Matrix3::identity(),
        }
    }

    /// Axis-aligned affine with the given voxel size and the world position
    /// of voxel `(0, 0, 0)`.
    pub fn from_spacing(spacing: [f64; 3], origin: Vec3) -> Result<Self> {
        let mut m = Matrix4::identity();
        for a in 0..3 {
            m[(a, a)] = spacing[a];
            m[(a, 3)] = origin[a];
        }
        Affine::new(m)
    }

    /// Builds an affine from a linear block and a translation.
    pub fn from_parts(linear: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&linear);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Affine::new(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn linear(&self) -> Matrix3<f64> {
        self.matrix.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn inverse_linear(&self) -> &Matrix3<f64> {
        &self.inv_linear
    }

    pub fn translation(&self) -> Vec3 {
        self.matrix.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn determinant(&self) -> f64 {
        self.linear().determinant()
    }

    /// Voxel size along each index axis (column norms of the linear block).
    pub fn spacing(&self) -> [f64; 3] {
        let l = self.linear();
        [l.column(0).norm(), l.column(1).norm(), l.column(2).norm()]
    }

    pub fn voxel_to_world(&self, voxel: &Vec3) -> Vec3 {
        let h = self.matrix * Vector4::new(voxel.x, voxel.y, voxel.z, 1.0);
        Vec3::new(h.x, h.y, h.z)
    }

    pub fn world_to_voxel(&self, world: &Vec3) -> Vec3 {
        self.inv_linear * (world - self.translation())
    }

    /// True when both affines agree entry-wise within `tol`.
    pub fn approx_eq(&self, other: &Affine, tol: f64) -> bool {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl Default for Affine {
    fn default() -> Self {
        Affine::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_singular_and_bad_last_row() {
        let mut m = Matrix4::identity();
        m[(2, 2)] = 0.0;
        assert!(matches!(Affine::new(m), Err(Error::Geometry(_))));
        let mut m = Matrix4::identity();
        m[(3, 0)] = 1.0;
        assert!(matches!(Affine::new(m), Err(Error::Geometry(_))));
    }

    #[test]
    fn world_voxel_round_trip() {
        let a = Affine::from_parts(
            Matrix3::new(0.0, -1.7, 0.0, 1.7, 0.0, 0.0, 0.0, 0.0, 6.0),
            Vec3::new(10.0, -3.0, 2.5),
        )
        .unwrap();
        let v = Vec3::new(3.25, 7.5, 1.0);
        let back = a.world_to_voxel(&a.voxel_to_world(&v));
        assert!((back - v).norm() < 1e-12);
        let s = a.spacing();
        assert!((s[0] - 1.7).abs() < 1e-12 && (s[2] - 6.0).abs() < 1e-12);
    }
}
