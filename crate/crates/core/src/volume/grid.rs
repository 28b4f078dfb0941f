use crate::{Error, Result, Vec3};

use super::Affine;

/// What the values of a [`VoxelGrid`] mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridKind {
    Intensity,
    /// Non-negative integer labels.
    Label,
    /// Binary `{0, 1}`.
    Mask,
    /// Signed distance in mm, negative inside, saturated at `±clip_mm`.
    Sdf { clip_mm: f64 },
}

impl GridKind {
    pub fn name(&self) -> &'static str {
        match self {
            GridKind::Intensity => "intensity",
            GridKind::Label => "label",
            GridKind::Mask => "mask",
            GridKind::Sdf { .. } => "sdf",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, GridKind::Label | GridKind::Mask)
    }

    /// Value used for samples falling outside the grid.
    pub fn outside_value(&self) -> f32 {
        match self {
            GridKind::Sdf { clip_mm } => *clip_mm as f32,
            _ => 0.0,
        }
    }
}

/// A 3D scalar or label array stored x-fastest, with a voxel-to-world affine.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    shape: [usize; 3],
    data: Vec<f32>,
    affine: Affine,
    kind: GridKind,
}

impl VoxelGrid {
    pub fn new(shape: [usize; 3], data: Vec<f32>, affine: Affine, kind: GridKind) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Precondition(format!("grid shape {shape:?} has a zero axis")));
        }
        let expected = shape[0] * shape[1] * shape[2];
        if data.len() != expected {
            return Err(Error::Precondition(format!(
                "grid data has {} values, shape {shape:?} needs {expected}",
                data.len()
            )));
        }
        check_kind_values(&data, kind)?;
        Ok(VoxelGrid {
            shape,
            data,
            affine,
            kind,
        })
    }

    pub fn filled(shape: [usize; 3], value: f32, affine: Affine, kind: GridKind) -> Result<Self> {
        let n = shape.iter().product();
        VoxelGrid::new(shape, vec![value; n], affine, kind)
    }

    /// Builds a grid by evaluating `f(i, j, k)` at every voxel.
    pub fn from_fn(
        shape: [usize; 3],
        affine: Affine,
        kind: GridKind,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.iter().product());
        for k in 0..shape[2] {
            for j in 0..shape[1] {
                for i in 0..shape[0] {
                    data.push(f(i, j, k));
                }
            }
        }
        VoxelGrid::new(shape, data, affine, kind)
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Mutable access to the raw values. Callers are responsible for keeping
    /// the kind invariants (see [`VoxelGrid::validate`]).
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn affine(&self) -> &Affine {
        &self.affine
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.affine.spacing()
    }

    pub fn validate(&self) -> Result<()> {
        check_kind_values(&self.data, self.kind)
    }

    /// Reinterprets the values under another kind, checking its invariants.
    pub fn with_kind(mut self, kind: GridKind) -> Result<Self> {
        check_kind_values(&self.data, kind)?;
        self.kind = kind;
        Ok(self)
    }

    /// Same geometry, new values and kind.
    pub fn with_data(&self, data: Vec<f32>, kind: GridKind) -> Result<Self> {
        VoxelGrid::new(self.shape, data, self.affine.clone(), kind)
    }

    /// Binary mask of voxels whose value equals `label`.
    pub fn label_mask(&self, label: f32) -> VoxelGrid {
        let data = self.data.iter().map(|&v| f32::from(v == label)).collect();
        VoxelGrid {
            shape: self.shape,
            data,
            affine: self.affine.clone(),
            kind: GridKind::Mask,
        }
    }

    /// Binary mask of voxels with value strictly above zero.
    pub fn nonzero_mask(&self) -> VoxelGrid {
        let data = self.data.iter().map(|&v| f32::from(v > 0.0)).collect();
        VoxelGrid {
            shape: self.shape,
            data,
            affine: self.affine.clone(),
            kind: GridKind::Mask,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.data[self.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f32) {
        let idx = self.index(i, j, k);
        self.data[idx] = value;
    }

    pub fn voxel_center_world(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.affine
            .voxel_to_world(&Vec3::new(i as f64, j as f64, k as f64))
    }

    pub fn same_geometry(&self, other: &VoxelGrid) -> bool {
        self.shape == other.shape && self.affine.approx_eq(&other.affine, 1e-6)
    }

    pub fn is_isotropic(&self, voxel_mm: f64, tol: f64) -> bool {
        self.spacing().iter().all(|s| (s - voxel_mm).abs() <= tol)
    }

    /// True when any non-zero voxel lies on the outermost layer of the grid.
    pub fn touches_boundary(&self) -> bool {
        let [nx, ny, nz] = self.shape;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let on_edge =
                        i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
                    if on_edge && self.get(i, j, k) != 0.0 {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Trilinear interpolation at continuous voxel coordinates.
    ///
    /// The domain is the voxel footprint `[-0.5, n - 0.5]` per axis; inside
    /// it the coordinate is clamped to the voxel-centre hull. Returns `None`
    /// outside the footprint.
    pub fn trilinear_at_voxel(&self, u: &Vec3) -> Option<f64> {
        let cell = self.cell_of(u)?;
        Some(self.trilinear_in_cell(&cell))
    }

    /// Nearest-neighbour lookup at continuous voxel coordinates, `None`
    /// outside the voxel footprint.
    pub fn nearest_at_voxel(&self, u: &Vec3) -> Option<f32> {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let x = u[a];
            if !(x >= -0.5 && x <= self.shape[a] as f64 - 0.5) {
                return None;
            }
            idx[a] = (x.round().max(0.0) as usize).min(self.shape[a] - 1);
        }
        Some(self.get(idx[0], idx[1], idx[2]))
    }

    pub fn trilinear_at_world(&self, p: &Vec3) -> Option<f64> {
        self.trilinear_at_voxel(&self.affine.world_to_voxel(p))
    }

    pub(crate) fn cell_of(&self, u: &Vec3) -> Option<Cell> {
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let n = self.shape[a];
            let mut x = u[a];
            if !(x >= -0.5 && x <= n as f64 - 0.5) {
                return None;
            }
            let r = x.round();
            if (x - r).abs() < 1e-9 {
                x = r;
            }
            if n == 1 {
                base[a] = 0;
                frac[a] = 0.0;
                continue;
            }
            x = x.clamp(0.0, (n - 1) as f64);
            // Lower cell at exact cell boundaries.
            let i0 = ((x.ceil() as isize) - 1).clamp(0, n as isize - 2) as usize;
            base[a] = i0;
            frac[a] = (x - i0 as f64).clamp(0.0, 1.0);
        }
        Some(Cell { base, frac })
    }

    /// Values at the eight corners of `cell`, ordered `c[dz][dy][dx]`.
    pub(crate) fn cell_corners(&self, cell: &Cell) -> [[[f64; 2]; 2]; 2] {
        let mut c = [[[0.0; 2]; 2]; 2];
        let step = |a: usize| usize::from(self.shape[a] > 1);
        for (dz, cz) in c.iter_mut().enumerate() {
            for (dy, cy) in cz.iter_mut().enumerate() {
                for (dx, v) in cy.iter_mut().enumerate() {
                    *v = self.get(
                        cell.base[0] + dx * step(0),
                        cell.base[1] + dy * step(1),
                        cell.base[2] + dz * step(2),
                    ) as f64;
                }
            }
        }
        c
    }

    pub(crate) fn trilinear_in_cell(&self, cell: &Cell) -> f64 {
        let c = self.cell_corners(cell);
        let [tx, ty, tz] = cell.frac;
        let lerp = |a: f64, b: f64, t: f64| (1.0 - t) * a + t * b;
        let c00 = lerp(c[0][0][0], c[0][0][1], tx);
        let c10 = lerp(c[0][1][0], c[0][1][1], tx);
        let c01 = lerp(c[1][0][0], c[1][0][1], tx);
        let c11 = lerp(c[1][1][0], c[1][1][1], tx);
        lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz)
    }
}

/// Interpolation cell: lower corner index and fractional offsets.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Cell {
    pub base: [usize; 3],
    pub frac: [f64; 3],
}

fn check_kind_values(data: &[f32], kind: GridKind) -> Result<()> {
    match kind {
        GridKind::Mask => {
            if let Some(v) = data.iter().find(|&&v| v != 0.0 && v != 1.0) {
                return Err(Error::Precondition(format!("mask grid holds non-binary value {v}")));
            }
        }
        GridKind::Label => {
            if let Some(v) = data.iter().find(|&&v| !(v >= 0.0 && v.fract() == 0.0)) {
                return Err(Error::Precondition(format!(
                    "label grid holds non-label value {v}"
                )));
            }
        }
        GridKind::Sdf { clip_mm } => {
            if !(clip_mm > 0.0 && clip_mm.is_finite()) {
                return Err(Error::Precondition(format!("sdf clip {clip_mm} must be positive")));
            }
            let c = clip_mm as f32;
            if let Some(v) = data.iter().find(|&&v| !(v.abs() <= c)) {
                return Err(Error::Precondition(format!(
                    "sdf grid value {v} exceeds clip {clip_mm}"
                )));
            }
        }
        GridKind::Intensity => {
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Precondition("intensity grid holds non-finite values".into()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(shape: [usize; 3]) -> VoxelGrid {
        VoxelGrid::from_fn(shape, Affine::identity(), GridKind::Intensity, |i, j, k| {
            (i + 10 * j + 100 * k) as f32
        })
        .unwrap()
    }

    #[test]
    fn kind_invariants_enforced() {
        let a = Affine::identity();
        assert!(VoxelGrid::new([2, 1, 1], vec![0.0, 2.0], a.clone(), GridKind::Mask).is_err());
        assert!(VoxelGrid::new([2, 1, 1], vec![0.0, 1.5], a.clone(), GridKind::Label).is_err());
        assert!(VoxelGrid::new([2, 1, 1], vec![0.0], a.clone(), GridKind::Label).is_err());
        assert!(
            VoxelGrid::new([2, 1, 1], vec![-6.0, 1.0], a, GridKind::Sdf { clip_mm: 5.0 })
                .is_err()
        );
    }

    #[test]
    fn trilinear_exact_at_centres_and_midpoints() {
        let g = ramp([4, 3, 3]);
        assert_eq!(g.trilinear_at_voxel(&Vec3::new(2.0, 1.0, 2.0)), Some(212.0));
        assert_eq!(g.trilinear_at_voxel(&Vec3::new(2.5, 1.0, 2.0)), Some(212.5));
        assert_eq!(g.trilinear_at_voxel(&Vec3::new(3.4, 0.0, 0.0)), Some(3.0));
        assert_eq!(g.trilinear_at_voxel(&Vec3::new(3.6, 0.0, 0.0)), None);
        assert_eq!(g.nearest_at_voxel(&Vec3::new(1.4, 1.6, -0.4)), Some(21.0));
    }

    #[test]
    fn boundary_detection() {
        let mut g = VoxelGrid::filled([4, 4, 4], 0.0, Affine::identity(), GridKind::Mask).unwrap();
        g.set(1, 1, 1, 1.0);
        assert!(!g.touches_boundary());
        g.set(0, 2, 2, 1.0);
        assert!(g.touches_boundary());
    }
}
