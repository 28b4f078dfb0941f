use nalgebra::{Matrix3, Rotation3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use crate::sdf::SdfGrid;
use crate::volume::{resample_with, Interpolation, VoxelGrid};
use crate::{Error, Result, Vec3};

pub const MIN_SCALE: f64 = 0.8;
pub const MAX_SCALE: f64 = 1.25;

/// Random ranges for spatial augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformationRanges {
    /// Rotation about each axis is drawn from `±max_rotation_deg`.
    pub max_rotation_deg: f64,
    pub min_scale: f64,
    pub max_scale: f64,
    pub max_translation_mm: f64,
    /// Control points per axis of the displacement lattice.
    pub warp_lattice: usize,
    /// Each displacement component is drawn from `±max_warp_mm`.
    pub max_warp_mm: f64,
}

impl Default for DeformationRanges {
    fn default() -> Self {
        DeformationRanges {
            max_rotation_deg: 20.0,
            min_scale: 0.9,
            max_scale: 1.1,
            max_translation_mm: 10.0,
            warp_lattice: 8,
            max_warp_mm: 4.0,
        }
    }
}

impl DeformationRanges {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.max_rotation_deg >= 0.0 && self.max_translation_mm >= 0.0 && self.max_warp_mm >= 0.0) {
            return bad("deformation magnitudes must be non-negative".into());
        }
        if !(MIN_SCALE <= self.min_scale && self.min_scale <= self.max_scale && self.max_scale <= MAX_SCALE) {
            return bad(format!(
                "scale range [{}, {}] must lie within [{MIN_SCALE}, {MAX_SCALE}]",
                self.min_scale, self.max_scale
            ));
        }
        if self.warp_lattice < 2 {
            return bad("warp lattice needs at least 2 control points per axis".into());
        }
        Ok(())
    }
}

/// A sampled spatial augmentation: a similarity-like affine about the grid
/// centre followed by a smooth displacement field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub rotation_deg: [f64; 3],
    pub scale: [f64; 3],
    pub translation_mm: [f64; 3],
    /// Control points per axis; the lattice spans the whole grid.
    pub warp_lattice: usize,
    /// Displacements (mm) at the control points, x-fastest.
    pub warp_mm: Vec<[f64; 3]>,
}

impl DeformationParams {
    pub fn identity() -> Self {
        DeformationParams {
            rotation_deg: [0.0; 3],
            scale: [1.0; 3],
            translation_mm: [0.0; 3],
            warp_lattice: 2,
            warp_mm: vec![[0.0; 3]; 8],
        }
    }

    pub fn translation(t: [f64; 3]) -> Self {
        DeformationParams { translation_mm: t, ..DeformationParams::identity() }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation_deg == [0.0; 3]
            && self.scale == [1.0; 3]
            && self.translation_mm == [0.0; 3]
            && self.warp_mm.iter().all(|d| *d == [0.0; 3])
    }

    pub fn sample(ranges: &DeformationRanges, rng: &mut impl Rng) -> Self {
        let sym = |rng: &mut dyn rand::RngCore, m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
        let rotation_deg = [(); 3].map(|_| sym(rng, ranges.max_rotation_deg));
        let scale = [(); 3].map(|_| rng.random_range(ranges.min_scale..=ranges.max_scale));
        let translation_mm = [(); 3].map(|_| sym(rng, ranges.max_translation_mm));
        let n = ranges.warp_lattice;
        let warp_mm = (0..n * n * n).map(|_| [(); 3].map(|_| sym(rng, ranges.max_warp_mm))).collect();
        DeformationParams { rotation_deg, scale, translation_mm, warp_lattice: n, warp_mm }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale.iter().any(|s| !(MIN_SCALE..=MAX_SCALE).contains(s)) {
            return Err(Error::Precondition(format!(
                "scale {:?} outside [{MIN_SCALE}, {MAX_SCALE}]",
                self.scale
            )));
        }
        let n = self.warp_lattice;
        if n < 2 || self.warp_mm.len() != n * n * n {
            return Err(Error::Precondition(format!(
                "warp lattice of {n} per axis needs {} displacements, got {}",
                n * n * n,
                self.warp_mm.len()
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.rotation_deg)
            || !finite(&self.translation_mm)
            || !self.warp_mm.iter().all(|d| finite(d))
        {
            return Err(Error::Precondition("deformation parameters must be finite".into()));
        }
        Ok(())
    }

    /// Linear part `R·S` (rotation about x, then y, then z).
    fn linear(&self) -> Matrix3<f64> {
        let [rx, ry, rz] = self.rotation_deg.map(f64::to_radians);
        let r = Rotation3::from_euler_angles(rx, ry, rz);
        r.matrix() * Matrix3::from_diagonal(&Vec3::from(self.scale))
    }
}

/// Warps labels and SDFs with one shared transform.
///
/// With `A(x) = c + R·S·(x − c) + t` about the grid centre `c` and `u` the
/// displacement lattice over the input grid, each output voxel at world
/// point `p` reads the inputs at `y + u(y)` where `y = A⁻¹(p)`. Content
/// therefore moves by `+t` under a pure translation. Labels use nearest
/// neighbour, SDFs trilinear interpolation; the warped SDFs keep their
/// zero level set but are no longer exact distances.
pub fn apply_deformation(
    labels: &VoxelGrid,
    sdfs: &[SdfGrid; 4],
    params: &DeformationParams,
) -> Result<(VoxelGrid, [SdfGrid; 4])> {
    params.validate()?;
    if let Some(s) = sdfs.iter().find(|s| !s.grid().same_geometry(labels)) {
        return Err(Error::Contract(format!(
            "SDF grid {:?} does not share the label grid geometry {:?}",
            s.grid().shape(),
            labels.shape()
        )));
    }
    if params.is_identity() {
        return Ok((labels.clone(), sdfs.clone()));
    }
    let lin = params.linear();
    let inv = lin
        .try_inverse()
        .filter(|_| lin.determinant().abs() > 1e-9)
        .ok_or_else(|| Error::Geometry("deformation affine is not invertible".into()))?;
    let shape = labels.shape();
    let affine = labels.affine();
    let center = affine.voxel_to_world(&Vec3::new(
        (shape[0] as f64 - 1.0) / 2.0,
        (shape[1] as f64 - 1.0) / 2.0,
        (shape[2] as f64 - 1.0) / 2.0,
    ));
    let t = Vec3::from(params.translation_mm);
    let lattice = Lattice {
        n: params.warp_lattice,
        values: params.warp_mm.iter().map(|d| Vec3::from(*d)).collect(),
    };
    let to_input = |v: Vec3| {
        let p = affine.voxel_to_world(&v);
        let y = center + inv * (p - t - center);
        let uy = affine.world_to_voxel(&y);
        let src = y + lattice.sample([uy.x, uy.y, uy.z], shape);
        affine.world_to_voxel(&src)
    };
    let out_labels = resample_with(labels, affine, shape, Interpolation::Nearest, to_input)?;
    let mut out_sdfs = Vec::with_capacity(4);
    for s in sdfs {
        let g = resample_with(s.grid(), affine, shape, Interpolation::Trilinear, to_input)?;
        out_sdfs.push(SdfGrid::new(g)?);
    }
    let out_sdfs: [SdfGrid; 4] = out_sdfs.try_into().expect("four SDFs");
    Ok((out_labels, out_sdfs))
}
