use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::volume::filter::{convolve_axis, gaussian_kernel, FWHM_TO_SIGMA};
use crate::volume::{GridKind, VoxelGrid};
use crate::{Error, Result};

/// Slice orientation of a simulated scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Axial,
    Coronal,
    Sagittal,
    Isotropic,
}

impl Orientation {
    pub const ALL: [Orientation; 4] =
        [Orientation::Axial, Orientation::Coronal, Orientation::Sagittal, Orientation::Isotropic];

    /// Through-plane voxel axis: sagittal slices stack along axis 0,
    /// coronal along 1, axial along 2.
    pub fn slice_axis(self) -> Option<usize> {
        match self {
            Orientation::Sagittal => Some(0),
            Orientation::Coronal => Some(1),
            Orientation::Axial => Some(2),
            Orientation::Isotropic => None,
        }
    }
}

/// Orientation, slice spacing and slice thickness of a simulated scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionParams {
    pub orientation: Orientation,
    pub spacing_mm: f64,
    pub thickness_mm: f64,
}

pub const MIN_SPACING_MM: f64 = 1.0;
pub const MAX_SPACING_MM: f64 = 9.0;

impl AcquisitionParams {
    pub fn isotropic() -> Self {
        AcquisitionParams { orientation: Orientation::Isotropic, spacing_mm: 1.0, thickness_mm: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing_mm >= MIN_SPACING_MM && self.spacing_mm <= MAX_SPACING_MM) {
            return Err(Error::Precondition(format!(
                "slice spacing {} mm outside [{MIN_SPACING_MM}, {MAX_SPACING_MM}]",
                self.spacing_mm
            )));
        }
        if !(self.thickness_mm >= 1.0 && self.thickness_mm <= self.spacing_mm) {
            return Err(Error::Precondition(format!(
                "slice thickness {} mm outside [1, spacing {}]",
                self.thickness_mm, self.spacing_mm
            )));
        }
        if self.orientation == Orientation::Isotropic && (self.spacing_mm != 1.0 || self.thickness_mm != 1.0) {
            return Err(Error::Precondition("isotropic acquisitions have 1 mm spacing and thickness".into()));
        }
        Ok(())
    }
}

/// Draws orientation uniformly, spacing on `[1, 9]` mm and thickness on
/// `[1, spacing]` mm. Spacing and thickness are always drawn, then forced to
/// 1 mm for isotropic scans.
pub fn sample_acquisition(seed: u64) -> AcquisitionParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_acquisition_with(&mut rng)
}

pub(crate) fn sample_acquisition_with(rng: &mut impl Rng) -> AcquisitionParams {
    let orientation = Orientation::ALL[rng.random_range(0..4)];
    let spacing_mm = rng.random_range(MIN_SPACING_MM..=MAX_SPACING_MM);
    let thickness_mm = rng.random_range(1.0..=spacing_mm);
    match orientation {
        Orientation::Isotropic => AcquisitionParams::isotropic(),
        _ => AcquisitionParams { orientation, spacing_mm, thickness_mm },
    }
}

/// Slice-profile blur: Gaussian with FWHM equal to the slice thickness,
/// along the slice axis only (all axes for isotropic scans).
pub(crate) fn slice_blur(data: &[f64], shape: [usize; 3], params: &AcquisitionParams) -> Vec<f64> {
    let kernel = gaussian_kernel(params.thickness_mm / FWHM_TO_SIGMA);
    match params.orientation.slice_axis() {
        Some(axis) => convolve_axis(data, shape, axis, &kernel),
        None => (0..3).fold(data.to_vec(), |cur, axis| convolve_axis(&cur, shape, axis, &kernel)),
    }
}

/// Linear interpolation along `axis` at fractional position `x`, clamped
/// to the line.
fn lerp_line(data: &[f64], shape: [usize; 3], axis: usize, line_start: usize, stride: usize, x: f64) -> f64 {
    let n = shape[axis];
    let x = x.clamp(0.0, (n - 1) as f64);
    let i0 = (x.floor() as usize).min(n.saturating_sub(2));
    let t = x - i0 as f64;
    let a = data[line_start + i0 * stride];
    if n == 1 {
        return a;
    }
    let b = data[line_start + (i0 + 1) * stride];
    a * (1.0 - t) + b * t
}

/// Simulates a clinical acquisition of a 1 mm isotropic image and brings
/// it back to 1 mm.
///
/// Steps: slice-profile blur; sampling of slices every `spacing_mm` along
/// the slice axis; i.i.d. Gaussian noise on the low-resolution samples;
/// linear upsampling along the slice axis to the input shape. Isotropic
/// scans are blurred on all axes and keep every voxel.
pub fn simulate_acquisition(
    image: &VoxelGrid,
    params: &AcquisitionParams,
    noise_std: f64,
    seed: u64,
) -> Result<VoxelGrid> {
    params.validate()?;
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::Precondition(format!("noise std {noise_std} must be non-negative")));
    }
    if !image.is_isotropic(1.0, 1e-6) {
        return Err(Error::Precondition(format!(
            "acquisition simulation needs a 1 mm isotropic image, spacing is {:?}",
            image.spacing()
        )));
    }
    let shape = image.shape();
    let data: Vec<f64> = image.data().iter().map(|&v| v as f64).collect();
    let blurred = slice_blur(&data, shape, params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_std).map_err(|e| Error::Precondition(e.to_string()))?;

    let out: Vec<f64> = match params.orientation.slice_axis() {
        None => blurred
            .iter()
            .map(|v| if noise_std > 0.0 { v + normal.sample(&mut rng) } else { *v })
            .collect(),
        Some(axis) => {
            let n = shape[axis];
            let spacing = params.spacing_mm;
            let slices = ((n - 1) as f64 / spacing).floor() as usize + 1;
            let mut low_shape = shape;
            low_shape[axis] = slices;
            let stride = [1, shape[0], shape[0] * shape[1]][axis];
            let low_stride = [1, low_shape[0], low_shape[0] * low_shape[1]][axis];
            let total_low: usize = low_shape.iter().product();
            let mut low = vec![0.0; total_low];
            for (idx, v) in low.iter_mut().enumerate() {
                let pos = (idx / low_stride) % slices;
                let line_low = idx - pos * low_stride;
                let line = to_full_index(line_low, low_shape, shape);
                *v = lerp_line(&blurred, shape, axis, line, stride, pos as f64 * spacing);
                if noise_std > 0.0 {
                    *v += normal.sample(&mut rng);
                }
            }
            let mut up = vec![0.0; data.len()];
            for (idx, v) in up.iter_mut().enumerate() {
                let pos = (idx / stride) % n;
                let line = idx - pos * stride;
                let line_low = to_full_index(line, shape, low_shape);
                *v = lerp_line(&low, low_shape, axis, line_low, low_stride, pos as f64 / spacing);
            }
            up
        }
    };
    image.with_data(out.into_iter().map(|v| v as f32).collect(), GridKind::Intensity)
}

/// Re-indexes a position whose slice-axis coordinate is zero from one shape
/// to another that differs only along that axis.
fn to_full_index(idx: usize, from: [usize; 3], to: [usize; 3]) -> usize {
    let i = idx % from[0];
    let j = (idx / from[0]) % from[1];
    let k = idx / (from[0] * from[1]);
    i + to[0] * (j + to[1] * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Affine;

    #[test]
    fn samples_respect_bounds_and_replay() {
        for seed in 0..500 {
            let p = sample_acquisition(seed);
            p.validate().unwrap();
            assert_eq!(p, sample_acquisition(seed));
        }
        let axial = AcquisitionParams { orientation: Orientation::Axial, spacing_mm: 5.0, thickness_mm: 5.0 };
        assert!(axial.validate().is_ok());
    }

    fn smooth_image(shape: [usize; 3]) -> VoxelGrid {
        VoxelGrid::from_fn(shape, Affine::identity(), GridKind::Intensity, |i, j, k| {
            (100.0 + 50.0 * (i as f64 * 0.2).sin() * (j as f64 * 0.15).cos() + 30.0 * (k as f64 * 0.1).sin()) as f32
        })
        .unwrap()
    }

    #[test]
    fn isotropic_noiseless_is_near_identity() {
        let img = smooth_image([20, 20, 20]);
        let out = simulate_acquisition(&img, &AcquisitionParams::isotropic(), 0.0, 1).unwrap();
        let (lo, hi) = img.data().iter().fold((f32::MAX, f32::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let worst = img.data().iter().zip(out.data()).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        assert!(worst < 0.02 * (hi - lo), "{worst}");
    }

    #[test]
    fn constant_image_stays_constant() {
        let img = VoxelGrid::filled([9, 10, 11], 42.0, Affine::identity(), GridKind::Intensity).unwrap();
        for o in Orientation::ALL {
            let p = if o == Orientation::Isotropic {
                AcquisitionParams::isotropic()
            } else {
                AcquisitionParams { orientation: o, spacing_mm: 3.7, thickness_mm: 2.9 }
            };
            let out = simulate_acquisition(&img, &p, 0.0, 3).unwrap();
            assert_eq!(out.shape(), img.shape());
            assert!(out.data().iter().all(|&v| (v - 42.0).abs() < 1e-4), "{o:?}");
        }
    }

    #[test]
    fn slice_profile_matches_closed_form_gaussian() {
        let shape = [1, 1, 41];
        let mut data = vec![0.0; 41];
        data[20] = 1.0;
        let p = AcquisitionParams { orientation: Orientation::Axial, spacing_mm: 5.0, thickness_mm: 5.0 };
        let out = slice_blur(&data, shape, &p);
        let sigma = 5.0 / FWHM_TO_SIGMA;
        assert!((sigma - 2.123).abs() < 1e-3);
        for (i, v) in out.iter().enumerate() {
            let x = i as f64 - 20.0;
            let g = (-x * x / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            assert!((v - g).abs() < 1e-3, "tap {i}: {v} vs {g}");
        }
    }

    #[test]
    fn only_slice_axis_is_degraded() {
        // variation purely in-plane survives an axial acquisition untouched
        let img = VoxelGrid::from_fn([12, 12, 30], Affine::identity(), GridKind::Intensity, |i, j, _| {
            (i * 7 + j * 3) as f32
        })
        .unwrap();
        let p = AcquisitionParams { orientation: Orientation::Axial, spacing_mm: 6.0, thickness_mm: 4.0 };
        let out = simulate_acquisition(&img, &p, 0.0, 0).unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn noise_is_seeded() {
        let img = smooth_image([10, 10, 10]);
        let p = AcquisitionParams { orientation: Orientation::Coronal, spacing_mm: 2.5, thickness_mm: 2.0 };
        let a = simulate_acquisition(&img, &p, 5.0, 11).unwrap();
        assert_eq!(a, simulate_acquisition(&img, &p, 5.0, 11).unwrap());
        assert_ne!(a, simulate_acquisition(&img, &p, 5.0, 12).unwrap());
    }

    #[test]
    fn rejects_invalid_inputs() {
        let img = smooth_image([6, 6, 6]);
        let bad = AcquisitionParams { orientation: Orientation::Axial, spacing_mm: 2.0, thickness_mm: 3.0 };
        assert!(simulate_acquisition(&img, &bad, 0.0, 0).is_err());
        let aniso = img.clone().with_data(img.data().to_vec(), GridKind::Intensity).unwrap();
        let a = Affine::from_spacing([1.0, 1.0, 2.0], crate::Vec3::zeros()).unwrap();
        let aniso = VoxelGrid::new(aniso.shape(), aniso.into_data(), a, GridKind::Intensity).unwrap();
        assert!(simulate_acquisition(&aniso, &AcquisitionParams::isotropic(), 0.0, 0).is_err());
    }
}
