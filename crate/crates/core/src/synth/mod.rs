//! Domain-randomised training pairs: synthetic scans of random contrast,
//! orientation and resolution rendered from a label volume, with the
//! surface SDFs warped alongside as regression targets.

mod acquisition;
mod deform;
mod intensity;
mod lattice;
mod shard;

pub use acquisition::{
    sample_acquisition, simulate_acquisition, AcquisitionParams, Orientation, MAX_SPACING_MM, MIN_SPACING_MM,
};
pub use deform::{apply_deformation, DeformationParams, DeformationRanges, MAX_SCALE, MIN_SCALE};
pub use intensity::{apply_bias, labels_present, render_intensities, sample_gmm, GmmParams, GmmPrior, LabelIntensity};
pub use shard::{load_shard, write_shard};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sdf::{SdfGrid, DEFAULT_CLIP_MM};
use crate::volume::{GridKind, VoxelGrid};
use crate::{Error, Result};

/// Target channel names in file order: left white, left pial, right white,
/// right pial.
pub const SDF_CHANNELS: [&str; 4] = ["lw", "lp", "rw", "rp"];

/// Sampling ranges for every randomised stage of [`generate_pair`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub deformation: DeformationRanges,
    pub gmm: GmmPrior,
    pub bias_control_points: usize,
    pub bias_log_amplitude: f64,
    /// Noise std is drawn from `[0, max_noise_std]` on the 0–255 scale.
    pub max_noise_std: f64,
    /// Fixes the acquisition instead of sampling it.
    pub acquisition: Option<AcquisitionParams>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            deformation: DeformationRanges::default(),
            gmm: GmmPrior::default(),
            bias_control_points: 4,
            bias_log_amplitude: 0.3,
            max_noise_std: 15.0,
            acquisition: None,
        }
    }
}

impl SynthConfig {
    /// Every stage degenerate: identity deformation, zero GMM spread, no
    /// bias, isotropic 1 mm acquisition and no noise.
    pub fn zero_amplitude() -> Self {
        SynthConfig {
            deformation: DeformationRanges {
                max_rotation_deg: 0.0,
                min_scale: 1.0,
                max_scale: 1.0,
                max_translation_mm: 0.0,
                warp_lattice: 2,
                max_warp_mm: 0.0,
            },
            gmm: GmmPrior { std_min: 0.0, std_max: 0.0, ..GmmPrior::default() },
            bias_control_points: 2,
            bias_log_amplitude: 0.0,
            max_noise_std: 0.0,
            acquisition: Some(AcquisitionParams::isotropic()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.deformation.validate()?;
        self.gmm.validate()?;
        if self.bias_control_points < 2 {
            return Err(Error::Config("bias_control_points must be at least 2".into()));
        }
        if !(self.bias_log_amplitude >= 0.0 && self.max_noise_std >= 0.0) {
            return Err(Error::Config("bias amplitude and noise std must be non-negative".into()));
        }
        if let Some(a) = &self.acquisition {
            a.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Everything sampled for one pair, flat so it serialises to a single JSON
/// object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub orientation: Orientation,
    pub spacing_mm: f64,
    pub thickness_mm: f64,
    pub noise_std: f64,
    pub rotation_deg: [f64; 3],
    pub scale: [f64; 3],
    pub translation_mm: [f64; 3],
    pub warp_lattice: usize,
    /// Distance between warp control points along each voxel axis.
    pub warp_control_spacing_mm: [f64; 3],
    pub warp_mm: Vec<[f64; 3]>,
    pub gmm_labels: Vec<u32>,
    pub gmm_means: Vec<f64>,
    pub gmm_stds: Vec<f64>,
    pub bias_control_points: usize,
    pub bias_log_amplitude: f64,
    /// Intensity range mapped to `[0, 1]` by the final rescale.
    pub intensity_min: f64,
    pub intensity_max: f64,
}

impl Provenance {
    pub fn acquisition(&self) -> AcquisitionParams {
        AcquisitionParams { orientation: self.orientation, spacing_mm: self.spacing_mm, thickness_mm: self.thickness_mm }
    }

    pub fn deformation(&self) -> DeformationParams {
        DeformationParams {
            rotation_deg: self.rotation_deg,
            scale: self.scale,
            translation_mm: self.translation_mm,
            warp_lattice: self.warp_lattice,
            warp_mm: self.warp_mm.clone(),
        }
    }

    pub fn gmm(&self) -> GmmParams {
        GmmParams {
            labels: self
                .gmm_labels
                .iter()
                .zip(self.gmm_means.iter().zip(&self.gmm_stds))
                .map(|(&l, (&mean, &std))| (l, LabelIntensity { mean, std }))
                .collect(),
        }
    }
}

/// A synthetic scan in `[0, 1]` and its four SDF targets on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub image: VoxelGrid,
    /// In [`SDF_CHANNELS`] order.
    pub targets: [SdfGrid; 4],
    pub provenance: Provenance,
}

#[derive(Clone, Copy)]
enum Stage {
    Acquisition = 0,
    Deformation = 1,
    GmmParams = 2,
    Intensities = 3,
    Bias = 4,
    Noise = 5,
}

/// Each stage draws from its own ChaCha stream so changing one stage's
/// ranges leaves the others' draws untouched.
fn stage_rng(seed: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

/// Renders one training pair from a 1 mm isotropic label volume and its
/// four surface SDFs.
///
/// Pipeline: deformation of labels and SDFs together, GMM rendering on the
/// deformed labels, bias field, acquisition simulation, then min-max
/// rescale to `[0, 1]` (a constant image maps to all zeros). Targets are
/// re-clipped to at most 5 mm. The result depends only on the inputs,
/// `config` and `seed`.
pub fn generate_pair(labels: &VoxelGrid, sdfs: &[SdfGrid; 4], config: &SynthConfig, seed: u64) -> Result<TrainingPair> {
    config.validate()?;
    if labels.kind() != GridKind::Label && labels.kind() != GridKind::Mask {
        return Err(Error::Kind { expected: "label", found: labels.kind().name() });
    }
    if !labels.is_isotropic(1.0, 1e-6) {
        return Err(Error::Precondition(format!(
            "labels must be 1 mm isotropic (spacing {:?}); conform them first",
            labels.spacing()
        )));
    }

    let acquisition = match config.acquisition {
        Some(a) => a,
        None => acquisition::sample_acquisition_with(&mut stage_rng(seed, Stage::Acquisition)),
    };
    let deformation = DeformationParams::sample(&config.deformation, &mut stage_rng(seed, Stage::Deformation));
    let (warped_labels, warped_sdfs) = apply_deformation(labels, sdfs, &deformation)?;

    let gmm = sample_gmm(&labels_present(&warped_labels), &config.gmm, &mut stage_rng(seed, Stage::GmmParams));
    let rendered = render_intensities(&warped_labels, &gmm, &mut stage_rng(seed, Stage::Intensities))?;
    let biased = apply_bias(
        &rendered,
        config.bias_control_points,
        config.bias_log_amplitude,
        &mut stage_rng(seed, Stage::Bias),
    )?;
    let mut noise_rng = stage_rng(seed, Stage::Noise);
    let noise_std = if config.max_noise_std > 0.0 {
        rand::Rng::random_range(&mut noise_rng, 0.0..=config.max_noise_std)
    } else {
        0.0
    };
    let acquired = simulate_acquisition(&biased, &acquisition, noise_std, noise_rng.next_u64())?;

    let (lo, hi) = acquired
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v as f64), hi.max(v as f64)));
    let range = hi - lo;
    let image = acquired.with_data(
        acquired
            .data()
            .iter()
            .map(|&v| if range > 0.0 { ((v as f64 - lo) / range).clamp(0.0, 1.0) as f32 } else { 0.0 })
            .collect(),
        GridKind::Intensity,
    )?;

    let mut targets = Vec::with_capacity(4);
    for s in warped_sdfs {
        if s.clip_mm() <= DEFAULT_CLIP_MM {
            targets.push(s);
        } else {
            targets.push(SdfGrid::from_values(s.grid(), DEFAULT_CLIP_MM)?);
        }
    }
    let targets: [SdfGrid; 4] = targets.try_into().expect("four targets");

    let shape = labels.shape();
    let spacing = labels.spacing();
    let cells = (deformation.warp_lattice - 1) as f64;
    let provenance = Provenance {
        seed,
        orientation: acquisition.orientation,
        spacing_mm: acquisition.spacing_mm,
        thickness_mm: acquisition.thickness_mm,
        noise_std,
        rotation_deg: deformation.rotation_deg,
        scale: deformation.scale,
        translation_mm: deformation.translation_mm,
        warp_lattice: deformation.warp_lattice,
        warp_control_spacing_mm: [0, 1, 2].map(|a| (shape[a] - 1) as f64 * spacing[a] / cells),
        warp_mm: deformation.warp_mm,
        gmm_labels: gmm.labels.keys().copied().collect(),
        gmm_means: gmm.labels.values().map(|p| p.mean).collect(),
        gmm_stds: gmm.labels.values().map(|p| p.std).collect(),
        bias_control_points: config.bias_control_points,
        bias_log_amplitude: config.bias_log_amplitude,
        intensity_min: lo,
        intensity_max: hi,
    };
    Ok(TrainingPair { image, targets, provenance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{filter::gaussian_blur, Affine};
    use crate::Vec3;

    /// Nested spheres: label 2 inside r = 6, label 3 in the shell to r = 9,
    /// background 0; the SDFs are exact distances to the two spheres.
    pub(crate) fn phantom(n: usize) -> (VoxelGrid, [SdfGrid; 4]) {
        let c = Vec3::repeat((n as f64 - 1.0) / 2.0);
        let r = |i: usize, j: usize, k: usize| (Vec3::new(i as f64, j as f64, k as f64) - c).norm();
        let labels = VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Label, |i, j, k| {
            let d = r(i, j, k);
            if d < 6.0 {
                2.0
            } else if d < 9.0 {
                3.0
            } else {
                0.0
            }
        })
        .unwrap();
        let sdf = |radius: f64| {
            let g = VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Intensity, |i, j, k| {
                (r(i, j, k) - radius) as f32
            })
            .unwrap();
            SdfGrid::from_values(&g, 5.0).unwrap()
        };
        (labels, [sdf(6.0), sdf(9.0), sdf(6.0), sdf(9.0)])
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (l, s) = phantom(24);
        let cfg = SynthConfig::default();
        let a = generate_pair(&l, &s, &cfg, 11).unwrap();
        let b = generate_pair(&l, &s, &cfg, 11).unwrap();
        assert_eq!(a, b);
        let c = generate_pair(&l, &s, &cfg, 12).unwrap();
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn outputs_respect_bounds() {
        let (l, s) = phantom(20);
        let cfg = SynthConfig::default();
        for seed in 0..100 {
            let p = generate_pair(&l, &s, &cfg, seed).unwrap();
            p.provenance.acquisition().validate().unwrap();
            assert!(p.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
            for t in &p.targets {
                assert!(t.grid().same_geometry(&p.image));
                assert!(t.grid().data().iter().all(|v| v.abs() <= 5.0));
            }
        }
    }

    #[test]
    fn zero_amplitude_is_a_blurred_relabeling() {
        let (l, s) = phantom(32);
        let p = generate_pair(&l, &s, &SynthConfig::zero_amplitude(), 3).unwrap();
        assert_eq!(p.targets, s);
        let gmm = p.provenance.gmm();
        let means: Vec<f64> = gmm.labels.values().map(|v| v.mean).collect();
        let (lo, hi) = means.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| (a.min(m), b.max(m)));
        // The isotropic 1 mm acquisition still applies its FWHM-1 blur, so
        // only voxels with a uniform 5³ neighbourhood keep their exact mean.
        let relabeled: Vec<f64> = l.data().iter().map(|&v| gmm.labels[&(v as u32)].mean).collect();
        let blurred = gaussian_blur(&relabeled, l.shape(), 1.0 / crate::volume::filter::FWHM_TO_SIGMA);
        let [n, _, _] = l.shape();
        let mut checked = 0;
        for k in 2..n - 2 {
            for j in 2..n - 2 {
                for i in 2..n - 2 {
                    let here = l.get(i, j, k);
                    let uniform = (0..125).all(|q| {
                        let (di, dj, dk) = (q % 5, q / 5 % 5, q / 25);
                        l.get(i + di - 2, j + dj - 2, k + dk - 2) == here
                    });
                    let got = p.image.get(i, j, k) as f64;
                    let expected_blur = (blurred[l.index(i, j, k)] - lo) / (hi - lo);
                    assert!((got - expected_blur).abs() < 1e-4, "{got} vs {expected_blur}");
                    if uniform {
                        let want = (gmm.labels[&(here as u32)].mean - lo) / (hi - lo);
                        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn rejects_anisotropic_labels_and_bad_config() {
        let (l, s) = phantom(12);
        let aniso = VoxelGrid::new(
            l.shape(),
            l.data().to_vec(),
            Affine::from_spacing([1.0, 1.0, 2.0], Vec3::zeros()).unwrap(),
            GridKind::Label,
        )
        .unwrap();
        assert!(matches!(generate_pair(&aniso, &s, &SynthConfig::default(), 0), Err(Error::Precondition(_))));
        let cfg = SynthConfig { bias_control_points: 1, ..SynthConfig::default() };
        assert!(matches!(generate_pair(&l, &s, &cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn provenance_reconstructs_sampled_params() {
        let (l, s) = phantom(16);
        let p = generate_pair(&l, &s, &SynthConfig::default(), 5).unwrap();
        let d = p.provenance.deformation();
        let (l2, s2) = apply_deformation(&l, &s, &d).unwrap();
        assert_eq!(s2, p.targets);
        assert_eq!(labels_present(&l2), p.provenance.gmm_labels);
    }
}
