use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::lattice::Lattice;
use crate::volume::{GridKind, VoxelGrid};
use crate::{Error, Result};

/// Mean and standard deviation of one label's intensity distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelIntensity {
    pub mean: f64,
    pub std: f64,
}

/// Per-label Gaussian intensity model, keyed by integer label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub labels: BTreeMap<u32, LabelIntensity>,
}

/// Prior ranges for sampling [`GmmParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmPrior {
    pub mean_min: f64,
    pub mean_max: f64,
    pub std_min: f64,
    pub std_max: f64,
}

impl Default for GmmPrior {
    fn default() -> Self {
        GmmPrior { mean_min: 0.0, mean_max: 255.0, std_min: 1.0, std_max: 25.0 }
    }
}

impl GmmPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean_min <= self.mean_max && 0.0 <= self.std_min && self.std_min <= self.std_max) {
            return Err(Error::Config(format!("invalid GMM prior {self:?}")));
        }
        Ok(())
    }
}

/// Distinct labels of a label grid, ascending.
pub fn labels_present(labels: &VoxelGrid) -> Vec<u32> {
    let mut seen: Vec<u32> = labels.data().iter().map(|&v| v as u32).collect();
    seen.sort_unstable();
    seen.dedup();
    seen
}

/// Draws one mean and std per label in ascending label order.
pub fn sample_gmm(labels: &[u32], prior: &GmmPrior, rng: &mut impl Rng) -> GmmParams {
    let draw = |rng: &mut dyn rand::RngCore, lo: f64, hi: f64| if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let labels = labels
        .iter()
        .map(|&l| {
            let mean = draw(rng, prior.mean_min, prior.mean_max);
            let std = draw(rng, prior.std_min, prior.std_max);
            (l, LabelIntensity { mean, std })
        })
        .collect();
    GmmParams { labels }
}

/// Independent per-voxel draws from the label's Gaussian, truncated at 0.
///
/// Negative draws are clamped to 0 rather than redrawn.
pub fn render_intensities(labels: &VoxelGrid, gmm: &GmmParams, rng: &mut impl Rng) -> Result<VoxelGrid> {
    if labels.kind() != GridKind::Label && labels.kind() != GridKind::Mask {
        return Err(Error::Kind { expected: "label", found: labels.kind().name() });
    }
    let mut dists = BTreeMap::new();
    for l in labels_present(labels) {
        let p = gmm
            .labels
            .get(&l)
            .ok_or_else(|| Error::Config(format!("no GMM parameters for label {l}")))?;
        if !(p.std >= 0.0 && p.mean.is_finite() && p.std.is_finite()) {
            return Err(Error::Config(format!("invalid GMM parameters for label {l}: {p:?}")));
        }
        dists.insert(l, Normal::new(p.mean, p.std).map_err(|e| Error::Config(e.to_string()))?);
    }
    let data = labels
        .data()
        .iter()
        .map(|&v| dists[&(v as u32)].sample(rng).max(0.0) as f32)
        .collect();
    labels.with_data(data, GridKind::Intensity)
}

/// Multiplies `image` by `exp(B)`, `B` the trilinear interpolation of an
/// `n³` lattice of Uniform[−a, a] values spread over the grid.
pub fn apply_bias(image: &VoxelGrid, control_grid_size: usize, log_amplitude: f64, rng: &mut impl Rng) -> Result<VoxelGrid> {
    if control_grid_size < 2 {
        return Err(Error::Precondition("bias lattice needs at least 2 control points per axis".into()));
    }
    if !(log_amplitude >= 0.0 && log_amplitude.is_finite()) {
        return Err(Error::Precondition(format!("bias log amplitude {log_amplitude} must be non-negative")));
    }
    let n = control_grid_size;
    let values: Vec<f64> = (0..n * n * n)
        .map(|_| if log_amplitude > 0.0 { rng.random_range(-log_amplitude..=log_amplitude) } else { 0.0 })
        .collect();
    if log_amplitude == 0.0 {
        return Ok(image.clone());
    }
    let field = Lattice { n, values };
    let shape = image.shape();
    let mut out = image.clone();
    for k in 0..shape[2] {
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                let b = field.sample([i as f64, j as f64, k as f64], shape);
                let idx = image.index(i, j, k);
                out.data_mut()[idx] = (image.data()[idx] as f64 * b.exp()) as f32;
            }
        }
    }
    Ok(out)
}
