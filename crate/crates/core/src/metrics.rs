//! Surface distances, cortical thickness proxies and mask overlap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mesh::TriangleMesh;
use crate::sdf::MeshDistance;
use crate::volume::VoxelGrid;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AToB,
    BToA,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDistanceStats {
    pub mean_abs_mm: f64,
    pub rms_mm: f64,
    pub hausdorff_mm: f64,
    pub p95_mm: f64,
    pub direction: Direction,
}

/// Fixed barycentric sample pattern (a 2D additive recurrence warped onto
/// the triangle), so results need no seed.
fn barycentric_samples(n: usize) -> Vec<[f64; 3]> {
    const A1: f64 = 0.754_877_666_246_692_8;
    const A2: f64 = 0.569_840_290_998_053_2;
    (0..n)
        .map(|k| {
            let r1 = (0.5 + A1 * k as f64).fract();
            let r2 = (0.5 + A2 * k as f64).fract();
            let s = r1.sqrt();
            [1.0 - s, s * (1.0 - r2), s * r2]
        })
        .collect()
}

/// Distances from area-weighted samples on `from` to the surface `to`, as
/// `(distance, weight)` with weights summing to one.
fn directed_samples(from: &TriangleMesh, to: &TriangleMesh, samples_per_face: usize) -> Vec<(f64, f64)> {
    let pattern = barycentric_samples(samples_per_face);
    let total_area = from.surface_area();
    let md = MeshDistance::new(to);
    let per_face: Vec<Vec<(f64, f64)>> = (0..from.face_count())
        .into_par_iter()
        .map(|f| {
            let [a, b, c] = from.triangle(f);
            let w = if total_area > 0.0 {
                from.face_area(f) / total_area / samples_per_face as f64
            } else {
                1.0 / (from.face_count() * samples_per_face) as f64
            };
            pattern
                .iter()
                .map(|l| {
                    let p: Vec3 = a * l[0] + b * l[1] + c * l[2];
                    (md.unsigned_distance(&p), w)
                })
                .collect()
        })
        .collect();
    per_face.into_iter().flatten().collect()
}

fn weighted_quantile(samples: &mut [(f64, f64)], q: f64) -> f64 {
    samples.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let mut acc = 0.0;
    for &(d, w) in samples.iter() {
        acc += w;
        if acc >= q * total {
            return d;
        }
    }
    samples.last().map_or(0.0, |s| s.0)
}

struct Moments {
    mean: f64,
    mean_sq: f64,
    max: f64,
}

fn moments(samples: &[(f64, f64)]) -> Moments {
    let total: f64 = samples.iter().map(|s| s.1).sum();
    Moments {
        mean: samples.iter().map(|(d, w)| d * w).sum::<f64>() / total,
        mean_sq: samples.iter().map(|(d, w)| d * d * w).sum::<f64>() / total,
        max: samples.iter().map(|s| s.0).fold(0.0, f64::max),
    }
}

/// Point-to-surface distance statistics between two meshes.
///
/// `samples_per_face` points are placed on every face and weighted by face
/// area. In symmetric mode the mean is the average of both directed means,
/// the RMS combines both mean squares, the Hausdorff distance is the larger
/// one and the 95th percentile is taken over both sample sets pooled with
/// equal total weight.
pub fn surface_distance(
    a: &TriangleMesh,
    b: &TriangleMesh,
    samples_per_face: usize,
    direction: Direction,
) -> Result<SurfaceDistanceStats> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySurface("surface distance needs two non-empty meshes".into()));
    }
    if samples_per_face == 0 {
        return Err(Error::Precondition("samples_per_face must be positive".into()));
    }
    let stats = |mut s: Vec<(f64, f64)>| {
        let m = moments(&s);
        SurfaceDistanceStats {
            mean_abs_mm: m.mean,
            rms_mm: m.mean_sq.sqrt(),
            hausdorff_mm: m.max,
            p95_mm: weighted_quantile(&mut s, 0.95),
            direction,
        }
    };
    Ok(match direction {
        Direction::AToB => stats(directed_samples(a, b, samples_per_face)),
        Direction::BToA => stats(directed_samples(b, a, samples_per_face)),
        Direction::Symmetric => {
            let ab = directed_samples(a, b, samples_per_face);
            let ba = directed_samples(b, a, samples_per_face);
            let (ma, mb) = (moments(&ab), moments(&ba));
            let mut pooled: Vec<(f64, f64)> = ab.into_iter().chain(ba).collect();
            SurfaceDistanceStats {
                mean_abs_mm: (ma.mean + mb.mean) / 2.0,
                rms_mm: ((ma.mean_sq + mb.mean_sq) / 2.0).sqrt(),
                hausdorff_mm: ma.max.max(mb.max),
                p95_mm: weighted_quantile(&mut pooled, 0.95),
                direction,
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThicknessMode {
    /// Distance between corresponding vertices.
    Correspondence,
    /// Mean of the white-to-pial distance and the distance from that pial
    /// point back to the white surface.
    ClosestPointSymmetric,
}

/// Per-vertex thickness on the white-matter mesh.
pub fn thickness(wm: &TriangleMesh, pial: &TriangleMesh, mode: ThicknessMode) -> Result<Vec<f64>> {
    match mode {
        ThicknessMode::Correspondence => {
            if wm.vertex_count() != pial.vertex_count() || wm.faces != pial.faces {
                return Err(Error::Contract(format!(
                    "correspondence thickness needs identical connectivity ({} vs {} vertices, faces equal: {})",
                    wm.vertex_count(),
                    pial.vertex_count(),
                    wm.faces == pial.faces
                )));
            }
            Ok(wm.vertices.iter().zip(&pial.vertices).map(|(a, b)| (a - b).norm()).collect())
        }
        ThicknessMode::ClosestPointSymmetric => {
            if wm.is_empty() || pial.is_empty() {
                return Err(Error::EmptySurface("thickness needs two non-empty meshes".into()));
            }
            let to_pial = MeshDistance::new(pial);
            let to_wm = MeshDistance::new(wm);
            Ok(wm
                .vertices
                .par_iter()
                .map(|x| {
                    let c = to_pial.closest(x).expect("pial mesh is non-empty");
                    0.5 * (c.distance + to_wm.unsigned_distance(&c.point))
                })
                .collect())
        }
    }
}

/// Dice overlap of the non-zero voxels of two grids; 1 when both are empty.
pub fn mask_dice(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Contract(format!(
            "Dice needs equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x != 0.0, y != 0.0);
        na += usize::from(x);
        nb += usize::from(y);
        both += usize::from(x && y);
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}
