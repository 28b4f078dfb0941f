use nalgebra::Matrix3;
use rayon::prelude::*;

use super::energy::{energy_with_frames, gradient_with_frames, mean_abs_sdf, spring_metric};
use super::{FitConfig, FitReport};
use crate::mesh::{detect_self_intersections, validate, vertex_frames, TriangleMesh};
use crate::sdf::SdfGrid;
use crate::{Error, Result, Vec3, VertexFrame};

/// Iterations over which the relative energy decrease is averaged.
pub const CONVERGENCE_WINDOW: usize = 10;

/// Preconditioned gradient descent on the placement energy that never
/// accepts a self-intersecting state.
///
/// Each iteration recomputes the vertex frames and takes the frozen-frame
/// gradient. Every vertex's gradient is divided by a scalar curvature
/// estimate (the Gauss-Newton curvature of its fidelity term plus the
/// diagonal of its springs) and the resulting displacement is clamped to
/// `step_mm`. Far from the surface, where `tanh` saturates and the raw
/// gradient is tiny, vertices therefore still move a full step; near it the
/// update approaches a Newton step onto the zero level set. A proposal that
/// intersects itself or raises the energy is retried at half the step.
/// Once the halvings are used up, vertices of faces that still intersect
/// are held in place for that iteration; if the energy still rises, the
/// mesh stays where it is. Iteration stops when the relative energy
/// decrease, averaged over the last [`CONVERGENCE_WINDOW`] iterations,
/// falls below `converge_rel_tol`, when no step can be taken, or
/// at `max_iters`.
pub fn fit_surface(initial: &TriangleMesh, sdf: &SdfGrid, config: &FitConfig) -> Result<(TriangleMesh, FitReport)> {
    config.validate()?;
    check_initial(initial)?;
    let neighbors = initial.neighbors();
    let mut mesh = initial.clone();
    let mut frames = vertex_frames(&mesh)?;
    let mut energy = energy_with_frames(&mesh.vertices, &neighbors, &frames, sdf, config);
    let mut history = vec![energy];
    let mut report = FitReport {
        iterations_run: 0,
        final_energy: energy,
        final_mean_abs_sdf_mm: 0.0,
        self_intersection_events: 0,
        converged: false,
        frozen_vertices: 0,
    };

    for iter in 0..config.max_iters {
        report.iterations_run = iter + 1;
        let (e_frozen, grad) = gradient_with_frames(&mesh.vertices, &neighbors, &frames, sdf, config);
        debug_assert!((e_frozen - energy).abs() <= 1e-9 * energy.abs().max(1.0));
        let gmax = grad.iter().map(|g| g.norm()).fold(0.0, f64::max);
        log::debug!("iter {iter} energy {energy:.9} max|grad| {gmax:.3e}");
        if gmax == 0.0 {
            report.converged = true;
            break;
        }
        let direction = preconditioned_direction(&mesh, &grad, &neighbors, &frames, sdf, config);

        let mut step = 1.0; // fraction of the preconditioned displacement
        let mut accepted: Option<(TriangleMesh, Vec<VertexFrame>, f64)> = None;
        let mut last_intersecting = false;
        for _ in 0..=config.max_step_halvings_per_iter {
            let proposal = displaced(&mesh, &direction, step, &[]);
            if !detect_self_intersections(&proposal).is_empty() {
                report.self_intersection_events += 1;
                last_intersecting = true;
                step *= 0.5;
                continue;
            }
            last_intersecting = false;
            if let Some((f, e)) = evaluate(&proposal, &neighbors, sdf, config) {
                if e <= energy {
                    accepted = Some((proposal, f, e));
                    break;
                }
            }
            step *= 0.5;
        }
        if accepted.is_none() && last_intersecting {
            // undo the halving that had no proposal behind it
            step *= 2.0;
            if let Some((proposal, frozen)) = freeze_offenders(&mesh, &direction, step) {
                report.frozen_vertices += frozen;
                if let Some((f, e)) = evaluate(&proposal, &neighbors, sdf, config) {
                    if e <= energy {
                        accepted = Some((proposal, f, e));
                    }
                }
            }
        }

        let Some((next, next_frames, next_energy)) = accepted else {
            log::debug!("iter {iter}: no admissible step, stopping");
            report.converged = true;
            break;
        };
        mesh = next;
        frames = next_frames;
        energy = next_energy;
        history.push(energy);
        // Mean decrease over a trailing window, so a slow stretch (such as
        // leaving the band where tanh saturates) does not end the fit.
        if history.len() > CONVERGENCE_WINDOW {
            let before = history[history.len() - 1 - CONVERGENCE_WINDOW];
            let mean_decrease = (before - energy) / CONVERGENCE_WINDOW as f64;
            if mean_decrease <= config.converge_rel_tol * before.abs() {
                report.converged = true;
                break;
            }
        }
    }

    report.final_energy = energy;
    report.final_mean_abs_sdf_mm = mean_abs_sdf(&mesh, sdf);
    Ok((mesh, report))
}

/// Fits the pial surface starting from the white-matter mesh; vertex
/// correspondence with the input is preserved.
pub fn fit_pial(wm_mesh: &TriangleMesh, pial_sdf: &SdfGrid, config: &FitConfig) -> Result<(TriangleMesh, FitReport)> {
    fit_surface(wm_mesh, pial_sdf, config)
}

fn check_initial(mesh: &TriangleMesh) -> Result<()> {
    if mesh.is_empty() {
        return Err(Error::EmptySurface("cannot fit an empty mesh".into()));
    }
    let d = validate(mesh);
    if !d.is_sphere_like() {
        return Err(Error::Precondition(format!(
            "initial mesh must be a closed oriented genus-0 surface (manifold {}, oriented {}, components {}, genus {})",
            d.manifold, d.oriented, d.components, d.genus
        )));
    }
    let hits = detect_self_intersections(mesh);
    if !hits.is_empty() {
        return Err(Error::Precondition(format!(
            "initial mesh has {} self-intersecting face pairs",
            hits.len()
        )));
    }
    Ok(())
}

fn displaced(mesh: &TriangleMesh, direction: &[Vec3], step: f64, frozen: &[bool]) -> TriangleMesh {
    let vertices = mesh
        .vertices
        .iter()
        .zip(direction)
        .enumerate()
        .map(|(v, (x, d))| if frozen.get(v).copied().unwrap_or(false) { *x } else { x + d * step })
        .collect();
    TriangleMesh { vertices, faces: mesh.faces.clone() }
}

/// Per-vertex displacement `−C_v⁻¹ g_v`, clamped to `step_mm`.
///
/// With `a = 2 tanh'(D)²` the Gauss-Newton weight of the vertex's fidelity
/// term and `H_v = Σ_u 2 (M_v + M_u)` its own spring Hessian block:
///
/// * near the surface, where `a |∇D|²` exceeds the mean diagonal of `2 H_v`,
///   `C_v = a ∇D ∇Dᵀ + 2 H_v` (damped block Jacobi). The stiff fidelity
///   direction gets a Newton-like step while the soft tangential spring
///   modes still relax at a useful rate;
/// * elsewhere `C_v = (a |∇D|² + tr(H_v) / 3) I`. In the band where `tanh`
///   saturates a block preconditioner inflates tangential spring forces,
///   and after clamping they slide vertices sideways until the mesh folds;
///   a scalar keeps the gradient's direction.
///
/// `C_v` is symmetric positive definite whenever a weight is positive, so
/// the displacement is always a descent direction.
fn preconditioned_direction(
    mesh: &TriangleMesh,
    grad: &[Vec3],
    neighbors: &[Vec<usize>],
    frames: &[VertexFrame],
    sdf: &SdfGrid,
    config: &FitConfig,
) -> Vec<Vec3> {
    let metrics: Vec<Matrix3<f64>> = frames.iter().map(|f| spring_metric(f, config)).collect();
    mesh.vertices
        .par_iter()
        .enumerate()
        .map(|(v, x)| {
            let (d, dd) = sdf.sample_with_gradient(x);
            let sech2 = 1.0 - d.tanh().powi(2);
            let fidelity = 2.0 * sech2 * sech2;
            let mut springs = Matrix3::zeros();
            for &u in &neighbors[v] {
                springs += (metrics[v] + metrics[u]) * 4.0;
            }
            let spring_scale = springs.trace() / 3.0;
            let c = if fidelity * dd.norm_squared() >= spring_scale {
                dd * dd.transpose() * fidelity + springs
            } else {
                Matrix3::identity() * (fidelity * dd.norm_squared() + spring_scale / 2.0)
            };
            let Some(inv) = c.try_inverse() else {
                return Vec3::zeros();
            };
            let delta = -(inv * grad[v]);
            let len = delta.norm();
            if !len.is_finite() {
                Vec3::zeros()
            } else if len > config.step_mm {
                delta * (config.step_mm / len)
            } else {
                delta
            }
        })
        .collect()
}

/// Holds the vertices of intersecting faces in place until the proposal is
/// intersection-free. Returns the proposal and the number of frozen
/// vertices, or `None` if every vertex ended up frozen.
fn freeze_offenders(mesh: &TriangleMesh, direction: &[Vec3], step: f64) -> Option<(TriangleMesh, usize)> {
    let mut frozen = vec![false; mesh.vertex_count()];
    let mut count = 0;
    loop {
        let proposal = displaced(mesh, direction, step, &frozen);
        let hits = detect_self_intersections(&proposal);
        if hits.is_empty() {
            return (count < mesh.vertex_count()).then_some((proposal, count));
        }
        let before = count;
        for (a, b) in hits {
            for f in [a, b] {
                for &v in &mesh.faces[f] {
                    if !frozen[v] {
                        frozen[v] = true;
                        count += 1;
                    }
                }
            }
        }
        if count == before {
            // only reachable if the accepted state itself intersects
            return None;
        }
    }
}

fn evaluate(
    mesh: &TriangleMesh,
    neighbors: &[Vec<usize>],
    sdf: &SdfGrid,
    config: &FitConfig,
) -> Option<(Vec<VertexFrame>, f64)> {
    let frames = vertex_frames(mesh).ok()?;
    let e = energy_with_frames(&mesh.vertices, neighbors, &frames, sdf, config);
    e.is_finite().then_some((frames, e))
}
