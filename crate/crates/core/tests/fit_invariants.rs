//! Properties of the surface optimizer checked on small random instances.

use cortexforge::fit::{energy_and_gradient, fit_pial, fit_surface, init_surface};
use cortexforge::mesh::{detect_self_intersections, detect_self_intersections_brute, icosphere, validate};
use cortexforge::metrics::{thickness, ThicknessMode};
use cortexforge::{Affine, FitConfig, GridKind, SdfGrid, TriangleMesh, Vec3, VoxelGrid};
use proptest::prelude::*;

fn sphere_sdf(n: usize, c: Vec3, r: f64) -> SdfGrid {
    let g = VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Intensity, |i, j, k| {
        ((Vec3::new(i as f64, j as f64, k as f64) - c).norm() - r) as f32
    })
    .unwrap();
    SdfGrid::from_values(&g, 5.0).unwrap()
}

fn jittered_sphere(c: Vec3, r: f64, subdivisions: usize, jitter: &[f64]) -> TriangleMesh {
    let mut m = icosphere(c, r, subdivisions);
    for (v, j) in m.vertices.iter_mut().zip(jitter.iter().cycle()) {
        *v = c + (*v - c) * (1.0 + j);
    }
    m
}

fn mean_radius(m: &TriangleMesh, c: Vec3) -> f64 {
    m.vertices.iter().map(|v| (v - c).norm()).sum::<f64>() / m.vertex_count() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fits_stay_intersection_free_and_keep_topology(
        r0 in 4.0f64..9.0,
        target in 5.0f64..9.0,
        sub in 1usize..=2,
        iters in 1usize..40,
        jitter in proptest::collection::vec(-0.03f64..0.03, 16),
    ) {
        let c = Vec3::repeat(11.5);
        let sdf = sphere_sdf(24, c, target);
        let init = jittered_sphere(c, r0, sub, &jitter);
        prop_assume!(detect_self_intersections_brute(&init).is_empty());
        let cfg = FitConfig { max_iters: iters, ..FitConfig::default() };
        let (out, report) = fit_surface(&init, &sdf, &cfg).unwrap();
        prop_assert!(detect_self_intersections_brute(&out).is_empty());
        prop_assert_eq!(&out.faces, &init.faces);
        prop_assert_eq!(out.vertex_count(), init.vertex_count());
        let (before, after) = (validate(&init), validate(&out));
        prop_assert_eq!(before.euler_characteristic, after.euler_characteristic);
        prop_assert_eq!(after.genus, 0);
        prop_assert!(report.iterations_run <= iters);
    }

    #[test]
    fn accepted_energy_never_increases(
        r0 in 5.0f64..8.0,
        sub in 1usize..=2,
        jitter in proptest::collection::vec(-0.03f64..0.03, 16),
    ) {
        let c = Vec3::repeat(11.5);
        let sdf = sphere_sdf(24, c, 7.0);
        let init = jittered_sphere(c, r0, sub, &jitter);
        prop_assume!(detect_self_intersections_brute(&init).is_empty());
        let mut last = energy_and_gradient(&init, &sdf, &FitConfig::default()).unwrap().0;
        // The optimizer is deterministic, so a k-iteration run is a prefix
        // of a (k+1)-iteration run.
        for k in 1..=12 {
            let cfg = FitConfig { max_iters: k, ..FitConfig::default() };
            let (_, report) = fit_surface(&init, &sdf, &cfg).unwrap();
            prop_assert!(report.final_energy <= last + 1e-12, "iteration {k}: {} > {last}", report.final_energy);
            last = report.final_energy;
            if report.converged {
                break;
            }
        }
    }
}

#[test]
fn stronger_normal_springs_increase_residual_on_sphere_benchmark() {
    let c = Vec3::repeat(31.5);
    let sdf = sphere_sdf(64, c, 20.0);
    let init = icosphere(c, 15.0, 4);
    let base = FitConfig::default();
    let (_, weak) = fit_surface(&init, &sdf, &base).unwrap();
    let strong_cfg = FitConfig { lambda1: base.lambda1 * 10.0, ..base };
    let (_, strong) = fit_surface(&init, &sdf, &strong_cfg).unwrap();
    assert!(
        strong.final_mean_abs_sdf_mm > weak.final_mean_abs_sdf_mm,
        "{} <= {}",
        strong.final_mean_abs_sdf_mm,
        weak.final_mean_abs_sdf_mm
    );
}

#[test]
fn pial_fit_preserves_correspondence_and_radius() {
    let c = Vec3::repeat(31.5);
    let (wm, _) = fit_surface(&icosphere(c, 17.0, 4), &sphere_sdf(64, c, 20.0), &FitConfig::default()).unwrap();
    let (pial, _) = fit_pial(&wm, &sphere_sdf(64, c, 22.5), &FitConfig::default()).unwrap();
    assert_eq!(pial.faces, wm.faces);
    assert!((mean_radius(&pial, c) - 22.5).abs() < 0.2);
    let t = thickness(&wm, &pial, ThicknessMode::Correspondence).unwrap();
    assert_eq!(t.len(), wm.vertex_count());
}

#[test]
fn mask_to_fitted_surface() {
    let n = 40;
    let c = Vec3::repeat(19.5);
    let mask = VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Mask, |i, j, k| {
        let p = Vec3::new(i as f64, j as f64, k as f64);
        f32::from((p - c).norm() < 10.0)
    })
    .unwrap();
    let init = init_surface(&mask).unwrap();
    assert!(validate(&init).is_sphere_like());
    let sdf = sphere_sdf(n, c, 11.0);
    let (fitted, report) = fit_surface(&init, &sdf, &FitConfig::default()).unwrap();
    assert!(report.final_mean_abs_sdf_mm < 0.1, "{report:?}");
    assert!(detect_self_intersections(&fitted).is_empty());
    assert!(validate(&fitted).is_sphere_like());
    assert!((mean_radius(&fitted, c) - 11.0).abs() < 0.2);
}
