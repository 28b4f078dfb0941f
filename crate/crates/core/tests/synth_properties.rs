//! Properties of the training-pair generator over arbitrary seeds.

use cortexforge::synth::{
    generate_pair, load_shard, sample_acquisition, write_shard, DeformationParams, DeformationRanges, SynthConfig,
    SDF_CHANNELS,
};
use cortexforge::{Affine, GridKind, Orientation, SdfGrid, Vec3, VoxelGrid};
use proptest::prelude::*;
use rand::SeedableRng;

fn phantom(n: usize) -> (VoxelGrid, [SdfGrid; 4]) {
    let c = Vec3::repeat((n as f64 - 1.0) / 2.0);
    let r = |i: usize, j: usize, k: usize| (Vec3::new(i as f64, j as f64, k as f64) - c).norm();
    let labels = VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Label, |i, j, k| match r(i, j, k) {
        d if d < 5.0 => 2.0,
        d if d < 7.5 => 3.0,
        _ => 0.0,
    })
    .unwrap();
    let sdf = |radius: f64| {
        let g = VoxelGrid::from_fn([n, n, n], Affine::identity(), GridKind::Intensity, |i, j, k| {
            (r(i, j, k) - radius) as f32
        })
        .unwrap();
        SdfGrid::from_values(&g, 5.0).unwrap()
    };
    (labels, [sdf(5.0), sdf(7.5), sdf(5.0), sdf(7.5)])
}

proptest! {
    #[test]
    fn acquisition_draws_respect_bounds(seed in any::<u64>()) {
        let a = sample_acquisition(seed);
        prop_assert!(a.validate().is_ok());
        prop_assert!((1.0..=9.0).contains(&a.spacing_mm));
        prop_assert!(a.thickness_mm >= 1.0 && a.thickness_mm <= a.spacing_mm);
        if a.orientation == Orientation::Isotropic {
            prop_assert_eq!((a.spacing_mm, a.thickness_mm), (1.0, 1.0));
        }
        prop_assert_eq!(a, sample_acquisition(seed));
    }

    #[test]
    fn sampled_deformations_respect_ranges(seed in any::<u64>()) {
        let ranges = DeformationRanges::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = DeformationParams::sample(&ranges, &mut rng);
        prop_assert!(p.validate().is_ok());
        prop_assert!(p.scale.iter().all(|s| (ranges.min_scale..=ranges.max_scale).contains(s)));
        prop_assert!(p.warp_mm.iter().flatten().all(|d| d.abs() <= ranges.max_warp_mm));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pairs_are_normalised_and_replayable(seed in any::<u64>()) {
        let (labels, sdfs) = phantom(20);
        let cfg = SynthConfig::default();
        let pair = generate_pair(&labels, &sdfs, &cfg, seed).unwrap();
        prop_assert!(pair.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(pair.image.shape(), labels.shape());
        prop_assert!(pair.image.is_isotropic(1.0, 1e-9));
        for t in &pair.targets {
            prop_assert!(t.grid().same_geometry(&pair.image));
            prop_assert!(t.clip_mm() <= 5.0);
            prop_assert!(t.grid().data().iter().all(|v| v.abs() <= 5.0));
        }
        prop_assert_eq!(pair.provenance.seed, seed);
        prop_assert_eq!(&pair, &generate_pair(&labels, &sdfs, &cfg, seed).unwrap());
    }
}

#[test]
fn shard_layout_matches_trainer_contract() {
    let (labels, sdfs) = phantom(16);
    let out = tempfile::tempdir().unwrap();
    for seed in [3u64, 1_000_000_007] {
        let pair = generate_pair(&labels, &sdfs, &SynthConfig::default(), seed).unwrap();
        let dir = write_shard(&pair, out.path()).unwrap();
        assert_eq!(dir, out.path().join(seed.to_string()));
        assert!(dir.join("image.nii.gz").is_file());
        for ch in SDF_CHANNELS {
            assert!(dir.join(format!("sdf_{ch}.nii.gz")).is_file());
        }
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("provenance.json")).unwrap()).unwrap();
        assert!(json.as_object().unwrap().values().all(|v| !v.is_object()));
        assert_eq!(load_shard(&dir).unwrap(), pair);
    }
}
