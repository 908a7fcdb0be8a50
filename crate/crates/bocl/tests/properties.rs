use bocl::config::overlay;
use bocl::dataset::time_align;
use bocl::simulator::NoiseModel;
use proptest::prelude::*;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #[test]
    fn alignment_is_one_to_one_within_tolerance(
        a in prop::collection::vec(0.0f64..20.0, 0..60).prop_map(sorted),
        b in prop::collection::vec(0.0f64..20.0, 0..60).prop_map(sorted),
        tol in 0.001f64..0.5,
    ) {
        let r = time_align(&a, &b, tol);
        let mut used_a = vec![false; a.len()];
        let mut used_b = vec![false; b.len()];
        for p in &r.pairs {
            prop_assert!(!used_a[p.a] && !used_b[p.b]);
            used_a[p.a] = true;
            used_b[p.b] = true;
            prop_assert!(p.residual.abs() <= tol);
            prop_assert_eq!(p.residual, b[p.b] - a[p.a]);
        }
        prop_assert!(r.pairs.windows(2).all(|w| a[w[0].a] <= a[w[1].a]));
        prop_assert_eq!(r.unpaired_a, a.len() - r.pairs.len());
        prop_assert_eq!(r.unpaired_b, b.len() - r.pairs.len());
    }

    #[test]
    fn empty_overlay_is_identity(sigma in 0.0f64..5.0, rate in 0.0f64..3.0, seed in 0u64..1 << 40) {
        let base = NoiseModel { pixel_noise_sigma: sigma, distractor_rate: rate, rng_seed: seed, ..NoiseModel::default() };
        prop_assert_eq!(overlay(&base, &toml::Table::new()).unwrap(), base);
    }
}
