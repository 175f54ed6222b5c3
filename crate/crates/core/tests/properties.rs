use std::collections::HashSet;

use proptest::prelude::*;
use sketchlab::estimators::default_estimate;
use sketchlab::qr::QrPolicy;
use sketchlab::rank_domain::continuous_to_rank;
use sketchlab::*;

fn configs() -> Vec<SketchConfig> {
    vec![
        SketchConfig::kmins(8).unwrap(),
        SketchConfig::bottom_k(8).unwrap(),
        SketchConfig::k_partition(8).unwrap(),
        SketchConfig::hll(16).unwrap(),
    ]
}

fn sketch(config: SketchConfig, seed: u64, keys: &HashSet<u64>) -> Sketch {
    Sketch::of_set(config, Seed::from(seed), keys.iter().map(|k| k.to_le_bytes()))
}

proptest! {
    #[test]
    fn merge_is_union(
        u in prop::collection::hash_set(0u64..500, 0..80),
        v in prop::collection::hash_set(0u64..500, 0..80),
        seed: u64,
    ) {
        let both: HashSet<u64> = u.union(&v).copied().collect();
        for c in configs() {
            let su = sketch(c, seed, &u);
            let sv = sketch(c, seed, &v);
            let m = su.merge(&sv).unwrap();
            prop_assert_eq!(&m, &sketch(c, seed, &both));
            prop_assert_eq!(&m, &sv.merge(&su).unwrap());
            prop_assert_eq!(&su.merge(&su).unwrap(), &su);
        }
    }

    #[test]
    fn merge_is_associative(
        a in prop::collection::hash_set(any::<u64>(), 0..40),
        b in prop::collection::hash_set(any::<u64>(), 0..40),
        c in prop::collection::hash_set(any::<u64>(), 0..40),
    ) {
        for cfg in configs() {
            let (sa, sb, sc) = (sketch(cfg, 1, &a), sketch(cfg, 1, &b), sketch(cfg, 1, &c));
            prop_assert_eq!(sa.merge(&sb).unwrap().merge(&sc).unwrap(), sa.merge(&sb.merge(&sc).unwrap()).unwrap());
        }
    }

    #[test]
    fn serialization_round_trips(keys in prop::collection::hash_set(any::<u64>(), 0..60), seed: u64) {
        for c in configs() {
            let s = sketch(c, seed, &keys);
            prop_assert_eq!(Sketch::from_bytes(&s.to_bytes()).unwrap(), s);
        }
    }

    #[test]
    fn insertion_never_lowers_standard_estimates(
        keys in prop::collection::hash_set(any::<u64>(), 20..100),
        extra: u64,
    ) {
        for c in [SketchConfig::kmins(8).unwrap(), SketchConfig::bottom_k(8).unwrap()] {
            let s = sketch(c, 3, &keys);
            let t = s.clone().with_key(&extra.to_le_bytes());
            prop_assert!(default_estimate(&t).unwrap().value >= default_estimate(&s).unwrap().value);
        }
    }

    #[test]
    fn symmetric_map_ignores_order(y in prop::collection::vec(1u32..400, 16), shuffle_seed: u64) {
        let p = QrPolicy::symmetric(256.0, 16).unwrap();
        let mut z = y.clone();
        let len = z.len();
        // deterministic Fisher-Yates from the seed
        let mut s = shuffle_seed;
        for i in (1..len).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            z.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(p.symmetric_probability(&y, 4096), p.symmetric_probability(&z, 4096));
    }

    #[test]
    fn symmetric_map_is_monotone(y in prop::collection::vec(1u32..400, 16), bump in prop::collection::vec(0u32..50, 16)) {
        // S1 <= S2 coordinate-wise implies pi(S1) >= pi(S2)
        let p = QrPolicy::symmetric(256.0, 16).unwrap();
        let y2: Vec<u32> = y.iter().zip(&bump).map(|(a, b)| a + b).collect();
        prop_assert!(p.symmetric_probability(&y, 4096) >= p.symmetric_probability(&y2, 4096));
    }

    #[test]
    fn continuous_to_rank_is_monotone(y in prop::collection::vec(0.0f64..1e4, 1..20), d in prop::collection::vec(0.0f64..10.0, 20)) {
        let bigger: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + b).collect();
        let a = continuous_to_rank(&y).unwrap();
        let b = continuous_to_rank(&bigger).unwrap();
        prop_assert!(a.y.iter().zip(&b.y).all(|(x, z)| x <= z));
        prop_assert!(a.y.iter().all(|&v| v >= 1));
    }

    #[test]
    fn index_set_matches_hash_set(ops in prop::collection::vec(0u32..300, 0..200)) {
        let mut s = IndexSet::new(300);
        let mut model = HashSet::new();
        for x in ops {
            prop_assert_eq!(s.insert(x), model.insert(x));
        }
        prop_assert_eq!(s.len(), model.len());
        prop_assert!((0..300).all(|x| s.contains(x) == model.contains(&x)));
    }
}
