use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sketchlab::attacks::*;
use sketchlab::estimators::hll_config_from_epsilon;
use sketchlab::experiments::{generate_ground_set, symmetric_budget};
use sketchlab::qr::*;
use sketchlab::rank_domain::{partition_keys, Observation};
use sketchlab::sketch::Registers;
use sketchlab::*;

fn ground(config: SketchConfig, n: usize, seed: u64) -> GroundSet {
    let keys = generate_ground_set(n, 10, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    GroundSet::new(keys, config, Seed::from(seed).derive(1)).unwrap()
}

#[test]
fn standard_attack_rejects_empty_budget() {
    let g = ground(SketchConfig::kmins(8).unwrap(), 100, 0);
    assert!(run_standard_attack(&InverseEstimate, &g, 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}

#[test]
fn ordering_is_a_permutation_with_unscored_last() {
    let g = ground(SketchConfig::kmins(8).unwrap(), 300, 1);
    let res = run_standard_attack(&InverseEstimate, &g, 3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let idx: HashSet<u32> = res.ordering.iter().map(|s| s.index).collect();
    assert_eq!(idx.len(), 300);
    let first_unscored = res.ordering.iter().position(|s| s.count == 0).unwrap();
    assert!(res.ordering[first_unscored..].iter().all(|s| s.count == 0));
    assert!(res.ordering[..first_unscored].windows(2).all(|w| w[0].score <= w[1].score));
    assert_eq!(res.warnings.len(), 1);
    assert_eq!(res.transcript.len(), 3);
}

#[test]
fn single_query_prefixes_stay_accurate() {
    // one query carries no information about individual keys
    let g = ground(hll_config_from_epsilon(0.1).unwrap(), 5000, 2);
    let res = run_standard_attack(&InverseEstimate, &g, 1, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    for m in (208..=5000).step_by(400) {
        let prefix = adversarial_set(&res, m as f64 / 5000.0, Direction::Prefix).unwrap();
        let b = measure_bias_in(&g, &prefix).unwrap();
        assert!((b.ratio - 1.0).abs() <= 0.3, "prefix {m}: {}", b.ratio);
    }
}

#[test]
fn hll_attack_biases_both_directions() {
    let g = ground(hll_config_from_epsilon(0.1).unwrap(), 5000, 3);
    let res = run_standard_attack(&InverseEstimate, &g, 4096, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let up = measure_bias_in(&g, &adversarial_set(&res, 0.1, Direction::Prefix).unwrap()).unwrap();
    let down = measure_bias_in(&g, &adversarial_set(&res, 0.1, Direction::Suffix).unwrap()).unwrap();
    assert!(up.ratio >= 1.4, "{up:?}");
    assert!(down.ratio <= 0.7, "{down:?}");
    assert!(up.beta > 1.0 && down.beta < 1.0);
}

#[test]
fn argmin_keys_concentrate_at_the_low_end() {
    // k-mins, k = 64, r = 16k: the keys holding the minimum of some table are strongly
    // enriched among the lowest 5% of scores
    let n = 2000;
    let mut fractions = Vec::new();
    for s in 0..20 {
        let g = ground(SketchConfig::kmins(64).unwrap(), n, 100 + s);
        let res = run_standard_attack(&InverseEstimate, &g, 1024, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
        let low: HashSet<u32> = res.ordering[..n / 20].iter().map(|s| s.index).collect();
        let star = g.determining_indices();
        fractions.push(star.iter().filter(|x| low.contains(x)).count() as f64 / star.len() as f64);
    }
    let min = fractions.iter().copied().fold(1.0, f64::min);
    assert!(min >= 0.35, "{fractions:?}");
}

#[test]
fn adversarial_set_edges() {
    let g = ground(SketchConfig::kmins(8).unwrap(), 200, 4);
    let res = run_standard_attack(&InverseEstimate, &g, 50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    for d in [Direction::Prefix, Direction::Suffix] {
        let mut all = adversarial_set(&res, 1.0, d).unwrap();
        all.sort_unstable();
        assert_eq!(all, (0..200).collect::<Vec<u32>>());
    }
    for alpha in [0.1, 0.3, 0.5] {
        let p: HashSet<u32> = adversarial_set(&res, alpha, Direction::Prefix).unwrap().into_iter().collect();
        let s = adversarial_set(&res, alpha, Direction::Suffix).unwrap();
        assert!(s.iter().all(|x| !p.contains(x)));
    }
    assert!(adversarial_set(&res, 0.0, Direction::Prefix).is_err());
    assert!(adversarial_set(&res, 1.5, Direction::Prefix).is_err());
}

#[test]
fn bias_of_random_subsets_concentrates() {
    let config = SketchConfig::kmins(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut inside = 0;
    for s in 0..1000u64 {
        let base = rng.next_u64();
        let keys: Vec<Key> = (0..2000u64).map(|i| Key::from(base.wrapping_add(i))).collect();
        let b = measure_bias_of_keys(config, Seed::from(s), &keys).unwrap();
        inside += (0.7..=1.4).contains(&b.beta) as usize;
    }
    assert!(inside >= 950, "{inside}");
}

#[test]
fn determining_keys_padded_with_transparent_keys_bias_up() {
    let n = 20_000;
    let g = ground(SketchConfig::kmins(64).unwrap(), n, 6);
    let part = partition_keys(&g, 0.25, 1e-6).unwrap();
    let alpha = 0.1;
    let mut subset = part.n0_star.clone();
    subset.extend(part.transparent.iter().take((alpha * n as f64) as usize - subset.len()));
    let b = measure_bias_in(&g, &subset).unwrap();
    // the sketch equals that of N, so the estimate is about n
    assert!(b.beta > 2.0 && b.ratio > 5.0, "{b:?}");
}

#[test]
fn single_batch_without_queries_gives_empty_mask() {
    let g = ground(SketchConfig::kmins(16).unwrap(), 512, 7);
    let qr = QrPolicy::symmetric(32.0, 16).unwrap();
    let res = single_batch_attack(&qr, &g, 0, &mut ChaCha8Rng::seed_from_u64(7));
    assert!(res.mask.unwrap().is_empty());
    assert!(res.transcript.is_empty());
}

struct AlwaysFails;

impl Responder for AlwaysFails {
    fn respond(&self, _: &GroundSet, _: &Observation, _: Option<&Mask>, _: &mut dyn RngCore) -> QrResponse {
        QrResponse {
            z: None,
            failed: true,
            effective_k: 0,
            statistic: 0.0,
        }
    }

    fn threshold_a(&self) -> f64 {
        32.0
    }
}

#[test]
fn adaptive_attack_stops_at_failure() {
    let g = ground(SketchConfig::kmins(16).unwrap(), 512, 8);
    let res = adaptive_attack(&AlwaysFails, &g, 100, &mut ChaCha8Rng::seed_from_u64(8));
    assert_eq!(res.failed_at, Some(1));
    assert!(res.mask.unwrap().is_empty());
    assert_eq!(res.transcript.len(), 1);
}

#[test]
fn masking_degree_extremes() {
    let n = 2000;
    let g = ground(SketchConfig::kmins(16).unwrap(), n, 9);
    let a = n as f64 / 16.0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let full = verify_mask(&Mask::from_indices(n, 0..n as u32, 0), &g, a, 200, &mut rng);
    assert_eq!(full.masking_degree, 1.0);
    assert!(full.sketch_equal && full.differing_registers.is_empty());
    let empty = verify_mask(&Mask::new(n), &g, a, 200, &mut rng);
    assert_eq!(empty.masking_degree, 0.0);
    assert!(!empty.sketch_equal);
    let star = verify_mask(&Mask::from_indices(n, g.determining_indices(), 0), &g, a, 200, &mut rng);
    assert!(star.sketch_equal && star.masking_degree == 1.0);
}

fn symmetric_runs(seeds: u64) -> Vec<(GroundSet, AttackResult, usize)> {
    let (k, n) = (16, 4096);
    let r = symmetric_budget(k, n);
    (0..seeds)
        .map(|s| {
            let g = ground(SketchConfig::kmins(k).unwrap(), n, 200 + s);
            let qr = QrPolicy::symmetric(n as f64 / 16.0, k).unwrap();
            let res = single_batch_attack(&qr, &g, r, &mut ChaCha8Rng::seed_from_u64(s));
            (g, res, r)
        })
        .collect()
}

#[test]
fn score_separation_and_chernoff_envelope() {
    let runs = symmetric_runs(10);
    let (k, n) = (16usize, 4096usize);
    let mut star_scores = Vec::new();
    let mut transparent_scores = Vec::new();
    for (g, res, r) in &runs {
        let part = partition_keys(g, 0.25, 1.0 / (*r as f64).powi(2)).unwrap();
        let theta = chernoff_threshold(*r, n, *r);
        let tr: Vec<f64> = part.transparent.iter().map(|&x| res.scores.c[x as usize]).collect();
        let mean = tr.iter().sum::<f64>() / tr.len() as f64;
        assert_eq!(tr.iter().filter(|&&c| (c - mean).abs() >= theta).count(), 0);
        star_scores.extend(part.n0_star.iter().map(|&x| res.scores.c[x as usize] / *r as f64));
        transparent_scores.extend(tr.iter().map(|c| c / *r as f64));
    }
    let r = runs[0].2 as f64;
    let stats = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (m, var / v.len() as f64)
    };
    let (ms, vs) = stats(&star_scores);
    let (mt, vt) = stats(&transparent_scores);
    let gap = ms - mt;
    let bound = 1.0 / (2.0 * k as f64 * (k as f64 * r).ln());
    let t = gap / (vs + vt).sqrt();
    assert!(gap >= bound && t > 3.0, "gap {gap}, bound {bound}, t {t}");
}

#[test]
fn masking_degree_grows_along_adaptive_attack() {
    // small instance where the mask actually grows within the budget
    let (k, n) = (4, 512);
    let a = n as f64 / 16.0;
    let g = ground(SketchConfig::kmins(k).unwrap(), n, 10);
    let qr = QrPolicy::reference(a, k).unwrap();
    let res = adaptive_attack(&qr, &g, 50_000, &mut ChaCha8Rng::seed_from_u64(10));
    let mask = res.mask.unwrap();
    assert!(!mask.is_empty());
    let mut steps: Vec<usize> = mask.indices().iter().map(|&x| mask.added_at(x).unwrap()).collect();
    steps.insert(0, 0);
    steps.dedup();
    let mut prev = -1.0;
    for s in steps {
        // common random queries across snapshots
        let d = verify_mask(&mask.snapshot(s), &g, a, 300, &mut ChaCha8Rng::seed_from_u64(99)).masking_degree;
        assert!(d >= prev, "degree fell from {prev} to {d} at step {s}");
        prev = d;
    }
    let sizes: Vec<usize> = res.transcript.iter().map(|t| t.mask_size).collect();
    assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn transcript_csv_shape() {
    let g = ground(SketchConfig::kmins(16).unwrap(), 512, 11);
    let qr = QrPolicy::reference(32.0, 16).unwrap();
    let res = adaptive_attack(&qr, &g, 25, &mut ChaCha8Rng::seed_from_u64(11));
    let mut out = Vec::new();
    res.write_transcript(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "step,query_size,rate,z_or_t,mask_size,effective_k,median_score");
    assert_eq!(lines.count(), 25);
}

#[test]
fn mask_export_lists_keys() {
    let g = ground(SketchConfig::kmins(4).unwrap(), 50, 12);
    let m = Mask::from_indices(50, [3, 7], 0);
    let mut out = Vec::new();
    m.write_keys(&g, &mut out).unwrap();
    let expect = format!("{}\n{}\n", g.key(3), g.key(7));
    assert_eq!(String::from_utf8(out).unwrap(), expect);
}

#[test]
fn component_restricted_mask_leaves_outside_registers() {
    let (k, n) = (16, 4096);
    let r = symmetric_budget(k, n);
    let g = ground(SketchConfig::kmins(k).unwrap(), n, 13);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let kp = default_component_size(r, default_delta(k));
    let qr = QrPolicy::random_component(n as f64 / 16.0, k, kp, &mut rng).unwrap();
    let QrStrategy::ComponentRestricted { component } = qr.strategy().clone() else { unreachable!() };
    let res = single_batch_attack(&qr, &g, r, &mut rng);
    let mask = res.mask.unwrap();
    let sm = g.sketch_of(mask.members());
    let sn = g.sketch_of_all();
    let (Registers::Minima(x), Registers::Minima(y)) = (sm.registers(), sn.registers()) else { unreachable!() };
    assert!((0..k).filter(|i| !component.contains(i)).any(|i| x[i] != y[i]));
}
