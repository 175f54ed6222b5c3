//! One committed batch of queries against a symmetric-threshold responder, then the
//! same attack against a responder that only reads a random component of the sketch.
//!
//! cargo run --release --example symmetric_attack -- [queries]
//!
//! The default budget 8 k^2 ln n is too small for the scores of the determining keys to
//! clear the Chernoff margin, so the mask comes back empty. See `extended_budget` for a
//! budget where it fills.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchlab::attacks::{chernoff_threshold, single_batch_attack, verify_mask};
use sketchlab::experiments::{generate_ground_set, symmetric_budget};
use sketchlab::qr::{default_component_size, default_delta};
use sketchlab::{GroundSet, QrPolicy, Seed, SketchConfig};

fn main() -> sketchlab::Result<()> {
    let (k, n) = (16, 4096);
    let r: usize = std::env::args().nth(1).map(|s| s.parse().expect("query count")).unwrap_or(symmetric_budget(k, n));
    let a = n as f64 / 16.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ground = GroundSet::new(generate_ground_set(n, 10, &mut rng)?, SketchConfig::kmins(k)?, Seed::from(5))?;
    let star = ground.determining_indices();
    println!("k={k} n={n} A={a} r={r}, margin {:.1}", chernoff_threshold(r, n, r));

    let symmetric = QrPolicy::symmetric(a, k)?;
    let res = single_batch_attack(&symmetric, &ground, r, &mut rng);
    let mask = res.mask.as_ref().unwrap();
    let median = res.transcript.last().map_or(f64::NAN, |t| t.median_score);
    let star_gap: Vec<i64> = star.iter().map(|&x| (res.scores.c[x as usize] - median).round() as i64).collect();
    println!("determining keys score above median by {star_gap:?}");
    let rep = verify_mask(mask, &ground, a, 500, &mut rng);
    println!(
        "symmetric: |M|={} S(M)==S(N) {} masking degree {:.3}",
        rep.size, rep.sketch_equal, rep.masking_degree
    );

    let kp = default_component_size(r, default_delta(k));
    let component = QrPolicy::random_component(a, k, kp, &mut rng)?;
    let res = single_batch_attack(&component, &ground, r, &mut rng);
    let rep = verify_mask(res.mask.as_ref().unwrap(), &ground, a, 500, &mut rng);
    println!(
        "component of {kp} registers: |M|={} registers where S(M) != S(N): {:?}",
        rep.size, rep.differing_registers
    );
    Ok(())
}
