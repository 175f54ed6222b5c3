//! Adaptive masking against the mask-aware reference responder on a small instance,
//! run until the responder gives up.
//!
//! cargo run --release --example adaptive_attack -- [transcript.csv] [mask.txt]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchlab::attacks::{adaptive_attack, verify_mask};
use sketchlab::experiments::generate_ground_set;
use sketchlab::qr::{audit_correctness, QueryDistribution};
use sketchlab::rank_domain::partition_keys;
use sketchlab::{GroundSet, QrPolicy, Seed, SketchConfig};

fn main() -> sketchlab::Result<()> {
    let (k, n, r) = (4, 512, 50_000);
    let a = n as f64 / 16.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ground = GroundSet::new(generate_ground_set(n, 10, &mut rng)?, SketchConfig::kmins(k)?, Seed::from(2))?;
    let qr = QrPolicy::reference(a, k)?;
    println!("k={k} n={n} A={a} budget {r}, failure below {:.2} effective registers", qr.failure_threshold());

    let res = adaptive_attack(&qr, &ground, r, &mut rng);
    let mask = res.mask.as_ref().unwrap();
    match res.failed_at {
        Some(step) => println!("responder failed at step {step}"),
        None => println!("responder survived all {r} steps"),
    }
    for x in mask.indices() {
        println!("  key {:?} masked at step {}", ground.key(*x), mask.added_at(*x).unwrap());
    }
    let part = partition_keys(&ground, (4.0 * a / n as f64).min(0.5), 1.0 / (r as f64).powi(2))?;
    let transparent = mask.indices().iter().filter(|&&x| !part.is_low_rank(x)).count();
    let rep = verify_mask(mask, &ground, a, 2000, &mut rng);
    println!("masking degree {:.3}, transparent keys in mask {transparent}", rep.masking_degree);

    let audit = audit_correctness(&qr, &ground, &QueryDistribution::attack(a).with_mask(mask), 2000, &mut rng);
    println!(
        "queries M u U: {} failures of {}, error rate below A {:.3}, above 2A {:.3}",
        audit.failures, audit.trials, audit.pooled_low, audit.pooled_high
    );

    let mut args = std::env::args().skip(1);
    if let Some(path) = args.next() {
        res.write_transcript(std::fs::File::create(&path)?)?;
        println!("transcript written to {path}");
    }
    if let Some(path) = args.next() {
        mask.write_keys(&ground, std::fs::File::create(&path)?)?;
        println!("mask keys written to {path}");
    }
    Ok(())
}
