//! The standard attack against HLL: score every key by the inverse estimates of the
//! random queries it appeared in, then sketch score-ordered prefixes.
//!
//! cargo run --release --example standard_attack -- [queries] [out.csv]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchlab::attacks::{adversarial_set, measure_bias_in, run_standard_attack, Direction, InverseEstimate};
use sketchlab::estimators::hll_config_from_epsilon;
use sketchlab::experiments::generate_ground_set;
use sketchlab::{GroundSet, Seed};

fn main() -> sketchlab::Result<()> {
    let r: usize = std::env::args().nth(1).map(|s| s.parse().expect("query count")).unwrap_or(4096);
    let n = 5000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let keys = generate_ground_set(n, 10, &mut rng)?;
    let ground = GroundSet::new(keys, hll_config_from_epsilon(0.1)?, Seed::from(3))?;
    println!("HLL with k={} registers, n={n}, r={r}", ground.k());

    let result = run_standard_attack(&InverseEstimate, &ground, r, &mut rng)?;
    for w in &result.warnings {
        println!("warning: {w}");
    }
    println!("{:>6} {:>12} {:>12}", "|U|", "low scores", "high scores");
    for frac in [0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let asc = measure_bias_in(&ground, &adversarial_set(&result, frac, Direction::Prefix)?)?;
        let desc = measure_bias_in(&ground, &adversarial_set(&result, frac, Direction::Suffix)?)?;
        println!("{:>6} {:>12.3} {:>12.3}", asc.size, asc.ratio, desc.ratio);
    }

    if let Some(path) = std::env::args().nth(2) {
        result.write_transcript(std::fs::File::create(&path)?)?;
        println!("transcript written to {path}");
    }
    Ok(())
}
