//! Error rates of the reference and symmetric responders by query cardinality.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchlab::experiments::generate_ground_set;
use sketchlab::qr::{audit_correctness, QueryDistribution};
use sketchlab::{GroundSet, QrPolicy, Seed, SketchConfig};

fn main() -> sketchlab::Result<()> {
    let (k, n) = (416, 10_000);
    let a = n as f64 / 16.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let ground = GroundSet::new(generate_ground_set(n, 10, &mut rng)?, SketchConfig::kmins(k)?, Seed::from(4))?;
    for (name, qr) in [("reference", QrPolicy::reference(a, k)?), ("symmetric", QrPolicy::symmetric(a, k)?)] {
        let audit = audit_correctness(&qr, &ground, &QueryDistribution::attack(a), 5000, &mut rng);
        println!("{name}: delta {:.4}, worst bucket below A {:.4}, above 2A {:.4}", qr.delta(), audit.worst_low, audit.worst_high);
        for b in audit.buckets.iter().filter(|b| b.samples >= 30) {
            println!("  |U| {:>5}..{:<5} n={:<5} errors {:>4} rate {:.4}", b.lo, b.lo + audit.bucket_width, b.samples, b.errors, b.rate);
        }
    }
    Ok(())
}
