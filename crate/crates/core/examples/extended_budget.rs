//! Both masking attacks at k=16, n=4096 with r = 2^21 queries, where the determining
//! keys do separate from the rest. Takes about a minute per attack.
//!
//! cargo run --release --example extended_budget -- [symmetric|adaptive|both] [log2 r]

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchlab::attacks::{adaptive_attack, single_batch_attack, verify_mask, AttackResult};
use sketchlab::experiments::generate_ground_set;
use sketchlab::rank_domain::partition_keys;
use sketchlab::{GroundSet, QrPolicy, Seed, SketchConfig};

fn report(name: &str, res: &AttackResult, ground: &GroundSet, a: f64, r: usize, started: Instant) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = ground.len();
    let mask = res.mask.as_ref().unwrap();
    let part = partition_keys(ground, (4.0 * a / n as f64).min(0.5), 1.0 / (r as f64).powi(2)).unwrap();
    let transparent = mask.indices().iter().filter(|&&x| !part.is_low_rank(x)).count();
    let rep = verify_mask(mask, ground, a, 1000, &mut rng);
    println!(
        "{name}: |M|={} ({:.1}% of n), S(M)==S(N) {}, masking degree {:.3}, transparent {transparent}, failed at {:?}, {:.1}s",
        rep.size,
        100.0 * rep.fraction,
        rep.sketch_equal,
        rep.masking_degree,
        res.failed_at,
        started.elapsed().as_secs_f64()
    );
}

fn main() -> sketchlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let which = args.next().unwrap_or_else(|| "both".into());
    let log_r: u32 = args.next().map(|s| s.parse().expect("log2 r")).unwrap_or(21);
    let (k, n, r) = (16, 4096, 1usize << log_r);
    let a = n as f64 / 16.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ground = GroundSet::new(generate_ground_set(n, 10, &mut rng)?, SketchConfig::kmins(k)?, Seed::from(0))?;
    println!("k={k} n={n} A={a} r={r}");
    if which == "symmetric" || which == "both" {
        let t = Instant::now();
        let res = single_batch_attack(&QrPolicy::symmetric(a, k)?, &ground, r, &mut rng);
        report("symmetric", &res, &ground, a, r, t);
    }
    if which == "adaptive" || which == "both" {
        let t = Instant::now();
        let res = adaptive_attack(&QrPolicy::reference(a, k)?, &ground, r, &mut rng);
        report("adaptive", &res, &ground, a, r, t);
    }
    Ok(())
}
