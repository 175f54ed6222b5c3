//! Rank tables of a ground set: rank sketches, the low-rank/transparent split and a
//! check that random-subset ranks look geometric.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchlab::experiments::generate_ground_set;
use sketchlab::rank_domain::{geom_distribution_check, partition_keys};
use sketchlab::subset::sample_bernoulli;
use sketchlab::{GroundSet, Seed, SketchConfig};

fn main() -> sketchlab::Result<()> {
    let n = 10_000;
    let k = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ground = GroundSet::new(generate_ground_set(n, 10, &mut rng)?, SketchConfig::kmins(k)?, Seed::from(11))?;

    let u = sample_bernoulli(n, 0.01, &mut rng);
    let ranks = ground.rank_sketch(&u)?;
    let expected = k as f64 * (n + 1) as f64 / (u.len() + 1) as f64;
    println!("|U| = {}, rank sketch total {} (expected {expected:.0})", u.len(), ranks.total());
    let back = ground.sketch_from_ranks(&ranks)?;
    println!("sketch rebuilt from ranks matches: {}", back == ground.sketch_of(&u));

    let part = partition_keys(&ground, 0.25, 1e-6)?;
    println!(
        "low-rank keys {} (bound {:.0}), transparent {}, depth {}",
        part.n0.len(),
        part.size_bound(k),
        part.transparent.len(),
        part.depth
    );

    let rep = geom_distribution_check(&ground, 0.25, 500, &mut rng)?;
    println!(
        "geometric check q=0.25: chi-square {:.1} on {} dof, p = {:.3}",
        rep.chi_square, rep.degrees_of_freedom, rep.p_value
    );
    println!(
        "totals: mean {:.1} (expect {:.1}), variance {:.1} (expect {:.1}), max |corr| {:.3}",
        rep.mean_total, rep.expected_mean, rep.var_total, rep.expected_var, rep.max_abs_correlation
    );
    Ok(())
}
