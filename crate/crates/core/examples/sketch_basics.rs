//! Build each sketch kind over the same stream and compare the estimates.
//!
//! cargo run --release --example sketch_basics -- [cardinality]

use sketchlab::estimators::hll_config_from_epsilon;
use sketchlab::{estimate, statistic, EstimatorKind, RegisterRepr, Seed, Sketch, SketchConfig};

fn main() -> sketchlab::Result<()> {
    let n: u64 = std::env::args().nth(1).map(|s| s.parse().expect("cardinality")).unwrap_or(50_000);
    let seed = Seed::from(7);
    let configs = [
        SketchConfig::kmins(128)?,
        SketchConfig::bottom_k(128)?,
        SketchConfig::k_partition(128)?,
        hll_config_from_epsilon(0.05)?,
    ];
    println!("{:<12} {:>5} {:>14} {:>12} {:>8}", "kind", "k", "statistic", "estimate", "error");
    for config in configs {
        let mut s = Sketch::empty(config, seed);
        for i in 0..n {
            s.insert(format!("user-{i}").as_bytes());
            // repeats change nothing
            s.insert(format!("user-{}", i / 2).as_bytes());
        }
        let kind = EstimatorKind::for_config(&config);
        let label = match config.repr() {
            RegisterRepr::Hll8BitExponent => "hll",
            RegisterRepr::FullPrecision => config.kind().name(),
        };
        let e = estimate(&s, kind)?;
        println!(
            "{:<12} {:>5} {:>14.6} {:>12.1} {:>+7.2}%  {:?}",
            label,
            config.k(),
            statistic(&s)?,
            e.value,
            100.0 * (e.value / n as f64 - 1.0),
            e.flag
        );
    }
    Ok(())
}
