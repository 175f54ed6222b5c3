//! Monte Carlo NRMSE of the standard estimators against the 1/sqrt(k) rule of thumb.
//!
//! cargo run --release --example estimator_error -- [k] [cardinality] [trials]

use sketchlab::estimators::measure_error;
use sketchlab::{EstimatorKind, Seed, SketchConfig};

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).map(|s| s.parse().expect("integer argument")).unwrap_or(default)
}

fn main() -> sketchlab::Result<()> {
    let (k, c, trials) = (arg(1, 64), arg(2, 10_000), arg(3, 1000));
    let cases = [
        (SketchConfig::kmins(k)?, EstimatorKind::StandardKMins),
        (SketchConfig::bottom_k(k)?, EstimatorKind::StandardBottomK),
        (SketchConfig::hll(k)?, EstimatorKind::HllHybrid),
    ];
    println!("k={k} |U|={c} trials={trials}, 1/sqrt(k-2) = {:.4}", 1.0 / ((k as f64) - 2.0).sqrt());
    for (config, kind) in cases {
        let r = measure_error(config, kind, c, trials, Seed::from(1))?;
        println!(
            "{:<16} nrmse {:.4}  mean {:.1} +- {:.1}  |err| q50 {:.4} q90 {:.4} q99 {:.4}",
            kind.name(),
            r.nrmse,
            r.mean_estimate,
            r.mean_std_error(),
            r.quantile(0.5).unwrap(),
            r.quantile(0.9).unwrap(),
            r.quantile(0.99).unwrap()
        );
    }
    Ok(())
}
