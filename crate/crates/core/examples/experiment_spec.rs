//! Run an experiment from a JSON spec and write its CSV and SVG outputs.
//!
//! cargo run --release --example experiment_spec -- [spec.json]
//!
//! Without an argument this runs a size sweep over k = 64, 128, 256 into `results/`.

use sketchlab::experiments::{run_size_sweep, write_curves, Experiment, ExperimentSpec};

const DEFAULT: &str = r#"{
  "experiment": "size-sweep",
  "k_schedule": [64, 128, 256],
  "seeds": [0],
  "out": "results",
  "format": "both"
}"#;

fn main() -> sketchlab::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEFAULT.to_string(),
    };
    let spec = ExperimentSpec::from_json(&text)?;
    if spec.experiment != Experiment::SizeSweep {
        eprintln!("this example only runs size sweeps; use the sketchlab binary for the rest");
        std::process::exit(2);
    }
    let points = run_size_sweep(&spec)?;
    write_curves(&spec.out, "size_sweep", "Ascending-score prefixes, r = 4k", &points, spec.format)?;
    let mut ks: Vec<usize> = points.iter().map(|p| p.k).collect();
    ks.dedup();
    for k in ks {
        let peak = points.iter().filter(|p| p.k == k).map(|p| p.ratio).fold(0.0, f64::max);
        println!("k={k}: peak ratio {peak:.3}");
    }
    println!("wrote {}", spec.out.join("size_sweep.csv").display());
    Ok(())
}
