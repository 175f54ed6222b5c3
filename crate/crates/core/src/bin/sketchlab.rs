//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sketchlab::experiments::{
    run_audit, run_nrmse, run_query_sweep, run_size_sweep, run_theorem_checks, write_curves, write_rows, Experiment,
    ExperimentSpec, OutputFormat, TheoremRows,
};
use sketchlab::estimators::ErrorReport;
use sketchlab::{Error, Result};

#[derive(Parser)]
#[command(name = "sketchlab", version, about = "Attacks on cardinality sketches: sweeps and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Standard attack on HLL for a schedule of query counts.
    QuerySweep(Common),
    /// Standard attack on HLL for a schedule of sketch sizes.
    SizeSweep(Common),
    /// Per-seed theorem-level checks.
    TheoremCheck {
        #[arg(value_enum)]
        which: Theorem,
        #[command(flatten)]
        common: Common,
    },
    /// Estimator error of k-mins, bottom-k and HLL sketches.
    Nrmse(Common),
    /// Correctness audit of the query responders.
    Audit(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Theorem {
    Standard,
    Symmetric,
    Adaptive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

#[derive(Args)]
struct Common {
    /// HLL target error (sets k).
    #[arg(long, conflicts_with = "k")]
    epsilon: Option<f64>,
    /// Sketch size; a comma-separated list for size-sweep.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    n: Option<usize>,
    /// Query counts, comma-separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    /// Seeds as a comma-separated list or a range `a..b`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON experiment spec; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed mixed into every run.
    #[arg(long, env = "SKETCHLAB_SEED", default_value_t = 0)]
    base_seed: u64,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidConfig(format!("cannot parse seeds {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

impl Common {
    fn spec(&self, experiment: Experiment) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_json(&std::fs::read_to_string(path)?)?,
            None => ExperimentSpec::defaults(experiment),
        };
        spec.experiment = experiment;
        if self.epsilon.is_some() || self.k.is_some() {
            spec.epsilon = self.epsilon;
            spec.k = None;
            spec.k_schedule = None;
        }
        match self.k.as_deref() {
            Some([k]) if experiment != Experiment::SizeSweep => spec.k = Some(*k),
            Some(ks) => spec.k_schedule = Some(ks.to_vec()),
            None => {}
        }
        if let Some(n) = self.n {
            spec.n = Some(n);
        }
        if let Some(r) = &self.r {
            spec.r = Some(r.clone());
        }
        if let Some(s) = &self.seeds {
            spec.seeds = parse_seeds(s)?;
        }
        if let Some(t) = self.trials {
            spec.trials = Some(t);
        }
        if let Some(o) = &self.out {
            spec.out = o.clone();
        }
        if let Some(f) = self.format {
            spec.format = match f {
                Format::Csv => OutputFormat::Csv,
                Format::Svg => OutputFormat::Svg,
                Format::Both => OutputFormat::Both,
            };
        }
        if self.base_seed != 0 || self.config.is_none() {
            spec.base_seed = self.base_seed;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::QuerySweep(c) => {
            let spec = c.spec(Experiment::QuerySweep)?;
            let out = run_query_sweep(&spec)?;
            write_curves(&spec.out, "query_sweep_ascending", "Ascending-score prefixes", &out.ascending, spec.format)?;
            write_curves(&spec.out, "query_sweep_descending", "Descending-score prefixes", &out.descending, spec.format)?;
            let peak = out.ascending.iter().map(|p| p.ratio).fold(0.0, f64::max);
            let low = out.descending.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
            println!("max ascending ratio {peak:.3}, min descending ratio {low:.3}");
            Ok(true)
        }
        Command::SizeSweep(c) => {
            let spec = c.spec(Experiment::SizeSweep)?;
            let points = run_size_sweep(&spec)?;
            write_curves(&spec.out, "size_sweep", "Ascending-score prefixes, r = 4k", &points, spec.format)?;
            let mut ks: Vec<usize> = points.iter().map(|p| p.k).collect();
            ks.dedup();
            for k in ks {
                let peak = points.iter().filter(|p| p.k == k).map(|p| p.ratio).fold(0.0, f64::max);
                println!("k={k}: max ratio {peak:.3}");
            }
            Ok(true)
        }
        Command::TheoremCheck { which, common } => {
            let experiment = match which {
                Theorem::Standard => Experiment::StandardTheorem,
                Theorem::Symmetric => Experiment::SymmetricTheorem,
                Theorem::Adaptive => Experiment::AdaptiveTheorem,
            };
            let spec = common.spec(experiment)?;
            let report = run_theorem_checks(&spec)?;
            std::fs::create_dir_all(&spec.out)?;
            let name = match report.rows {
                TheoremRows::Standard(_) => "standard_theorem.csv",
                TheoremRows::Symmetric(_) => "symmetric_theorem.csv",
                TheoremRows::Adaptive(_) => "adaptive_theorem.csv",
            };
            report.write_csv(std::fs::File::create(spec.out.join(name))?)?;
            report.write_csv(std::io::stdout().lock())?;
            println!(
                "{}: {}/{} seeds passed{} -> {}",
                name.trim_end_matches(".csv"),
                report.passes,
                report.seeds,
                if report.all_clean { "" } else { ", transparent key in a mask" },
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Command::Nrmse(c) => {
            let spec = c.spec(Experiment::EstimatorNrmse)?;
            let reports = run_nrmse(&spec)?;
            std::fs::create_dir_all(&spec.out)?;
            ErrorReport::write_csv(&reports, std::fs::File::create(spec.out.join("nrmse.csv"))?)?;
            ErrorReport::write_csv(&reports, std::io::stdout().lock())?;
            Ok(true)
        }
        Command::Audit(c) => {
            let mut spec = c.spec(Experiment::EstimatorNrmse)?;
            if c.config.is_none() && c.k.is_none() && c.epsilon.is_none() {
                spec.k = Some(416);
            }
            let (rows, ok) = run_audit(&spec)?;
            write_rows(&spec.out.join("audit.csv"), &rows)?;
            println!("{} buckets audited -> {}", rows.len(), if ok { "PASS" } else { "FAIL" });
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
