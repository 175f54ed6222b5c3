//! Cardinality estimators and error measurement.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::Seed;
use crate::sketch::{RegisterRepr, Registers, Sketch, SketchConfig, SketchKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// `(k-1)/T` with `T` the sum of minima. Also accepted for full-precision k-partition,
    /// where the result is scaled by `k` since each part holds about `1/k` of the set.
    StandardKMins,
    /// `(k-1)/T` with `T` the k-th smallest value.
    StandardBottomK,
    /// HyperLogLog harmonic-mean estimate with linear counting in the sparse regime.
    HllHybrid,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::StandardKMins => "standard-kmins",
            EstimatorKind::StandardBottomK => "standard-bottomk",
            EstimatorKind::HllHybrid => "hll-hybrid",
        }
    }

    /// The estimator matching a sketch configuration.
    pub fn for_config(config: &SketchConfig) -> Self {
        match (config.kind(), config.repr()) {
            (SketchKind::BottomK, _) => EstimatorKind::StandardBottomK,
            (_, RegisterRepr::Hll8BitExponent) => EstimatorKind::HllHybrid,
            _ => EstimatorKind::StandardKMins,
        }
    }
}

/// How an estimate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateFlag {
    Normal,
    /// Bottom-k sketch that stores every key of the set; the value is the exact count.
    ExactSmallSet,
    /// HLL sparse regime, linear counting over empty parts.
    LinearCounting,
    /// The statistic was zero and the estimate is `+inf`.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub flag: EstimateFlag,
}

/// Sufficient statistic `T(S)` of a sketch.
///
/// k-mins and full-precision k-partition: the sum of the registers. Bottom-k: the k-th
/// smallest value, which needs a full sketch. Exponent registers: the HLL indicator
/// sum `sum_i 2^-reg_i`.
pub fn statistic(s: &Sketch) -> Result<f64> {
    match s.registers() {
        Registers::Minima(v) => Ok(v.iter().sum()),
        Registers::Bottom(v) => {
            let k = s.k();
            if v.len() < k {
                Err(Error::Underflow { have: v.len(), need: k })
            } else {
                Ok(v[k - 1])
            }
        }
        Registers::Exponents(v) => Ok(v.iter().map(|&e| (-(e as f64)).exp2()).sum()),
    }
}

pub fn estimate(s: &Sketch, kind: EstimatorKind) -> Result<Estimate> {
    let incompatible = || Error::IncompatibleEstimator {
        estimator: kind.name(),
        kind: s.config().kind().name(),
    };
    let k = s.k() as f64;
    match (kind, s.registers()) {
        (EstimatorKind::StandardKMins, Registers::Minima(_)) | (EstimatorKind::StandardBottomK, Registers::Bottom(_)) => {
            if let Registers::Bottom(v) = s.registers() {
                if v.len() < s.k() {
                    return Ok(Estimate {
                        value: v.len() as f64,
                        flag: EstimateFlag::ExactSmallSet,
                    });
                }
            }
            let t = statistic(s)?;
            if t == 0.0 {
                Ok(Estimate {
                    value: f64::INFINITY,
                    flag: EstimateFlag::Degenerate,
                })
            } else {
                // each k-partition register sees about |U|/k keys
                let scale = if s.config().kind() == SketchKind::KPartition { k } else { 1.0 };
                Ok(Estimate {
                    value: scale * (k - 1.0) / t,
                    flag: EstimateFlag::Normal,
                })
            }
        }
        (EstimatorKind::HllHybrid, Registers::Exponents(regs)) => Ok(hll_hybrid(regs)),
        _ => Err(incompatible()),
    }
}

/// Estimate with the estimator matching the sketch's configuration.
pub fn default_estimate(s: &Sketch) -> Result<Estimate> {
    estimate(s, EstimatorKind::for_config(s.config()))
}

/// Bias-correction constant of the harmonic-mean estimator.
pub fn hll_alpha(k: usize) -> f64 {
    match k {
        0..=16 => 0.673,
        17..=32 => 0.697,
        33..=64 => 0.709,
        _ => 0.7213 / (1.0 + 1.079 / k as f64),
    }
}

/// Harmonic-mean estimate over exponent registers, switching to linear counting when
/// the raw estimate is at most `2.5k` and some register is empty.
fn hll_hybrid(regs: &[u8]) -> Estimate {
    let k = regs.len() as f64;
    let indicator: f64 = regs.iter().map(|&e| (-(e as f64)).exp2()).sum();
    let raw = hll_alpha(regs.len()) * k * k / indicator;
    let empty = regs.iter().filter(|&&e| e == 0).count();
    if raw <= 2.5 * k && empty > 0 {
        Estimate {
            value: k * (k / empty as f64).ln(),
            flag: EstimateFlag::LinearCounting,
        }
    } else {
        Estimate {
            value: raw,
            flag: EstimateFlag::Normal,
        }
    }
}

/// HLL configuration for a target relative error: `k = ceil(1.04 / eps^2)`.
pub fn hll_config_from_epsilon(epsilon: f64) -> Result<SketchConfig> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be in (0, 1], got {epsilon}")));
    }
    // 1.04/0.1^2 evaluates to 103.99999999999997 in binary floating point
    let k = (1.04 / (epsilon * epsilon) - 1e-9).ceil() as usize;
    SketchConfig::hll(k.max(1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub estimator: EstimatorKind,
    pub k: usize,
    pub cardinality: usize,
    pub trials: usize,
    pub nrmse: f64,
    pub mean_estimate: f64,
    /// `(quantile, |relative error| at that quantile)`, increasing in both.
    pub rel_error_quantiles: Vec<(f64, f64)>,
    /// Signed relative errors, one per trial, in trial order.
    #[serde(skip)]
    pub relative_errors: Vec<f64>,
}

pub const REPORT_QUANTILES: [f64; 3] = [0.5, 0.9, 0.99];

impl ErrorReport {
    pub fn quantile(&self, q: f64) -> Option<f64> {
        self.rel_error_quantiles.iter().find(|(p, _)| *p == q).map(|(_, v)| *v)
    }

    /// Standard error of the mean estimate.
    pub fn mean_std_error(&self) -> f64 {
        let n = self.relative_errors.len() as f64;
        let c = self.cardinality as f64;
        let mean = self.relative_errors.iter().sum::<f64>() / n;
        let var = self.relative_errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        c * (var / n).sqrt()
    }

    pub fn csv_header() -> [&'static str; 8] {
        ["kind", "k", "cardinality", "trials", "nrmse", "q50", "q90", "q99"]
    }

    pub fn write_csv<W: Write>(reports: &[ErrorReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::csv_header())?;
        for r in reports {
            let q = |p| r.quantile(p).unwrap_or(f64::NAN).to_string();
            w.write_record([
                r.estimator.name().to_string(),
                r.k.to_string(),
                r.cardinality.to_string(),
                r.trials.to_string(),
                r.nrmse.to_string(),
                q(0.5),
                q(0.9),
                q(0.99),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Monte Carlo NRMSE and relative-error quantiles over fresh seeds.
///
/// The set is fixed (`cardinality` distinct integer keys); trial `t` uses seed
/// `base_seed.derive(t)`, so the result does not depend on how trials are scheduled.
pub fn measure_error(
    config: SketchConfig,
    kind: EstimatorKind,
    cardinality: usize,
    trials: usize,
    base_seed: Seed,
) -> Result<ErrorReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    if cardinality == 0 {
        return Err(Error::InvalidParameter("cardinality must be positive".into()));
    }
    let keys: Vec<[u8; 8]> = (0..cardinality as u64).map(u64::to_le_bytes).collect();
    let c = cardinality as f64;
    let estimates = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = base_seed.derive(t);
            let s = Sketch::of_set(config, seed, &keys);
            estimate(&s, kind).map(|e| e.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let relative_errors: Vec<f64> = estimates.iter().map(|e| (e - c) / c).collect();
    let nrmse = (relative_errors.iter().map(|e| e * e).sum::<f64>() / trials as f64).sqrt();
    let mut abs: Vec<f64> = relative_errors.iter().map(|e| e.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let rel_error_quantiles = REPORT_QUANTILES.iter().map(|&q| (q, nearest_rank(&abs, q))).collect();
    Ok(ErrorReport {
        estimator: kind,
        k: config.k(),
        cardinality,
        trials,
        nrmse,
        mean_estimate: estimates.iter().sum::<f64>() / trials as f64,
        rel_error_quantiles,
        relative_errors,
    })
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kmins_with(regs: Vec<f64>) -> Sketch {
        let c = SketchConfig::kmins(regs.len()).unwrap();
        Sketch::from_registers(c, Seed(0), Registers::Minima(regs)).unwrap()
    }

    fn bottom_with(k: usize, regs: Vec<f64>) -> Sketch {
        let c = SketchConfig::bottom_k(k).unwrap();
        Sketch::from_registers(c, Seed(0), Registers::Bottom(regs)).unwrap()
    }

    #[test]
    fn kmins_statistic_and_estimate() {
        let s = kmins_with(vec![0.25; 4]);
        assert_eq!(statistic(&s).unwrap(), 1.0);
        let e = estimate(&s, EstimatorKind::StandardKMins).unwrap();
        assert_eq!(e.value, 3.0);
        assert_eq!(e.flag, EstimateFlag::Normal);
    }

    #[test]
    fn bottom_k_statistic_and_estimate() {
        let s = bottom_with(3, vec![0.1, 0.2, 0.4]);
        assert_eq!(statistic(&s).unwrap(), 0.4);
        assert!((estimate(&s, EstimatorKind::StandardBottomK).unwrap().value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn bottom_k_underflow() {
        let s = bottom_with(3, vec![0.1, 0.2]);
        assert!(matches!(statistic(&s), Err(Error::Underflow { have: 2, need: 3 })));
        let e = estimate(&s, EstimatorKind::StandardBottomK).unwrap();
        assert_eq!(e, Estimate { value: 2.0, flag: EstimateFlag::ExactSmallSet });
    }

    #[test]
    fn zero_statistic_is_degenerate() {
        let s = kmins_with(vec![0.0; 3]);
        let e = estimate(&s, EstimatorKind::StandardKMins).unwrap();
        assert!(e.value.is_infinite());
        assert_eq!(e.flag, EstimateFlag::Degenerate);
    }

    #[test]
    fn incompatible_estimator() {
        let s = kmins_with(vec![0.5; 3]);
        assert!(estimate(&s, EstimatorKind::HllHybrid).is_err());
        assert!(estimate(&s, EstimatorKind::StandardBottomK).is_err());
    }

    #[test]
    fn epsilon_to_k() {
        assert_eq!(hll_config_from_epsilon(0.1).unwrap().k(), 104);
        assert_eq!(hll_config_from_epsilon(0.05).unwrap().k(), 416);
        assert_eq!(hll_config_from_epsilon(1.0).unwrap().k(), 2);
        assert!(hll_config_from_epsilon(0.0).is_err());
        assert!(hll_config_from_epsilon(1.5).is_err());
        assert!(hll_config_from_epsilon(f64::NAN).is_err());
        assert_eq!(hll_config_from_epsilon(0.1).unwrap().repr(), RegisterRepr::Hll8BitExponent);
    }

    #[test]
    fn hll_sparse_regime_matches_linear_counting() {
        let config = SketchConfig::hll(104).unwrap();
        for t in 0..200u64 {
            let seed = Seed(t as u128).derive(99);
            let keys: Vec<[u8; 8]> = (0..10u64).map(|i| (i + 1000 * t).to_le_bytes()).collect();
            let s = Sketch::of_set(config, seed, &keys);
            let Registers::Exponents(regs) = s.registers() else { unreachable!() };
            let empty = regs.iter().filter(|&&e| e == 0).count() as f64;
            let oracle = 104.0 * (104.0 / empty).ln();
            let e = estimate(&s, EstimatorKind::HllHybrid).unwrap();
            assert_eq!(e.flag, EstimateFlag::LinearCounting);
            assert!((e.value - oracle).abs() < 1e-9);
            assert!((e.value - 10.0).abs() <= 2.0, "estimate {}", e.value);
        }
    }

    #[test]
    fn kmins_mean_statistic() {
        // E[T] = k/|U| for a sum of k Exp[|U|] minima
        let config = SketchConfig::kmins(64).unwrap();
        let keys: Vec<[u8; 8]> = (0..1000u64).map(u64::to_le_bytes).collect();
        let trials = 10_000;
        let mean = (0..trials)
            .map(|t| statistic(&Sketch::of_set(config, Seed(3).derive(t), &keys)).unwrap())
            .sum::<f64>()
            / trials as f64;
        assert!((mean / 0.064 - 1.0).abs() < 0.02, "mean T {mean}");
    }

    #[test]
    fn single_trial_report() {
        let r = measure_error(SketchConfig::kmins(8).unwrap(), EstimatorKind::StandardKMins, 100, 1, Seed(1)).unwrap();
        assert_eq!(r.trials, 1);
        assert_eq!(r.relative_errors.len(), 1);
        assert!(r.nrmse >= 0.0);
    }

    #[test]
    fn quantiles_monotone() {
        let r = measure_error(SketchConfig::kmins(16).unwrap(), EstimatorKind::StandardKMins, 500, 300, Seed(2)).unwrap();
        let qs: Vec<f64> = r.rel_error_quantiles.iter().map(|(_, v)| *v).collect();
        assert!(qs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn bottom_k_nrmse_tracks_kmins() {
        let kmins = measure_error(SketchConfig::kmins(64).unwrap(), EstimatorKind::StandardKMins, 5000, 1000, Seed(5)).unwrap();
        let bottom =
            measure_error(SketchConfig::bottom_k(64).unwrap(), EstimatorKind::StandardBottomK, 5000, 1000, Seed(6)).unwrap();
        assert!((bottom.nrmse / kmins.nrmse - 1.0).abs() < 0.25, "{} vs {}", bottom.nrmse, kmins.nrmse);
    }

    #[test]
    fn csv_shape() {
        let r = measure_error(SketchConfig::kmins(8).unwrap(), EstimatorKind::StandardKMins, 50, 10, Seed(1)).unwrap();
        let mut buf = Vec::new();
        ErrorReport::write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "kind,k,cardinality,trials,nrmse,q50,q90,q99");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("standard-kmins,8,50,10,"));
    }
}
