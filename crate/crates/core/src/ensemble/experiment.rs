use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::channel::BhattacharyyaMatrix;
use crate::ensemble::codebook::{min_pairwise_statistic, sample_codebook, EnsembleConfig};
use crate::error::{Error, Result};
use crate::format::sig12;

pub const DEFAULT_BINS: usize = 60;
/// Smallest run on which tail and distribution diagnostics are reported.
pub const MIN_DIAGNOSTIC_SAMPLES: usize = 1000;

/// Fixed-width histogram over `[lo, hi]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(samples: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &s in samples {
            let idx = if width > 0.0 { (((s - lo) / width) as usize).min(bins - 1) } else { 0 };
            counts[idx] += 1;
        }
        Histogram { lo, hi, counts }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.counts.len()).map(|i| self.lo + (i as f64 + 0.5) * w).collect()
    }
}

/// Per-trial `V_n/n` samples of one experiment with summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub config: EnsembleConfig,
    pub samples: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub histogram: Histogram,
}

impl SimulationRun {
    /// Summarizes samples in trial order (Welford), so results do not depend on scheduling.
    pub fn from_samples(config: EnsembleConfig, samples: Vec<f64>, bins: usize) -> Self {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (k, &x) in samples.iter().enumerate() {
            let delta = x - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (x - mean);
        }
        let variance = if samples.len() > 1 { m2 / (samples.len() - 1) as f64 } else { 0.0 };
        let histogram = Histogram::new(&samples, bins);
        SimulationRun { config, samples, mean, variance, histogram }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Samples shifted and scaled to zero mean and unit variance.
    pub fn normalized(&self) -> Vec<f64> {
        let sd = self.std_dev();
        self.samples.iter().map(|x| (x - self.mean) / sd).collect()
    }

    pub fn fraction_within(&self, lo: f64, hi: f64) -> f64 {
        self.samples.iter().filter(|&&x| x >= lo && x <= hi).count() as f64 / self.samples.len() as f64
    }

    /// SHA-256 over the little-endian bytes of the samples in trial order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.samples {
            h.update(s.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Structured summary: config echo, samples digest, histogram arrays.
    pub fn to_json(&self) -> serde_json::Value {
        let min = self.samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = self.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        serde_json::json!({
            "config": {
                "ensemble": self.config.kind,
                "q": self.config.q.as_slice(),
                "n": self.config.n,
                "m": self.config.m,
                "trials": self.config.trials,
                "seed": self.config.seed,
            },
            "samples": {
                "count": self.samples.len(),
                "mean": self.mean,
                "variance": self.variance,
                "min": min,
                "max": max,
                "sha256": self.digest(),
            },
            "histogram": {
                "lo": self.histogram.lo,
                "hi": self.histogram.hi,
                "bin_centers": self.histogram.centers(),
                "counts": self.histogram.counts,
            },
        })
    }

    /// Two-column CSV `bin_center,count`.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_center,count\n");
        for (c, n) in self.histogram.centers().iter().zip(&self.histogram.counts) {
            out.push_str(&format!("{},{}\n", sig12(*c), n));
        }
        out
    }

    /// `trial,value` for every sample.
    pub fn samples_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 24);
        out.push_str("trial,value\n");
        for (t, v) in self.samples.iter().enumerate() {
            out.push_str(&format!("{t},{}\n", sig12(*v)));
        }
        out
    }
}

/// Samples `config.trials` codebooks and records `V_n/n` for each, in parallel.
pub fn run_concentration_experiment(config: &EnsembleConfig, d: &BhattacharyyaMatrix, bins: usize) -> SimulationRun {
    let samples: Vec<f64> = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| min_pairwise_statistic(&sample_codebook(config, t), d))
        .collect();
    SimulationRun::from_samples(config.clone(), samples, bins)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    /// Fraction of samples below `e_ref - eps`.
    pub lower: f64,
    /// Fraction of samples above `e_ref + eps`.
    pub upper: f64,
    /// Larger of the two Wilson 95% half-widths.
    pub radius: f64,
}

fn wilson_radius(p: f64, n: f64) -> f64 {
    const Z: f64 = 1.959_963_984_540_054;
    let z2 = Z * Z;
    Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

pub fn tail_probability_estimate(run: &SimulationRun, e_ref: f64, eps: f64) -> Result<TailEstimate> {
    let k = run.samples.len();
    if k < MIN_DIAGNOSTIC_SAMPLES {
        return Err(Error::TooFewSamples { got: k, needed: MIN_DIAGNOSTIC_SAMPLES });
    }
    let n = k as f64;
    let lower = run.samples.iter().filter(|&&x| x < e_ref - eps).count() as f64 / n;
    let upper = run.samples.iter().filter(|&&x| x > e_ref + eps).count() as f64 / n;
    let radius = wilson_radius(lower, n).max(wilson_radius(upper, n));
    Ok(TailEstimate { lower, upper, radius })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Channel, InputDistribution};
    use crate::ensemble::EnsembleKind;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn config(trials: usize) -> EnsembleConfig {
        EnsembleConfig::new(EnsembleKind::Iid, InputDistribution::uniform(2), 500, 4, trials, 1).unwrap()
    }

    fn d() -> BhattacharyyaMatrix {
        BhattacharyyaMatrix::new(&Channel::bsc(0.11).unwrap()).unwrap()
    }

    #[test]
    fn single_trial_has_zero_variance() {
        let run = run_concentration_experiment(&config(1), &d(), DEFAULT_BINS);
        assert_eq!(run.samples.len(), 1);
        assert_eq!(run.variance, 0.0);
        assert_eq!(run.histogram.counts.iter().sum::<u64>(), 1);
    }

    #[test]
    fn summary_statistics() {
        let run = run_concentration_experiment(&config(2000), &d(), 40);
        assert_eq!(run.samples.len(), 2000);
        assert_eq!(run.histogram.counts.len(), 40);
        assert_eq!(run.histogram.counts.iter().sum::<u64>(), 2000);
        let mean = run.samples.iter().sum::<f64>() / 2000.0;
        let var = run.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 1999.0;
        assert!((run.mean - mean).abs() < 1e-14);
        assert!((run.variance - var).abs() < 1e-14);
        assert!(run.variance >= 0.0);
        let z = run.normalized();
        let zm = z.iter().sum::<f64>() / z.len() as f64;
        assert!(zm.abs() < 1e-10);
    }

    #[test]
    fn thread_count_does_not_change_samples() {
        let cfg = config(300);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_concentration_experiment(&cfg, &d(), 10));
        let b = three.install(|| run_concentration_experiment(&cfg, &d(), 10));
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.samples_csv(), b.samples_csv());
    }

    #[test]
    fn histogram_edges() {
        let h = Histogram::new(&[1.0, 1.0, 1.0], 5);
        assert_eq!(h.counts, vec![3, 0, 0, 0, 0]);
        let h = Histogram::new(&[0.0, 0.5, 1.0], 2);
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.centers(), vec![0.25, 0.75]);
    }

    #[test]
    fn serialization_shapes() {
        let run = run_concentration_experiment(&config(50), &d(), 7);
        let csv = run.histogram_csv();
        assert!(csv.starts_with("bin_center,count\n"));
        assert_eq!(csv.lines().count(), 8);
        let js = run.to_json();
        assert_eq!(js["samples"]["count"], 50);
        assert_eq!(js["config"]["ensemble"], "iid");
        assert_eq!(js["histogram"]["counts"].as_array().unwrap().len(), 7);
        assert_eq!(run.samples_csv().lines().count(), 51);
    }

    fn synthetic(samples: Vec<f64>) -> SimulationRun {
        SimulationRun::from_samples(config(samples.len()), samples, 10)
    }

    #[test]
    fn tails_need_enough_samples() {
        let run = synthetic(vec![0.0; 999]);
        assert_eq!(
            tail_probability_estimate(&run, 0.0, 0.1),
            Err(Error::TooFewSamples { got: 999, needed: 1000 })
        );
    }

    #[test]
    fn wide_eps_gives_empty_tails() {
        let run = synthetic((0..2000).map(|i| i as f64 / 2000.0).collect());
        let t = tail_probability_estimate(&run, 0.5, 10.0).unwrap();
        assert_eq!((t.lower, t.upper), (0.0, 0.0));
        assert!(t.radius > 0.0 && t.radius < 0.01);
    }

    #[test]
    fn median_splits_tails() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let median = 0.5 * (sorted[9_999] + sorted[10_000]);
        let t = tail_probability_estimate(&synthetic(samples), median, 0.0).unwrap();
        assert!((t.lower - 0.5).abs() <= t.radius);
        assert!((t.upper - 0.5).abs() <= t.radius);
    }
}
