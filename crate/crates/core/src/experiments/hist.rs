//! Empirical distributions of the four statistics against their Gaussian
//! models.

use serde::Serialize;

use crate::detectors::StatisticKind;
use crate::error::{Error, Result};
use crate::estimators::{evaluate_statistics, scenario_binning, VarianceForm};
use crate::rng::SeedStreams;
use crate::sampler::{sample_statistics, Bit, ChannelScenario};
use crate::stats::{ks_distance, normal_cdf, normal_pdf, SampleSummary};

pub const MIN_ITERATIONS: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatisticHistogram {
    pub detector: &'static str,
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Gaussian model density at the bin centres, scaled to counts.
    pub model_counts: Vec<f64>,
    pub model_mean: f64,
    pub model_variance: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub mean_std_error: f64,
    pub variance_std_error: f64,
    /// Kolmogorov-Smirnov distance to the model.
    pub ks: f64,
}

impl StatisticHistogram {
    /// Deviation of the sample mean in standard errors.
    pub fn mean_z(&self) -> f64 {
        (self.sample_mean - self.model_mean) / self.mean_std_error
    }

    pub fn variance_z(&self) -> f64 {
        (self.sample_variance - self.model_variance) / self.variance_std_error
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramReport {
    pub bit: u8,
    pub iterations: u64,
    pub seed: u64,
    pub statistics: Vec<StatisticHistogram>,
}

impl HistogramReport {
    pub fn get(&self, kind: StatisticKind) -> Option<&StatisticHistogram> {
        self.statistics.iter().find(|s| s.detector == kind.label())
    }
}

/// Draws `iterations` symbols for `bit` and summarizes every statistic.
pub fn emit_histograms(
    scenario: &ChannelScenario,
    bit: Bit,
    iterations: u64,
    bins: usize,
    seed: u64,
    form: VarianceForm,
) -> Result<HistogramReport> {
    if iterations < MIN_ITERATIONS {
        return Err(Error::config(format!("at least {MIN_ITERATIONS} iterations are required")));
    }
    if bins == 0 {
        return Err(Error::config("at least one histogram bin is required"));
    }
    scenario.validate()?;
    let scheme = scenario_binning(scenario)?;
    let streams = SeedStreams::new(seed);
    let draw = |t: u64| -> Result<[f64; 4]> {
        let mut rng = streams.trial(t);
        let v = evaluate_statistics(&sample_statistics(scenario, bit, &mut rng)?, &scheme, scenario.k_on())?;
        Ok(StatisticKind::ALL.map(|k| k.value(&v)))
    };
    let samples: Vec<[f64; 4]> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..iterations).into_par_iter().map(draw).collect::<Result<_>>()?
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..iterations).map(draw).collect::<Result<_>>()?
        }
    };

    let statistics = StatisticKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let xs: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            let model = kind.moments(scenario, bit, form)?;
            let summary = SampleSummary::from_slice(&xs);
            let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
            let edges: Vec<f64> = (0..=bins).map(|j| lo + j as f64 * width).collect();
            let mut counts = vec![0u64; bins];
            for &x in &xs {
                counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
            }
            let model_counts = edges
                .windows(2)
                .map(|e| normal_pdf(0.5 * (e[0] + e[1]), model.mean, model.variance) * width * iterations as f64)
                .collect();
            Ok(StatisticHistogram {
                detector: kind.label(),
                edges,
                counts,
                model_counts,
                model_mean: model.mean,
                model_variance: model.variance,
                sample_mean: summary.mean,
                sample_variance: summary.variance,
                mean_std_error: summary.std_error_mean(),
                variance_std_error: summary.std_error_variance(),
                ks: ks_distance(&xs, |x| normal_cdf(x, model.mean, model.variance)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HistogramReport { bit: bit.index() as u8, iterations, seed, statistics })
}
