//! Threshold detection on a single statistic and bit-error analysis.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    evaluate_statistics, moments_alpha, moments_cs, moments_ctot, moments_nbr, scenario_binning, GaussianMoments,
    StatisticValues, VarianceForm,
};
use crate::rng::SeedStreams;
use crate::sampler::{sample_statistics, Bit, ChannelScenario};
use crate::stats::{erfc, ln_normal_pdf};

/// The four detection methods, named after the statistic they threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatisticKind {
    /// Number of bound receptors (DNBR).
    BoundCount,
    /// Total ligand concentration from unbound intervals (DRUT).
    TotalConc,
    /// Information-ligand fraction from binned bound intervals (DRBT).
    Ratio,
    /// Information-ligand concentration from both interval types (DRUBT).
    SignalConc,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 4] =
        [StatisticKind::BoundCount, StatisticKind::TotalConc, StatisticKind::Ratio, StatisticKind::SignalConc];

    /// Short detector label used in files and on the command line.
    pub fn label(self) -> &'static str {
        match self {
            StatisticKind::BoundCount => "dnbr",
            StatisticKind::TotalConc => "drut",
            StatisticKind::Ratio => "drbt",
            StatisticKind::SignalConc => "drubt",
        }
    }

    pub fn moments(self, scenario: &ChannelScenario, bit: Bit, form: VarianceForm) -> Result<GaussianMoments> {
        match self {
            StatisticKind::BoundCount => moments_nbr(scenario, bit),
            StatisticKind::TotalConc => moments_ctot(scenario, bit, form),
            StatisticKind::Ratio => moments_alpha(scenario, bit),
            StatisticKind::SignalConc => moments_cs(scenario, bit, form),
        }
    }

    pub fn value(self, v: &StatisticValues) -> f64 {
        match self {
            StatisticKind::BoundCount => v.bound_count,
            StatisticKind::TotalConc => v.total_conc,
            StatisticKind::Ratio => v.ratio,
            StatisticKind::SignalConc => v.signal_conc,
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        StatisticKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::config(format!("unknown detector '{s}' (expected dnbr, drut, drbt or drubt)")))
    }
}

/// Gaussian likelihoods of one statistic under both bits and the
/// minimum-error threshold between them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionModel {
    pub statistic_kind: StatisticKind,
    pub moments_bit0: GaussianMoments,
    pub moments_bit1: GaussianMoments,
    pub threshold: f64,
}

impl DecisionModel {
    pub fn build(scenario: &ChannelScenario, kind: StatisticKind, form: VarianceForm) -> Result<Self> {
        let m0 = kind.moments(scenario, Bit::Zero, form)?;
        let m1 = kind.moments(scenario, Bit::One, form)?;
        Self::from_moments(kind, m0, m1)
    }

    pub fn from_moments(kind: StatisticKind, m0: GaussianMoments, m1: GaussianMoments) -> Result<Self> {
        if m1.mean < m0.mean {
            return Err(Error::numeric(format!(
                "{kind}: bit-1 mean {} is below bit-0 mean {}",
                m1.mean, m0.mean
            )));
        }
        Ok(Self { statistic_kind: kind, moments_bit0: m0, moments_bit1: m1, threshold: optimal_threshold(m0, m1)? })
    }

    /// Relative mismatch of the two likelihoods at the threshold.
    pub fn equal_density_residual(&self) -> f64 {
        let l0 = ln_normal_pdf(self.threshold, self.moments_bit0.mean, self.moments_bit0.variance);
        let l1 = ln_normal_pdf(self.threshold, self.moments_bit1.mean, self.moments_bit1.variance);
        -(-(l0 - l1).abs()).exp_m1()
    }
}

/// Minimum-error threshold for equiprobable Gaussian hypotheses: the
/// crossing of the two densities that lies on the bit-1 side of `m0`.
///
/// Evaluated as `m0 + v0 (d² + v1 L) / (v0 d + σ0 σ1 √(d² + γ L))` with
/// `d = m1 − m0`, `γ = v1 − v0`, `L = ln(v1/v0)`, which is the usual
/// quadratic root with the cancellation between its two terms removed.
pub fn optimal_threshold(m0: GaussianMoments, m1: GaussianMoments) -> Result<f64> {
    let (v0, v1) = (m0.variance, m1.variance);
    if !(v0 > 0.0 && v1 > 0.0) {
        return Err(Error::domain("threshold requires positive variances"));
    }
    let gamma = v1 - v0;
    let d = m1.mean - m0.mean;
    if gamma.abs() < 1e-12 * v0.max(v1) {
        return Ok(0.5 * (m0.mean + m1.mean));
    }
    let l = (v1 / v0).ln();
    let disc = d * d + gamma * l;
    if disc < 0.0 {
        return Err(Error::numeric(format!("negative threshold discriminant {disc}")));
    }
    let denom = v0 * d + (v0 * v1).sqrt() * disc.sqrt();
    if denom == 0.0 {
        return Ok(0.5 * (m0.mean + m1.mean));
    }
    let lambda = m0.mean + v0 * (d * d + v1 * l) / denom;
    if !lambda.is_finite() {
        return Err(Error::numeric("non-finite threshold"));
    }
    Ok(lambda)
}

/// Hard decision; a value exactly at the threshold decides bit 0.
pub fn decide(value: f64, model: &DecisionModel) -> Bit {
    Bit::from(value > model.threshold)
}

/// Bit-error probability with equal priors at the model's threshold.
pub fn analytic_bep(model: &DecisionModel) -> f64 {
    bep_at_threshold(model, model.threshold)
}

/// Bit-error probability of `model`'s likelihoods at an arbitrary threshold.
pub fn bep_at_threshold(model: &DecisionModel, threshold: f64) -> f64 {
    let (m0, m1) = (model.moments_bit0, model.moments_bit1);
    0.25 * (erfc((threshold - m0.mean) / (2.0 * m0.variance).sqrt())
        + erfc((m1.mean - threshold) / (2.0 * m1.variance).sqrt()))
}

/// Measured and predicted bit-error probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BepResult {
    pub analytic_bep: f64,
    pub mc_bep: f64,
    pub mc_trials: u64,
    pub mc_errors: u64,
    /// Half-width of the 95% Wilson interval around `mc_bep`.
    pub mc_ci95: f64,
}

impl BepResult {
    fn new(analytic_bep: f64, errors: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p = errors as f64 / n;
        let z = 1.96;
        let ci = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
        Self { analytic_bep, mc_bep: p, mc_trials: trials, mc_errors: errors, mc_ci95: ci }
    }

    /// Standard error of an error count with the analytic rate.
    pub fn binomial_std_error(&self) -> f64 {
        (self.analytic_bep * (1.0 - self.analytic_bep) / self.mc_trials as f64).sqrt()
    }
}

pub const MIN_MC_TRIALS: u64 = 1000;

/// Monte Carlo bit-error probability of one detector; see
/// [`monte_carlo_bep_many`].
pub fn monte_carlo_bep(
    scenario: &ChannelScenario,
    kind: StatisticKind,
    trials: u64,
    streams: &SeedStreams,
) -> Result<BepResult> {
    let model = DecisionModel::build(scenario, kind, VarianceForm::Closed)?;
    Ok(monte_carlo_bep_many(scenario, &[model], trials, streams)?[0])
}

/// Transmits `trials` equiprobable random bits and applies every model to
/// the same received symbols. Trial `t` draws from stream `t` only, and
/// error counts are summed as integers, so results do not depend on thread
/// count or scheduling.
pub fn monte_carlo_bep_many(
    scenario: &ChannelScenario,
    models: &[DecisionModel],
    trials: u64,
    streams: &SeedStreams,
) -> Result<Vec<BepResult>> {
    if trials < MIN_MC_TRIALS {
        return Err(Error::domain(format!("at least {MIN_MC_TRIALS} trials are required, got {trials}")));
    }
    scenario.validate()?;
    let scheme = scenario_binning(scenario)?;
    let k_on = scenario.k_on();

    let run_trial = |t: u64| -> Result<Vec<u64>> {
        let mut rng = streams.trial(t);
        let bit = Bit::from(rng.random::<bool>());
        let stats = sample_statistics(scenario, bit, &mut rng)?;
        let values = evaluate_statistics(&stats, &scheme, k_on)?;
        Ok(models
            .iter()
            .map(|m| u64::from(decide(m.statistic_kind.value(&values), m) != bit))
            .collect())
    };
    let add = |mut a: Vec<u64>, b: Vec<u64>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    };

    let errors = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..trials)
                .into_par_iter()
                .map(run_trial)
                .try_reduce(|| vec![0; models.len()], |a, b| Ok(add(a, b)))?
        }
        #[cfg(not(feature = "parallel"))]
        {
            let mut acc = vec![0; models.len()];
            for t in 0..trials {
                acc = add(acc, run_trial(t)?);
            }
            acc
        }
    };

    Ok(models
        .iter()
        .zip(errors)
        .map(|(m, e)| BepResult::new(analytic_bep(m), e, trials))
        .collect())
}
