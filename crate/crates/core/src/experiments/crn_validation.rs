//! End-to-end check of the molecular implementation: every symbol is
//! decided once directly from its statistic and once by loading the
//! messenger counts into the computation network, solving it to steady
//! state and applying the comparator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crn::{
    build_network, comparator_decide, integrate_ode, integrate_until, kpr_rate, read_output, simulate_ssa,
    steady_state_formula, threshold_count, threshold_scale, transduce_statistics, NetworkParams, OdeOptions,
    TransducedCounts, DEFAULT_KAPPA,
};
use crate::detectors::{decide, DecisionModel, StatisticKind};
use crate::error::{Error, Result};
use crate::estimators::{evaluate_statistics, scenario_binning, VarianceForm};
use crate::rng::{SeedStreams, TrialRng};
use crate::sampler::{sample_statistics_with_kpr, Bit, ChannelScenario, KprCounts, SymbolStatistics};
use crate::stats::SampleSummary;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrnValidationOptions {
    pub symbols: u64,
    pub seed: u64,
    /// Proofreading rate as a multiple of `1 / T1`.
    pub kappa: f64,
    /// `S` molecules per second of unbound time.
    pub s_amplification: f64,
    /// Output scales are chosen so the scaled threshold has at least this
    /// many molecules.
    pub min_threshold_count: f64,
    pub xi: f64,
    pub variance: VarianceForm,
    /// ODE horizon; reaching it without settling is an error.
    pub t_end: f64,
}

impl Default for CrnValidationOptions {
    fn default() -> Self {
        Self {
            symbols: 10_000,
            seed: 1,
            kappa: DEFAULT_KAPPA,
            s_amplification: 1000.0,
            min_threshold_count: 1000.0,
            xi: 1.0,
            variance: VarianceForm::Closed,
            t_end: 100.0,
        }
    }
}

pub const MIN_SYMBOLS: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrnDetectorReport {
    pub detector: &'static str,
    pub threshold: f64,
    pub output_scale: f64,
    pub threshold_molecules: u64,
    /// Fraction of symbols where the network (ideal transduction) and the
    /// direct rule agree.
    pub ideal_agreement: f64,
    /// Same with proofreading transduction.
    pub kpr_agreement: f64,
    pub direct_bep: f64,
    pub ideal_bep: f64,
    pub kpr_bep: f64,
    /// Largest relative gap between simulated and closed-form steady state.
    pub max_steady_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrnValidationReport {
    pub symbols: u64,
    pub seed: u64,
    pub kpr_rate: f64,
    pub detectors: Vec<CrnDetectorReport>,
    /// Mean proofreading first-substate count and mean short-bin count.
    pub kpr_d1_mean: f64,
    pub short_bin_mean: f64,
}

impl CrnValidationReport {
    pub fn get(&self, kind: StatisticKind) -> Option<&CrnDetectorReport> {
        self.detectors.iter().find(|d| d.detector == kind.label())
    }

    pub fn kpr_relative_gap(&self) -> f64 {
        (self.kpr_d1_mean - self.short_bin_mean).abs() / self.short_bin_mean
    }
}

struct Plan {
    model: DecisionModel,
    params: NetworkParams,
    threshold_molecules: u64,
}

/// Network parameters used for detector `model`.
fn plan(scenario: &ChannelScenario, model: DecisionModel, opts: &CrnValidationOptions) -> Result<Plan> {
    let scheme = scenario_binning(scenario)?;
    let output_scale = match model.statistic_kind {
        // M already carries the amplification.
        StatisticKind::BoundCount => opts.s_amplification,
        _ => threshold_scale(model.threshold, opts.min_threshold_count),
    };
    let params = NetworkParams {
        k_on: scenario.k_on(),
        w: scheme.w[1],
        s_amplification: opts.s_amplification,
        output_scale,
        xi: opts.xi,
    };
    Ok(Plan { model, params, threshold_molecules: threshold_count(model.threshold, output_scale) })
}

/// Steady-state output of the network loaded with `counts`, and its
/// relative distance from the closed form.
pub fn network_output(
    kind: StatisticKind,
    counts: &TransducedCounts,
    params: &NetworkParams,
    t_end: f64,
) -> Result<(f64, f64)> {
    let formula = steady_state_formula(kind, counts, params)?;
    let net = build_network(kind, counts, params)?;
    let y = if net.reactions.is_empty() {
        read_output(&net, &net.initial_state())
    } else {
        let sol = integrate_ode(&net, t_end, &OdeOptions { record: false, ..OdeOptions::default() })?;
        read_output(&net, &sol.steady_state)
    };
    Ok((y, (y - formula).abs() / formula.abs().max(1.0)))
}

struct SymbolOutcome {
    bit: Bit,
    direct: Vec<Bit>,
    ideal: Vec<Bit>,
    kpr: Vec<Bit>,
    steady_error: Vec<f64>,
    d1: u64,
    short: u64,
}

fn run_symbol(
    scenario: &ChannelScenario,
    plans: &[Plan],
    beta: f64,
    opts: &CrnValidationOptions,
    rng: &mut TrialRng,
) -> Result<SymbolOutcome> {
    let bit = Bit::from(rng.random::<bool>());
    let (stats, kpr): (SymbolStatistics, KprCounts) = sample_statistics_with_kpr(scenario, bit, beta, rng)?;
    let values = evaluate_statistics(&stats, &scenario_binning(scenario)?, scenario.k_on())?;
    let mut out = SymbolOutcome {
        bit,
        direct: Vec::new(),
        ideal: Vec::new(),
        kpr: Vec::new(),
        steady_error: Vec::new(),
        d1: kpr.substates()[0],
        short: stats.bin_counts[0],
    };
    for p in plans {
        let kind = p.model.statistic_kind;
        out.direct.push(decide(kind.value(&values), &p.model));
        let mut worst: f64 = 0.0;
        for (mode, sink) in [(None, &mut out.ideal), (Some(&kpr), &mut out.kpr)] {
            let counts = transduce_statistics(kind, &stats, mode, opts.s_amplification)?;
            let (y, err) = network_output(kind, &counts, &p.params, opts.t_end)?;
            worst = worst.max(err);
            sink.push(comparator_decide(y.max(0.0).floor() as u64, p.threshold_molecules));
        }
        out.steady_error.push(worst);
    }
    Ok(out)
}

/// Runs `opts.symbols` random symbols through every detector.
pub fn run_crn_validation(
    scenario: &ChannelScenario,
    detectors: &[StatisticKind],
    opts: &CrnValidationOptions,
) -> Result<CrnValidationReport> {
    if opts.symbols < MIN_SYMBOLS {
        return Err(Error::config(format!("at least {MIN_SYMBOLS} symbols are required")));
    }
    if detectors.is_empty() {
        return Err(Error::config("no detectors selected"));
    }
    scenario.validate()?;
    let beta = kpr_rate(scenario.t1(), opts.kappa)?;
    let plans = detectors
        .iter()
        .map(|&k| plan(scenario, DecisionModel::build(scenario, k, opts.variance)?, opts))
        .collect::<Result<Vec<_>>>()?;
    let streams = SeedStreams::new(opts.seed);
    let one = |t: u64| run_symbol(scenario, &plans, beta, opts, &mut streams.trial(t));
    let outcomes: Vec<SymbolOutcome> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..opts.symbols).into_par_iter().map(one).collect::<Result<_>>()?
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..opts.symbols).map(one).collect::<Result<_>>()?
        }
    };

    let n = opts.symbols as f64;
    let frac = |f: &dyn Fn(&SymbolOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n;
    let detectors = plans
        .iter()
        .enumerate()
        .map(|(i, p)| CrnDetectorReport {
            detector: p.model.statistic_kind.label(),
            threshold: p.model.threshold,
            output_scale: p.params.output_scale,
            threshold_molecules: p.threshold_molecules,
            ideal_agreement: frac(&|o| o.ideal[i] == o.direct[i]),
            kpr_agreement: frac(&|o| o.kpr[i] == o.direct[i]),
            direct_bep: frac(&|o| o.direct[i] != o.bit),
            ideal_bep: frac(&|o| o.ideal[i] != o.bit),
            kpr_bep: frac(&|o| o.kpr[i] != o.bit),
            max_steady_error: outcomes.iter().map(|o| o.steady_error[i]).fold(0.0, f64::max),
        })
        .collect();
    Ok(CrnValidationReport {
        symbols: opts.symbols,
        seed: opts.seed,
        kpr_rate: beta,
        detectors,
        kpr_d1_mean: outcomes.iter().map(|o| o.d1 as f64).sum::<f64>() / n,
        short_bin_mean: outcomes.iter().map(|o| o.short as f64).sum::<f64>() / n,
    })
}

/// Stochastic versus deterministic output at time `t_end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SsaOdeCheck {
    pub ode: f64,
    pub ssa_mean: f64,
    pub ssa_std_error: f64,
    pub runs: usize,
}

impl SsaOdeCheck {
    pub fn z(&self) -> f64 {
        (self.ssa_mean - self.ode) / self.ssa_std_error
    }
}

/// Runs the network `runs` times with the exact stochastic simulator and
/// compares the mean output at `t_end` with the rate equations. The output
/// reactions are first order in `Y` (or mass-action pairs whose difference
/// is linear), so the two means coincide.
pub fn ssa_versus_ode(
    kind: StatisticKind,
    counts: &TransducedCounts,
    params: &NetworkParams,
    t_end: f64,
    runs: usize,
    seed: u64,
) -> Result<SsaOdeCheck> {
    if runs < 2 {
        return Err(Error::config("at least two stochastic runs are required"));
    }
    let net = build_network(kind, counts, params)?;
    let ode = read_output(&net, &integrate_until(&net, t_end, &OdeOptions::default())?);
    let streams = SeedStreams::new(seed);
    let ys = (0..runs)
        .map(|r| {
            let run = simulate_ssa(&net, t_end, &mut streams.trial(r as u64))?;
            let state: Vec<f64> = run.final_state.iter().map(|&c| c as f64).collect();
            Ok(read_output(&net, &state))
        })
        .collect::<Result<Vec<f64>>>()?;
    let s = SampleSummary::from_slice(&ys);
    Ok(SsaOdeCheck { ode, ssa_mean: s.mean, ssa_std_error: s.std_error_mean(), runs })
}
