//! Computation networks that turn messenger counts into the detector
//! statistic, and the annihilation comparator that makes the decision.
//!
//! Every network produces an output species `Y` whose steady-state count is
//! `output_scale` times the statistic. A negative weight cannot be a
//! mass-action rate, so a weight of either sign is realized on a second
//! rail `Yn`: it is produced at rate `|w|` and consumed exactly like `Y`,
//! and `Y + Yn -> ∅` removes matching pairs. The statistic is read out as
//! `Y - Yn`, whose rate equation is the signed one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{Pulse, ReactionNetwork};
use super::receptor::TransducedCounts;
use super::ssa::simulate_ssa;
use crate::detectors::StatisticKind;
use crate::error::{positive, Error, Result};
use crate::sampler::Bit;

pub const OUTPUT: &str = "Y";
pub const OUTPUT_NEG: &str = "Yn";
pub const THRESHOLD: &str = "X";

/// Numeric choices for the computation networks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub k_on: f64,
    /// Second row of the inverse binning matrix, `(w₂₁, w₂₂)`.
    pub w: [f64; 2],
    /// `S` molecules released per second of unbound time; `S`-driven
    /// consumption runs at `k_on / s_amplification` to compensate.
    pub s_amplification: f64,
    /// Multiplier applied to every `Y` production rate and to the threshold.
    pub output_scale: f64,
    /// Rate of the pair-annihilation reactions (comparator and rails).
    pub xi: f64,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        positive("k_on", self.k_on)?;
        positive("s_amplification", self.s_amplification)?;
        positive("output_scale", self.output_scale)?;
        positive("xi", self.xi)?;
        if !self.w.iter().all(|w| w.is_finite()) {
            return Err(Error::domain("non-finite binning weights"));
        }
        Ok(())
    }
}

/// Smallest power of ten that puts the scaled threshold at or above
/// `min_count` molecules.
pub fn threshold_scale(threshold: f64, min_count: f64) -> f64 {
    if threshold.is_nan() || threshold <= 0.0 || threshold >= min_count {
        return 1.0;
    }
    10f64.powi((min_count / threshold).log10().ceil() as i32)
}

/// Number of threshold molecules `⌊λ · scale⌋`.
pub fn threshold_count(threshold: f64, scale: f64) -> u64 {
    (threshold * scale).floor().max(0.0) as u64
}

fn add_signed_production(net: &mut ReactionNetwork, source: &str, weight: f64, scale: f64) -> Result<()> {
    if weight > 0.0 {
        net.add_reaction(&[source], &[source, OUTPUT], weight * scale)?;
    } else if weight < 0.0 {
        net.add_reaction(&[source], &[source, OUTPUT_NEG], -weight * scale)?;
    }
    Ok(())
}

/// Builds the computation network of detector `kind` loaded with `counts`.
///
/// * bound count: `M` is the statistic itself; no reactions.
/// * total concentration: `R -> R + Y`, `S + Y -> S`.
/// * ratio: `D_i -> D_i + Y` at `w₂ᵢ`, `R + Y -> R`.
/// * signal concentration: `D_i -> D_i + Y` at `w₂ᵢ`, `S + Y -> S`.
pub fn build_network(kind: StatisticKind, counts: &TransducedCounts, p: &NetworkParams) -> Result<ReactionNetwork> {
    p.validate()?;
    let mut net = ReactionNetwork::new();
    let c = |v: u64| v as f64;
    let s_rate = p.k_on / p.s_amplification;
    match kind {
        StatisticKind::BoundCount => {
            net.add_species("M", c(counts.m))?;
        }
        StatisticKind::TotalConc => {
            net.add_species("R", c(counts.r))?;
            net.add_species("S", c(counts.s))?;
            net.add_species(OUTPUT, 0.0)?;
            net.add_reaction(&["R"], &["R", OUTPUT], p.output_scale)?;
            net.add_reaction(&["S", OUTPUT], &["S"], s_rate)?;
        }
        StatisticKind::Ratio | StatisticKind::SignalConc => {
            net.add_species("D1", c(counts.d1))?;
            net.add_species("D2", c(counts.d2))?;
            let (consumer, rate) = if kind == StatisticKind::Ratio {
                net.add_species("R", c(counts.r))?;
                ("R", 1.0)
            } else {
                net.add_species("S", c(counts.s))?;
                ("S", s_rate)
            };
            net.add_species(OUTPUT, 0.0)?;
            net.add_species(OUTPUT_NEG, 0.0)?;
            add_signed_production(&mut net, "D1", p.w[0], p.output_scale)?;
            add_signed_production(&mut net, "D2", p.w[1], p.output_scale)?;
            net.add_reaction(&[consumer, OUTPUT], &[consumer], rate)?;
            net.add_reaction(&[consumer, OUTPUT_NEG], &[consumer], rate)?;
            net.add_reaction(&[OUTPUT, OUTPUT_NEG], &[], p.xi)?;
        }
    }
    Ok(net)
}

/// Statistic carried by a network state (`Y - Yn`, or `M`).
pub fn read_output(net: &ReactionNetwork, state: &[f64]) -> f64 {
    let get = |n: &str| net.index(n).map_or(0.0, |i| state[i]);
    match net.index(OUTPUT) {
        Some(_) => get(OUTPUT) - get(OUTPUT_NEG),
        None => get("M"),
    }
}

/// Closed-form steady state of the output, for the same inputs as
/// [`build_network`].
pub fn steady_state_formula(kind: StatisticKind, counts: &TransducedCounts, p: &NetworkParams) -> Result<f64> {
    let c = |v: u64| v as f64;
    let produced = p.output_scale * (p.w[0] * c(counts.d1) + p.w[1] * c(counts.d2));
    let s_sink = p.k_on / p.s_amplification * c(counts.s);
    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            Ok(num / den)
        } else if num == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::domain("output has production but no consumption"))
        }
    };
    match kind {
        StatisticKind::BoundCount => Ok(c(counts.m)),
        StatisticKind::TotalConc => ratio(p.output_scale * c(counts.r), s_sink),
        StatisticKind::Ratio => ratio(produced, c(counts.r)),
        StatisticKind::SignalConc => ratio(produced, s_sink),
    }
}

/// Outcome of `Y + X -> ∅` run to completion: bit 1 only if `Y` molecules
/// survive, so a tie decides bit 0.
pub fn comparator_decide(n_y: u64, n_x: u64) -> Bit {
    Bit::from(n_y > n_x)
}

/// The comparator as a network.
pub fn comparator_network(n_y: u64, n_x: u64, xi: f64) -> Result<ReactionNetwork> {
    let mut net = ReactionNetwork::new();
    net.add_species(OUTPUT, n_y as f64)?;
    net.add_species(THRESHOLD, n_x as f64)?;
    net.add_reaction(&[OUTPUT, THRESHOLD], &[], xi)?;
    Ok(net)
}

/// Runs the comparator stochastically and returns the surviving counts
/// `(Y, X)`.
pub fn run_comparator<R: Rng + ?Sized>(n_y: u64, n_x: u64, xi: f64, rng: &mut R) -> Result<(u64, u64)> {
    let net = comparator_network(n_y, n_x, xi)?;
    let run = simulate_ssa(&net, f64::MAX, rng)?;
    Ok((run.final_state[0], run.final_state[1]))
}

/// Rates of the activation mechanism.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationParams {
    /// Activator molecules released by the activation pulse.
    pub psi_plus: f64,
    /// Deactivator molecules released by the deactivation pulse.
    pub psi_minus: f64,
    /// Activation rate per activator molecule and inactive receptor.
    pub omega: f64,
    /// Activator-deactivator annihilation rate.
    pub rho: f64,
    pub t_activate: f64,
    pub t_deactivate: f64,
    pub pulse_width: f64,
}

impl ActivationParams {
    /// Rates a factor `separation` above `fastest_rate`, with pulses of
    /// width `1e-3 · mean_bound_time`.
    pub fn separated(fastest_rate: f64, separation: f64, mean_bound_time: f64, window: f64) -> Result<Self> {
        positive("fastest_rate", fastest_rate)?;
        positive("separation", separation)?;
        positive("mean_bound_time", mean_bound_time)?;
        positive("window", window)?;
        let psi_plus = 100.0;
        let fast = separation * fastest_rate;
        let width = 1e-3 * mean_bound_time;
        Ok(Self {
            psi_plus,
            psi_minus: 2.0 * psi_plus,
            omega: fast / psi_plus,
            rho: fast / psi_plus,
            t_activate: width,
            t_deactivate: 2.0 * width + window,
            pulse_width: width,
        })
    }
}

/// Activator / deactivator network acting on `n_inactive` inactive bound
/// receptors (`BI -> BA` catalysed by `A+`).
pub fn activation_network(n_inactive: u64, p: &ActivationParams) -> Result<ReactionNetwork> {
    let mut net = ReactionNetwork::new();
    for (s, v) in [("Ap", 0.0), ("Am", 0.0), ("BI", n_inactive as f64), ("BA", 0.0)] {
        net.add_species(s, v)?;
    }
    net.add_triggered(&[], &["Ap"], p.psi_plus, Some(Pulse::new(p.t_activate, p.pulse_width)?))?;
    net.add_triggered(&[], &["Am"], p.psi_minus, Some(Pulse::new(p.t_deactivate, p.pulse_width)?))?;
    net.add_reaction(&["Ap", "Am"], &[], p.rho)?;
    net.add_reaction(&["Ap", "BI"], &["Ap", "BA"], p.omega)?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::ode::{integrate_ode, integrate_until, OdeOptions};
    use crate::rng::TrialRng;

    fn params() -> NetworkParams {
        NetworkParams { k_on: 20.0, w: [-0.099_769, 1.904_14], s_amplification: 1.0, output_scale: 1.0, xi: 1.0 }
    }

    #[test]
    fn network_dumps() {
        let counts = TransducedCounts { s: 71, r: 10_000, d1: 8000, d2: 2000, m: 0 };
        let drut = build_network(StatisticKind::TotalConc, &counts, &params()).unwrap();
        assert_eq!(drut.dump(), "R -> R + Y @ 1\nS + Y -> S @ 20\n");
        let drbt = build_network(StatisticKind::Ratio, &counts, &params()).unwrap();
        assert_eq!(
            drbt.dump(),
            "D1 -> D1 + Yn @ 0.099769\nD2 -> D2 + Y @ 1.90414\nR + Y -> R @ 1\nR + Yn -> R @ 1\nY + Yn -> ∅ @ 1\n"
        );
        let drubt = build_network(StatisticKind::SignalConc, &counts, &params()).unwrap();
        assert!(drubt.dump().contains("S + Y -> S @ 20\n"));
    }

    #[test]
    fn ode_steady_states_match_formulas() {
        let p = NetworkParams { s_amplification: 1000.0, output_scale: 1000.0, ..params() };
        let counts = TransducedCounts { s: 71_429, r: 10_000, d1: 8076, d2: 1924, m: 8571 };
        for kind in StatisticKind::ALL {
            let net = build_network(kind, &counts, &p).unwrap();
            let sol = integrate_ode(&net, 1e3, &OdeOptions { record: false, ..Default::default() }).unwrap();
            let got = read_output(&net, &sol.steady_state);
            let want = steady_state_formula(kind, &counts, &p).unwrap();
            assert!(((got - want) / want).abs() < 1e-6, "{kind}: {got} vs {want}");
        }
    }

    #[test]
    fn zero_production_gives_zero_output() {
        let counts = TransducedCounts { s: 100, r: 0, d1: 0, d2: 0, m: 0 };
        let net = build_network(StatisticKind::TotalConc, &counts, &params()).unwrap();
        let sol = integrate_ode(&net, 10.0, &OdeOptions::default()).unwrap();
        assert_eq!(read_output(&net, &sol.steady_state), 0.0);
    }

    #[test]
    fn comparator_rules() {
        assert_eq!(comparator_decide(10, 5), Bit::One);
        assert_eq!(comparator_decide(5, 10), Bit::Zero);
        assert_eq!(comparator_decide(7, 7), Bit::Zero);
        let mut rng = TrialRng::from_seed(1);
        assert_eq!(run_comparator(10, 5, 1.0, &mut rng).unwrap(), (5, 0));
        assert_eq!(run_comparator(5, 10, 1.0, &mut rng).unwrap(), (0, 5));
        assert_eq!(run_comparator(6, 6, 1.0, &mut rng).unwrap(), (0, 0));
    }

    #[test]
    fn threshold_scaling() {
        assert_eq!(threshold_scale(8600.0, 1000.0), 1.0);
        assert_eq!(threshold_scale(0.2857, 1000.0), 10_000.0);
        assert!(threshold_count(0.2857, 10_000.0) >= 1000);
        assert_eq!(threshold_count(8590.7, 1.0), 8590);
    }

    #[test]
    fn activation_pulse_activates_then_clears() {
        let p = ActivationParams::separated(140.0, 1e3, 1.0 / 38.6, 0.02).unwrap();
        let net = activation_network(100, &p).unwrap();
        let opts = OdeOptions { record: false, ..Default::default() };
        let mid = integrate_until(&net, p.t_deactivate, &opts).unwrap();
        assert!(mid[3] > 100.0 - 1e-6, "activated {}", mid[3]);
        let sol = integrate_ode(&net, 10.0, &opts).unwrap();
        assert!(sol.steady_state[0] < 1e-6, "activator left {}", sol.steady_state[0]);
        assert!((sol.steady_state[2] + sol.steady_state[3] - 100.0).abs() < 1e-6);
    }
}
