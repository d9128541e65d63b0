//! Stochastic receptor observations for one transmitted symbol.
//!
//! Each receptor is sampled once per symbol: its state at the sampling
//! instant, one complete unbound interval and one complete bound interval.
//! Receptors are independent, and the number of interferer molecules in the
//! reception space is redrawn from a Poisson law for every symbol.
//!
//! Two samplers are provided. [`sample_symbol`] draws every receptor
//! explicitly from its own substream. [`sample_statistics`] draws the
//! sufficient statistics directly from their exact laws (binomial bound
//! count, gamma-distributed total unbound time, binomial bin counts), which
//! is what the large Monte Carlo runs use.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{nonneg, positive, Error, Result};
use crate::kinetics::{bound_probability, equilibrium_distribution, LigandSpec};
use crate::rng::TrialRng;

/// Transmitted binary symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub const BOTH: [Bit; 2] = [Bit::Zero, Bit::One];

    pub fn index(self) -> usize {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

/// Default proportionality constant of the bound-time threshold `T1 = ν / k_in⁻`.
pub const DEFAULT_NU: f64 = 3.0;

/// Parameterization of one transmission setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    /// Received information-molecule concentration for bit 0 (μm⁻³).
    pub c_bit0: f64,
    /// Received information-molecule concentration for bit 1 (μm⁻³).
    pub c_bit1: f64,
    /// Mean interferer concentration in the reception space (μm⁻³).
    pub mean_c_in: f64,
    /// Reception-space volume (μm³).
    pub volume: f64,
    pub n_receptors: u64,
    pub ligand_s: LigandSpec,
    pub ligand_in: LigandSpec,
    /// Bound-time threshold constant used when binning bound durations.
    pub nu: f64,
}

impl Default for ChannelScenario {
    /// The reference operating point: `k⁺ = 20 μm³/s`, `k_s⁻ = 10 s⁻¹`,
    /// affinity ratio 0.2, `c₀ = 4 K_D^s`, `c₁ = 5 K_D^s`,
    /// `μ_c_in = 2 K_D^in`, 10⁴ receptors and `V = 4000 μm³`.
    fn default() -> Self {
        let k_on = 20.0;
        let k_s = 10.0;
        let k_in = k_s / 0.2;
        let kd_s = k_s / k_on;
        let kd_in = k_in / k_on;
        Self {
            c_bit0: 4.0 * kd_s,
            c_bit1: 5.0 * kd_s,
            mean_c_in: 2.0 * kd_in,
            volume: 4000.0,
            n_receptors: 10_000,
            ligand_s: LigandSpec::signal(k_on, k_s).expect("valid default"),
            ligand_in: LigandSpec::interferer(k_on, k_in).expect("valid default"),
            nu: DEFAULT_NU,
        }
    }
}

impl ChannelScenario {
    pub fn validate(&self) -> Result<()> {
        self.ligand_s.validate()?;
        self.ligand_in.validate()?;
        positive("c_bit0", self.c_bit0).map_err(|e| Error::scenario(e.to_string()))?;
        positive("c_bit1", self.c_bit1).map_err(|e| Error::scenario(e.to_string()))?;
        if self.c_bit0 > self.c_bit1 {
            return Err(Error::scenario(format!(
                "bit-0 concentration {} exceeds bit-1 concentration {}",
                self.c_bit0, self.c_bit1
            )));
        }
        nonneg("mean_c_in", self.mean_c_in).map_err(|e| Error::scenario(e.to_string()))?;
        positive("volume", self.volume).map_err(|e| Error::scenario(e.to_string()))?;
        positive("nu", self.nu).map_err(|e| Error::scenario(e.to_string()))?;
        if self.n_receptors < 3 {
            return Err(Error::scenario(format!(
                "at least 3 receptors are required, got {}",
                self.n_receptors
            )));
        }
        let (a, b) = (self.ligand_s.k_on, self.ligand_in.k_on);
        if (a - b).abs() > 1e-12 * a.max(b) {
            return Err(Error::scenario(format!(
                "information and interferer binding rates must be equal ({a} vs {b})"
            )));
        }
        Ok(())
    }

    /// Common binding rate `k⁺`.
    pub fn k_on(&self) -> f64 {
        self.ligand_s.k_on
    }

    pub fn signal_concentration(&self, bit: Bit) -> f64 {
        match bit {
            Bit::Zero => self.c_bit0,
            Bit::One => self.c_bit1,
        }
    }

    /// `μ_n_in = ⌊μ_c_in · V⌋`.
    pub fn mean_interferer_count(&self) -> u64 {
        (self.mean_c_in * self.volume).floor() as u64
    }

    /// Affinity ratio `η = k_s⁻ / k_in⁻`.
    pub fn affinity_ratio(&self) -> f64 {
        self.ligand_s.k_off / self.ligand_in.k_off
    }

    /// Bound-time threshold `T1 = ν / k_in⁻`.
    pub fn t1(&self) -> f64 {
        self.nu / self.ligand_in.k_off
    }

    /// Keeps `k_s⁻` and sets `k_in⁻ = k_s⁻ / η`.
    pub fn with_affinity_ratio(mut self, eta: f64) -> Result<Self> {
        positive("affinity ratio", eta)?;
        self.ligand_in = LigandSpec::interferer(self.ligand_in.k_on, self.ligand_s.k_off / eta)?;
        Ok(self)
    }

    /// Bound probability at the Poisson-mean interferer count; the
    /// saturation level reported next to sweep results.
    pub fn saturation(&self, bit: Bit) -> Result<f64> {
        let c_in = self.mean_interferer_count() as f64 / self.volume;
        bound_probability(self.signal_concentration(bit), c_in, &self.ligand_s, &self.ligand_in)
    }
}

/// Per-symbol receptor statistics, including every sampled bound interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceptorObservation {
    /// Receptors bound at the sampling instant.
    pub n_bound: u64,
    /// Sum of one complete unbound interval per receptor (s).
    pub total_unbound_time: f64,
    /// One complete bound interval per receptor (s).
    pub bound_durations: Vec<f64>,
    /// Bound intervals shorter / not shorter than `T1`.
    pub bin_counts: [u64; 2],
    pub n_in_realized: u64,
}

/// The sufficient statistics of a symbol, without individual durations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolStatistics {
    pub n_samples: u64,
    pub n_bound: u64,
    pub total_unbound_time: f64,
    pub bin_counts: [u64; 2],
    pub n_in_realized: u64,
}

impl ReceptorObservation {
    pub fn statistics(&self) -> SymbolStatistics {
        SymbolStatistics {
            n_samples: self.bound_durations.len() as u64,
            n_bound: self.n_bound,
            total_unbound_time: self.total_unbound_time,
            bin_counts: self.bin_counts,
            n_in_realized: self.n_in_realized,
        }
    }
}

/// Poisson draw of the interferer count with mean `⌊mean_c_in · V⌋`.
pub fn draw_interferer_count<R: Rng + ?Sized>(mean_c_in: f64, volume: f64, rng: &mut R) -> Result<u64> {
    nonneg("mean_c_in", mean_c_in)?;
    positive("volume", volume)?;
    let mu = (mean_c_in * volume).floor();
    if mu == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mu).map_err(|e| Error::numeric(e.to_string()))?;
    Ok(poisson.sample(rng) as u64)
}

/// Concentrations seen by the receptors for one symbol.
#[derive(Clone, Copy, Debug)]
struct SymbolChannel {
    n_in: u64,
    c_s: f64,
    c_in: f64,
    p_bound: f64,
    /// Total binding propensity of an unbound receptor (1/s).
    binding_rate: f64,
    /// Fraction of binding events by information molecules.
    alpha_s: f64,
}

impl SymbolChannel {
    fn draw<R: Rng + ?Sized>(scenario: &ChannelScenario, bit: Bit, rng: &mut R) -> Result<Self> {
        scenario.validate()?;
        let n_in = draw_interferer_count(scenario.mean_c_in, scenario.volume, rng)?;
        Self::fixed(scenario, bit, n_in)
    }

    fn fixed(scenario: &ChannelScenario, bit: Bit, n_in: u64) -> Result<Self> {
        let c_s = scenario.signal_concentration(bit);
        let c_in = n_in as f64 / scenario.volume;
        let bind_s = scenario.ligand_s.k_on * c_s;
        let bind_in = scenario.ligand_in.k_on * c_in;
        let binding_rate = bind_s + bind_in;
        if binding_rate <= 0.0 {
            return Err(Error::scenario("no ligands in the reception space; unbound intervals are undefined"));
        }
        Ok(Self {
            n_in,
            c_s,
            c_in,
            p_bound: bound_probability(c_s, c_in, &scenario.ligand_s, &scenario.ligand_in)?,
            binding_rate,
            alpha_s: bind_s / binding_rate,
        })
    }

    /// Probability that a complete bound interval is shorter than `t1`.
    fn p_short(&self, scenario: &ChannelScenario) -> f64 {
        let t1 = scenario.t1();
        self.alpha_s * -(-scenario.ligand_s.k_off * t1).exp_m1()
            + (1.0 - self.alpha_s) * -(-scenario.ligand_in.k_off * t1).exp_m1()
    }
}

/// Samples every receptor of one symbol from its own substream.
pub fn sample_symbol(scenario: &ChannelScenario, bit: Bit, rng: &mut TrialRng) -> Result<ReceptorObservation> {
    let ch = SymbolChannel::draw(scenario, bit, rng)?;
    sample_receptors(scenario, &ch, rng)
}

/// As [`sample_symbol`] with the interferer count held at `n_in`.
pub fn sample_symbol_given(
    scenario: &ChannelScenario,
    bit: Bit,
    n_in: u64,
    rng: &mut TrialRng,
) -> Result<ReceptorObservation> {
    scenario.validate()?;
    let ch = SymbolChannel::fixed(scenario, bit, n_in)?;
    sample_receptors(scenario, &ch, rng)
}

fn sample_receptors(scenario: &ChannelScenario, ch: &SymbolChannel, rng: &TrialRng) -> Result<ReceptorObservation> {
    let unbound = Exp::new(ch.binding_rate).map_err(|e| Error::numeric(e.to_string()))?;
    let off_s = Exp::new(scenario.ligand_s.k_off).map_err(|e| Error::numeric(e.to_string()))?;
    let off_in = Exp::new(scenario.ligand_in.k_off).map_err(|e| Error::numeric(e.to_string()))?;
    let t1 = scenario.t1();

    let n = scenario.n_receptors as usize;
    let mut bound_durations = Vec::with_capacity(n);
    let mut n_bound = 0;
    let mut total_unbound_time = 0.0;
    let mut bin_counts = [0u64; 2];
    for i in 0..scenario.n_receptors {
        let mut r = rng.receptor(i);
        if r.random::<f64>() < ch.p_bound {
            n_bound += 1;
        }
        total_unbound_time += unbound.sample(&mut r);
        let tau = if r.random::<f64>() < ch.alpha_s {
            off_s.sample(&mut r)
        } else {
            off_in.sample(&mut r)
        };
        bin_counts[usize::from(tau >= t1)] += 1;
        bound_durations.push(tau);
    }
    Ok(ReceptorObservation {
        n_bound,
        total_unbound_time,
        bound_durations,
        bin_counts,
        n_in_realized: ch.n_in,
    })
}

/// Draws the sufficient statistics of a symbol directly from their laws.
///
/// Equal in distribution to `sample_symbol(..).statistics()`: the bound
/// count is `Binomial(N, p_B)`, the sum of `N` exponential unbound intervals
/// is `Gamma(N, 1/(k⁺ c_tot))`, and the short-interval count is
/// `Binomial(N, p₁)` with `p₁ = Σ_j α_j (1 - e^{-k_j⁻ T1})`.
pub fn sample_statistics<R: Rng + ?Sized>(scenario: &ChannelScenario, bit: Bit, rng: &mut R) -> Result<SymbolStatistics> {
    let ch = SymbolChannel::draw(scenario, bit, rng)?;
    draw_statistics(scenario, &ch, rng)
}

/// As [`sample_statistics`] with the interferer count held at `n_in`.
pub fn sample_statistics_given<R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    bit: Bit,
    n_in: u64,
    rng: &mut R,
) -> Result<SymbolStatistics> {
    scenario.validate()?;
    let ch = SymbolChannel::fixed(scenario, bit, n_in)?;
    draw_statistics(scenario, &ch, rng)
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<u64> {
    Ok(Binomial::new(n, p.clamp(0.0, 1.0))
        .map_err(|e| Error::numeric(e.to_string()))?
        .sample(rng))
}

fn draw_statistics<R: Rng + ?Sized>(scenario: &ChannelScenario, ch: &SymbolChannel, rng: &mut R) -> Result<SymbolStatistics> {
    let n = scenario.n_receptors;
    let n_bound = binomial(n, ch.p_bound, rng)?;
    let gamma = Gamma::new(n as f64, 1.0 / ch.binding_rate).map_err(|e| Error::numeric(e.to_string()))?;
    let total_unbound_time = gamma.sample(rng);
    let short = binomial(n, ch.p_short(scenario), rng)?;
    Ok(SymbolStatistics {
        n_samples: n,
        n_bound,
        total_unbound_time,
        bin_counts: [short, n - short],
        n_in_realized: ch.n_in,
    })
}

/// Joint counts of bound intervals by time bin and by the kinetic
/// proofreading substate the receptor occupied when the ligand left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KprCounts {
    /// `[bin][substate]`: `bin` 0 is shorter than `T1`, substate 0 is the
    /// first proofreading substate.
    pub joint: [[u64; 2]; 2],
}

impl KprCounts {
    pub fn bins(&self) -> [u64; 2] {
        [self.joint[0][0] + self.joint[0][1], self.joint[1][0] + self.joint[1][1]]
    }

    /// `[n_D1, n_D2]`.
    pub fn substates(&self) -> [u64; 2] {
        [self.joint[0][0] + self.joint[1][0], self.joint[0][1] + self.joint[1][1]]
    }
}

/// Category probabilities of [`KprCounts`]: a bound interval of length τ
/// ends in the first substate with probability `e^{-βτ}`.
pub fn kpr_joint_probabilities(alpha_s: f64, beta: f64, t1: f64, spec_s: &LigandSpec, spec_in: &LigandSpec) -> [[f64; 2]; 2] {
    let mut p = [[0.0; 2]; 2];
    for (alpha, k) in [(alpha_s, spec_s.k_off), (1.0 - alpha_s, spec_in.k_off)] {
        let short = -(-k * t1).exp_m1();
        let stay = k / (k + beta);
        let stay_short = stay * -(-(k + beta) * t1).exp_m1();
        let stay_long = stay * (-(k + beta) * t1).exp();
        p[0][0] += alpha * stay_short;
        p[0][1] += alpha * (short - stay_short);
        p[1][0] += alpha * stay_long;
        p[1][1] += alpha * ((1.0 - short) - stay_long);
    }
    p
}

/// Sufficient statistics plus the joint bin/substate counts under kinetic
/// proofreading with transition rate `beta`, drawn as one multinomial.
pub fn sample_statistics_with_kpr<R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    bit: Bit,
    beta: f64,
    rng: &mut R,
) -> Result<(SymbolStatistics, KprCounts)> {
    nonneg("beta", beta)?;
    let ch = SymbolChannel::draw(scenario, bit, rng)?;
    let n = scenario.n_receptors;
    let n_bound = binomial(n, ch.p_bound, rng)?;
    let gamma = Gamma::new(n as f64, 1.0 / ch.binding_rate).map_err(|e| Error::numeric(e.to_string()))?;
    let total_unbound_time = gamma.sample(rng);

    let p = kpr_joint_probabilities(ch.alpha_s, beta, scenario.t1(), &scenario.ligand_s, &scenario.ligand_in);
    let probs = [p[0][0], p[0][1], p[1][0], p[1][1]];
    let mut counts = [0u64; 4];
    let mut remaining = n;
    let mut mass = 1.0;
    for (k, &pk) in probs.iter().enumerate().take(3) {
        let c = if mass > 0.0 { binomial(remaining, pk / mass, rng)? } else { 0 };
        counts[k] = c;
        remaining -= c;
        mass -= pk;
    }
    counts[3] = remaining;
    let kpr = KprCounts { joint: [[counts[0], counts[1]], [counts[2], counts[3]]] };
    let stats = SymbolStatistics {
        n_samples: n,
        n_bound,
        total_unbound_time,
        bin_counts: kpr.bins(),
        n_in_realized: ch.n_in,
    };
    Ok((stats, kpr))
}

/// State of the three-state receptor process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingState {
    Unbound,
    BoundSignal,
    BoundInterferer,
}

impl BindingState {
    pub fn is_bound(self) -> bool {
        !matches!(self, BindingState::Unbound)
    }
}

/// One sojourn of the receptor in a state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dwell {
    pub state: BindingState,
    pub start: f64,
    pub duration: f64,
    /// False for the first sojourn (already in progress at t = 0) and for
    /// the last one (cut at the simulation horizon).
    pub complete: bool,
}

/// Event-by-event path of a single receptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n_in: u64,
    pub c_s: f64,
    pub c_in: f64,
    pub horizon: f64,
    pub dwells: Vec<Dwell>,
}

impl Trajectory {
    pub fn fraction_bound(&self) -> f64 {
        let bound: f64 = self.dwells.iter().filter(|d| d.state.is_bound()).map(|d| d.duration).sum();
        bound / self.horizon
    }

    pub fn complete_bound_durations(&self) -> Vec<f64> {
        self.dwells
            .iter()
            .filter(|d| d.complete && d.state.is_bound())
            .map(|d| d.duration)
            .collect()
    }

    pub fn complete_unbound_durations(&self) -> Vec<f64> {
        self.dwells
            .iter()
            .filter(|d| d.complete && !d.state.is_bound())
            .map(|d| d.duration)
            .collect()
    }
}

/// Exact event-driven simulation of one receptor for `duration` seconds,
/// started from the stationary distribution. Used to validate the
/// shortcuts taken by the samplers.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    bit: Bit,
    duration: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    let ch = SymbolChannel::draw(scenario, bit, rng)?;
    simulate_receptor(ch.c_s, ch.c_in, ch.n_in, &scenario.ligand_s, &scenario.ligand_in, duration, rng)
}

/// Simulates the receptor process at fixed concentrations.
pub fn simulate_receptor<R: Rng + ?Sized>(
    c_s: f64,
    c_in: f64,
    n_in: u64,
    spec_s: &LigandSpec,
    spec_in: &LigandSpec,
    duration: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    positive("duration", duration)?;
    let eq = equilibrium_distribution(c_s, c_in, spec_s, spec_in)?;
    let bind_s = spec_s.k_on * c_s;
    let bind_in = spec_in.k_on * c_in;
    let u: f64 = rng.random();
    let mut state = if u < eq.p_unbound {
        BindingState::Unbound
    } else if u < eq.p_unbound + eq.p_bound_signal {
        BindingState::BoundSignal
    } else {
        BindingState::BoundInterferer
    };

    let mut dwells = Vec::new();
    let mut t = 0.0;
    let mut first = true;
    while t < duration {
        let rate = match state {
            BindingState::Unbound => bind_s + bind_in,
            BindingState::BoundSignal => spec_s.k_off,
            BindingState::BoundInterferer => spec_in.k_off,
        };
        if rate <= 0.0 {
            // Empty channel: the receptor never binds.
            dwells.push(Dwell { state, start: t, duration: duration - t, complete: false });
            break;
        }
        let wait = -rng.random::<f64>().ln_1p_neg() / rate;
        let complete = !first && t + wait <= duration;
        let span = wait.min(duration - t);
        dwells.push(Dwell { state, start: t, duration: span, complete });
        t += wait;
        first = false;
        state = match state {
            BindingState::Unbound => {
                if rng.random::<f64>() * (bind_s + bind_in) < bind_s {
                    BindingState::BoundSignal
                } else {
                    BindingState::BoundInterferer
                }
            }
            _ => BindingState::Unbound,
        };
    }
    Ok(Trajectory { n_in, c_s, c_in, horizon: duration, dwells })
}

trait Ln1pNeg {
    fn ln_1p_neg(self) -> f64;
}

impl Ln1pNeg for f64 {
    /// `ln(1 - u)` for `u ∈ [0, 1)`, never infinite.
    fn ln_1p_neg(self) -> f64 {
        (-self).ln_1p()
    }
}
