//! Receptor state machines that turn one sampling period of binding
//! activity into counts of intracellular messenger molecules.
//!
//! Activation by the pulse of activator molecules is treated as
//! instantaneous: at the sampling instant every inactive receptor takes its
//! activation transition, and the receptor then follows binding, unbinding
//! and proofreading transitions until it reaches a state from which no
//! further messenger can be released.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detectors::StatisticKind;
use crate::error::{nonneg, positive, Error, Result};
use crate::kinetics::LigandSpec;
use crate::sampler::{KprCounts, ReceptorObservation, SymbolStatistics};

/// Default proofreading tuning constant, `β = κ / T1`.
pub const DEFAULT_KAPPA: f64 = 0.6;

/// Proofreading transition rate `κ / t1`.
pub fn kpr_rate(t1: f64, kappa: f64) -> Result<f64> {
    positive("t1", t1)?;
    nonneg("kappa", kappa)?;
    Ok(kappa / t1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReceptorState {
    Unbound,
    UnboundInactive,
    /// Activated while unbound; waits for the in-progress unbound interval to end.
    UnboundPrimed,
    UnboundActive,
    BoundInactive,
    BoundActive,
    /// First proofreading substate.
    BoundKpr1,
    /// Second proofreading substate.
    BoundKpr2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stimulus {
    Activation,
    Binding,
    Unbinding,
    Proofreading,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Messenger {
    M,
    S,
    R,
    D1,
    D2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: ReceptorState,
    pub to: ReceptorState,
    pub stimulus: Stimulus,
    pub emits: Vec<Messenger>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceptorDesign {
    pub kind: StatisticKind,
    pub states: Vec<ReceptorState>,
    pub transitions: Vec<Transition>,
    /// States releasing a messenger at a constant rate while occupied.
    pub continuous: Vec<(ReceptorState, Messenger)>,
    /// States the receptor may occupy when the sampling period starts.
    pub idle_unbound: ReceptorState,
    pub idle_bound: ReceptorState,
    /// Reaching one of these after activation ends the receptor's sampling.
    pub terminal: Vec<ReceptorState>,
}

fn tr(from: ReceptorState, to: ReceptorState, stimulus: Stimulus, emits: &[Messenger]) -> Transition {
    Transition { from, to, stimulus, emits: emits.to_vec() }
}

impl ReceptorDesign {
    pub fn new(kind: StatisticKind) -> Self {
        use Messenger::*;
        use ReceptorState::*;
        use Stimulus::*;
        match kind {
            StatisticKind::BoundCount => Self {
                kind,
                states: vec![Unbound, BoundInactive, BoundActive],
                transitions: vec![
                    tr(Unbound, BoundInactive, Binding, &[]),
                    tr(BoundInactive, Unbound, Unbinding, &[]),
                    tr(BoundInactive, BoundActive, Activation, &[]),
                    tr(BoundActive, Unbound, Unbinding, &[M]),
                ],
                continuous: vec![],
                idle_unbound: Unbound,
                idle_bound: BoundInactive,
                terminal: vec![Unbound],
            },
            StatisticKind::TotalConc => Self {
                kind,
                states: vec![UnboundInactive, UnboundPrimed, UnboundActive, BoundInactive, BoundActive],
                transitions: vec![
                    tr(UnboundInactive, BoundInactive, Binding, &[]),
                    tr(BoundInactive, UnboundInactive, Unbinding, &[]),
                    tr(UnboundInactive, UnboundPrimed, Activation, &[]),
                    tr(BoundInactive, BoundActive, Activation, &[]),
                    tr(UnboundPrimed, BoundActive, Binding, &[]),
                    tr(BoundActive, UnboundActive, Unbinding, &[]),
                    tr(UnboundActive, BoundInactive, Binding, &[R]),
                ],
                continuous: vec![(UnboundActive, S)],
                idle_unbound: UnboundInactive,
                idle_bound: BoundInactive,
                terminal: vec![BoundInactive],
            },
            StatisticKind::Ratio => Self {
                kind,
                states: vec![UnboundInactive, BoundInactive, UnboundActive, BoundActive, BoundKpr1, BoundKpr2],
                transitions: vec![
                    tr(UnboundInactive, BoundInactive, Binding, &[]),
                    tr(BoundInactive, UnboundInactive, Unbinding, &[]),
                    tr(UnboundInactive, UnboundActive, Activation, &[]),
                    tr(BoundInactive, BoundActive, Activation, &[]),
                    tr(BoundActive, UnboundActive, Unbinding, &[]),
                    tr(UnboundActive, BoundKpr1, Binding, &[]),
                    tr(BoundKpr1, BoundKpr2, Proofreading, &[]),
                    tr(BoundKpr1, UnboundInactive, Unbinding, &[R, D1]),
                    tr(BoundKpr2, UnboundInactive, Unbinding, &[R, D2]),
                ],
                continuous: vec![],
                idle_unbound: UnboundInactive,
                idle_bound: BoundInactive,
                terminal: vec![UnboundInactive],
            },
            StatisticKind::SignalConc => Self {
                kind,
                states: vec![
                    UnboundInactive,
                    UnboundPrimed,
                    UnboundActive,
                    BoundInactive,
                    BoundActive,
                    BoundKpr1,
                    BoundKpr2,
                ],
                transitions: vec![
                    tr(UnboundInactive, BoundInactive, Binding, &[]),
                    tr(BoundInactive, UnboundInactive, Unbinding, &[]),
                    tr(UnboundInactive, UnboundPrimed, Activation, &[]),
                    tr(BoundInactive, BoundActive, Activation, &[]),
                    tr(UnboundPrimed, BoundActive, Binding, &[]),
                    tr(BoundActive, UnboundActive, Unbinding, &[]),
                    tr(UnboundActive, BoundKpr1, Binding, &[]),
                    tr(BoundKpr1, BoundKpr2, Proofreading, &[]),
                    tr(BoundKpr1, UnboundInactive, Unbinding, &[D1]),
                    tr(BoundKpr2, UnboundInactive, Unbinding, &[D2]),
                ],
                continuous: vec![(UnboundActive, S)],
                idle_unbound: UnboundInactive,
                idle_bound: BoundInactive,
                terminal: vec![UnboundInactive],
            },
        }
    }

    pub fn is_bound(state: ReceptorState) -> bool {
        matches!(
            state,
            ReceptorState::BoundInactive | ReceptorState::BoundActive | ReceptorState::BoundKpr1 | ReceptorState::BoundKpr2
        )
    }

    fn outgoing(&self, state: ReceptorState) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == state)
    }

    /// Target of the activation transition from `state`, if any.
    pub fn activate(&self, state: ReceptorState) -> ReceptorState {
        self.outgoing(state)
            .find(|t| t.stimulus == Stimulus::Activation)
            .map_or(state, |t| t.to)
    }

    /// Every state is reachable from the idle states.
    pub fn all_states_reachable(&self) -> bool {
        let mut seen = vec![self.idle_unbound, self.idle_bound];
        let mut i = 0;
        while i < seen.len() {
            let s = seen[i];
            for t in self.outgoing(s) {
                if !seen.contains(&t.to) {
                    seen.push(t.to);
                }
            }
            i += 1;
        }
        self.states.iter().all(|s| seen.contains(s))
    }
}

/// Messenger output of one or many receptors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MessengerTally {
    pub m: u64,
    pub r: u64,
    pub d1: u64,
    pub d2: u64,
    /// Time spent in continuously emitting states (s).
    pub emitting_time: f64,
}

impl MessengerTally {
    fn add(&mut self, m: Messenger) {
        match m {
            Messenger::M => self.m += 1,
            Messenger::R => self.r += 1,
            Messenger::D1 => self.d1 += 1,
            Messenger::D2 => self.d2 += 1,
            Messenger::S => {}
        }
    }

    pub fn merge(&mut self, o: &MessengerTally) {
        self.m += o.m;
        self.r += o.r;
        self.d1 += o.d1;
        self.d2 += o.d2;
        self.emitting_time += o.emitting_time;
    }
}

/// Binding environment of a receptor during one sampling period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BindingEnvironment {
    pub c_s: f64,
    pub c_in: f64,
    pub spec_s: LigandSpec,
    pub spec_in: LigandSpec,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ligand {
    Signal,
    Interferer,
}

/// Follows one receptor from the sampling instant until it reaches a
/// terminal state. `bound` gives the ligand bound at the sampling instant.
fn walk_one<R: Rng + ?Sized>(
    design: &ReceptorDesign,
    env: &BindingEnvironment,
    mut bound: Option<Ligand>,
    rng: &mut R,
) -> Result<MessengerTally> {
    let bind_s = env.spec_s.k_on * env.c_s;
    let bind_total = bind_s + env.spec_in.k_on * env.c_in;
    let mut state = design.activate(if bound.is_some() { design.idle_bound } else { design.idle_unbound });
    let mut tally = MessengerTally::default();
    let mut steps = 0;
    while !design.terminal.contains(&state) {
        steps += 1;
        if steps > 64 {
            return Err(Error::numeric("receptor walk did not terminate"));
        }
        let out: Vec<&Transition> = design.outgoing(state).filter(|t| t.stimulus != Stimulus::Activation).collect();
        let rate_of = |s: Stimulus| match s {
            Stimulus::Binding => bind_total,
            Stimulus::Unbinding => match bound {
                Some(Ligand::Signal) => env.spec_s.k_off,
                Some(Ligand::Interferer) => env.spec_in.k_off,
                None => 0.0,
            },
            Stimulus::Proofreading => env.beta,
            Stimulus::Activation => 0.0,
        };
        let total: f64 = out.iter().map(|t| rate_of(t.stimulus)).sum();
        if total <= 0.0 {
            return Err(Error::scenario("receptor is stuck: no ligand can bind"));
        }
        let dwell = -(-rng.random::<f64>()).ln_1p() / total;
        if design.continuous.iter().any(|(s, _)| *s == state) {
            tally.emitting_time += dwell;
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = out[out.len() - 1];
        for t in &out {
            let r = rate_of(t.stimulus);
            if u < r {
                chosen = t;
                break;
            }
            u -= r;
        }
        match chosen.stimulus {
            Stimulus::Binding => {
                bound = Some(if rng.random::<f64>() * bind_total < bind_s { Ligand::Signal } else { Ligand::Interferer });
            }
            Stimulus::Unbinding => bound = None,
            _ => {}
        }
        for m in &chosen.emits {
            tally.add(*m);
        }
        state = chosen.to;
    }
    Ok(tally)
}

/// Walks `n_receptors` independent receptors, each starting from the
/// stationary binding distribution.
pub fn walk_receptors<R: Rng + ?Sized>(
    design: &ReceptorDesign,
    env: &BindingEnvironment,
    n_receptors: u64,
    rng: &mut R,
) -> Result<MessengerTally> {
    let eq = crate::kinetics::equilibrium_distribution(env.c_s, env.c_in, &env.spec_s, &env.spec_in)?;
    let mut total = MessengerTally::default();
    for _ in 0..n_receptors {
        let u: f64 = rng.random();
        let bound = if u < eq.p_unbound {
            None
        } else if u < eq.p_unbound + eq.p_bound_signal {
            Some(Ligand::Signal)
        } else {
            Some(Ligand::Interferer)
        };
        total.merge(&walk_one(design, env, bound, rng)?);
    }
    Ok(total)
}

/// How bound intervals are turned into `D1` / `D2` counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Transduction {
    /// `D_i` equals the bin count `n_b,i` exactly.
    Ideal,
    /// Each interval of length τ releases `D1` with probability `e^{-βτ}`.
    Kpr { beta: f64 },
}

/// Messenger counts handed to the computation network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransducedCounts {
    pub m: u64,
    pub s: u64,
    pub r: u64,
    pub d1: u64,
    pub d2: u64,
}

/// Converts a sampled observation into messenger counts for `design`.
///
/// `amplification` multiplies the molecules released per event for `M` and
/// per second of unbound time for `S` (one `S` per second at unit
/// amplification).
pub fn transduce_observation<R: Rng + ?Sized>(
    kind: StatisticKind,
    obs: &ReceptorObservation,
    amplification: f64,
    mode: Transduction,
    rng: &mut R,
) -> Result<TransducedCounts> {
    if !(amplification.is_finite() && amplification >= 1.0) {
        return Err(Error::domain(format!("amplification must be >= 1, got {amplification}")));
    }
    let n = obs.bound_durations.len() as u64;
    let s = (amplification * obs.total_unbound_time).round() as u64;
    let (d1, d2) = match mode {
        Transduction::Ideal => (obs.bin_counts[0], obs.bin_counts[1]),
        Transduction::Kpr { beta } => {
            nonneg("beta", beta)?;
            let d1 = obs.bound_durations.iter().filter(|&&tau| rng.random::<f64>() < (-beta * tau).exp()).count() as u64;
            (d1, n - d1)
        }
    };
    Ok(assemble(kind, obs.n_bound, s, n, d1, d2, amplification))
}

/// Same as [`transduce_observation`] from sufficient statistics. With
/// `kpr` given, `D1` / `D2` are the proofreading substate counts;
/// otherwise they are the bin counts.
pub fn transduce_statistics(
    kind: StatisticKind,
    stats: &SymbolStatistics,
    kpr: Option<&KprCounts>,
    amplification: f64,
) -> Result<TransducedCounts> {
    if !(amplification.is_finite() && amplification >= 1.0) {
        return Err(Error::domain(format!("amplification must be >= 1, got {amplification}")));
    }
    let [d1, d2] = kpr.map_or(stats.bin_counts, |k| k.substates());
    let s = (amplification * stats.total_unbound_time).round() as u64;
    Ok(assemble(kind, stats.n_bound, s, stats.n_samples, d1, d2, amplification))
}

fn assemble(kind: StatisticKind, n_bound: u64, s: u64, n: u64, d1: u64, d2: u64, amplification: f64) -> TransducedCounts {
    match kind {
        StatisticKind::BoundCount => {
            TransducedCounts { m: (n_bound as f64 * amplification).round() as u64, ..Default::default() }
        }
        StatisticKind::TotalConc => TransducedCounts { s, r: n, ..Default::default() },
        StatisticKind::Ratio => TransducedCounts { r: n, d1, d2, ..Default::default() },
        StatisticKind::SignalConc => TransducedCounts { s, d1, d2, ..Default::default() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TrialRng;

    fn env(beta: f64) -> BindingEnvironment {
        BindingEnvironment {
            c_s: 2.0,
            c_in: 5.0,
            spec_s: LigandSpec::signal(20.0, 10.0).unwrap(),
            spec_in: LigandSpec::interferer(20.0, 50.0).unwrap(),
            beta,
        }
    }

    #[test]
    fn kpr_rate_examples() {
        assert!((kpr_rate(0.06, DEFAULT_KAPPA).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(kpr_rate(0.06, 0.0).unwrap(), 0.0);
        assert!(kpr_rate(0.0, 1.0).is_err());
    }

    #[test]
    fn designs_are_connected_and_emit_where_expected() {
        for kind in StatisticKind::ALL {
            let d = ReceptorDesign::new(kind);
            assert!(d.all_states_reachable(), "{kind}");
            for t in &d.transitions {
                for m in &t.emits {
                    match m {
                        Messenger::M => assert_eq!((t.from, t.to), (ReceptorState::BoundActive, ReceptorState::Unbound)),
                        Messenger::R | Messenger::D1 | Messenger::D2 => {
                            assert_eq!(t.to, if kind == StatisticKind::TotalConc { ReceptorState::BoundInactive } else { ReceptorState::UnboundInactive })
                        }
                        Messenger::S => unreachable!(),
                    }
                }
            }
        }
        let drut = ReceptorDesign::new(StatisticKind::TotalConc);
        assert_eq!(drut.continuous, vec![(ReceptorState::UnboundActive, Messenger::S)]);
        assert!(ReceptorDesign::new(StatisticKind::SignalConc).transitions.iter().all(|t| !t.emits.contains(&Messenger::R)));
    }

    #[test]
    fn every_receptor_reports_exactly_once() {
        let mut rng = TrialRng::from_seed(2);
        let n = 2000;
        let t = walk_receptors(&ReceptorDesign::new(StatisticKind::TotalConc), &env(10.0), n, &mut rng).unwrap();
        assert_eq!(t.r, n);
        let t = walk_receptors(&ReceptorDesign::new(StatisticKind::Ratio), &env(10.0), n, &mut rng).unwrap();
        assert_eq!((t.r, t.d1 + t.d2), (n, n));
        let t = walk_receptors(&ReceptorDesign::new(StatisticKind::SignalConc), &env(10.0), n, &mut rng).unwrap();
        assert_eq!((t.r, t.d1 + t.d2), (0, n));
        assert!(t.emitting_time > 0.0);
    }

    #[test]
    fn zero_beta_always_ends_in_first_substate() {
        let mut rng = TrialRng::from_seed(6);
        let t = walk_receptors(&ReceptorDesign::new(StatisticKind::Ratio), &env(0.0), 500, &mut rng).unwrap();
        assert_eq!((t.d1, t.d2), (500, 0));
    }

    #[test]
    fn bound_count_walk_counts_bound_receptors() {
        let mut rng = TrialRng::from_seed(7);
        let n = 20_000;
        let t = walk_receptors(&ReceptorDesign::new(StatisticKind::BoundCount), &env(0.0), n, &mut rng).unwrap();
        let p = 6.0 / 7.0;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((t.m as f64 - n as f64 * p).abs() < 4.0 * sd);
    }

    #[test]
    fn transduction_examples() {
        let obs = ReceptorObservation {
            n_bound: 0,
            total_unbound_time: 71.43,
            bound_durations: vec![0.01, 0.2, 0.05],
            bin_counts: [2, 1],
            n_in_realized: 0,
        };
        let mut rng = TrialRng::from_seed(0);
        let m = transduce_observation(StatisticKind::BoundCount, &obs, 1.0, Transduction::Ideal, &mut rng).unwrap();
        assert_eq!(m.m, 0);
        let c = transduce_observation(StatisticKind::TotalConc, &obs, 1.0, Transduction::Ideal, &mut rng).unwrap();
        assert_eq!((c.s, c.r), (71, 3));
        let c = transduce_observation(StatisticKind::SignalConc, &obs, 1.0, Transduction::Ideal, &mut rng).unwrap();
        assert_eq!((c.r, c.d1, c.d2), (0, 2, 1));
        let c = transduce_observation(StatisticKind::Ratio, &obs, 1.0, Transduction::Kpr { beta: 0.0 }, &mut rng).unwrap();
        assert_eq!((c.r, c.d1, c.d2), (3, 3, 0));
        assert!(transduce_observation(StatisticKind::Ratio, &obs, 0.5, Transduction::Ideal, &mut rng).is_err());
    }
}
