//! Biochemical realization of the detectors: receptor state machines that
//! transduce binding activity into messenger molecules, mass-action
//! networks computing each statistic, and their deterministic and
//! stochastic simulation.

pub mod compute;
pub mod network;
pub mod ode;
pub mod receptor;
pub mod ssa;

pub use compute::{
    activation_network, build_network, comparator_decide, comparator_network, read_output, run_comparator, steady_state_formula,
    threshold_count, threshold_scale, ActivationParams, NetworkParams, OUTPUT, OUTPUT_NEG, THRESHOLD,
};
pub use network::{Pulse, Reaction, ReactionNetwork, Species};
pub use ode::{integrate_ode, integrate_until, OdeOptions, OdeSolution};
pub use receptor::{
    kpr_rate, transduce_observation, transduce_statistics, walk_receptors, BindingEnvironment, MessengerTally, ReceptorDesign,
    ReceptorState, TransducedCounts, Transduction, DEFAULT_KAPPA,
};
pub use ssa::{simulate_ssa, simulate_ssa_with, SsaOptions, SsaRun};
