//! Exact stochastic simulation (direct method).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::ReactionNetwork;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsaOptions {
    /// Record the state on a regular time grid with this spacing.
    pub sample_interval: Option<f64>,
    pub max_events: u64,
}

impl Default for SsaOptions {
    fn default() -> Self {
        Self { sample_interval: None, max_events: 100_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsaRun {
    pub final_state: Vec<u64>,
    pub final_time: f64,
    pub n_events: u64,
    /// `(time, state)` on the sampling grid, if one was requested.
    pub samples: Vec<(f64, Vec<u64>)>,
}

impl SsaRun {
    pub fn count(&self, net: &ReactionNetwork, species: &str) -> Option<u64> {
        net.index(species).map(|i| self.final_state[i])
    }
}

pub fn simulate_ssa<R: Rng + ?Sized>(net: &ReactionNetwork, t_end: f64, rng: &mut R) -> Result<SsaRun> {
    simulate_ssa_with(net, t_end, &SsaOptions::default(), rng)
}

/// Runs until `t_end` or until no reaction can fire any more. Pulsed
/// reactions have piecewise-constant propensities, so waiting times are
/// redrawn at every pulse edge.
pub fn simulate_ssa_with<R: Rng + ?Sized>(
    net: &ReactionNetwork,
    t_end: f64,
    opts: &SsaOptions,
    rng: &mut R,
) -> Result<SsaRun> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::domain(format!("t_end must be > 0, got {t_end}")));
    }
    if let Some(dt) = opts.sample_interval {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain(format!("sample interval must be > 0, got {dt}")));
        }
    }
    let n = net.species.len();
    let changes: Vec<Vec<i64>> = net.reactions.iter().map(|r| r.net_change(n)).collect();
    let edges: Vec<f64> = net.breakpoints().into_iter().filter(|b| *b > 0.0 && *b < t_end).collect();
    let mut next_edge = edges.iter().copied().chain(std::iter::once(t_end));
    let mut horizon = next_edge.next().unwrap_or(t_end);

    let mut x = net.initial_counts();
    let mut t = 0.0;
    let mut events = 0u64;
    let mut samples = Vec::new();
    let mut next_sample = opts.sample_interval.map(|_| 0.0);
    let mut props = vec![0.0; net.reactions.len()];

    loop {
        for (p, r) in props.iter_mut().zip(&net.reactions) {
            *p = r.propensity(&x, t);
        }
        let a0: f64 = props.iter().sum();
        let wait = if a0 > 0.0 { -(-rng.random::<f64>()).ln_1p() / a0 } else { f64::INFINITY };
        let t_next = t + wait;

        if let (Some(dt), Some(ts)) = (opts.sample_interval, next_sample.as_mut()) {
            while *ts <= t_next.min(t_end) {
                samples.push((*ts, x.clone()));
                *ts += dt;
            }
        }
        if t_next >= horizon {
            if horizon >= t_end {
                t = if a0 > 0.0 { t_end } else { t };
                break;
            }
            t = horizon;
            horizon = next_edge.next().unwrap_or(t_end);
            continue;
        }
        t = t_next;
        let mut u = rng.random::<f64>() * a0;
        let mut fired = props.len() - 1;
        for (j, p) in props.iter().enumerate() {
            if u < *p {
                fired = j;
                break;
            }
            u -= p;
        }
        while props[fired] == 0.0 {
            fired -= 1;
        }
        for (xi, d) in x.iter_mut().zip(&changes[fired]) {
            *xi = xi.checked_add_signed(*d).ok_or_else(|| Error::numeric("negative molecule count in SSA"))?;
        }
        events += 1;
        if events > opts.max_events {
            return Err(Error::numeric(format!("SSA event limit reached at t = {t}")));
        }
    }
    Ok(SsaRun { final_state: x, final_time: t, n_events: events, samples })
}
