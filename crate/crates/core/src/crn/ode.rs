//! Deterministic rate equations, integrated with an adaptive
//! Dormand-Prince 5(4) pair. Integration restarts at every pulse edge so
//! that no step straddles a discontinuity of the rates.

use serde::{Deserialize, Serialize};

use super::network::ReactionNetwork;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Steady state is declared once `‖dx/dt‖ ≤ steady_tol · ‖x‖`.
    pub steady_tol: f64,
    pub max_steps: usize,
    /// Keep every accepted step in the solution.
    pub record: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, steady_tol: 1e-9, max_steps: 5_000_000, record: true }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub steady_state: Vec<f64>,
    pub t_steady: f64,
}

impl OdeSolution {
    pub fn value(&self, net: &ReactionNetwork, species: &str) -> Option<f64> {
        net.index(species).map(|i| self.steady_state[i])
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Step times spectral radius kept below this; the real stability
/// boundary of the method is about 3.3.
const STIFF_STEP: f64 = 2.0;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct Run {
    t: f64,
    x: Vec<f64>,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    steady: bool,
}

fn run(net: &ReactionNetwork, t_end: f64, opts: &OdeOptions, stop_when_steady: bool) -> Result<Run> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::domain(format!("t_end must be > 0, got {t_end}")));
    }
    let n = net.species.len();
    let mut x = net.initial_state();
    if x.iter().any(|v| *v < 0.0) {
        return Err(Error::domain("initial counts must be nonnegative"));
    }
    let mut edges: Vec<f64> = net.breakpoints().into_iter().filter(|b| *b > 0.0 && *b < t_end).collect();
    let last_edge = net.breakpoints().last().copied().unwrap_or(0.0);
    edges.push(t_end);

    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut stage6 = vec![0.0; n];
    let mut steps = 0usize;

    let is_steady = |t: f64, x: &[f64], f: &[f64]| t >= last_edge && norm(f) <= opts.steady_tol * norm(x);

    let mut t = 0.0;
    for &seg_end in &edges {
        // Pulse gains are piecewise constant; evaluate them inside the segment.
        let t_gain = 0.5 * (t + seg_end);
        net.derivative(t_gain, &x, &mut k[0]);
        if stop_when_steady && is_steady(t, &x, &k[0]) {
            return Ok(Run { t, x, times, states, steady: true });
        }
        let f0 = norm(&k[0]);
        let mut h = if f0 > 0.0 { 1e-3 * (norm(&x) + 1.0) / f0 } else { seg_end - t };
        h = h.min(seg_end - t);

        while t < seg_end {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::numeric(format!("ODE step limit reached at t = {t}")));
            }
            let last = t + h >= seg_end;
            if last {
                h = seg_end - t;
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = x[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += h * A[s][j] * kj[i];
                    }
                    tmp[i] = acc;
                }
                net.derivative(t_gain, &tmp, &mut k[s]);
                if s == 5 {
                    stage6.copy_from_slice(&tmp);
                }
            }
            // Local estimate of the Jacobian's spectral radius from the last
            // two stages, which share the same abscissa.
            let dy = norm(&tmp.iter().zip(&stage6).map(|(a, b)| a - b).collect::<Vec<_>>());
            let df = norm(&k[6].iter().zip(&k[5]).map(|(a, b)| a - b).collect::<Vec<_>>());
            let stiff_cap = if dy > 0.0 && df > 0.0 { STIFF_STEP / (df / dy) } else { f64::INFINITY };
            // tmp holds the fifth-order solution (stage 7 is FSAL).
            let mut err = 0.0;
            for i in 0..n {
                let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
                let scale = opts.atol + opts.rtol * x[i].abs().max(tmp[i].abs());
                err += (e / scale).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::numeric(format!("non-finite ODE error estimate at t = {t}")));
            }
            if err <= 1.0 {
                t = if last { seg_end } else { t + h };
                for (xi, yi) in x.iter_mut().zip(&tmp) {
                    *xi = yi.max(0.0);
                }
                k.swap(0, 6);
                if x.iter().zip(&tmp).any(|(a, b)| a != b) {
                    net.derivative(t_gain, &x, &mut k[0]);
                }
                if opts.record {
                    times.push(t);
                    states.push(x.clone());
                }
                if stop_when_steady && is_steady(t, &x, &k[0]) {
                    return Ok(Run { t, x, times, states, steady: true });
                }
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // Stay well inside the stability interval so that errors near
            // an equilibrium are damped instead of sustained.
            h = (h * fac).min(stiff_cap.max(h * 0.2));
            if h < 1e-14 * t.abs().max(1e-300) {
                return Err(Error::numeric(format!("ODE step size underflow at t = {t}")));
            }
        }
    }
    if opts.record && times.last() != Some(&t) {
        times.push(t);
        states.push(x.clone());
    }
    Ok(Run { t, x, times, states, steady: false })
}

/// Integrates the rate equations until the state stops changing.
///
/// Fails with [`Error::Timeout`] if no steady state is reached by `t_end`.
pub fn integrate_ode(net: &ReactionNetwork, t_end: f64, opts: &OdeOptions) -> Result<OdeSolution> {
    let r = run(net, t_end, opts, true)?;
    if !r.steady {
        let n = net.species.len();
        let mut f = vec![0.0; n];
        net.derivative(r.t, &r.x, &mut f);
        let residual = norm(&f) / norm(&r.x).max(f64::MIN_POSITIVE);
        return Err(Error::Timeout { t_end, residual });
    }
    Ok(OdeSolution { times: r.times, states: r.states, steady_state: r.x, t_steady: r.t })
}

/// State at `t_end`, without steady-state detection.
pub fn integrate_until(net: &ReactionNetwork, t_end: f64, opts: &OdeOptions) -> Result<Vec<f64>> {
    Ok(run(net, t_end, &OdeOptions { record: false, ..*opts }, false)?.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::network::Pulse;

    #[test]
    fn exponential_decay_is_accurate() {
        let mut n = ReactionNetwork::new();
        n.add_species("A", 1000.0).unwrap();
        n.add_reaction(&["A"], &[], 2.0).unwrap();
        let x = integrate_until(&n, 3.0, &OdeOptions::default()).unwrap();
        let exact = 1000.0 * (-6.0f64).exp();
        assert!(((x[0] - exact) / exact).abs() < 1e-7, "{} vs {exact}", x[0]);
    }

    #[test]
    fn production_consumption_steady_state() {
        let mut n = ReactionNetwork::new();
        n.add_species("R", 100.0).unwrap();
        n.add_species("S", 50.0).unwrap();
        n.add_species("Y", 0.0).unwrap();
        n.add_reaction(&["R"], &["R", "Y"], 1.0).unwrap();
        n.add_reaction(&["S", "Y"], &["S"], 0.2).unwrap();
        let sol = integrate_ode(&n, 100.0, &OdeOptions::default()).unwrap();
        let y = sol.value(&n, "Y").unwrap();
        assert!(((y - 10.0) / 10.0).abs() < 1e-6);
        assert!(sol.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn timeout_when_not_settled() {
        let mut n = ReactionNetwork::new();
        n.add_species("A", 1.0).unwrap();
        n.add_reaction(&[], &["A"], 1.0).unwrap();
        assert!(matches!(integrate_ode(&n, 1.0, &OdeOptions::default()), Err(Error::Timeout { .. })));
    }

    #[test]
    fn pulse_delivers_unit_integral() {
        let mut n = ReactionNetwork::new();
        n.add_species("A", 0.0).unwrap();
        n.add_triggered(&[], &["A"], 250.0, Some(Pulse::new(0.5, 1e-3).unwrap())).unwrap();
        let before = integrate_until(&n, 0.4, &OdeOptions::default()).unwrap();
        assert_eq!(before[0], 0.0);
        let sol = integrate_ode(&n, 2.0, &OdeOptions::default()).unwrap();
        assert!((sol.steady_state[0] - 250.0).abs() < 1e-9);
        assert!(sol.t_steady >= 0.5 + 1e-3);
    }

    #[test]
    fn states_stay_nonnegative() {
        let mut n = ReactionNetwork::new();
        n.add_species("A", 1e-3).unwrap();
        n.add_species("B", 1e6).unwrap();
        n.add_reaction(&["A", "B"], &["B"], 1.0).unwrap();
        let sol = integrate_ode(&n, 10.0, &OdeOptions::default()).unwrap();
        assert!(sol.states.iter().flatten().all(|v| *v >= 0.0));
    }
}
