//! Equilibrium statistics of a single receptor exposed to two ligand types.
//!
//! A receptor is a three-state continuous-time Markov process: unbound (`U`),
//! bound to an information molecule (`Bs`) or bound to an interferer (`Bin`).
//! Binding from `U` happens at rate `k_on * c` for each ligand and unbinding
//! at that ligand's `k_off`.
//!
//! Units throughout the crate: concentrations in molecules/μm³, binding
//! rates in μm³/s, unbinding rates in 1/s, times in s.

use serde::{Deserialize, Serialize};

use crate::error::{nonneg, positive, Error, Result};

/// Which population a ligand belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LigandRole {
    Signal,
    Interferer,
}

/// Kinetic constants of one molecule type against the receptor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LigandSpec {
    pub k_on: f64,
    pub k_off: f64,
    pub role: LigandRole,
}

impl LigandSpec {
    pub fn new(k_on: f64, k_off: f64, role: LigandRole) -> Result<Self> {
        positive("k_on", k_on)?;
        positive("k_off", k_off)?;
        Ok(Self { k_on, k_off, role })
    }

    pub fn signal(k_on: f64, k_off: f64) -> Result<Self> {
        Self::new(k_on, k_off, LigandRole::Signal)
    }

    pub fn interferer(k_on: f64, k_off: f64) -> Result<Self> {
        Self::new(k_on, k_off, LigandRole::Interferer)
    }

    /// `K_D = k_off / k_on`, the concentration at which a lone receptor is
    /// bound half of the time.
    pub fn dissociation_constant(&self) -> f64 {
        self.k_off / self.k_on
    }

    pub(crate) fn validate(&self) -> Result<()> {
        positive("k_on", self.k_on)?;
        positive("k_off", self.k_off)?;
        Ok(())
    }
}

/// Stationary distribution of the three-state receptor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    pub p_unbound: f64,
    pub p_bound_signal: f64,
    pub p_bound_interferer: f64,
}

impl EquilibriumState {
    pub fn p_bound(&self) -> f64 {
        self.p_bound_signal + self.p_bound_interferer
    }
}

/// Probability that a receptor is bound at equilibrium,
/// `(c_s/K_D^s + c_in/K_D^in) / (1 + c_s/K_D^s + c_in/K_D^in)`.
pub fn bound_probability(
    c_s: f64,
    c_in: f64,
    spec_s: &LigandSpec,
    spec_in: &LigandSpec,
) -> Result<f64> {
    nonneg("c_s", c_s)?;
    nonneg("c_in", c_in)?;
    spec_s.validate()?;
    spec_in.validate()?;
    let occupancy = c_s / spec_s.dissociation_constant() + c_in / spec_in.dissociation_constant();
    Ok(occupancy / (1.0 + occupancy))
}

/// Generator matrix of the receptor process, rows/columns ordered
/// `[U, Bs, Bin]`.
pub fn rate_matrix(c_s: f64, c_in: f64, spec_s: &LigandSpec, spec_in: &LigandSpec) -> [[f64; 3]; 3] {
    let bind_s = spec_s.k_on * c_s;
    let bind_in = spec_in.k_on * c_in;
    [
        [-(bind_s + bind_in), bind_s, bind_in],
        [spec_s.k_off, -spec_s.k_off, 0.0],
        [spec_in.k_off, 0.0, -spec_in.k_off],
    ]
}

/// Solves `θ R = 0`, `θ·1 = 1` for the stationary distribution.
///
/// This goes through the generator matrix and a linear solve rather than the
/// closed form of [`bound_probability`], so the two can be checked against
/// each other.
pub fn equilibrium_distribution(
    c_s: f64,
    c_in: f64,
    spec_s: &LigandSpec,
    spec_in: &LigandSpec,
) -> Result<EquilibriumState> {
    nonneg("c_s", c_s)?;
    nonneg("c_in", c_in)?;
    spec_s.validate()?;
    spec_in.validate()?;
    let r = rate_matrix(c_s, c_in, spec_s, spec_in);

    // Rows of the system are columns of R (θR = 0 ⇔ Rᵀθᵀ = 0); the last
    // balance equation is redundant and is replaced by normalization.
    let mut a = [[0.0; 3]; 3];
    for (i, row) in a.iter_mut().enumerate().take(2) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = r[j][i];
        }
    }
    a[2] = [1.0, 1.0, 1.0];
    let theta = solve3(a, [0.0, 0.0, 1.0])?;
    Ok(EquilibriumState {
        p_unbound: theta[0],
        p_bound_signal: theta[1],
        p_bound_interferer: theta[2],
    })
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::numeric("singular generator system"));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Density of a complete bound interval when a fraction `alpha_s` of binding
/// events are by information molecules:
/// `α_s k_s⁻ e^{-k_s⁻ τ} + (1-α_s) k_in⁻ e^{-k_in⁻ τ}`.
pub fn bound_duration_density(
    tau: f64,
    alpha_s: f64,
    spec_s: &LigandSpec,
    spec_in: &LigandSpec,
) -> Result<f64> {
    nonneg("tau", tau)?;
    if !(0.0..=1.0).contains(&alpha_s) {
        return Err(Error::domain(format!("alpha_s must lie in [0, 1], got {alpha_s}")));
    }
    let ks = spec_s.k_off;
    let kin = spec_in.k_off;
    Ok(alpha_s * ks * (-ks * tau).exp() + (1.0 - alpha_s) * kin * (-kin * tau).exp())
}

/// Mean of [`bound_duration_density`].
pub fn mean_bound_duration(alpha_s: f64, spec_s: &LigandSpec, spec_in: &LigandSpec) -> f64 {
    alpha_s / spec_s.k_off + (1.0 - alpha_s) / spec_in.k_off
}

/// Relaxation time of the binding reaction, `1 / (c k_on + k_off)`.
pub fn correlation_time(c: f64, k_on: f64, k_off: f64) -> Result<f64> {
    nonneg("c", c)?;
    nonneg("k_on", k_on)?;
    nonneg("k_off", k_off)?;
    let f = c * k_on + k_off;
    if f > 0.0 && f.is_finite() {
        Ok(1.0 / f)
    } else {
        Err(Error::domain("correlation time undefined: c·k_on + k_off = 0"))
    }
}
