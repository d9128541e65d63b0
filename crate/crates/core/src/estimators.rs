//! Decision statistics and their Gaussian moment models.
//!
//! Four statistics are computed from one symbol's receptor observations:
//! the bound-receptor count, the unbiased total-concentration estimate from
//! unbound intervals, the method-of-moments estimate of the information
//! ligand fraction from binned bound intervals, and the product of the last
//! two. For each, the mean and variance conditioned on the transmitted bit
//! are obtained by averaging conditional moments over the Poisson
//! interferer count.
//!
//! Notes on the ratio-estimator variance. With `p = Qα` and `α̂ = W n_b / N`,
//! `Var[α̂_s | n_in] = (Σ_i w₂ᵢ² pᵢ − α_s²) / N`. Writing this over
//! `c_tot²` gives the three `Γ` coefficients. The commonly quoted form of
//! the middle coefficient carries the cross term `w₂₂² q₂₁ q₂₂` once with
//! each sign; the expansion of the covariance sum needs it twice with a
//! negative sign, and only that version agrees with
//! [`ratio_variance_oracle`]. [`gamma_coefficients`] implements the latter.
//!
//! For the combined estimator, averaging `Γ₁ c_in²` over a Gaussian
//! approximation of the interferer count contributes
//! `Γ₁ ((μ/V)² + μ/V²)`; the closed form here keeps that second-moment
//! term with its `1/V²` scaling.

use serde::{Deserialize, Serialize};

use crate::error::{nonneg, positive, Error, Result};
use crate::kinetics::LigandSpec;
use crate::sampler::{Bit, ChannelScenario, SymbolStatistics};
use crate::stats::poisson_expectation;

const SINGULAR_DET: f64 = 1e-12;

/// Two-bin partition of bound-interval lengths at `t1` and its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub nu: f64,
    pub t1: f64,
    /// `q[i][j]`: probability that an interval of ligand `j` (0 interferer,
    /// 1 information) falls in bin `i` (0 short, 1 long).
    pub q: [[f64; 2]; 2],
    pub w: [[f64; 2]; 2],
}

impl BinningScheme {
    pub fn determinant(&self) -> f64 {
        self.q[0][0] * self.q[1][1] - self.q[0][1] * self.q[1][0]
    }

    /// Bin probabilities `p = Q [1-α_s, α_s]ᵀ`.
    pub fn bin_probabilities(&self, alpha_s: f64) -> [f64; 2] {
        let a = [1.0 - alpha_s, alpha_s];
        [
            self.q[0][0] * a[0] + self.q[0][1] * a[1],
            self.q[1][0] * a[0] + self.q[1][1] * a[1],
        ]
    }
}

/// Builds the binning scheme with threshold `t1 = nu / k_in⁻`.
pub fn build_binning(nu: f64, spec_s: &LigandSpec, spec_in: &LigandSpec) -> Result<BinningScheme> {
    positive("nu", nu)?;
    spec_s.validate()?;
    spec_in.validate()?;
    let t1 = nu / spec_in.k_off;
    let long_in = (-spec_in.k_off * t1).exp();
    let long_s = (-spec_s.k_off * t1).exp();
    let q = [
        [-(-spec_in.k_off * t1).exp_m1(), -(-spec_s.k_off * t1).exp_m1()],
        [long_in, long_s],
    ];
    let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
    if det.abs() < SINGULAR_DET {
        return Err(Error::Singular { det });
    }
    let w = [
        [q[1][1] / det, -q[0][1] / det],
        [-q[1][0] / det, q[0][0] / det],
    ];
    Ok(BinningScheme { nu, t1, q, w })
}

/// Binning scheme of a scenario.
pub fn scenario_binning(scenario: &ChannelScenario) -> Result<BinningScheme> {
    build_binning(scenario.nu, &scenario.ligand_s, &scenario.ligand_in)
}

/// Mean and variance of a Gaussian approximation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianMoments {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::numeric(format!("non-finite mean {mean}")));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::numeric(format!("variance must be finite and > 0, got {variance}")));
        }
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// How Poisson-averaged variances are evaluated where a closed
/// approximation exists.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceForm {
    /// Gaussian-integral approximation of the interferer distribution.
    #[default]
    Closed,
    /// Truncated sum over the Poisson weights.
    ExactSum,
}

/// Unbiased total-concentration estimate `(N-1) / (k⁺ T_u)`.
pub fn estimate_total_concentration(n_samples: u64, total_unbound_time: f64, k_on: f64) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::domain(format!("at least 2 samples are required, got {n_samples}")));
    }
    positive("k_on", k_on)?;
    if !(total_unbound_time.is_finite() && total_unbound_time > 0.0) {
        return Err(Error::Saturation(total_unbound_time));
    }
    Ok((n_samples - 1) as f64 / (k_on * total_unbound_time))
}

/// Method-of-moments estimate of the information-ligand fraction,
/// `(n_b1 w₂₁ + n_b2 w₂₂) / N`. Not clamped to `[0, 1]`.
pub fn estimate_concentration_ratio(bin_counts: [u64; 2], n_samples: u64, scheme: &BinningScheme) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::domain("no bound-interval samples"));
    }
    if bin_counts[0] + bin_counts[1] > n_samples {
        return Err(Error::domain(format!(
            "bin counts {bin_counts:?} exceed the sample count {n_samples}"
        )));
    }
    let [_, w2] = scheme.w;
    Ok((bin_counts[0] as f64 * w2[0] + bin_counts[1] as f64 * w2[1]) / n_samples as f64)
}

/// Information-ligand concentration estimate, the product of the total
/// concentration and ratio estimates.
pub fn estimate_signal_concentration(
    total_unbound_time: f64,
    bin_counts: [u64; 2],
    n_samples: u64,
    scheme: &BinningScheme,
    k_on: f64,
) -> Result<f64> {
    let c_tot = estimate_total_concentration(n_samples, total_unbound_time, k_on)?;
    Ok(c_tot * estimate_concentration_ratio(bin_counts, n_samples, scheme)?)
}

/// Coefficients of `c_tot² · N · Var[α̂_s | n_in] = Γ₁ c_in² + Γ₂ c_in + Γ₃`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaCoefficients {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

impl GammaCoefficients {
    pub fn eval(&self, c_in: f64) -> f64 {
        (self.g1 * c_in + self.g2) * c_in + self.g3
    }
}

pub fn gamma_coefficients(c_s: f64, scheme: &BinningScheme) -> Result<GammaCoefficients> {
    nonneg("c_s", c_s)?;
    let [[q11, q12], [q21, q22]] = scheme.q;
    let [w21, w22] = scheme.w[1];
    let (a, b) = (w21 * w21, w22 * w22);
    let g1 = a * q11 - a * q11 * q11 - 2.0 * w21 * w22 * q11 * q21 + b * q21 - b * q21 * q21;
    let g2 = c_s
        * (a * q12 + a * q11 - 2.0 * a * q11 * q12
            - 2.0 * w21 * w22 * q11 * q22
            - 2.0 * w21 * w22 * q12 * q21
            + b * q22
            + b * q21
            - 2.0 * b * q21 * q22);
    let g3 = c_s * c_s * (a * q12 - a * q12 * q12 - 2.0 * w21 * w22 * q12 * q22 + b * q22 - b * q22 * q22);
    Ok(GammaCoefficients { g1, g2, g3 })
}

/// `Var[α̂_s | s, n_in]` from the multinomial covariance of the bin
/// counts, without going through the `Γ` coefficients.
pub fn ratio_variance_oracle(c_s: f64, n_in: u64, volume: f64, scheme: &BinningScheme, n_samples: u64) -> Result<f64> {
    nonneg("c_s", c_s)?;
    positive("volume", volume)?;
    if n_samples == 0 {
        return Err(Error::domain("no samples"));
    }
    let c_tot = c_s + n_in as f64 / volume;
    if c_tot <= 0.0 {
        return Err(Error::domain("ligand fraction undefined at zero total concentration"));
    }
    let p = scheme.bin_probabilities(c_s / c_tot);
    let n = n_samples as f64;
    let w2 = scheme.w[1];
    let mut acc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let cov = if i == j { p[i] * (1.0 - p[i]) * n } else { -p[i] * p[j] * n };
            acc += w2[i] * w2[j] * cov;
        }
    }
    Ok(acc / (n * n))
}

/// `Var[α̂_s | s, n_in]` through the `Γ` coefficients.
pub fn ratio_variance(c_s: f64, c_in: f64, scheme: &BinningScheme, n_samples: u64) -> Result<f64> {
    nonneg("c_in", c_in)?;
    let c_tot = c_s + c_in;
    if c_tot <= 0.0 {
        return Err(Error::domain("ligand fraction undefined at zero total concentration"));
    }
    let g = gamma_coefficients(c_s, scheme)?;
    Ok(g.eval(c_in) / (n_samples as f64 * c_tot * c_tot))
}

fn poisson_mean(scenario: &ChannelScenario) -> f64 {
    scenario.mean_interferer_count() as f64
}

/// Moments of the number of bound receptors.
pub fn moments_nbr(scenario: &ChannelScenario, bit: Bit) -> Result<GaussianMoments> {
    scenario.validate()?;
    let c_s = scenario.signal_concentration(bit);
    let n_r = scenario.n_receptors as f64;
    let occ_s = c_s / scenario.ligand_s.dissociation_constant();
    let kd_in = scenario.ligand_in.dissociation_constant();
    let v = scenario.volume;
    let [m1, m2, cvar] = poisson_expectation(poisson_mean(scenario), |n| {
        let occ = occ_s + n as f64 / v / kd_in;
        let p = occ / (1.0 + occ);
        let mean = n_r * p;
        [mean, mean * mean, n_r * p * (1.0 - p)]
    })?;
    GaussianMoments::new(m1, cvar + (m2 - m1 * m1).max(0.0))
}

/// Moments of the total-concentration estimate.
pub fn moments_ctot(scenario: &ChannelScenario, bit: Bit, form: VarianceForm) -> Result<GaussianMoments> {
    scenario.validate()?;
    let c_s = scenario.signal_concentration(bit);
    let n = scenario.n_receptors as f64;
    let v = scenario.volume;
    let mu = poisson_mean(scenario);
    let mean = c_s + mu / v;
    let variance = match form {
        VarianceForm::Closed => mean * mean / (n - 2.0) + mu * (n - 1.0) / (v * v * (n - 2.0)),
        VarianceForm::ExactSum => {
            let [cond_var, m2] = poisson_expectation(mu, |k| {
                let c = c_s + k as f64 / v;
                [c * c / (n - 2.0), c * c]
            })?;
            cond_var + (m2 - mean * mean).max(0.0)
        }
    };
    GaussianMoments::new(mean, variance)
}

/// Moments of the ligand-fraction estimate.
pub fn moments_alpha(scenario: &ChannelScenario, bit: Bit) -> Result<GaussianMoments> {
    scenario.validate()?;
    let scheme = scenario_binning(scenario)?;
    let c_s = scenario.signal_concentration(bit);
    let g = gamma_coefficients(c_s, &scheme)?;
    let n = scenario.n_receptors as f64;
    let v = scenario.volume;
    let [m1, m2, cvar] = poisson_expectation(poisson_mean(scenario), |k| {
        let c_in = k as f64 / v;
        let c_tot = c_s + c_in;
        let a = c_s / c_tot;
        [a, a * a, g.eval(c_in) / (n * c_tot * c_tot)]
    })?;
    GaussianMoments::new(m1, cvar + (m2 - m1 * m1).max(0.0))
}

/// Moments of the information-ligand concentration estimate. The mean is
/// `c_s` for every interferer count, so only conditional variances are
/// averaged.
pub fn moments_cs(scenario: &ChannelScenario, bit: Bit, form: VarianceForm) -> Result<GaussianMoments> {
    scenario.validate()?;
    let scheme = scenario_binning(scenario)?;
    let c_s = scenario.signal_concentration(bit);
    let g = gamma_coefficients(c_s, &scheme)?;
    let n = scenario.n_receptors as f64;
    let v = scenario.volume;
    let mu = poisson_mean(scenario);
    let variance = match form {
        VarianceForm::Closed => {
            let m = mu / v;
            (g.g1 * (m * m + mu / (v * v)) + g.g2 * m + g.g3 + c_s * c_s) / n
        }
        VarianceForm::ExactSum => {
            // Exact variance of a product of independent factors.
            let [var] = poisson_expectation(mu, |k| {
                let big_g = g.eval(k as f64 / v);
                [c_s * c_s / (n - 2.0) + big_g / n + big_g / (n * (n - 2.0))]
            })?;
            var
        }
    };
    GaussianMoments::new(c_s, variance)
}

/// Observed values of the four statistics for one symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticValues {
    pub bound_count: f64,
    pub total_conc: f64,
    pub ratio: f64,
    pub signal_conc: f64,
}

pub fn evaluate_statistics(stats: &SymbolStatistics, scheme: &BinningScheme, k_on: f64) -> Result<StatisticValues> {
    let total_conc = estimate_total_concentration(stats.n_samples, stats.total_unbound_time, k_on)?;
    let ratio = estimate_concentration_ratio(stats.bin_counts, stats.n_samples, scheme)?;
    Ok(StatisticValues {
        bound_count: stats.n_bound as f64,
        total_conc,
        ratio,
        signal_conc: total_conc * ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (LigandSpec, LigandSpec) {
        (LigandSpec::signal(20.0, 10.0).unwrap(), LigandSpec::interferer(20.0, 50.0).unwrap())
    }

    #[test]
    fn reference_scheme() {
        let (s, i) = defaults();
        let b = build_binning(3.0, &s, &i).unwrap();
        assert!((b.t1 - 0.06).abs() < 1e-15);
        let close = |x: f64, y: f64| (x - y).abs() < 1e-6;
        assert!(close(b.q[0][0], 0.950_213) && close(b.q[0][1], 0.451_188));
        assert!(close(b.q[1][0], 0.049_787) && close(b.q[1][1], 0.548_812));
        assert!(close(b.w[1][0], -0.099_769) && (b.w[1][1] - 1.904_14).abs() < 1e-5);
        assert!(close(b.determinant(), 0.499_024));
        for col in 0..2 {
            assert!((b.q[0][col] + b.q[1][col] - 1.0).abs() < 1e-15);
        }
        for r in 0..2 {
            for c in 0..2 {
                let v: f64 = (0..2).map(|k| b.w[r][k] * b.q[k][c]).sum();
                assert!((v - if r == c { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn indistinguishable_ligands_are_singular() {
        let s = LigandSpec::signal(20.0, 10.0).unwrap();
        let i = LigandSpec::interferer(20.0, 10.0).unwrap();
        assert!(matches!(build_binning(3.0, &s, &i), Err(Error::Singular { .. })));
    }

    #[test]
    fn plug_in_inversions() {
        let k = 20.0;
        let c = 3.7;
        let est = estimate_total_concentration(101, 100.0 / (k * c), k).unwrap();
        assert!((est - c).abs() < 1e-12);
        assert!(matches!(estimate_total_concentration(10, 0.0, k), Err(Error::Saturation(_))));

        let (s, i) = defaults();
        let b = build_binning(3.0, &s, &i).unwrap();
        // Bin counts that are exact multiples of N·p for α_s = 1/4.
        let p = b.bin_probabilities(0.25);
        let n = 1e12 as u64;
        let counts = [(p[0] * n as f64).round() as u64, 0];
        let counts = [counts[0], n - counts[0]];
        let a = estimate_concentration_ratio(counts, n, &b).unwrap();
        assert!((a - 0.25).abs() < 1e-9);
        let cs = estimate_signal_concentration((n - 1) as f64 / (k * 8.0), counts, n, &b, k).unwrap();
        assert!((cs - 2.0).abs() < 1e-8);
    }

    #[test]
    fn bin_probabilities_at_reference_point() {
        let (s, i) = defaults();
        let b = build_binning(3.0, &s, &i).unwrap();
        let p = b.bin_probabilities(2.0 / 7.0);
        assert!((p[0] - 0.807_635).abs() < 1e-6 && (p[1] - 0.192_365).abs() < 1e-6);
    }

    #[test]
    fn gamma_reference_values_and_oracle() {
        let (s, i) = defaults();
        let b = build_binning(3.0, &s, &i).unwrap();
        let g = gamma_coefficients(2.0, &b).unwrap();
        assert!((g.g1 - 0.189_974).abs() < 1e-6);
        assert!((g.g2 - 4.368_639).abs() < 1e-6);
        assert!((g.g3 - 3.977_382).abs() < 1e-6);
        let g0 = gamma_coefficients(0.0, &b).unwrap();
        assert_eq!((g0.g2, g0.g3), (0.0, 0.0));

        let oracle = ratio_variance_oracle(2.0, 20_000, 4000.0, &b, 10_000).unwrap();
        let closed = ratio_variance(2.0, 5.0, &b, 10_000).unwrap();
        assert!(((oracle - closed) / oracle).abs() < 1e-10);
    }

    /// Literal transcription of the widely circulated middle coefficient.
    fn printed_g2(c_s: f64, b: &BinningScheme) -> f64 {
        let [[q11, q12], [q21, q22]] = b.q;
        let [w21, w22] = b.w[1];
        let (a, bb) = (w21 * w21, w22 * w22);
        c_s * (a * q12 + a * q11 - a * q11 * q12 - a * q11 * q12 - 2.0 * w21 * w22 * q11 * q22
            - 2.0 * w21 * w22 * q12 * q21
            + bb * q22
            + bb * q21
            + bb * q21 * q22
            - bb * q21 * q22)
    }

    #[test]
    fn printed_middle_coefficient_disagrees_with_covariance_sum() {
        let (s, i) = defaults();
        let b = build_binning(3.0, &s, &i).unwrap();
        let c_s = 2.0;
        let g = gamma_coefficients(c_s, &b).unwrap();
        let diff = printed_g2(c_s, &b) - g.g2;
        let [_, [q21, q22]] = b.q;
        let w22 = b.w[1][1];
        assert!((diff - 2.0 * c_s * w22 * w22 * q21 * q22).abs() < 1e-12);
    }

    #[test]
    fn ratio_variance_at_pure_populations() {
        let (s, i) = defaults();
        let b = build_binning(3.0, &s, &i).unwrap();
        let n = 1000;
        // α_s = 1: counts are Binomial(N, q₁₂).
        let v = ratio_variance_oracle(1.0, 0, 1.0, &b, n).unwrap();
        let [w21, w22] = b.w[1];
        let q = b.q[0][1];
        let expect = (w21 - w22).powi(2) * q * (1.0 - q) / n as f64;
        assert!(((v - expect) / expect).abs() < 1e-12);
        // Consistency rate: variance scales as 1/N.
        let v10 = ratio_variance_oracle(1.0, 3, 1.0, &b, 10 * n).unwrap();
        let v1 = ratio_variance_oracle(1.0, 3, 1.0, &b, n).unwrap();
        assert!((v1 / v10 - 10.0).abs() < 1e-9);
    }

    #[test]
    fn moments_without_interference() {
        let sc = ChannelScenario { mean_c_in: 0.0, ..ChannelScenario::default() };
        let c_s = sc.c_bit0;
        let kd = sc.ligand_s.dissociation_constant();
        let n = sc.n_receptors as f64;
        let m = moments_nbr(&sc, Bit::Zero).unwrap();
        assert!((m.mean - n * c_s / (c_s + kd)).abs() < 1e-9);
        for form in [VarianceForm::Closed, VarianceForm::ExactSum] {
            let m = moments_ctot(&sc, Bit::Zero, form).unwrap();
            assert_eq!(m.mean, c_s);
            assert!((m.variance - c_s * c_s / (n - 2.0)).abs() < 1e-15);
        }
        let a = moments_alpha(&sc, Bit::Zero).unwrap();
        let g = gamma_coefficients(c_s, &scenario_binning(&sc).unwrap()).unwrap();
        assert!((a.mean - 1.0).abs() < 1e-15);
        assert!((a.variance - g.g3 / (n * c_s * c_s)).abs() < 1e-15);
        let cs = moments_cs(&sc, Bit::Zero, VarianceForm::Closed).unwrap();
        assert!((cs.variance - (g.g3 + c_s * c_s) / n).abs() < 1e-15);
    }

    #[test]
    fn moments_at_reference_point() {
        let sc = ChannelScenario::default();
        let m = moments_nbr(&sc, Bit::Zero).unwrap();
        assert!(((m.mean - 10_000.0 * 6.0 / 7.0) / m.mean).abs() < 1e-3);
        let c = moments_ctot(&sc, Bit::Zero, VarianceForm::Closed).unwrap();
        assert!((c.mean - 7.0).abs() < 1e-12);
        let e = moments_ctot(&sc, Bit::Zero, VarianceForm::ExactSum).unwrap();
        assert!(((c.variance - e.variance) / e.variance).abs() < 5e-3);
        let a = moments_alpha(&sc, Bit::Zero).unwrap();
        assert!((a.mean - 2.0 / 7.0).abs() < 1e-4);
        let cs = moments_cs(&sc, Bit::Zero, VarianceForm::Closed).unwrap();
        assert_eq!(cs.mean, 2.0);
        let cs_exact = moments_cs(&sc, Bit::Zero, VarianceForm::ExactSum).unwrap();
        assert!(((cs.variance - cs_exact.variance) / cs_exact.variance).abs() < 1e-3);
    }

    #[test]
    fn moments_are_deterministic() {
        let sc = ChannelScenario::default();
        assert_eq!(moments_alpha(&sc, Bit::One).unwrap(), moments_alpha(&sc, Bit::One).unwrap());
        assert_eq!(moments_nbr(&sc, Bit::One).unwrap(), moments_nbr(&sc, Bit::One).unwrap());
    }
}
