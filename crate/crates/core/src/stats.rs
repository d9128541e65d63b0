//! Small numerical helpers: Gaussian functions, Poisson-weighted sums,
//! sample moments and Kolmogorov-Smirnov distances.

use crate::error::{Error, Result};

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn normal_cdf(x: f64, mean: f64, var: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (2.0 * var).sqrt())
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    ln_normal_pdf(x, mean, var).exp()
}

pub fn ln_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var) - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
}

/// Poisson pmf via the saddle-point form `e^{-stirlerr(n) - bd0(n, mu)} / √(2πn)`,
/// which keeps full relative precision for large means; exact for `mu = 0`.
pub fn poisson_pmf(n: u64, mu: f64) -> f64 {
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if n == 0 {
        return (-mu).exp();
    }
    let x = n as f64;
    (-stirling_error(x) - deviance_term(x, mu)).exp() / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// `ln(x!) - ((x + 1/2) ln x - x + ln √(2π))`.
fn stirling_error(x: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if x <= 15.0 {
        return libm::lgamma(x + 1.0) - (x + 0.5) * x.ln() + x - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let x2 = x * x;
    if x > 500.0 {
        (S0 - S1 / x2) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / x2) / x2) / x2) / x2) / x
    }
}

/// `x ln(x/m) + m - x`, evaluated by series near `x = m`.
fn deviance_term(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Relative size of the last included term below which a Poisson sum is
/// considered converged.
pub const POISSON_TAIL_TOL: f64 = 1e-14;
const POISSON_WINDOW_SIGMAS: f64 = 12.0;
const POISSON_MAX_EXTENSION: u64 = 1 << 22;

/// Computes `Σ_n f(n) P(n; mu)` for a vector-valued `f`.
///
/// The sum starts on `[mu - 12√mu, mu + 12√mu]` and is extended one term at a
/// time on each open side until the boundary term's contribution is below
/// [`POISSON_TAIL_TOL`] relative to the running total for every component.
pub fn poisson_expectation<const K: usize>(
    mu: f64,
    f: impl Fn(u64) -> [f64; K],
) -> Result<[f64; K]> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::domain(format!("Poisson mean must be finite and >= 0, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(f(0));
    }
    let half = POISSON_WINDOW_SIGMAS * mu.sqrt();
    let mut lo = (mu - half).floor().max(0.0) as u64;
    let mut hi = (mu + half).ceil() as u64;

    let mut acc = [0.0; K];
    let term = |n: u64| {
        let p = poisson_pmf(n, mu);
        let mut t = f(n);
        for v in &mut t {
            *v *= p;
        }
        t
    };
    let add = |acc: &mut [f64; K], t: &[f64; K]| {
        for (a, v) in acc.iter_mut().zip(t) {
            *a += v;
        }
    };
    for n in lo..=hi {
        add(&mut acc, &term(n));
    }
    let small = |acc: &[f64; K], t: &[f64; K]| {
        acc.iter()
            .zip(t)
            .all(|(a, v)| v.abs() <= POISSON_TAIL_TOL * a.abs() || *v == 0.0)
    };

    let mut upper_done = small(&acc, &term(hi));
    let mut lower_done = lo == 0 || small(&acc, &term(lo));
    let mut steps = 0;
    while !(upper_done && lower_done) {
        if steps > POISSON_MAX_EXTENSION {
            return Err(Error::numeric(format!(
                "Poisson sum with mean {mu} did not converge"
            )));
        }
        steps += 1;
        if !upper_done {
            hi += 1;
            let t = term(hi);
            add(&mut acc, &t);
            upper_done = small(&acc, &t);
        }
        if !lower_done {
            lo -= 1;
            let t = term(lo);
            add(&mut acc, &t);
            lower_done = lo == 0 || small(&acc, &t);
        }
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(format!("non-finite Poisson sum at mean {mu}")));
    }
    Ok(acc)
}

/// Sample moments with the standard errors used by the validation suites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Fourth central moment (biased).
    pub m4: f64,
}

impl SampleSummary {
    pub fn from_slice(xs: &[f64]) -> Self {
        let n = xs.len();
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
        }
        Self { n, mean, variance: m2 / (nf - 1.0), m4: m4 / nf }
    }

    pub fn std_error_mean(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    /// Standard error of the sample variance, `sqrt((m4 - σ⁴ (n-3)/(n-1)) / n)`.
    pub fn std_error_variance(&self) -> f64 {
        let n = self.n as f64;
        let s4 = self.variance * self.variance;
        ((self.m4 - s4 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }
}

/// One-sample Kolmogorov-Smirnov distance between the empirical CDF of
/// `xs` and `cdf`. Ties (integer-valued data) are handled by evaluating the
/// ECDF on both sides of each jump.
pub fn ks_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut j = i;
        while j < v.len() && v[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_two_sample_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (n, m) = (n as f64, m as f64);
    c * ((n + m) / (n * m)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_reference_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-15);
        assert!((0.5 * erfc(1.0 / 2f64.sqrt()) - 0.158_655_253_931_457).abs() < 1e-12);
    }

    #[test]
    fn poisson_sums_recover_moments() {
        for &mu in &[0.0, 0.3, 4.0, 250.0, 20_000.0] {
            let [m0, m1, m2] =
                poisson_expectation(mu, |n| [1.0, n as f64, (n as f64 - mu).powi(2)]).unwrap();
            assert!((m0 - 1.0).abs() < 1e-12, "mass at mu={mu}: {m0}");
            assert!((m1 - mu).abs() < 1e-9 * mu.max(1.0), "mean at mu={mu}: {m1}");
            assert!((m2 - mu).abs() < 1e-8 * mu.max(1.0), "var at mu={mu}: {m2}");
        }
        assert!(poisson_expectation(-1.0, |_| [1.0]).is_err());
    }

    #[test]
    fn summary_of_known_sample() {
        let s = SampleSummary::from_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }
}
