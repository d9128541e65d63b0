//! TOML run configuration and the built-in figure presets.
//!
//! ```toml
//! seed = 7
//! trials = 100000
//!
//! [scenario]            # overrides of the reference operating point
//! mean_c_in = 7.5
//!
//! [sweeps.interference]
//! axis = "interferer_conc"
//! from = 1.0
//! to = 10.0
//! points = 20
//! detectors = ["drut", "drubt"]
//! out = "interference.csv"
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detectors::StatisticKind;
use crate::error::{Error, Result};
use crate::estimators::VarianceForm;
use crate::kinetics::LigandSpec;
use crate::sampler::ChannelScenario;

/// Swept parameter. Axis values are expressed in the unit of the
/// corresponding figure axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Mean interferer concentration in multiples of `K_D^in`.
    InterfererConc,
    /// `η = k_s⁻ / k_in⁻`, with `k_s⁻` held fixed.
    AffinityRatio,
    /// `c₀ / c₁`, with `c₁` held fixed.
    Bit0Bit1Ratio,
    /// Number of receptors.
    ReceptorCount,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::InterfererConc, Axis::AffinityRatio, Axis::Bit0Bit1Ratio, Axis::ReceptorCount];

    pub fn name(self) -> &'static str {
        match self {
            Axis::InterfererConc => "interferer_conc",
            Axis::AffinityRatio => "affinity_ratio",
            Axis::Bit0Bit1Ratio => "bit0_bit1_ratio",
            Axis::ReceptorCount => "receptor_count",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Axis::InterfererConc => "mean interferer concentration / K_D^in",
            Axis::AffinityRatio => "k_s_off / k_in_off",
            Axis::Bit0Bit1Ratio => "c_bit0 / c_bit1",
            Axis::ReceptorCount => "receptors",
        }
    }

    /// Scenario at axis value `v`.
    pub fn apply(self, base: &ChannelScenario, v: f64) -> Result<ChannelScenario> {
        if !v.is_finite() {
            return Err(Error::config(format!("non-finite axis value {v}")));
        }
        let mut s = *base;
        match self {
            Axis::InterfererConc => s.mean_c_in = v * base.ligand_in.dissociation_constant(),
            Axis::AffinityRatio => {
                if v <= 0.0 {
                    return Err(Error::config(format!("affinity ratio must be > 0, got {v}")));
                }
                s = s.with_affinity_ratio(v)?;
            }
            Axis::Bit0Bit1Ratio => {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::config(format!("c_bit0 / c_bit1 must lie in (0, 1], got {v}")));
                }
                s.c_bit0 = v * base.c_bit1;
            }
            Axis::ReceptorCount => {
                if v < 3.0 || v.fract() != 0.0 {
                    return Err(Error::config(format!("receptor count must be an integer >= 3, got {v}")));
                }
                s.n_receptors = v as u64;
            }
        }
        s.validate().map_err(|e| Error::config(format!("{} = {v}: {e}", self.name())))?;
        Ok(s)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown axis '{s}'")))
    }
}

/// Evenly spaced grid, linear or logarithmic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

pub fn grid(from: f64, to: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if points == 0 || !from.is_finite() || !to.is_finite() {
        return Err(Error::config("grid needs finite bounds and at least one point"));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    match spacing {
        Spacing::Linear => Ok((0..points).map(|i| from + (to - from) * step(i)).collect()),
        Spacing::Log => {
            if from <= 0.0 || to <= 0.0 {
                return Err(Error::config("log grid needs positive bounds"));
            }
            let (a, b) = (from.ln(), to.ln());
            Ok((0..points).map(|i| (a + (b - a) * step(i)).exp()).collect())
        }
    }
}

/// Partial scenario; unset fields keep the reference values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverrides {
    pub c_bit0: Option<f64>,
    pub c_bit1: Option<f64>,
    pub mean_c_in: Option<f64>,
    pub volume: Option<f64>,
    pub n_receptors: Option<u64>,
    pub k_on: Option<f64>,
    pub k_off_s: Option<f64>,
    pub k_off_in: Option<f64>,
    /// Sets `k_off_in = k_off_s / affinity_ratio`; conflicts with `k_off_in`.
    pub affinity_ratio: Option<f64>,
    pub nu: Option<f64>,
}

impl ScenarioOverrides {
    pub fn apply(&self, base: &ChannelScenario) -> Result<ChannelScenario> {
        let mut s = *base;
        if let Some(v) = self.c_bit0 {
            s.c_bit0 = v;
        }
        if let Some(v) = self.c_bit1 {
            s.c_bit1 = v;
        }
        if let Some(v) = self.mean_c_in {
            s.mean_c_in = v;
        }
        if let Some(v) = self.volume {
            s.volume = v;
        }
        if let Some(v) = self.n_receptors {
            s.n_receptors = v;
        }
        if let Some(v) = self.nu {
            s.nu = v;
        }
        let k_on = self.k_on.unwrap_or(s.ligand_s.k_on);
        let k_s = self.k_off_s.unwrap_or(s.ligand_s.k_off);
        let k_in = match (self.k_off_in, self.affinity_ratio) {
            (Some(_), Some(_)) => return Err(Error::config("set either k_off_in or affinity_ratio, not both")),
            (Some(v), None) => v,
            (None, Some(eta)) => k_s / eta,
            (None, None) => s.ligand_in.k_off,
        };
        s.ligand_s = LigandSpec::signal(k_on, k_s).map_err(|e| Error::config(e.to_string()))?;
        s.ligand_in = LigandSpec::interferer(k_on, k_in).map_err(|e| Error::config(e.to_string()))?;
        s.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(s)
    }
}

/// One `[sweeps.<name>]` section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Option<Vec<f64>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    pub detectors: Option<Vec<String>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub variance: Option<VarianceForm>,
    pub scenario: Option<ScenarioOverrides>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    #[serde(default)]
    pub scenario: ScenarioOverrides,
    #[serde(default)]
    pub sweeps: BTreeMap<String, SweepConfig>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn base_scenario(&self) -> Result<ChannelScenario> {
        self.scenario.apply(&ChannelScenario::default())
    }

    /// Resolves section `name` into a runnable sweep.
    pub fn sweep(&self, name: &str) -> Result<SweepSpec> {
        let sc = self
            .sweeps
            .get(name)
            .ok_or_else(|| Error::config(format!("no sweep named '{name}' in the configuration")))?;
        let mut base = self.base_scenario()?;
        if let Some(o) = &sc.scenario {
            base = o.apply(&base)?;
        }
        let values = match (&sc.values, sc.from, sc.to) {
            (Some(v), None, None) => v.clone(),
            (None, Some(a), Some(b)) => grid(a, b, sc.points.unwrap_or(DEFAULT_POINTS), sc.spacing)?,
            _ => return Err(Error::config(format!("sweep '{name}': give either values or from/to"))),
        };
        let detectors = match &sc.detectors {
            Some(d) => d.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?,
            None => StatisticKind::ALL.to_vec(),
        };
        let spec = SweepSpec {
            name: name.to_string(),
            base,
            axis: sc.axis,
            values: normalize_values(sc.axis, values),
            detectors,
            mc_trials: sc.trials.or(self.trials).unwrap_or(DEFAULT_TRIALS),
            seed: sc.seed.or(self.seed).unwrap_or(DEFAULT_SEED),
            variance: sc.variance.unwrap_or_default(),
            output_path: sc.out.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub const DEFAULT_POINTS: usize = 20;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

/// A fully resolved sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: String,
    pub base: ChannelScenario,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub detectors: Vec<StatisticKind>,
    /// Monte Carlo symbols per point; 0 runs the analytic model only.
    pub mc_trials: u64,
    pub seed: u64,
    pub variance: VarianceForm,
    pub output_path: Option<PathBuf>,
}

fn normalize_values(axis: Axis, mut values: Vec<f64>) -> Vec<f64> {
    if axis == Axis::ReceptorCount {
        values.iter_mut().for_each(|v| *v = v.round());
        values.dedup();
    }
    values
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config(format!("sweep '{}' has no axis values", self.name)));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::config(format!("sweep '{}': axis values must be strictly monotone", self.name)));
        }
        if self.detectors.is_empty() {
            return Err(Error::config(format!("sweep '{}' selects no detectors", self.name)));
        }
        if self.mc_trials > 0 && self.mc_trials < crate::detectors::MIN_MC_TRIALS {
            return Err(Error::config(format!(
                "Monte Carlo needs at least {} trials (or 0 to skip)",
                crate::detectors::MIN_MC_TRIALS
            )));
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }

    /// Built-in sweeps reproducing the evaluation figures.
    pub fn preset(name: &str) -> Result<Self> {
        let d = ChannelScenario::default();
        let kd_s = d.ligand_s.dissociation_constant();
        let (axis, base, values) = match name {
            "interference" => (Axis::InterfererConc, d, grid(1.0, 10.0, DEFAULT_POINTS, Spacing::Linear)?),
            "interference-saturated" => (
                Axis::InterfererConc,
                ChannelScenario { c_bit0: 19.0 * kd_s, c_bit1: 20.0 * kd_s, ..d },
                grid(1.0, 10.0, DEFAULT_POINTS, Spacing::Linear)?,
            ),
            "affinity-below" => (Axis::AffinityRatio, d, grid(0.05, 0.95, DEFAULT_POINTS, Spacing::Linear)?),
            "affinity-above" => (Axis::AffinityRatio, d, grid(1.1, 10.0, DEFAULT_POINTS, Spacing::Log)?),
            "bit-ratio" => (Axis::Bit0Bit1Ratio, d, grid(0.1, 0.99, DEFAULT_POINTS, Spacing::Linear)?),
            "receptors" => (Axis::ReceptorCount, d, grid(1e2, 1e5, 13, Spacing::Log)?),
            _ => {
                return Err(Error::config(format!(
                    "unknown preset '{name}' (expected one of {})",
                    PRESETS.join(", ")
                )))
            }
        };
        let spec = Self {
            name: name.to_string(),
            base,
            axis,
            values: normalize_values(axis, values),
            detectors: StatisticKind::ALL.to_vec(),
            mc_trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            variance: VarianceForm::Closed,
            output_path: None,
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub const PRESETS: [&str; 6] = ["interference", "interference-saturated", "affinity-below", "affinity-above", "bit-ratio", "receptors"];
