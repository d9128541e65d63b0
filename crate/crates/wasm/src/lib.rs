//! Browser bindings. Every entry point takes a JSON request and returns a
//! JSON document, so the page needs no generated type definitions.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use mcdetect::detectors::StatisticKind;
use mcdetect::estimators::{scenario_binning, VarianceForm};
use mcdetect::experiments::{emit_histograms, grid, run_sweep, Axis, ScenarioOverrides, Spacing, SweepSpec};
use mcdetect::kinetics::bound_duration_density;
use mcdetect::sampler::{Bit, ChannelScenario};

/// Largest histogram run accepted from the page; the browser is single
/// threaded.
pub const MAX_ITERATIONS: u64 = 50_000;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRequest {
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub log: bool,
    #[serde(default)]
    pub scenario: ScenarioOverrides,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRequest {
    #[serde(default)]
    pub scenario: ScenarioOverrides,
    #[serde(default)]
    pub bit: u8,
    #[serde(default = "default_points")]
    pub points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramRequest {
    #[serde(default)]
    pub scenario: ScenarioOverrides,
    pub detector: String,
    #[serde(default)]
    pub bit: u8,
    pub iterations: u64,
    #[serde(default = "default_points")]
    pub bins: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_points() -> usize {
    40
}

#[derive(Serialize)]
struct DensityCurve {
    t1: f64,
    alpha_s: f64,
    bin_probabilities: [f64; 2],
    tau: Vec<f64>,
    density: Vec<f64>,
    signal_part: Vec<f64>,
    interferer_part: Vec<f64>,
}

fn scenario(o: &ScenarioOverrides) -> Result<ChannelScenario, String> {
    o.apply(&ChannelScenario::default()).map_err(|e| e.to_string())
}

fn bit(b: u8) -> Result<Bit, String> {
    match b {
        0 => Ok(Bit::Zero),
        1 => Ok(Bit::One),
        _ => Err(format!("bit must be 0 or 1, got {b}")),
    }
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Analytic bit-error probability of all four detectors along an axis.
pub fn bep_curve_json(request: &str) -> Result<String, String> {
    let r: CurveRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let spacing = if r.log { Spacing::Log } else { Spacing::Linear };
    let mut values = grid(r.from, r.to, r.points.clamp(2, 200), spacing).map_err(|e| e.to_string())?;
    if r.axis == Axis::ReceptorCount {
        values.iter_mut().for_each(|v| *v = v.round());
        values.dedup();
    }
    let spec = SweepSpec {
        name: r.axis.name().into(),
        base: scenario(&r.scenario)?,
        axis: r.axis,
        values,
        detectors: StatisticKind::ALL.to_vec(),
        mc_trials: 0,
        seed: 0,
        variance: VarianceForm::Closed,
        output_path: None,
    };
    let rows = run_sweep(&spec).map_err(|e| e.to_string())?;
    json(&serde_json::json!({ "axis": r.axis.name(), "axis_unit": r.axis.unit(), "rows": rows }))
}

/// Bound-interval density at the mean interference level, split by ligand,
/// with the bin boundary and the bin probabilities.
pub fn bound_time_density_json(request: &str) -> Result<String, String> {
    let r: DensityRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let sc = scenario(&r.scenario)?;
    let c_s = sc.signal_concentration(bit(r.bit)?);
    let alpha = c_s / (c_s + sc.mean_c_in);
    let (s, i) = (sc.ligand_s, sc.ligand_in);
    let scheme = scenario_binning(&sc).map_err(|e| e.to_string())?;
    let tau_max = 4.0 * scheme.t1;
    let n = r.points.clamp(2, 1000);
    let tau: Vec<f64> = (0..n).map(|k| tau_max * k as f64 / (n - 1) as f64).collect();
    let density = tau
        .iter()
        .map(|&t| bound_duration_density(t, alpha, &s, &i).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    json(&DensityCurve {
        t1: scheme.t1,
        alpha_s: alpha,
        bin_probabilities: scheme.bin_probabilities(alpha),
        signal_part: tau.iter().map(|t| alpha * s.k_off * (-s.k_off * t).exp()).collect(),
        interferer_part: tau.iter().map(|t| (1.0 - alpha) * i.k_off * (-i.k_off * t).exp()).collect(),
        tau,
        density,
    })
}

/// Monte Carlo histogram of one statistic with its Gaussian model.
pub fn statistic_histogram_json(request: &str) -> Result<String, String> {
    let r: HistogramRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let kind: StatisticKind = r.detector.parse().map_err(|e: mcdetect::Error| e.to_string())?;
    if r.iterations > MAX_ITERATIONS {
        return Err(format!("at most {MAX_ITERATIONS} iterations in the browser"));
    }
    let sc = scenario(&r.scenario)?;
    let report = emit_histograms(&sc, bit(r.bit)?, r.iterations, r.bins.clamp(1, 500), r.seed, VarianceForm::Closed)
        .map_err(|e| e.to_string())?;
    json(report.get(kind).ok_or("missing statistic")?)
}

#[wasm_bindgen]
pub fn bep_curve(request: &str) -> Result<String, JsError> {
    bep_curve_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bound_time_density(request: &str) -> Result<String, JsError> {
    bound_time_density_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn statistic_histogram(request: &str) -> Result<String, JsError> {
    statistic_histogram_json(request).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: Result<String, String>) -> serde_json::Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn curve_along_receptor_count() {
        let v = parse(bep_curve_json(
            r#"{"axis":"receptor_count","from":100,"to":100000,"points":4,"log":true,"scenario":{"mean_c_in":7.5}}"#,
        ));
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3]["axis_value"], 100000.0);
        assert_eq!(rows[0]["detectors"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn density_integrates_to_bin_probabilities() {
        let v = parse(bound_time_density_json(r#"{"points":2001}"#));
        let tau: Vec<f64> = serde_json::from_value(v["tau"].clone()).unwrap();
        let f: Vec<f64> = serde_json::from_value(v["density"].clone()).unwrap();
        let t1 = v["t1"].as_f64().unwrap();
        let short: f64 = tau
            .windows(2)
            .zip(f.windows(2))
            .filter(|(t, _)| t[1] <= t1 + 1e-12)
            .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
            .sum();
        let p0 = v["bin_probabilities"][0].as_f64().unwrap();
        assert!((short - p0).abs() < 1e-3, "{short} vs {p0}");
    }

    #[test]
    fn histogram_for_one_detector() {
        let v = parse(statistic_histogram_json(r#"{"detector":"drubt","iterations":2000,"bins":20,"seed":3}"#));
        assert_eq!(v["detector"], "drubt");
        assert_eq!(v["counts"].as_array().unwrap().len(), 20);
    }

    #[test]
    fn bad_requests_are_reported() {
        assert!(bep_curve_json(r#"{"axis":"sideways","from":1,"to":2}"#).is_err());
        assert!(statistic_histogram_json(r#"{"detector":"xyz","iterations":2000}"#).is_err());
        assert!(statistic_histogram_json(r#"{"detector":"drut","iterations":10000000}"#).is_err());
        assert!(bound_time_density_json(r#"{"bit":3}"#).is_err());
        assert!(bound_time_density_json(r#"{"scenario":{"c_bit0":100}}"#).is_err());
    }
}
