//! Parameter sweeps of the bit-error probability, written as CSV with a
//! JSON mirror.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::SweepSpec;
use crate::detectors::{analytic_bep, monte_carlo_bep_many, DecisionModel, StatisticKind};
use crate::error::Result;
use crate::rng::{derive_seed, SeedStreams};
use crate::sampler::{Bit, ChannelScenario};

/// Version of the CSV column layout and of the JSON document.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectorPoint {
    pub detector: &'static str,
    pub analytic_bep: f64,
    pub mc_bep: Option<f64>,
    pub mc_ci95: Option<f64>,
    pub threshold: f64,
    pub mean0: f64,
    pub var0: f64,
    pub mean1: f64,
    pub var1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    /// Mean bound fraction for each bit.
    pub pb_bit0: f64,
    pub pb_bit1: f64,
    pub detectors: Vec<DetectorPoint>,
}

impl SweepRow {
    pub fn get(&self, kind: StatisticKind) -> Option<&DetectorPoint> {
        self.detectors.iter().find(|d| d.detector == kind.label())
    }
}

/// Evaluates every detector at one scenario. `mc_trials = 0` skips
/// simulation.
pub fn evaluate_point(
    scenario: &ChannelScenario,
    spec: &SweepSpec,
    seed: u64,
    axis_value: f64,
) -> Result<SweepRow> {
    let models = spec
        .detectors
        .iter()
        .map(|&k| DecisionModel::build(scenario, k, spec.variance))
        .collect::<Result<Vec<_>>>()?;
    let mc = if spec.mc_trials > 0 {
        Some(monte_carlo_bep_many(scenario, &models, spec.mc_trials, &SeedStreams::new(seed))?)
    } else {
        None
    };
    let detectors = models
        .iter()
        .enumerate()
        .map(|(i, m)| DetectorPoint {
            detector: m.statistic_kind.label(),
            analytic_bep: analytic_bep(m),
            mc_bep: mc.as_ref().map(|r| r[i].mc_bep),
            mc_ci95: mc.as_ref().map(|r| r[i].mc_ci95),
            threshold: m.threshold,
            mean0: m.moments_bit0.mean,
            var0: m.moments_bit0.variance,
            mean1: m.moments_bit1.mean,
            var1: m.moments_bit1.variance,
        })
        .collect();
    Ok(SweepRow {
        axis_value,
        pb_bit0: scenario.saturation(Bit::Zero)?,
        pb_bit1: scenario.saturation(Bit::One)?,
        detectors,
    })
}

/// Runs the sweep. Point `i` simulates with seed `derive_seed(seed, [i])`,
/// so any single point can be reproduced on its own.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let point = |(i, &v): (usize, &f64)| {
        let scenario = spec.axis.apply(&spec.base, v)?;
        evaluate_point(&scenario, spec, derive_seed(spec.seed, &[i as u64]), v)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        spec.values.par_iter().enumerate().map(point).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        spec.values.iter().enumerate().map(point).collect()
    }
}

const DETECTOR_COLUMNS: [&str; 8] =
    ["analytic_bep", "mc_bep", "mc_ci95", "threshold", "mean0", "var0", "mean1", "var1"];

pub fn csv_header(detectors: &[StatisticKind]) -> Vec<String> {
    let mut h = vec!["axis_value".to_string(), "pb_bit0".into(), "pb_bit1".into()];
    for d in detectors {
        h.extend(DETECTOR_COLUMNS.iter().map(|c| format!("{}_{c}", d.label())));
    }
    h
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Writes one row per axis value; Monte Carlo columns are empty when no
/// simulation was run.
pub fn write_csv<W: Write>(rows: &[SweepRow], detectors: &[StatisticKind], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(detectors))?;
    for r in rows {
        let mut rec = vec![num(r.axis_value), num(r.pb_bit0), num(r.pb_bit1)];
        for d in &r.detectors {
            rec.extend([
                num(d.analytic_bep),
                opt(d.mc_bep),
                opt(d.mc_ci95),
                num(d.threshold),
                num(d.mean0),
                num(d.var0),
                num(d.mean1),
                num(d.var1),
            ]);
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    schema_version: u32,
    name: &'a str,
    axis: &'static str,
    axis_unit: &'static str,
    seed: u64,
    mc_trials: u64,
    base_scenario: &'a ChannelScenario,
    rows: &'a [SweepRow],
}

pub fn write_json<W: Write>(spec: &SweepSpec, rows: &[SweepRow], out: W) -> Result<()> {
    let doc = SweepDocument {
        schema_version: SCHEMA_VERSION,
        name: &spec.name,
        axis: spec.axis.name(),
        axis_unit: spec.axis.unit(),
        seed: spec.seed,
        mc_trials: spec.mc_trials,
        base_scenario: &spec.base,
        rows,
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

/// Runs `spec` and writes the CSV to `csv_path`, plus the JSON mirror if
/// `json_path` is given.
pub fn run_sweep_to_files(spec: &SweepSpec, csv_path: &Path, json_path: Option<&Path>) -> Result<Vec<SweepRow>> {
    let rows = run_sweep(spec)?;
    write_csv(&rows, &spec.detectors, std::io::BufWriter::new(std::fs::File::create(csv_path)?))?;
    if let Some(p) = json_path {
        let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
        write_json(spec, &rows, &mut f)?;
        f.flush()?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{Axis, SweepSpec};
    use crate::estimators::VarianceForm;

    fn small(trials: u64) -> SweepSpec {
        SweepSpec {
            name: "t".into(),
            base: ChannelScenario { n_receptors: 1000, ..Default::default() },
            axis: Axis::InterfererConc,
            values: vec![1.0, 4.0],
            detectors: vec![StatisticKind::TotalConc, StatisticKind::SignalConc],
            mc_trials: trials,
            seed: 3,
            variance: VarianceForm::Closed,
            output_path: None,
        }
    }

    #[test]
    fn csv_layout() {
        let spec = small(0);
        let rows = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &spec.detectors, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), 3 + 2 * 8);
        assert_eq!(header[3], "drut_analytic_bep");
        assert_eq!(header[18], "drubt_var1");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), header.len());
        assert_eq!(first[4], "");
        assert_eq!(lines.count(), 1);
    }

    #[test]
    fn rerun_is_identical_and_points_are_independent() {
        let spec = small(2000);
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a, b);
        let mut only_second = spec.clone();
        only_second.values = vec![4.0];
        let c = run_sweep(&only_second).unwrap();
        // Seeds follow the point index, not the value.
        assert_eq!(c[0].detectors[0].analytic_bep, a[1].detectors[0].analytic_bep);
        assert!(a[0].get(StatisticKind::TotalConc).unwrap().mc_bep.is_some());
    }

    #[test]
    fn json_mirror_has_schema() {
        let spec = small(0);
        let rows = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_json(&spec, &rows, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
        assert_eq!(v["rows"][0]["detectors"][1]["detector"], "drubt");
    }
}
