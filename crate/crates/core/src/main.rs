use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcdetect::detectors::StatisticKind;
use mcdetect::estimators::VarianceForm;
use mcdetect::experiments::{
    emit_histograms, evaluate_point, grid, run_crn_validation, run_sweep_to_files, Axis, Config, CrnValidationOptions,
    Spacing, SweepSpec,
};
use mcdetect::sampler::{Bit, ChannelScenario};
use mcdetect::{Error, Result};

/// Detection of concentration-shift-keyed bits under molecular interference.
#[derive(Parser)]
#[command(name = "mcdetect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with `[scenario]` overrides and `[sweeps.<name>]` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials, histogram iterations or validation symbols.
    #[arg(long)]
    trials: Option<u64>,
    /// Comma-separated subset of dnbr, drut, drbt, drubt.
    #[arg(long, value_delimiter = ',')]
    detectors: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the truncated Poisson sums instead of the closed variance forms.
    #[arg(long)]
    exact_variance: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Bit-error probability along one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Built-in sweep (interference, interference-saturated, affinity-below, affinity-above, bit-ratio, receptors).
        #[arg(long, conflicts_with = "axis")]
        preset: Option<String>,
        /// Run only this sweep section of the configuration.
        #[arg(long)]
        name: Option<String>,
        #[arg(long, requires_all = ["from", "to"])]
        axis: Option<Axis>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long)]
        log: bool,
        /// Also write the JSON mirror to this path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Histograms of the four statistics against their Gaussian models.
    Hist {
        #[command(flatten)]
        common: Common,
        /// Transmitted bit (0 or 1).
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        bit: u8,
        #[arg(long, default_value_t = 60)]
        bins: usize,
    },
    /// Compares chemical-network decisions with direct threshold decisions.
    CrnValidate {
        #[command(flatten)]
        common: Common,
        /// `S` molecules per second of unbound time.
        #[arg(long, default_value_t = 1000.0)]
        amplification: f64,
    },
    /// Bit-error probability at a single operating point.
    Bep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

impl Common {
    fn config(&self) -> Result<Config> {
        self.config.as_deref().map_or_else(|| Ok(Config::default()), Config::load)
    }

    fn scenario(&self) -> Result<ChannelScenario> {
        self.config()?.base_scenario()
    }

    fn detectors(&self) -> Result<Option<Vec<StatisticKind>>> {
        self.detectors.as_ref().map(|d| d.iter().map(|s| s.parse()).collect()).transpose()
    }

    fn variance(&self) -> VarianceForm {
        if self.exact_variance {
            VarianceForm::ExactSum
        } else {
            VarianceForm::Closed
        }
    }

    /// Command-line values take precedence over the configuration.
    fn override_spec(&self, spec: &mut SweepSpec) -> Result<()> {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(t) = self.trials {
            spec.mc_trials = t;
        }
        if let Some(d) = self.detectors()? {
            spec.detectors = d;
        }
        if self.exact_variance {
            spec.variance = VarianceForm::ExactSum;
        }
        spec.validate()
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))
}

/// Writes pretty JSON to `out`, or to stdout.
fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let mut w = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    common: &Common,
    preset: Option<&str>,
    name: Option<&str>,
    axis: Option<Axis>,
    from: Option<f64>,
    to: Option<f64>,
    points: usize,
    log: bool,
    json: Option<&Path>,
) -> Result<()> {
    let config = common.config()?;
    let mut specs = Vec::new();
    if let Some(p) = preset {
        let mut s = SweepSpec::preset(p)?;
        if common.config.is_some() {
            // Keep the preset's own concentrations unless the file sets them.
            s.base = config.scenario.apply(&s.base)?;
        }
        specs.push(s);
    } else if let Some(axis) = axis {
        let spacing = if log { Spacing::Log } else { Spacing::Linear };
        let values = grid(from.unwrap_or_default(), to.unwrap_or_default(), points, spacing)?;
        let mut s = SweepSpec {
            name: axis.name().to_string(),
            base: config.base_scenario()?,
            axis,
            values,
            detectors: StatisticKind::ALL.to_vec(),
            mc_trials: config.trials.unwrap_or(mcdetect::experiments::config::DEFAULT_TRIALS),
            seed: config.seed.unwrap_or(mcdetect::experiments::config::DEFAULT_SEED),
            variance: VarianceForm::Closed,
            output_path: None,
        };
        if axis == Axis::ReceptorCount {
            s.values.iter_mut().for_each(|v| *v = v.round());
            s.values.dedup();
        }
        specs.push(s);
    } else if let Some(n) = name {
        specs.push(config.sweep(n)?);
    } else if !config.sweeps.is_empty() {
        for n in config.sweeps.keys() {
            specs.push(config.sweep(n)?);
        }
    } else {
        return Err(Error::Config("give --preset, --axis, or a configuration with sweep sections".into()));
    }
    if specs.len() > 1 && (common.out.is_some() || json.is_some()) {
        return Err(Error::Config("--out and --json need a single sweep; set `out` per section instead".into()));
    }
    for mut spec in specs {
        common.override_spec(&mut spec)?;
        let csv = common
            .out
            .clone()
            .or_else(|| spec.output_path.clone())
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.name)));
        let rows = run_sweep_to_files(&spec, &csv, json)?;
        eprintln!("{}: {} points -> {}", spec.name, rows.len(), csv.display());
    }
    Ok(())
}

fn bep(common: &Common, json: Option<&Path>) -> Result<()> {
    let config = common.config()?;
    let mut spec = SweepSpec {
        name: "bep".into(),
        base: config.base_scenario()?,
        axis: Axis::ReceptorCount,
        values: vec![0.0],
        detectors: StatisticKind::ALL.to_vec(),
        mc_trials: config.trials.unwrap_or(mcdetect::experiments::config::DEFAULT_TRIALS),
        seed: config.seed.unwrap_or(mcdetect::experiments::config::DEFAULT_SEED),
        variance: common.variance(),
        output_path: None,
    };
    spec.values = vec![spec.base.n_receptors as f64];
    common.override_spec(&mut spec)?;
    let row = evaluate_point(&spec.base, &spec, spec.seed, spec.values[0])?;

    let write = |w: &mut dyn Write| -> Result<()> {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "detector", "analytic_bep", "mc_bep", "mc_ci95", "threshold", "mean0", "var0", "mean1", "var1",
        ])?;
        let f = |v: f64| format!("{v:e}");
        let o = |v: Option<f64>| v.map(f).unwrap_or_default();
        for d in &row.detectors {
            c.write_record([
                d.detector.to_string(),
                f(d.analytic_bep),
                o(d.mc_bep),
                o(d.mc_ci95),
                f(d.threshold),
                f(d.mean0),
                f(d.var0),
                f(d.mean1),
                f(d.var1),
            ])?;
        }
        c.flush()?;
        Ok(())
    };
    match &common.out {
        Some(p) => write(&mut create(p)?)?,
        None => write(&mut std::io::stdout().lock())?,
    }
    if let Some(p) = json {
        emit_json(&row, Some(p))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep { common, preset, name, axis, from, to, points, log, json } => sweep(
            &common,
            preset.as_deref(),
            name.as_deref(),
            axis,
            from,
            to,
            points,
            log,
            json.as_deref(),
        ),
        Command::Hist { common, bit, bins } => {
            let config = common.config()?;
            let report = emit_histograms(
                &common.scenario()?,
                Bit::from(bit == 1),
                common.trials.unwrap_or(50_000),
                bins,
                common.seed.or(config.seed).unwrap_or(1),
                common.variance(),
            )?;
            emit_json(&report, common.out.as_deref())
        }
        Command::CrnValidate { common, amplification } => {
            let config = common.config()?;
            let opts = CrnValidationOptions {
                symbols: common.trials.unwrap_or(10_000),
                seed: common.seed.or(config.seed).unwrap_or(1),
                s_amplification: amplification,
                variance: common.variance(),
                ..CrnValidationOptions::default()
            };
            let detectors = common.detectors()?.unwrap_or_else(|| StatisticKind::ALL.to_vec());
            let report = run_crn_validation(&common.scenario()?, &detectors, &opts)?;
            emit_json(&report, common.out.as_deref())
        }
        Command::Bep { common, json } => bep(&common, json.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
