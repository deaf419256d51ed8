use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use tds_core::data::save_dataset;
use tds_core::nets::NeuralNet;
use tds_core::rng::{phase, stream_rng};
use tds_core::scenarios::{ScenarioSpec, Side, Target};
use tds_core::DatasetFormat;
use tds_harness::{
    derive_net_bounds, emit_report, report_json, report_text, run_experiment, ExperimentConfig, HarnessError,
    ReportPaths,
};

#[derive(Parser)]
#[command(name = "tds", version, about = "Testable learning with distribution shift for regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from one side of a scenario.
    Gen {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        n: usize,
        /// Output file; `.csv` or `.jsonl`.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SideArg::Train)]
        side: SideArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        unlabeled: bool,
    },
    /// Run kernel-pipeline trials and write the JSON report.
    KernelRun {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run moment-pipeline trials and write the JSON report.
    MomentRun {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run an experiment and write JSON, CSV and text reports.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Build the composed approximant of a sigmoid net and print its certificate.
    ApproxReport {
        /// Net JSON file.
        #[arg(long, conflicts_with = "config")]
        net: Option<PathBuf>,
        /// Experiment config whose target is a sigmoid net.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Strict,
    Desk,
}

/// Command-line mirrors of config fields.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    desk_m: Option<usize>,
    #[arg(long)]
    desk_n: Option<usize>,
    #[arg(long, value_enum)]
    scale_mode: Option<ScaleArg>,
    #[arg(long)]
    holdout_size: Option<usize>,
}

impl Overrides {
    fn entries(&self) -> Vec<(&'static [&'static str], Value)> {
        let mut v: Vec<(&'static [&'static str], Value)> = Vec::new();
        if let Some(x) = self.seed {
            v.push((&["seed"], x.into()));
        }
        if let Some(x) = self.trials {
            v.push((&["trials"], x.into()));
        }
        if let Some(x) = self.epsilon {
            v.push((&["params", "epsilon"], x.into()));
        }
        if let Some(x) = self.desk_m {
            v.push((&["params", "desk_m"], x.into()));
        }
        if let Some(x) = self.desk_n {
            v.push((&["params", "desk_n"], x.into()));
        }
        if let Some(x) = self.scale_mode {
            let s = match x {
                ScaleArg::Strict => "strict",
                ScaleArg::Desk => "desk",
            };
            v.push((&["params", "scale_mode"], s.into()));
        }
        if let Some(x) = self.holdout_size {
            v.push((&["holdout_size"], x.into()));
        }
        v
    }
}

/// Fills `value` with the flag values the file leaves unset. Values already
/// in the file win; a differing flag is reported and ignored.
fn merge_flags(value: &mut Value, entries: Vec<(&[&str], Value)>) -> Result<()> {
    for (path, flag) in entries {
        let (last, parents) = path.split_last().expect("nonempty path");
        let mut node = &mut *value;
        for key in parents {
            node = node
                .as_object_mut()
                .context("config must be a JSON object")?
                .entry(key.to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
        let obj =
            node.as_object_mut().with_context(|| format!("config field {} must be an object", parents.join(".")))?;
        match obj.get(*last) {
            Some(existing) if *existing != flag => {
                log::warn!(
                    "--{} {flag} conflicts with config value {existing}; using the config",
                    last.replace('_', "-")
                );
            }
            Some(_) => {}
            None => {
                obj.insert(last.to_string(), flag);
            }
        }
    }
    Ok(())
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())).into())
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut value = read_json(path)?;
    merge_flags(&mut value, overrides.entries())?;
    let config: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn gen(scenario: &Path, n: usize, out: &Path, side: SideArg, seed: Option<u64>, unlabeled: bool) -> Result<()> {
    let mut value = read_json(scenario)?;
    if let Some(s) = seed {
        merge_flags(&mut value, vec![(&["seed"], s.into())])?;
    }
    let spec: ScenarioSpec = serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))?;
    let (side, stream) = match side {
        SideArg::Train => (Side::Train, phase::TRAIN),
        SideArg::Test => (Side::Test, phase::TEST),
    };
    let (data, stats) = spec.generate(side, n, &mut stream_rng(spec.seed, stream))?;
    let data = if unlabeled { data.to_unlabeled() } else { data };
    let format = DatasetFormat::from_path(out).unwrap_or(DatasetFormat::JsonLines);
    save_dataset(&data, out, format)?;
    log::info!(
        "wrote {n} samples to {} (target loss {:.4}, {} corrupted)",
        out.display(),
        stats.target_loss,
        stats.corrupted
    );
    Ok(())
}

fn single_pipeline(config: &Path, out: &Path, overrides: &Overrides, kind: &str) -> Result<()> {
    let config = load_config(config, overrides)?;
    if config.pipeline.name() != kind {
        bail!(HarnessError::Config(format!("config describes a {} pipeline, not {kind}", config.pipeline.name())));
    }
    let report = run_experiment(&config)?;
    write_file(out, &report_json(&report)?)?;
    print!("{}", report_text(&report));
    Ok(())
}

fn approx_report(
    net: Option<PathBuf>,
    config: Option<PathBuf>,
    eps: Option<f64>,
    radius: Option<f64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let (net, eps, radius) = match (net, config) {
        (Some(path), None) => {
            let net: NeuralNet =
                serde_json::from_value(read_json(&path)?).map_err(|e| HarnessError::Config(e.to_string()))?;
            let eps = eps.ok_or_else(|| HarnessError::Config("--eps is required with --net".into()))?;
            let radius = radius.ok_or_else(|| HarnessError::Config("--radius is required with --net".into()))?;
            (net, eps, radius)
        }
        (None, Some(path)) => {
            let cfg = load_config(&path, &Overrides::default())?;
            let Target::Net(net) = cfg.scenario.target else {
                bail!(HarnessError::Config("config target is not a net".into()));
            };
            (net, eps.unwrap_or(cfg.params.epsilon), radius.unwrap_or(cfg.params.radius))
        }
        _ => bail!(HarnessError::Config("give exactly one of --net or --config".into())),
    };
    let derived = derive_net_bounds(&net, eps, radius)?;
    let body = serde_json::to_string_pretty(&derived)? + "\n";
    match out {
        Some(path) => write_file(&path, &body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { scenario, n, out, side, seed, unlabeled } => gen(&scenario, n, &out, side, seed, unlabeled),
        Command::KernelRun { config, out, overrides } => single_pipeline(&config, &out, &overrides, "kernel"),
        Command::MomentRun { config, out, overrides } => single_pipeline(&config, &out, &overrides, "moment"),
        Command::Experiment { config, out_dir, overrides } => {
            let config = load_config(&config, &overrides)?;
            let report = run_experiment(&config)?;
            emit_report(&report, &ReportPaths::in_dir(&out_dir))?;
            print!("{}", report_text(&report));
            Ok(())
        }
        Command::ApproxReport { net, config, eps, radius, out } => approx_report(net, config, eps, radius, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.chain().find_map(|e| e.downcast_ref::<HarnessError>()).map_or(1, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
