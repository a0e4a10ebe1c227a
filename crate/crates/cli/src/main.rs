use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use dqsim_core::experiments::{
    apply_override, load_config_value, resolve_config, run_experiment, ConfigError, ExperimentConfig,
    ExperimentKind, OutputFormat,
};

const OUT_DIR_ENV: &str = "DQSIM_OUT_DIR";

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "dqsim", version, about = "Digital quantum simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Digital error of the Heisenberg chain against gate-error lines
    #[command(name = "fig2-heisenberg")]
    Fig2Heisenberg(RunArgs),
    /// Digital error of the transverse-field Ising chain
    #[command(name = "fig2-tfim")]
    Fig2Tfim(RunArgs),
    /// Two-transmon Heisenberg dynamics under the device master equation
    Fig3(RunArgs),
    /// Execution times, Trotter bounds and fidelity budgets
    Table1(RunArgs),
    /// Trotter error bounds next to measured digital errors
    Bounds(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: config, then $DQSIM_OUT_DIR, then ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dotted-path override, e.g. --set noise.kappa=0
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for parameter sweeps
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write gnuplot scripts
    #[arg(long)]
    gnuplot: bool,
    /// Print the resolved config and exit
    #[arg(long)]
    print_config: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::Fig2Heisenberg(a) => (ExperimentKind::Fig2Heisenberg, a),
            Command::Fig2Tfim(a) => (ExperimentKind::Fig2Tfim, a),
            Command::Fig3(a) => (ExperimentKind::Fig3, a),
            Command::Table1(a) => (ExperimentKind::Table1, a),
            Command::Bounds(a) => (ExperimentKind::Bounds, a),
        }
    }
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut value = match &args.config {
        Some(path) => load_config_value(path)?,
        None => Value::Object(Default::default()),
    };
    let map = value.as_object_mut().ok_or_else(|| {
        ConfigError::Invalid(vec![dqsim_core::experiments::ConfigIssue {
            path: "<root>".into(),
            message: "config must be a JSON object".into(),
        }])
    })?;
    match map.get("experiment") {
        None => {
            map.insert("experiment".into(), Value::String(kind.tag().into()));
        }
        Some(Value::String(tag)) if tag == kind.tag() => {}
        Some(other) => {
            return Err(ConfigError::Invalid(vec![dqsim_core::experiments::ConfigIssue {
                path: "experiment".into(),
                message: format!("config names {other} but the subcommand is {}", kind.tag()),
            }]))
        }
    }
    for o in &args.overrides {
        apply_override(&mut value, o)?;
    }
    if let Some(f) = args.format {
        let tag = match f {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        apply_override(&mut value, &format!("output.format={tag}"))?;
    }
    if args.gnuplot {
        apply_override(&mut value, "output.gnuplot=true")?;
    }
    resolve_config(value)
}

fn output_dir(args: &RunArgs, config: &ExperimentConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();

    let config = match build_config(kind, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error:");
            for line in e.to_string().lines() {
                eprintln!("  {line}");
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if args.print_config {
        let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&config).expect("config serializes"));
        return ExitCode::SUCCESS;
    }
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }

    let report = match run_experiment(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("numerical failure in {kind}: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    let dir = output_dir(&args, &config);
    let written = report
        .write(&dir, config.output.format, config.output.gnuplot)
        .with_context(|| format!("writing into {}", dir.display()));
    match written {
        Ok(paths) => {
            let mut out = std::io::stdout().lock();
            for n in &report.notes {
                if n.starts_with("warning") {
                    eprintln!("{n}");
                }
            }
            for p in paths {
                let _ = writeln!(out, "{}", p.display());
            }
            if config.output.format == OutputFormat::Csv {
                if let Some(summary) = report.tables.iter().find(|t| t.name.ends_with("_summary")) {
                    let body = report.render_csv(summary);
                    for line in body.lines().filter(|l| !l.starts_with('#')) {
                        let _ = writeln!(out, "  {line}");
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e:#}");
            ExitCode::from(EXIT_IO)
        }
    }
}
