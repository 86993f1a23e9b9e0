use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qnoise::benchlib::{BenchmarkId, DepthSpec};
use qnoise::harness::{self, ExperimentConfig, OutputFormat};
use qnoise::noise::NoiseKind;
use qnoise::Error;

#[derive(Parser)]
#[command(name = "qnoise-bench", version, about = "Run noisy-circuit benchmark sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config, with optional overrides.
    Run(RunArgs),
    /// List benchmark ids and noise kinds.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config. Without it, --benchmark and --noise are required.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, value_enum)]
    rc: Option<Switch>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; rows go to stdout when neither this nor the config names one.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn load_config(args: &RunArgs) -> qnoise::Result<ExperimentConfig> {
    let parse_bench = |s: &str| {
        s.parse::<BenchmarkId>()
            .map_err(|e| Error::config("benchmark", e.to_string()))
    };
    let parse_noise = |s: &str| {
        s.parse::<NoiseKind>()
            .map_err(|e| Error::config("noise", e.to_string()))
    };
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => {
            let bench = args
                .benchmark
                .as_deref()
                .ok_or_else(|| Error::config("benchmark", "required without --config"))?;
            let noise = args
                .noise
                .as_deref()
                .ok_or_else(|| Error::config("noise", "required without --config"))?;
            ExperimentConfig::new(parse_bench(bench)?, parse_noise(noise)?)
        }
    };
    if let Some(b) = &args.benchmark {
        cfg.benchmark = parse_bench(b)?;
    }
    if let Some(n) = &args.noise {
        cfg.noise = parse_noise(n)?;
    }
    if let Some(rc) = args.rc {
        cfg.rc = matches!(rc, Switch::On);
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> qnoise::Result<()> {
    let cfg = load_config(args)?;
    let rows = harness::run_experiment(&cfg)?;
    match &cfg.output {
        Some(path) => harness::emit(&rows, path, cfg.format),
        None => {
            let text = match cfg.format {
                OutputFormat::Csv => harness::to_csv_string(&rows)?,
                OutputFormat::Json => harness::to_json_string(&rows)?,
            };
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn list() {
    println!("benchmarks:");
    for id in BenchmarkId::ALL {
        let spec = id.spec();
        let depth = match spec.depth {
            DepthSpec::Range { min, max } => format!("depth {min}..={max}"),
            DepthSpec::Fixed => "fixed depth".to_string(),
        };
        println!(
            "  {:<8} {} qubits, {}, {:?}, {}",
            id.name(),
            spec.n_qubits,
            depth,
            spec.gate_set,
            spec.metric.name()
        );
    }
    println!("noise kinds:");
    for kind in NoiseKind::ALL {
        let levels: Vec<String> = (0..=3)
            .filter_map(|l| kind.level_param(l).ok())
            .map(|p| format!("{p}"))
            .collect();
        println!("  {:<18} levels [{}]", kind.name(), levels.join(", "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            list();
            ExitCode::SUCCESS
        }
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e @ Error::Config { .. }) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
