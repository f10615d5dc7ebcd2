use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use fracwave::harness::commands::{self, CommandOutcome};
use fracwave::harness::config::{
    parse_config, read_config, CheckDampingConfig, ExperimentConfig, FitConfig, IntervalsConfig, LemmaConfig,
    LsConstantConfig, ResolventScanConfig, Theorem2Config, Validate,
};
use fracwave::harness::{run_experiment_as, ExperimentOutcome, Format};
use fracwave::{par, Error};

#[derive(Parser)]
#[command(name = "fracwave", version, about = "Damped fractional wave equation laboratory")]
struct Cli {
    /// JSON configuration for the subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing; reused only if it holds a fracwave manifest)
    #[arg(long, global = true, default_value = "fracwave-out")]
    out: PathBuf,
    /// Replace every seed in the configuration
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Format of tabular outputs
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// One simulation (single s and damping profile), fitted and classified
    Simulate,
    /// Simulate every (s, damping) pair of the configuration
    Sweep,
    /// Fit exponential and power-law decay to a `t,E` trace
    FitDecay {
        #[arg(long)]
        trace: PathBuf,
        /// Fractional order the trace was produced with
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
    /// Resolvent norms along the imaginary axis
    ResolventScan,
    /// Sampling constant of a level set for band-limited functions
    LsConstant,
    /// Density checks for a catalog of damping profiles
    CheckDamping,
    /// Symbol-gap infimum and power-difference constant
    LemmaVerify,
    /// Growth of the near-resonant frequency intervals
    Intervals,
    /// Band-truncation ratio and sinc translate averages for vanishing damping
    Theorem2Demo,
}

fn load<T: DeserializeOwned + Validate>(path: Option<&Path>) -> fracwave::Result<T> {
    match path {
        Some(p) => read_config(p),
        None => parse_config("{}"),
    }
}

fn require<T: DeserializeOwned + Validate>(path: Option<&Path>, command: &str) -> fracwave::Result<T> {
    match path {
        Some(p) => read_config(p),
        None => Err(Error::Config(vec![format!("{command} needs --config <path>")])),
    }
}

enum Finished {
    Experiment(ExperimentOutcome),
    Command(CommandOutcome),
}

fn run(cli: &Cli) -> fracwave::Result<Finished> {
    let format = match cli.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    };
    let cfg = cli.config.as_deref();
    let out = cli.out.as_path();
    let seed = cli.seed;
    let seeded = |d: fracwave::DampingKind| match seed {
        Some(s) => d.with_seed(s),
        None => d,
    };
    Ok(match &cli.command {
        Command::Simulate | Command::Sweep => {
            let name = if matches!(cli.command, Command::Simulate) { "simulate" } else { "sweep" };
            let mut c: ExperimentConfig = require(cfg, name)?;
            if let Some(s) = seed {
                c = c.with_seed(s);
            }
            if name == "simulate" && (c.s.len() != 1 || c.damping.len() != 1) {
                return Err(Error::Config(vec![
                    "simulate takes a single s and a single damping profile; use sweep for lists".into(),
                ]));
            }
            Finished::Experiment(run_experiment_as(name, &c, out, format)?)
        }
        Command::FitDecay { trace, s } => {
            let c: FitConfig = load(cfg)?;
            Finished::Command(commands::fit_decay(trace, *s, &c, out, format)?)
        }
        Command::ResolventScan => {
            let mut c: ResolventScanConfig = load(cfg)?;
            c.damping = seeded(c.damping);
            Finished::Command(commands::resolvent_scan_command(&c, out, format)?)
        }
        Command::LsConstant => {
            let mut c: LsConstantConfig = load(cfg)?;
            c.set = seeded(c.set);
            Finished::Command(commands::ls_constant_command(&c, out, format)?)
        }
        Command::CheckDamping => {
            let mut c: CheckDampingConfig = load(cfg)?;
            c.damping = c.damping.into_iter().map(seeded).collect();
            Finished::Command(commands::check_damping(&c, out, format)?)
        }
        Command::LemmaVerify => {
            let c: LemmaConfig = load(cfg)?;
            Finished::Command(commands::lemma_verify(&c, out, format)?)
        }
        Command::Intervals => {
            let c: IntervalsConfig = load(cfg)?;
            Finished::Command(commands::intervals(&c, out, format)?)
        }
        Command::Theorem2Demo => {
            let mut c: Theorem2Config = load(cfg)?;
            c.damping = seeded(c.damping);
            Finished::Command(commands::theorem2_demo(&c, out, format)?)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.map(|n| n as usize);
    let result = par::with_workers(workers, || run(&cli)).and_then(|r| r);
    match result {
        Ok(Finished::Experiment(o)) => {
            for r in &o.report.runs {
                match &r.classification {
                    Some(c) => println!(
                        "{:<32} {:<12} exp rate {:.4e} (res {:.3e})  power {:.4} (res {:.3e})",
                        r.name,
                        c.class.name(),
                        c.exponential.rate,
                        c.exponential.residual,
                        c.polynomial.rate,
                        c.polynomial.residual
                    ),
                    None => println!("{:<32} failed", r.name),
                }
            }
            finish(&cli.out, &o.manifest.failures, o.manifest.files.len())
        }
        Ok(Finished::Command(o)) => {
            println!("{}", serde_json::to_string_pretty(&o.report).unwrap_or_default());
            finish(&cli.out, &o.manifest.failures, o.manifest.files.len())
        }
        Err(Error::Config(problems)) => {
            eprintln!("invalid configuration:");
            for p in problems {
                eprintln!("  {p}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn finish(out: &Path, failures: &[String], files: usize) -> ExitCode {
    eprintln!("wrote {files} files and manifest.json to {}", out.display());
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in failures {
            eprintln!("failed: {f}");
        }
        ExitCode::from(1)
    }
}
