//! `onebit`: bound tables, loss tables and Monte-Carlo curves for channel
//! estimation from 1-bit measurements with an unknown threshold.
//!
//! Exit status is 0 on success, 2 for bad arguments or configs, 3 when the
//! numerics fail (singular information matrix and the like), 1 for I/O.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use onebit::harness::{figure_preset, tables_for, ScenarioConfig, Task, FIGURE_NAMES};
use onebit::Error;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(
    name = "onebit",
    version,
    about = "Bounds and estimators for 1-bit channel estimation"
)]
struct Cli {
    /// Worker threads for Monte-Carlo trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for output tables and the run report.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic bound tables.
    Bounds(ConfigArgs),
    /// Monte-Carlo RNMSE curves with their bounds.
    Simulate(ConfigArgs),
    /// Quantization and offset loss tables in dB.
    Losses(ConfigArgs),
    /// Canned scenario for one of the reference figures.
    Figure(FigureArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario file, `key = value` per line.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct FigureArgs {
    /// fig1 .. fig10
    #[arg(long)]
    name: String,

    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,

    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

struct Invocation {
    command: String,
    config_digest: String,
    elapsed: f64,
    output_paths: Vec<PathBuf>,
}

impl Invocation {
    fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "command: {}", self.command).unwrap();
        writeln!(s, "config_sha256: {}", self.config_digest).unwrap();
        writeln!(s, "elapsed_seconds: {:.3}", self.elapsed).unwrap();
        for p in &self.output_paths {
            writeln!(s, "output: {}", p.display()).unwrap();
        }
        s
    }
}

fn digest(cfg: &ScenarioConfig) -> String {
    Sha256::digest(cfg.to_canonical_string().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    ScenarioConfig::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn run(cli: &Cli, command_line: String) -> Result<(), Failure> {
    let (task, cfg, prefix) = match &cli.command {
        Command::Bounds(a) => (Task::Bounds, load_config(&a.config)?, stem(&a.config)),
        Command::Simulate(a) => (Task::Simulate, load_config(&a.config)?, stem(&a.config)),
        Command::Losses(a) => (Task::Losses, load_config(&a.config)?, stem(&a.config)),
        Command::Figure(a) => {
            let mut p = figure_preset(&a.name).map_err(|_| {
                Failure::Usage(format!(
                    "unknown figure `{}`, expected one of {}",
                    a.name,
                    FIGURE_NAMES.join(", ")
                ))
            })?;
            if let Some(t) = a.trials {
                p.config.trials = t;
            }
            if let Some(s) = a.seed {
                p.config.seed = s;
            }
            p.config
                .validate()
                .map_err(|e| Failure::Usage(e.to_string()))?;
            eprintln!("{}: {}", p.name, p.title);
            (p.task, p.config, p.name.to_string())
        }
    };

    let start = Instant::now();
    let tables = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Usage(format!("--threads: {e}")))?
            .install(|| tables_for(task, &cfg, &prefix))?,
        None => tables_for(task, &cfg, &prefix)?,
    };
    fs::create_dir_all(&cli.out_dir).map_err(|e| Failure::Core(e.into()))?;
    let mut output_paths = Vec::new();
    for t in &tables {
        let path = t.save(&cli.out_dir)?;
        eprintln!("wrote {}", path.display());
        output_paths.push(path);
    }
    let report = Invocation {
        command: command_line,
        config_digest: digest(&cfg),
        elapsed: start.elapsed().as_secs_f64(),
        output_paths,
    };
    let report_path = cli.out_dir.join(format!("{prefix}_report.txt"));
    fs::write(&report_path, report.render()).map_err(|e| Failure::Core(e.into()))?;
    eprintln!("wrote {}", report_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli, args.join(" ")) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                ref e if e.is_numerical() => 3,
                Error::Io(_) => 1,
                _ => 2,
            })
        }
    }
}
