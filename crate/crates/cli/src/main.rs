use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grec_core::harness::{self, ExperimentConfig, OutputFormat, Stage, MANIFEST_FILE};
use grec_core::Error;

/// Randomized error cancellation workbench.
#[derive(Debug, Parser)]
#[command(name = "grec-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact magnetization on the lambda grid.
    Oracle(StageArgs),
    /// Noisy circuit curve.
    Simulate(StageArgs),
    /// Generate the randomized ensemble and simulate every member.
    Ensemble(StageArgs),
    /// Fit GREC weights on each training region and apply them.
    Grec(StageArgs),
    /// Affine baseline fitted on each training region.
    Baseline(StageArgs),
    /// Linear zero-noise extrapolation.
    Zne(StageArgs),
    /// Validation sweep over (N_R, delta).
    Sweep(StageArgs),
    /// Chebyshev extrapolation stability experiment.
    Stability(StageArgs),
    /// Every stage plus the RMSE summary.
    Run(StageArgs),
    /// Render SVG figures from curve files.
    Report {
        /// Directory holding the curves; defaults to --out.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run a manifest and check every artifact hash.
    Replay {
        /// A manifest file, or a directory containing one.
        manifest: PathBuf,
        #[arg(long, default_value = "replay")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct StageArgs {
    /// TOML experiment config; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Finite-shot sampling instead of exact expectations.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn load_config(a: &StageArgs) -> grec_core::Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if a.seed.is_some() {
        cfg.master_seed = a.seed;
    }
    if a.shots.is_some() {
        cfg.shots = a.shots;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn stage(stage: Stage, a: &StageArgs) -> grec_core::Result<()> {
    let cfg = load_config(a)?;
    let run = harness::execute(stage, &cfg, &a.out, a.format.into(), None)?;
    println!("{stage}: wrote {} artifacts to {}", run.artifacts.len() + 1, a.out.display());
    Ok(())
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

fn dispatch(cmd: Command) -> grec_core::Result<()> {
    match cmd {
        Command::Oracle(a) => stage(Stage::Oracle, &a),
        Command::Simulate(a) => stage(Stage::Simulate, &a),
        Command::Ensemble(a) => stage(Stage::Ensemble, &a),
        Command::Grec(a) => stage(Stage::Grec, &a),
        Command::Baseline(a) => stage(Stage::Baseline, &a),
        Command::Zne(a) => stage(Stage::Zne, &a),
        Command::Sweep(a) => stage(Stage::Sweep, &a),
        Command::Stability(a) => stage(Stage::Stability, &a),
        Command::Run(a) => stage(Stage::Run, &a),
        Command::Report { input, out } => {
            let figs = harness::report(input.as_deref().unwrap_or(&out), &out)?;
            for f in figs {
                println!("{}", out.join(f.path).display());
            }
            Ok(())
        }
        Command::Replay { manifest, out } => {
            let rep = harness::replay(&manifest_path(&manifest), &out)?;
            println!("replay: {} artifacts match", rep.checked);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() {
        2
    } else {
        3
    }
}
