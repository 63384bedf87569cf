use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use dirtyboson_cli::config::{ExperimentConfig, ExperimentKind};
use dirtyboson_cli::{apply_overrides, load_config, output_dir, run, validate, Overrides};

#[derive(Parser)]
#[command(name = "dirtyboson", version, about = "Disordered Bose-Hubbard experiment pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration, or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $DIRTYBOSON_OUT, then ./dirtyboson-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Master seed; replaces any explicit seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per tomography phase setting (0 for exact).
    #[arg(long, global = true)]
    shots: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Observables of prepared states over a (J, W) grid.
    PhaseGrid,
    /// Field-cooled and zero-field-cooled compressibility.
    Compressibility,
    /// Driven mode susceptibility over a frequency grid.
    Bragg,
    /// Correlator tomography on the partial-swap benchmark.
    TomographyBench,
    /// Gutzwiller statics and Bogoliubov bands.
    Meanfield,
    /// Effective extended Bose-Hubbard terms of a bare device.
    SwDerive,
    /// Report sector sizes and refuse oversized runs.
    Validate {
        /// Pipeline to validate for; defaults to the configuration's kind.
        #[arg(long, value_enum)]
        kind: Option<ExperimentKind>,
    },
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::PhaseGrid => ExperimentKind::PhaseGrid,
            Command::Compressibility => ExperimentKind::Compressibility,
            Command::Bragg => ExperimentKind::Bragg,
            Command::TomographyBench => ExperimentKind::TomographyBench,
            Command::Meanfield => ExperimentKind::Meanfield,
            Command::SwDerive => ExperimentKind::SwDerive,
            Command::Validate { .. } => return None,
        })
    }
}

/// Exit code when some tasks failed but outputs were written.
const PARTIAL: u8 = 3;
/// Exit code when validation refuses the configuration.
const REFUSED: u8 = 2;

fn main_inner(cli: Cli) -> Result<ExitCode> {
    let config = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        shots: cli.shots,
    };
    let config = apply_overrides(config, &overrides);
    if let Command::Validate { kind } = &cli.command {
        let Some(kind) = kind.or(config.kind) else {
            anyhow::bail!("kind: give --kind or set \"kind\" in the configuration");
        };
        let report = validate::validate(&config, kind);
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(if report.accepted { ExitCode::SUCCESS } else { ExitCode::from(REFUSED) });
    }
    let kind = cli.command.kind().expect("run subcommand");
    let dir = output_dir(&config);
    let manifest = run(kind, &config, &dir, cli.threads)?;
    let failed = manifest.failed_tasks();
    eprintln!(
        "{}: {} tasks ({failed} failed), {} files in {} ({:.1} s)",
        manifest.kind,
        manifest.tasks.len(),
        manifest.outputs.len(),
        dir.display(),
        manifest.seconds
    );
    for t in manifest.tasks.iter().filter(|t| t.error.is_some()) {
        eprintln!("  failed {}: {}", t.key, t.error.as_deref().unwrap_or_default());
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(PARTIAL) })
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
