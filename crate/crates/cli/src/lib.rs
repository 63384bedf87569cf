//! Batch runner for the dirtyboson pipelines: configuration, parallel task
//! execution, CSV/plot output and a JSON run manifest.

pub mod config;
pub mod manifest;
pub mod output;
pub mod pipelines;
pub mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};

use config::{ExperimentConfig, ExperimentKind};
use manifest::{code_version, config_hash, RunManifest};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "DIRTYBOSON_OUT";

/// Output directory used when neither the flag, the config nor the
/// environment names one.
pub const DEFAULT_OUT: &str = "dirtyboson-out";

/// Read a configuration, or the configuration embedded in a run manifest.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(m) = serde_json::from_str::<RunManifest>(&text) {
        return Ok(m.config);
    }
    ExperimentConfig::from_json(&text).with_context(|| format!("in {}", path.display()))
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
}

/// Effective configuration: overrides win, and a `--seed` replaces any
/// explicit seed list with seeds derived from it.
pub fn apply_overrides(mut config: ExperimentConfig, o: &Overrides) -> ExperimentConfig {
    if let Some(s) = o.seed {
        if let Some(list) = config.seeds.list.take() {
            config.seeds.count = list.len();
        }
        config.seeds.master = s;
    }
    if let Some(n) = o.shots {
        config.tomography.shots = n;
    }
    if let Some(out) = &o.out {
        config.out_dir = Some(out.clone());
    }
    config
}

pub fn output_dir(config: &ExperimentConfig) -> PathBuf {
    config
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Validate, run on a pool of `threads` workers (0 = all cores), write the
/// outputs and `manifest.json` into `dir`.
pub fn run(kind: ExperimentKind, config: &ExperimentConfig, dir: &Path, threads: usize) -> Result<RunManifest> {
    let start = Instant::now();
    let report = validate::validate(config, kind);
    if !report.accepted {
        bail!("configuration refused: {}", report.reasons.join("; "));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building the worker pool")?;
    let out = pool.install(|| pipelines::run_pipeline(kind, config))?;
    let outputs = output::write_all(dir, &out.tables, &out.plots)?;
    let manifest = RunManifest {
        kind: kind.name().to_string(),
        config_hash: config_hash(config),
        code_version: code_version(),
        config: config.clone(),
        threads: pool.current_num_threads(),
        tasks: out.tasks,
        outputs,
        seconds: start.elapsed().as_secs_f64(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
