//! Run manifest: what was run, with which seeds, and what it produced.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::output::{sha256_hex, OutputRecord};

/// One unit of parallel work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    /// Stable identifier, also the sort key of the task's output rows.
    pub key: String,
    pub j_over_u: Option<f64>,
    pub w_over_u: Option<f64>,
    pub seed: Option<u64>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    /// SHA-256 of the effective configuration's JSON.
    pub config_hash: String,
    pub code_version: String,
    /// Effective configuration after command-line overrides.
    pub config: ExperimentConfig,
    pub threads: usize,
    pub tasks: Vec<TaskRecord>,
    pub outputs: Vec<OutputRecord>,
    pub seconds: f64,
}

impl RunManifest {
    pub fn failed_tasks(&self) -> usize {
        self.tasks.iter().filter(|t| t.error.is_some()).count()
    }
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    sha256_hex(config.to_json().as_bytes())
}

pub fn code_version() -> String {
    format!("dirtyboson {}", env!("CARGO_PKG_VERSION"))
}
