//! Run configuration: TOML file, environment overrides, and the objects
//! built from them.
//!
//! Precedence is CLI flags > environment > config file > defaults; flags
//! are applied by the CLI layer after [`RunConfig::load`] resolves the
//! other three.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{BackendConfig, BackendRegistry, Gateway, SamplingConfig};
use crate::pipeline::{PipelineConfig, PipelineMode};
use crate::sandbox::{ExecutionLimits, RunnerSpec, Sandbox};

pub const ENV_API_BASE: &str = "MODEL_API_BASE";
pub const ENV_API_KEY: &str = "MODEL_API_KEY";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    /// Input dataset for subcommands that read one.
    pub dataset: Option<String>,
    pub out: Option<String>,
    pub reports: Option<String>,
}

impl PathsConfig {
    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.out.clone().unwrap_or_else(|| "out".into()))
    }

    pub fn reports_dir(&self) -> PathBuf {
        match &self.reports {
            Some(r) => PathBuf::from(r),
            None => self.out_dir().join("reports"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendSection {
    /// Registered backend name: `mock`, `http`, or `toy`.
    pub kind: String,
    #[serde(flatten)]
    pub config: BackendConfig,
}

impl Default for BackendSection {
    fn default() -> Self {
        BackendSection { kind: "mock".into(), config: BackendConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSection {
    pub k_candidates: usize,
    pub mode: String,
    pub max_iterations: usize,
    pub min_gap: f64,
    pub workers: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let d = PipelineConfig::default();
        PipelineSection {
            k_candidates: d.k_candidates,
            mode: d.mode.name().into(),
            max_iterations: d.max_iterations,
            min_gap: d.min_gap,
            workers: d.workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandboxSection {
    pub command: Vec<String>,
    pub file_extension: String,
    /// 0 = logical core count.
    pub workers: usize,
}

impl Default for SandboxSection {
    fn default() -> Self {
        let spec = RunnerSpec::default();
        SandboxSection { command: spec.command, file_extension: spec.file_extension, workers: 0 }
    }
}

/// The resolved run configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub backend: BackendSection,
    pub sampling: SamplingConfig,
    pub editor_sampling: EditorSampling,
    pub limits: ExecutionLimits,
    pub pipeline: PipelineSection,
    pub sandbox: SandboxSection,
}

/// Editor sampling defaults to greedy, unlike the critic's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditorSampling(pub SamplingConfig);

impl Default for EditorSampling {
    fn default() -> Self {
        EditorSampling(SamplingConfig::greedy())
    }
}

impl RunConfig {
    /// Resolve file + environment (flags come later, in the CLI layer).
    pub fn load(config_file: Option<&Path>) -> Result<Self> {
        let mut config = match config_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("cannot read config {}: {e}", path.display()))
                })?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))?
            }
            None => RunConfig::default(),
        };
        config.apply_env();
        Ok(config)
    }

    fn apply_env(&mut self) {
        if let Ok(base) = std::env::var(ENV_API_BASE) {
            if !base.is_empty() {
                self.backend.config.api_base = Some(base);
            }
        }
        if let Ok(key) = std::env::var(ENV_API_KEY) {
            if !key.is_empty() {
                self.backend.config.api_key = Some(key);
            }
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let config = PipelineConfig {
            k_candidates: self.pipeline.k_candidates,
            sampling: self.sampling.clone(),
            editor_sampling: self.editor_sampling.0.clone(),
            limits: self.limits.clone(),
            mode: PipelineMode::from_name(&self.pipeline.mode)?,
            max_iterations: self.pipeline.max_iterations,
            min_gap: self.pipeline.min_gap,
            workers: self.pipeline.workers,
        };
        config.validate()?;
        Ok(config)
    }

    /// Build the gateway with every role bound to the configured backend.
    pub fn build_gateway(&self) -> Result<Gateway> {
        let registry = BackendRegistry::with_builtins();
        let backend = registry.build(&self.backend.kind, &self.backend.config)?;
        let mut gateway = Gateway::new();
        gateway.bind_all(Arc::clone(&backend));
        Ok(gateway)
    }

    pub fn build_sandbox(&self) -> Result<Sandbox> {
        let runner = RunnerSpec {
            command: self.sandbox.command.clone(),
            file_extension: self.sandbox.file_extension.clone(),
        };
        Sandbox::new(runner, self.sandbox.workers)
    }

    /// Hash of the resolved configuration, recorded in run manifests.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        crate::gateway::prompt_hash(&canonical)
    }
}
