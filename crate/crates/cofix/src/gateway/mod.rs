//! Model gateway: prompt rendering plus a backend abstraction that every
//! model call goes through.
//!
//! Backends implement [`Backend`] and are constructed by name through
//! [`BackendRegistry`] ("mock", "http", "toy"), so the same pipeline code
//! runs against a scripted mock in tests, a live completions endpoint in
//! production, or a toy policy for desk-scale math checks.

mod http;
mod mock;
pub mod prompts;
mod toy;

pub use http::HttpBackend;
pub use mock::{MockBackend, ScriptEntry, ScriptMatch};
pub use prompts::{render_prompt, PromptFields};
pub use toy::ToyBackend;

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The model roles a pipeline run can bind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    /// Feedback generator, SFT checkpoint.
    CriticSft,
    /// Feedback generator, preference-tuned checkpoint.
    CriticPref,
    /// Code editor.
    Editor,
    /// Feedback annotator for dataset construction.
    Annotator,
    /// Test-input proposer.
    Testgen,
    /// Feedback selector.
    Selector,
}

impl ModelRole {
    pub const ALL: [ModelRole; 6] = [
        ModelRole::CriticSft,
        ModelRole::CriticPref,
        ModelRole::Editor,
        ModelRole::Annotator,
        ModelRole::Testgen,
        ModelRole::Selector,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelRole::CriticSft => "critic_sft",
            ModelRole::CriticPref => "critic_pref",
            ModelRole::Editor => "editor",
            ModelRole::Annotator => "annotator",
            ModelRole::Testgen => "testgen",
            ModelRole::Selector => "selector",
        }
    }
}

impl std::fmt::Display for ModelRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Decoding parameters for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub top_p: f64,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { top_p: 0.95, temperature: 1.0, max_tokens: 512 }
    }
}

impl SamplingConfig {
    /// Settings used for feedback annotation.
    pub fn annotation() -> Self {
        SamplingConfig { top_p: 0.95, temperature: 0.7, max_tokens: 500 }
    }

    /// Greedy decoding, used by the editor at inference by default.
    pub fn greedy() -> Self {
        SamplingConfig { top_p: 1.0, temperature: 0.0, max_tokens: 512 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::Config(format!("top_p {} outside (0, 1]", self.top_p)));
        }
        if self.temperature < 0.0 {
            return Err(Error::Config("temperature must be >= 0".into()));
        }
        if self.max_tokens < 1 {
            return Err(Error::Config("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

/// One model continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub finish_reason: FinishReason,
    /// Per-token log probabilities, when the backend reports them.
    pub token_logprobs: Option<Vec<(String, f64)>>,
}

/// A model serving endpoint.
///
/// Implementations must be safe for concurrent calls.
pub trait Backend: Send + Sync {
    fn complete(&self, role: ModelRole, prompt: &str, config: &SamplingConfig) -> Result<Completion>;

    /// Total log probability of `continuation` given `prompt` under the
    /// role's model. Backends without scoring support return
    /// [`Error::Capability`].
    fn score_continuation(&self, role: ModelRole, prompt: &str, continuation: &str) -> Result<f64>;
}

/// Counting semaphore guarding in-flight requests for one role.
struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore { permits: Mutex::new(permits), cv: Condvar::new() }
    }

    fn acquire(&self) {
        let mut p = self.permits.lock().unwrap();
        while *p == 0 {
            p = self.cv.wait(p).unwrap();
        }
        *p -= 1;
    }

    fn release(&self) {
        *self.permits.lock().unwrap() += 1;
        self.cv.notify_one();
    }
}

/// Binds roles to backends and fronts every model call.
#[derive(Default)]
pub struct Gateway {
    bindings: HashMap<ModelRole, Arc<dyn Backend>>,
    limiters: HashMap<ModelRole, Semaphore>,
}

impl Gateway {
    pub fn new() -> Self {
        Gateway::default()
    }

    /// Bind one role to a backend. Later binds replace earlier ones.
    pub fn bind(&mut self, role: ModelRole, backend: Arc<dyn Backend>) -> &mut Self {
        self.bindings.insert(role, backend);
        self
    }

    /// Bind every role to the same backend.
    pub fn bind_all(&mut self, backend: Arc<dyn Backend>) -> &mut Self {
        for role in ModelRole::ALL {
            self.bindings.insert(role, backend.clone());
        }
        self
    }

    /// Cap concurrent in-flight requests for a role.
    pub fn limit_in_flight(&mut self, role: ModelRole, max: usize) -> &mut Self {
        self.limiters.insert(role, Semaphore::new(max.max(1)));
        self
    }

    pub fn is_bound(&self, role: ModelRole) -> bool {
        self.bindings.contains_key(&role)
    }

    fn backend(&self, role: ModelRole) -> Result<&Arc<dyn Backend>> {
        self.bindings.get(&role).ok_or_else(|| Error::UnboundRole(role.name().into()))
    }

    pub fn complete(&self, role: ModelRole, prompt: &str, config: &SamplingConfig) -> Result<Completion> {
        config.validate()?;
        let backend = self.backend(role)?;
        let limiter = self.limiters.get(&role);
        if let Some(l) = limiter {
            l.acquire();
        }
        let out = backend.complete(role, prompt, config);
        if let Some(l) = limiter {
            l.release();
        }
        out
    }

    pub fn score_continuation(&self, role: ModelRole, prompt: &str, continuation: &str) -> Result<f64> {
        self.backend(role)?.score_continuation(role, prompt, continuation)
    }
}

/// Everything a backend factory may need to construct an instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    /// Mock: path to the script file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_script: Option<String>,
    /// HTTP: base URL of the completions API (e.g. `http://host:8000/v1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_base: Option<String>,
    /// HTTP: bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key: Option<String>,
    /// HTTP: model name per role.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub role_models: BTreeMap<String, String>,
    /// Toy: path to a policy table file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_table: Option<String>,
}

type BackendFactory = Box<dyn Fn(&BackendConfig) -> Result<Arc<dyn Backend>> + Send + Sync>;

/// Name-indexed backend construction, so the CLI and config files can
/// select an implementation at runtime.
pub struct BackendRegistry {
    factories: BTreeMap<String, BackendFactory>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        BackendRegistry { factories: BTreeMap::new() }
    }

    /// Registry with the built-in backends: `mock`, `http`, `toy`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("mock", |cfg| {
            let backend = match &cfg.mock_script {
                Some(path) => MockBackend::from_script_file(path)?,
                None => MockBackend::unscripted(),
            };
            Ok(Arc::new(backend) as Arc<dyn Backend>)
        });
        reg.register("http", |cfg| {
            let base = cfg
                .api_base
                .clone()
                .ok_or_else(|| Error::Config("http backend requires api_base".into()))?;
            Ok(Arc::new(HttpBackend::new(base, cfg.api_key.clone(), cfg.role_models.clone()))
                as Arc<dyn Backend>)
        });
        reg.register("toy", |cfg| {
            let path = cfg
                .policy_table
                .clone()
                .ok_or_else(|| Error::Config("toy backend requires policy_table".into()))?;
            let table = std::fs::read_to_string(&path)?;
            let policy = crate::alignment::ToyPolicy::from_table_str(&table)?;
            Ok(Arc::new(ToyBackend::new(policy)) as Arc<dyn Backend>)
        });
        reg
    }

    pub fn register(
        &mut self,
        name: &str,
        factory: impl Fn(&BackendConfig) -> Result<Arc<dyn Backend>> + Send + Sync + 'static,
    ) {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, cfg: &BackendConfig) -> Result<Arc<dyn Backend>> {
        let factory = self.factories.get(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown backend '{}'; known: {}",
                name,
                self.factories.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })?;
        factory(cfg)
    }
}

/// Hex SHA-256 of a prompt, the key used by mock scripts.
pub fn prompt_hash(prompt: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbound_role_errors() {
        let gw = Gateway::new();
        let err = gw.complete(ModelRole::Editor, "p", &SamplingConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UnboundRole(_)));
    }

    #[test]
    fn registry_knows_builtins() {
        let reg = BackendRegistry::with_builtins();
        let names: Vec<&str> = reg.names().collect();
        assert_eq!(names, vec!["http", "mock", "toy"]);
    }

    #[test]
    fn registry_rejects_unknown_name() {
        let reg = BackendRegistry::with_builtins();
        assert!(matches!(
            reg.build("nope", &BackendConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn sampling_config_validation() {
        let mut cfg = SamplingConfig::default();
        cfg.top_p = 0.0;
        assert!(cfg.validate().is_err());
        cfg.top_p = 1.0;
        cfg.max_tokens = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bind_all_binds_every_role() {
        let mut gw = Gateway::new();
        gw.bind_all(Arc::new(MockBackend::unscripted()));
        for role in ModelRole::ALL {
            assert!(gw.is_bound(role));
        }
    }
}
