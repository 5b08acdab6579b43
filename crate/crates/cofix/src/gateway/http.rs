//! Live backend speaking the de-facto completions wire protocol.
//!
//! POSTs to `{api_base}/completions` with a bearer token and per-role
//! model names. Transient transport failures are retried 3 times with
//! exponential backoff; sampled retries re-draw by nature of the API.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Backend, Completion, FinishReason, ModelRole, SamplingConfig};
use crate::error::{Error, Result};

const MAX_ATTEMPTS: u32 = 3;
const BACKOFF_BASE_MS: u64 = 100;

pub struct HttpBackend {
    client: reqwest::blocking::Client,
    api_base: String,
    api_key: Option<String>,
    /// role name -> model name; roles absent here fall back to `default`.
    role_models: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct ApiResponse {
    choices: Vec<ApiChoice>,
}

#[derive(Deserialize)]
struct ApiChoice {
    text: String,
    #[serde(default)]
    finish_reason: Option<String>,
    #[serde(default)]
    logprobs: Option<ApiLogprobs>,
}

#[derive(Deserialize)]
struct ApiLogprobs {
    #[serde(default)]
    tokens: Vec<String>,
    #[serde(default)]
    token_logprobs: Vec<Option<f64>>,
    #[serde(default)]
    text_offset: Vec<usize>,
}

impl HttpBackend {
    pub fn new(api_base: String, api_key: Option<String>, role_models: BTreeMap<String, String>) -> Self {
        HttpBackend {
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("reqwest client"),
            api_base: api_base.trim_end_matches('/').to_string(),
            api_key,
            role_models,
        }
    }

    fn model_for(&self, role: ModelRole) -> Result<&str> {
        self.role_models
            .get(role.name())
            .or_else(|| self.role_models.get("default"))
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("no model configured for role '{}'", role.name())))
    }

    fn post(&self, body: &serde_json::Value) -> Result<ApiResponse> {
        let url = format!("{}/completions", self.api_base);
        let mut last_err = None;
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(BACKOFF_BASE_MS << (attempt - 1)));
            }
            let mut req = self.client.post(&url).json(body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<ApiResponse>()
                            .map_err(|e| Error::Backend(format!("bad response body: {e}")));
                    }
                    let retryable = status.is_server_error();
                    let err = Error::Backend(format!("HTTP {status} from {url}"));
                    if !retryable {
                        return Err(err);
                    }
                    last_err = Some(err);
                }
                Err(e) => last_err = Some(Error::Backend(format!("transport: {e}"))),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Backend("request failed".into())))
    }
}

fn parse_finish(reason: Option<&str>) -> FinishReason {
    match reason {
        Some("stop") => FinishReason::Stop,
        Some("length") => FinishReason::Length,
        None => FinishReason::Stop,
        Some(_) => FinishReason::Error,
    }
}

impl Backend for HttpBackend {
    fn complete(&self, role: ModelRole, prompt: &str, config: &SamplingConfig) -> Result<Completion> {
        let body = json!({
            "model": self.model_for(role)?,
            "prompt": prompt,
            "max_tokens": config.max_tokens,
            "temperature": config.temperature,
            "top_p": config.top_p,
        });
        let resp = self.post(&body)?;
        let choice = resp
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Error::Backend("response carried no choices".into()))?;
        let token_logprobs = choice.logprobs.map(|lp| {
            lp.tokens
                .into_iter()
                .zip(lp.token_logprobs)
                .map(|(t, p)| (t, p.unwrap_or(0.0)))
                .collect()
        });
        Ok(Completion {
            text: choice.text,
            finish_reason: parse_finish(choice.finish_reason.as_deref()),
            token_logprobs,
        })
    }

    fn score_continuation(&self, role: ModelRole, prompt: &str, continuation: &str) -> Result<f64> {
        // Echo-scoring: ask for 0 new tokens with logprobs on the echoed
        // prompt and sum the entries that fall inside the continuation.
        let body = json!({
            "model": self.model_for(role)?,
            "prompt": format!("{prompt}{continuation}"),
            "max_tokens": 0,
            "echo": true,
            "logprobs": 0,
        });
        let resp = self.post(&body)?;
        let choice = resp
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Error::Backend("response carried no choices".into()))?;
        let lp = choice
            .logprobs
            .ok_or_else(|| Error::Capability("endpoint returned no logprobs for echo scoring".into()))?;
        if lp.text_offset.len() != lp.token_logprobs.len() {
            return Err(Error::Capability("endpoint logprobs lack text offsets".into()));
        }
        let boundary = prompt.len();
        let mut total = 0.0;
        for (offset, logprob) in lp.text_offset.iter().zip(&lp.token_logprobs) {
            if *offset >= boundary {
                total += logprob.ok_or_else(|| {
                    Error::Capability("endpoint returned null logprob inside continuation".into())
                })?;
            }
        }
        Ok(total)
    }
}
