//! Model backends returning batches of raw plan responses: a
//! chat-completions HTTP client and a replay backend reading scripted files.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::prompt::PromptBundle;

pub const API_KEY_ENV: &str = "LLM_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub prompt: PromptBundle,
    /// Problem id; replay files are keyed by it.
    pub problem: String,
    pub n: usize,
    pub temperature: f64,
    pub model: String,
    pub timeout: Duration,
}

impl LlmRequest {
    pub fn new(prompt: PromptBundle, problem: &str, n: usize) -> Self {
        Self {
            prompt,
            problem: problem.to_string(),
            n,
            temperature: 1.0,
            model: "gpt-4-turbo".to_string(),
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Replay,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmBatch {
    pub responses: Vec<String>,
    pub per_response_latency: Duration,
    pub backend: BackendKind,
    /// Requested responses that did not arrive.
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request timed out")]
    Timeout,
    #[error("replay exhausted for problem `{problem}` at call {call}")]
    ExhaustedReplay { problem: String, call: usize },
    #[error("all requests failed: {0}")]
    AllFailed(String),
}

pub trait LlmBackend: Send + Sync {
    fn query(&self, req: &LlmRequest) -> Result<LlmBatch, LlmError>;
    fn kind(&self) -> BackendKind;
}

fn check_request(req: &LlmRequest) -> Result<(), LlmError> {
    if req.n == 0 || req.temperature.is_nan() || req.temperature < 0.0 {
        return Err(LlmError::AllFailed(
            "request needs n >= 1 and temperature >= 0".into(),
        ));
    }
    Ok(())
}

/// Reads `<problem>.<call>.<i>.txt` files, one call index per query.
#[derive(Debug)]
pub struct ReplayBackend {
    dir: PathBuf,
    repeat_last: bool,
    calls: Mutex<HashMap<String, usize>>,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            repeat_last: false,
            calls: Mutex::new(HashMap::new()),
        }
    }

    /// When set, calls past the last scripted call index reuse the files of
    /// the highest scripted call instead of failing.
    pub fn repeat_last(mut self, on: bool) -> Self {
        self.repeat_last = on;
        self
    }

    fn path(&self, problem: &str, call: usize, i: usize) -> PathBuf {
        self.dir.join(format!("{problem}.{call}.{i}.txt"))
    }

    fn last_scripted_call(&self, problem: &str) -> Option<usize> {
        let prefix = format!("{problem}.");
        std::fs::read_dir(&self.dir)
            .ok()?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let rest = name.strip_prefix(&prefix)?.strip_suffix(".txt")?;
                let (call, idx) = rest.split_once('.')?;
                idx.parse::<usize>().ok()?;
                call.parse::<usize>().ok()
            })
            .max()
    }

    fn read_call(&self, problem: &str, call: usize, n: usize) -> Vec<String> {
        (0..n)
            .map_while(|i| std::fs::read(self.path(problem, call, i)).ok())
            .map(|bytes| String::from_utf8_lossy(&bytes).into_owned())
            .collect()
    }
}

impl LlmBackend for ReplayBackend {
    fn query(&self, req: &LlmRequest) -> Result<LlmBatch, LlmError> {
        check_request(req)?;
        let call = {
            let mut calls = self.calls.lock().expect("replay counter lock");
            let c = calls.entry(req.problem.clone()).or_insert(0);
            *c += 1;
            *c - 1
        };
        let start = Instant::now();
        let mut responses = self.read_call(&req.problem, call, req.n);
        if responses.is_empty() && self.repeat_last {
            if let Some(last) = self.last_scripted_call(&req.problem).filter(|&l| l < call) {
                responses = self.read_call(&req.problem, last, req.n);
            }
        }
        if responses.is_empty() {
            return Err(LlmError::ExhaustedReplay {
                problem: req.problem.clone(),
                call,
            });
        }
        let missing = req.n - responses.len();
        if missing > 0 {
            log::warn!(
                "replay call {call} for `{}`: {missing} of {} responses missing",
                req.problem,
                req.n
            );
        }
        Ok(LlmBatch {
            per_response_latency: start.elapsed() / responses.len() as u32,
            responses,
            backend: BackendKind::Replay,
            missing,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }
}

/// Returns the same responses for every query; useful in tests.
#[derive(Debug, Clone)]
pub struct FixedBackend {
    pub responses: Vec<String>,
}

impl LlmBackend for FixedBackend {
    fn query(&self, req: &LlmRequest) -> Result<LlmBatch, LlmError> {
        check_request(req)?;
        let responses: Vec<String> = self.responses.iter().take(req.n).cloned().collect();
        if responses.is_empty() {
            return Err(LlmError::AllFailed("no fixed responses".into()));
        }
        Ok(LlmBatch {
            missing: req.n - responses.len(),
            responses,
            per_response_latency: Duration::ZERO,
            backend: BackendKind::Fixed,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Fixed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    /// One request with the `n` parameter.
    #[default]
    MultiCompletion,
    /// `n` single-completion requests sent concurrently.
    Independent,
}

/// Chat-completions client. The API key is read from [`API_KEY_ENV`].
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    mode: BatchMode,
    max_retries: u32,
    backoff: Duration,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("endpoint", &self.endpoint)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

#[derive(Debug)]
enum Attempt {
    Retry(LlmError),
    Fatal(LlmError),
}

impl HttpBackend {
    pub fn new(endpoint: &str) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            mode: BatchMode::default(),
            max_retries: 3,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn mode(mut self, mode: BatchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    pub fn max_retries(mut self, n: u32) -> Self {
        self.max_retries = n;
        self
    }

    fn body(req: &LlmRequest, n: usize) -> serde_json::Value {
        json!({
            "model": req.model,
            "messages": [
                {"role": "system", "content": req.prompt.system_text},
                {"role": "user", "content": req.prompt.user_text},
            ],
            "temperature": req.temperature,
            "n": n,
        })
    }

    fn attempt(
        &self,
        client: &reqwest::blocking::Client,
        req: &LlmRequest,
        n: usize,
    ) -> Result<Vec<String>, Attempt> {
        let mut call = client.post(&self.endpoint).json(&Self::body(req, n));
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }
        let resp = call.send().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(LlmError::Timeout)
            } else {
                Attempt::Retry(LlmError::AllFailed(e.without_url().to_string()))
            }
        })?;
        let status = resp.status();
        if status == reqwest::StatusCode::UNAUTHORIZED || status == reqwest::StatusCode::FORBIDDEN {
            return Err(Attempt::Fatal(LlmError::Auth(format!("status {status}"))));
        }
        if status.as_u16() == 429 || status.is_server_error() || status.as_u16() == 408 {
            return Err(Attempt::Retry(LlmError::AllFailed(format!(
                "status {status}"
            ))));
        }
        if !status.is_success() {
            return Err(Attempt::Fatal(LlmError::AllFailed(format!(
                "status {status}"
            ))));
        }
        let v: serde_json::Value = resp.json().map_err(|e| {
            if e.is_timeout() {
                Attempt::Retry(LlmError::Timeout)
            } else {
                Attempt::Fatal(LlmError::AllFailed(format!(
                    "bad response body: {}",
                    e.without_url()
                )))
            }
        })?;
        let out: Vec<String> = v["choices"]
            .as_array()
            .map(|cs| {
                cs.iter()
                    .filter_map(|c| c["message"]["content"].as_str().map(str::to_string))
                    .collect()
            })
            .unwrap_or_default();
        if out.is_empty() {
            return Err(Attempt::Fatal(LlmError::AllFailed(
                "response has no choices".into(),
            )));
        }
        Ok(out)
    }

    /// One logical request with up to `max_retries` retries and exponential
    /// backoff.
    fn send(&self, req: &LlmRequest, n: usize) -> Result<Vec<String>, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(req.timeout)
            .build()
            .map_err(|e| LlmError::AllFailed(e.to_string()))?;
        let mut attempt = 0;
        loop {
            match self.attempt(&client, req, n) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    if attempt >= self.max_retries {
                        return Err(e);
                    }
                    let delay = self.backoff * 2u32.pow(attempt);
                    log::debug!(
                        "llm request failed ({e}); retry {} in {delay:?}",
                        attempt + 1
                    );
                    std::thread::sleep(delay);
                    attempt += 1;
                }
            }
        }
    }
}

impl LlmBackend for HttpBackend {
    fn query(&self, req: &LlmRequest) -> Result<LlmBatch, LlmError> {
        check_request(req)?;
        let start = Instant::now();
        let (responses, errors) = match self.mode {
            BatchMode::MultiCompletion => match self.send(req, req.n) {
                Ok(mut v) => {
                    v.truncate(req.n);
                    (v, Vec::new())
                }
                Err(e) => (Vec::new(), vec![e]),
            },
            BatchMode::Independent => {
                let results: Vec<Result<Vec<String>, LlmError>> = std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..req.n)
                        .map(|_| scope.spawn(|| self.send(req, 1)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| {
                            h.join().unwrap_or_else(|_| {
                                Err(LlmError::AllFailed("worker panicked".into()))
                            })
                        })
                        .collect()
                });
                let mut ok = Vec::new();
                let mut errs = Vec::new();
                for r in results {
                    match r {
                        Ok(v) => ok.extend(v.into_iter().take(1)),
                        Err(e) => errs.push(e),
                    }
                }
                (ok, errs)
            }
        };
        if responses.is_empty() {
            let err = errors
                .iter()
                .find(|e| matches!(e, LlmError::Auth(_)))
                .or_else(|| errors.iter().find(|e| matches!(e, LlmError::Timeout)))
                .cloned()
                .unwrap_or_else(|| {
                    LlmError::AllFailed(errors.first().map(|e| e.to_string()).unwrap_or_default())
                });
            return Err(err);
        }
        let missing = req.n.saturating_sub(responses.len());
        if missing > 0 {
            log::warn!("llm batch: {missing} of {} responses failed", req.n);
        }
        Ok(LlmBatch {
            per_response_latency: start.elapsed() / responses.len() as u32,
            responses,
            backend: BackendKind::Http,
            missing,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }
}
