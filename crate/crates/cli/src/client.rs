//! Minimal blocking client for the registry HTTP API.

use std::time::Duration;

use serde_json::Value;

use crate::error::CliError;

pub struct RegistryClient {
    base: String,
    agent: ureq::Agent,
}

pub struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn json(&self) -> Result<Value, CliError> {
        serde_json::from_slice(&self.body).map_err(|e| CliError::failed(format!("registry sent malformed JSON: {e}")))
    }

    /// The `error` field of a registry error body, or the raw body.
    pub fn error_message(&self) -> String {
        serde_json::from_slice::<Value>(&self.body)
            .ok()
            .and_then(|v| v.get("error").and_then(Value::as_str).map(str::to_owned))
            .unwrap_or_else(|| String::from_utf8_lossy(&self.body).into_owned())
    }
}

impl RegistryClient {
    pub fn new(base: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        Self {
            base: base.trim_end_matches('/').to_string(),
            agent: config.into(),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn get(&self, path: &str, token: Option<&str>) -> Result<Reply, CliError> {
        let mut req = self.agent.get(self.url(path));
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        self.finish(path, req.call())
    }

    pub fn post(&self, path: &str, token: &str, body: &[u8]) -> Result<Reply, CliError> {
        let req = self
            .agent
            .post(self.url(path))
            .header("Authorization", format!("Bearer {token}"))
            .header("Content-Type", "application/json");
        self.finish(path, req.send(body))
    }

    /// GET that must succeed, parsed as JSON.
    pub fn get_json(&self, path: &str, token: Option<&str>) -> Result<Value, CliError> {
        let reply = self.get(path, token)?;
        if !reply.is_success() {
            return Err(CliError::failed(format!("GET {path}: HTTP {}: {}", reply.status, reply.error_message())));
        }
        reply.json()
    }

    fn finish(
        &self,
        path: &str,
        result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<Reply, CliError> {
        let mut response =
            result.map_err(|e| CliError::failed(format!("registry unreachable at {}: {e}", self.url(path))))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_vec()
            .map_err(|e| CliError::failed(format!("reading registry response: {e}")))?;
        Ok(Reply { status, body })
    }
}
