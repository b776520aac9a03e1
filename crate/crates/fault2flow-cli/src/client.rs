//! Minimal n8n REST client: create a workflow, then activate it.
//!
//! Routes (n8n public API v1):
//!
//! * `POST {endpoint}/api/v1/workflows`: create; body is the exported
//!   workflow document; responds with JSON carrying the server-assigned
//!   `id`.
//! * `POST {endpoint}/api/v1/workflows/{id}/activate`: activate.
//!
//! Authentication is the `X-N8N-API-KEY` header on every request. There is
//! no retry policy: failures surface immediately with the server's words.

use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PushError {
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("workflow rejected (HTTP {status}): {body}")]
    SchemaRejected { status: u16, body: String },
    #[error("unexpected response: {0}")]
    BadResponse(String),
}

pub struct N8nClient {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

impl N8nClient {
    pub fn new(endpoint: &str, api_key: &str, timeout: Duration) -> Self {
        N8nClient {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            api_key: api_key.to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    fn post(&self, url: &str, body: Option<&str>) -> Result<String, PushError> {
        let request = self
            .agent
            .post(url)
            .set("X-N8N-API-KEY", &self.api_key)
            .set("Content-Type", "application/json");
        let result = match body {
            Some(b) => request.send_string(b),
            None => request.call(),
        };
        match result {
            Ok(response) => response
                .into_string()
                .map_err(|e| PushError::Network(format!("reading response body: {e}"))),
            Err(ureq::Error::Status(status, response)) => {
                let body = response.into_string().unwrap_or_default();
                if status == 401 || status == 403 {
                    Err(PushError::Auth { status })
                } else {
                    Err(PushError::SchemaRejected { status, body })
                }
            }
            Err(ureq::Error::Transport(t)) => Err(PushError::Network(t.to_string())),
        }
    }

    /// Create and activate a workflow; returns the server-assigned id.
    pub fn push_workflow(&self, document: &str) -> Result<String, PushError> {
        let created = self.post(&format!("{}/api/v1/workflows", self.endpoint), Some(document))?;
        let parsed: serde_json::Value = serde_json::from_str(&created)
            .map_err(|e| PushError::BadResponse(format!("creation response not JSON: {e}")))?;
        let id = parsed
            .get("id")
            .and_then(|v| v.as_str().map(String::from).or_else(|| v.as_i64().map(|n| n.to_string())))
            .ok_or_else(|| PushError::BadResponse("creation response carries no id".into()))?;
        self.post(&format!("{}/api/v1/workflows/{id}/activate", self.endpoint), None)?;
        Ok(id)
    }
}
