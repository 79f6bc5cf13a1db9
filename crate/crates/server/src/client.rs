//! Blocking HTTP client for the API. Do not call from inside a Tokio runtime.

use std::time::Duration;

use reqwest::blocking::{Client as Http, RequestBuilder};
use reqwest::header::CONTENT_TYPE;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Json(Value),
    Text(String),
}

impl Body {
    pub fn json(&self) -> Option<&Value> {
        match self {
            Body::Json(v) => Some(v),
            Body::Text(_) => None,
        }
    }

    /// The body exactly as a caller would print it.
    pub fn render(&self) -> String {
        match self {
            Body::Json(v) => v.to_string(),
            Body::Text(t) => t.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach server: {0}")]
    Connect(String),
    #[error("HTTP {status}: {}", describe(.body))]
    Api { status: u16, body: Body },
}

fn describe(body: &Body) -> String {
    match body {
        Body::Json(v) => v
            .get("message")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| v.to_string()),
        Body::Text(t) => t.clone(),
    }
}

pub struct Client {
    base: String,
    token: Option<String>,
    http: Http,
}

impl Client {
    pub fn new(base: &str, token: Option<String>) -> Result<Self, ClientError> {
        let http = Http::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| ClientError::Connect(e.to_string()))?;
        Ok(Self {
            base: base.trim_end_matches('/').to_string(),
            token,
            http,
        })
    }

    pub fn get(&self, path: &str) -> Result<Body, ClientError> {
        self.send(self.http.get(self.url(path)))
    }

    pub fn post(&self, path: &str, body: &Value) -> Result<Body, ClientError> {
        self.send(self.http.post(self.url(path)).json(body))
    }

    pub fn request(&self, method: &str, path: &str, body: Option<&Value>) -> Result<Body, ClientError> {
        match (method.to_ascii_uppercase().as_str(), body) {
            ("GET", _) => self.get(path),
            ("POST", b) => self.post(path, b.unwrap_or(&Value::Object(Default::default()))),
            (other, _) => Err(ClientError::Api {
                status: 405,
                body: Body::Text(format!("unsupported method {other}")),
            }),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.base, path.trim_start_matches('/'))
    }

    fn send(&self, mut req: RequestBuilder) -> Result<Body, ClientError> {
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| ClientError::Connect(e.to_string()))?;
        let status = resp.status();
        let is_json = resp
            .headers()
            .get(CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v.starts_with("application/json"));
        let text = resp.text().map_err(|e| ClientError::Connect(e.to_string()))?;
        let body = if is_json {
            serde_json::from_str(&text).map(Body::Json).unwrap_or(Body::Text(text))
        } else {
            Body::Text(text)
        };
        if status.is_success() {
            Ok(body)
        } else {
            Err(ClientError::Api { status: status.as_u16(), body })
        }
    }
}
