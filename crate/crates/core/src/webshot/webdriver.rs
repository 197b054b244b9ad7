//! Full-page rendering through a W3C WebDriver endpoint (chromedriver,
//! geckodriver, or anything speaking the same HTTP protocol).

use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};
use tracing::debug;

use super::{BrowserLauncher, BrowserSession, CaptureFailure, Viewport};

const FULL_EXTENT_SCRIPT: &str = "const d = document.documentElement, b = document.body; \
    return [Math.max(d.scrollWidth, b ? b.scrollWidth : 0), Math.max(d.scrollHeight, b ? b.scrollHeight : 0)];";

/// Opens WebDriver sessions against `endpoint`.
#[derive(Debug, Clone)]
pub struct WebDriverLauncher {
    endpoint: String,
    capabilities: Value,
    timeout: Duration,
}

impl WebDriverLauncher {
    /// `timeout` bounds each protocol round trip, including page loads.
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        WebDriverLauncher {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            capabilities: default_capabilities(),
            timeout,
        }
    }

    pub fn with_capabilities(mut self, capabilities: Value) -> Self {
        self.capabilities = capabilities;
        self
    }
}

/// Headless Chrome with scrollbars hidden. Other drivers ignore the
/// vendor-prefixed key.
pub fn default_capabilities() -> Value {
    json!({
        "alwaysMatch": {
            "goog:chromeOptions": {
                "args": ["--headless=new", "--hide-scrollbars", "--disable-gpu"]
            }
        }
    })
}

impl BrowserLauncher for WebDriverLauncher {
    type Session = WebDriverSession;

    fn open(&self) -> Result<WebDriverSession, CaptureFailure> {
        let client = reqwest::blocking::Client::builder()
            // Protocol calls get headroom above the page-load timeout so the
            // driver reports the timeout rather than the transport.
            .timeout(self.timeout + Duration::from_secs(5))
            .build()
            .map_err(|e| CaptureFailure::Protocol(e.to_string()))?;
        let resp = call(
            &client,
            reqwest::Method::POST,
            &format!("{}/session", self.endpoint),
            Some(json!({ "capabilities": self.capabilities })),
        )?;
        let id = resp
            .get("sessionId")
            .and_then(Value::as_str)
            .ok_or_else(|| CaptureFailure::Protocol("new session response lacks sessionId".into()))?
            .to_string();
        let session = WebDriverSession {
            client,
            base: format!("{}/session/{id}", self.endpoint),
        };
        let ms = self.timeout.as_millis() as u64;
        session.post("timeouts", json!({ "pageLoad": ms, "script": ms }))?;
        debug!(session = %id, "webdriver session opened");
        Ok(session)
    }
}

pub struct WebDriverSession {
    client: reqwest::blocking::Client,
    base: String,
}

impl WebDriverSession {
    fn post(&self, path: &str, body: Value) -> Result<Value, CaptureFailure> {
        call(&self.client, reqwest::Method::POST, &format!("{}/{path}", self.base), Some(body))
    }

    fn get(&self, path: &str) -> Result<Value, CaptureFailure> {
        call(&self.client, reqwest::Method::GET, &format!("{}/{path}", self.base), None)
    }

    fn set_window(&self, width: u32, height: u32) -> Result<(), CaptureFailure> {
        self.post("window/rect", json!({ "width": width, "height": height }))?;
        Ok(())
    }
}

impl BrowserSession for WebDriverSession {
    fn render_full_page(
        &mut self,
        url: &str,
        viewport: Viewport,
        max_height: u32,
    ) -> Result<Vec<u8>, CaptureFailure> {
        self.set_window(viewport.width, viewport.height)?;
        self.post("url", json!({ "url": url })).map_err(|e| match e {
            CaptureFailure::Timeout(m) => CaptureFailure::Timeout(m),
            other => CaptureFailure::Navigation(other.to_string()),
        })?;

        let extent = self
            .post("execute/sync", json!({ "script": FULL_EXTENT_SCRIPT, "args": [] }))?;
        let dim = |i: usize| {
            extent
                .get(i)
                .and_then(Value::as_f64)
                .map(|v| v.ceil().max(0.0) as u32)
                .ok_or_else(|| CaptureFailure::Protocol(format!("bad page extent {extent}")))
        };
        let width = dim(0)?.max(viewport.width);
        let height = dim(1)?.max(viewport.height).min(max_height.max(viewport.height));
        if (width, height) != (viewport.width, viewport.height) {
            self.set_window(width, height)?;
        }

        let shot = self.get("screenshot")?;
        let b64 = shot
            .as_str()
            .ok_or_else(|| CaptureFailure::Protocol("screenshot value is not a string".into()))?;
        base64::engine::general_purpose::STANDARD
            .decode(b64)
            .map_err(|e| CaptureFailure::Protocol(format!("screenshot payload: {e}")))
    }
}

impl Drop for WebDriverSession {
    fn drop(&mut self) {
        let _ = self.client.delete(&self.base).send();
    }
}

fn call(
    client: &reqwest::blocking::Client,
    method: reqwest::Method,
    url: &str,
    body: Option<Value>,
) -> Result<Value, CaptureFailure> {
    let mut req = client.request(method, url);
    if let Some(b) = body {
        req = req.json(&b);
    }
    let resp = req.send().map_err(|e| {
        if e.is_timeout() {
            CaptureFailure::Timeout(e.to_string())
        } else {
            CaptureFailure::Protocol(e.to_string())
        }
    })?;
    let status = resp.status();
    let payload: Value = resp
        .json()
        .map_err(|e| CaptureFailure::Protocol(format!("{url}: undecodable response ({status}): {e}")))?;
    let value = payload.get("value").cloned().unwrap_or(Value::Null);
    if status.is_success() {
        return Ok(value);
    }
    let code = value.get("error").and_then(Value::as_str).unwrap_or("unknown error");
    let message = value.get("message").and_then(Value::as_str).unwrap_or("");
    let detail = format!("{code}: {message}");
    Err(match code {
        "timeout" | "script timeout" => CaptureFailure::Timeout(detail),
        _ => CaptureFailure::Protocol(detail),
    })
}
