//! Page download, timing and structural measurement.

mod extract;

use std::error::Error as _;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;
use tracing::{debug, warn};

pub use extract::{extract_metrics, StructuralCounts};

use crate::model::UrlRecord;

/// Value recorded in every quantitative field when a page could not be fetched.
pub const SENTINEL: i64 = -1;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_WORKERS: usize = 8;
pub const DEFAULT_MAX_REDIRECTS: usize = 5;
pub const DEFAULT_USER_AGENT: &str =
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/120.0 Safari/537.36";

/// The eight quantitative page parameters. Either every field is
/// non-negative or every field holds [`SENTINEL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageMetrics {
    pub time_ms: f64,
    pub bytes: i64,
    pub images: i64,
    pub script_files: i64,
    pub css_files: i64,
    pub tables: i64,
    pub iframes: i64,
    pub style_tags: i64,
}

impl PageMetrics {
    pub fn failed() -> Self {
        let s = SENTINEL;
        PageMetrics {
            time_ms: s as f64,
            bytes: s,
            images: s,
            script_files: s,
            css_files: s,
            tables: s,
            iframes: s,
            style_tags: s,
        }
    }

    pub fn measured(time_ms: f64, bytes: u64, counts: StructuralCounts) -> Self {
        PageMetrics {
            time_ms: time_ms.max(0.0),
            bytes: bytes as i64,
            images: counts.images as i64,
            script_files: counts.script_files as i64,
            css_files: counts.css_files as i64,
            tables: counts.tables as i64,
            iframes: counts.iframes as i64,
            style_tags: counts.style_tags as i64,
        }
    }

    fn integer_fields(&self) -> [i64; 7] {
        [
            self.bytes,
            self.images,
            self.script_files,
            self.css_files,
            self.tables,
            self.iframes,
            self.style_tags,
        ]
    }

    /// True when the record is the fully sentineled failure record.
    pub fn is_failed(&self) -> bool {
        self.time_ms == SENTINEL as f64 && self.integer_fields().iter().all(|&v| v == SENTINEL)
    }

    /// True when the record is fully measured (every field non-negative).
    pub fn is_complete(&self) -> bool {
        self.time_ms >= 0.0 && self.integer_fields().iter().all(|&v| v >= 0)
    }

    /// Sentinel atomicity: fully measured or fully failed, nothing in between.
    pub fn is_consistent(&self) -> bool {
        self.is_complete() || self.is_failed()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchFailureKind {
    Timeout,
    HttpStatus(u16),
    TlsError,
    ConnectionError,
}

impl fmt::Display for FetchFailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FetchFailureKind::Timeout => f.write_str("timeout"),
            FetchFailureKind::HttpStatus(code) => write!(f, "HTTP {code}"),
            FetchFailureKind::TlsError => f.write_str("TLS error"),
            FetchFailureKind::ConnectionError => f.write_str("connection error"),
        }
    }
}

#[derive(Debug, Error)]
#[error("fetching {url} failed ({kind}): {detail}")]
pub struct FetchFailure {
    pub url: String,
    pub kind: FetchFailureKind,
    pub detail: String,
}

#[derive(Debug, Error)]
pub enum FetcherError {
    #[error("timeout must be positive")]
    ZeroTimeout,
    #[error("failed to build HTTP client: {0}")]
    Client(String),
}

/// A successfully downloaded page.
#[derive(Debug, Clone)]
pub struct FetchedPage {
    pub html: String,
    pub time_ms: f64,
    /// Length of the decoded response body.
    pub bytes: u64,
    pub final_url: String,
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub timeout: Duration,
    pub max_redirects: usize,
    pub user_agent: String,
    pub workers: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            timeout: DEFAULT_TIMEOUT,
            max_redirects: DEFAULT_MAX_REDIRECTS,
            user_agent: DEFAULT_USER_AGENT.to_string(),
            workers: DEFAULT_WORKERS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fetcher {
    client: reqwest::blocking::Client,
    config: FetchConfig,
}

impl Fetcher {
    pub fn new(config: FetchConfig) -> Result<Self, FetcherError> {
        if config.timeout.is_zero() {
            return Err(FetcherError::ZeroTimeout);
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .connect_timeout(config.timeout)
            .redirect(reqwest::redirect::Policy::limited(config.max_redirects))
            .user_agent(config.user_agent.clone())
            .gzip(true)
            .deflate(true)
            .build()
            .map_err(|e| FetcherError::Client(e.to_string()))?;
        Ok(Fetcher { client, config })
    }

    pub fn config(&self) -> &FetchConfig {
        &self.config
    }

    /// Downloads `url`, timing from request issue until the body is complete.
    pub fn fetch(&self, url: &str) -> Result<FetchedPage, FetchFailure> {
        let fail = |kind, detail: String| FetchFailure {
            url: url.to_string(),
            kind,
            detail,
        };
        let start = Instant::now();
        let resp = self
            .client
            .get(url)
            .send()
            .map_err(|e| fail(classify(&e), chain(&e)))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(fail(
                FetchFailureKind::HttpStatus(status.as_u16()),
                status.canonical_reason().unwrap_or("").to_string(),
            ));
        }
        let final_url = resp.url().to_string();
        let body = resp.bytes().map_err(|e| fail(classify(&e), chain(&e)))?;
        let time_ms = start.elapsed().as_secs_f64() * 1000.0;
        Ok(FetchedPage {
            html: String::from_utf8_lossy(&body).into_owned(),
            time_ms,
            bytes: body.len() as u64,
            final_url,
        })
    }

    /// Fetches and measures one record. Failures yield the sentineled record.
    pub fn measure(&self, record: &UrlRecord) -> PageMetrics {
        match self.fetch(&record.url) {
            Ok(page) => {
                let counts = extract_metrics(&page.html);
                debug!(url = %record.url, time_ms = page.time_ms, bytes = page.bytes, "measured");
                PageMetrics::measured(page.time_ms, page.bytes, counts)
            }
            Err(failure) => {
                warn!(url = %record.url, kind = %failure.kind, "fetch failed: {}", failure.detail);
                PageMetrics::failed()
            }
        }
    }

    /// Measures every record with up to `workers` concurrent fetches.
    /// Output order matches input order.
    pub fn measure_batch(&self, records: &[UrlRecord]) -> Vec<PageMetrics> {
        let workers = self.config.workers.max(1).min(records.len().max(1));
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<PageMetrics>>> = Mutex::new(vec![None; records.len()]);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(record) = records.get(i) else { break };
                    let m = self.measure(record);
                    results.lock().expect("results lock")[i] = Some(m);
                });
            }
        });
        results
            .into_inner()
            .expect("results lock")
            .into_iter()
            .map(|m| m.expect("every index measured"))
            .collect()
    }
}

fn chain(e: &reqwest::Error) -> String {
    let mut msg = e.to_string();
    let mut src = e.source();
    while let Some(s) = src {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        src = s.source();
    }
    msg
}

fn classify(e: &reqwest::Error) -> FetchFailureKind {
    if e.is_timeout() {
        return FetchFailureKind::Timeout;
    }
    let text = chain(e).to_ascii_lowercase();
    if text.contains("timed out") {
        return FetchFailureKind::Timeout;
    }
    if ["tls", "certificate", "handshake", "ssl"].iter().any(|k| text.contains(k)) {
        return FetchFailureKind::TlsError;
    }
    FetchFailureKind::ConnectionError
}
