//! Full-page screenshots ("webshots") and their metadata.

mod name;
mod webdriver;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use image::codecs::jpeg::JpegEncoder;
use image::{DynamicImage, ImageReader};
use thiserror::Error;
use tracing::{info, warn};

pub use name::{compact_country, make_name, parse_name, NameError, WebshotName};
pub use webdriver::{default_capabilities, WebDriverLauncher, WebDriverSession};

use crate::model::{GroupKey, UrlRecord};

pub const DEFAULT_VIEWPORT: Viewport = Viewport {
    width: 992,
    height: 744,
};
pub const DEFAULT_JPEG_QUALITY: u8 = 90;
pub const DEFAULT_MAX_HEIGHT: u32 = 50_000;
pub const DEFAULT_CAPTURE_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_SESSIONS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

impl fmt::Display for Viewport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Viewport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("viewport `{s}` must look like 992x744"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("viewport `{s}` has a non-positive dimension"))
        };
        Ok(Viewport {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CaptureFailure {
    #[error("capture timed out: {0}")]
    Timeout(String),
    #[error("navigation failed: {0}")]
    Navigation(String),
    #[error("automation protocol error: {0}")]
    Protocol(String),
}

/// Size and dimensions of a stored webshot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WebshotMeta {
    pub name: String,
    pub img_bytes: u64,
    pub img_width: u32,
    pub img_height: u32,
}

/// One browser session. Implementations render the whole scroll extent of
/// a page and return it as an encoded raster image.
pub trait BrowserSession: Send {
    fn render_full_page(
        &mut self,
        url: &str,
        viewport: Viewport,
        max_height: u32,
    ) -> Result<Vec<u8>, CaptureFailure>;
}

/// Opens browser sessions; the automation endpoint is injected through this.
pub trait BrowserLauncher: Sync {
    type Session: BrowserSession;

    fn open(&self) -> Result<Self::Session, CaptureFailure>;
}

#[derive(Debug, Clone)]
pub struct CaptureConfig {
    pub viewport: Viewport,
    pub jpeg_quality: u8,
    pub max_height: u32,
    pub sessions: usize,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        CaptureConfig {
            viewport: DEFAULT_VIEWPORT,
            jpeg_quality: DEFAULT_JPEG_QUALITY,
            max_height: DEFAULT_MAX_HEIGHT,
            sessions: DEFAULT_SESSIONS,
        }
    }
}

/// An encoded JPG and the dimensions read back from it.
#[derive(Debug, Clone)]
pub struct CapturedImage {
    pub jpg: Vec<u8>,
    pub width: u32,
    pub height: u32,
}

/// Renders `url` in `session` and encodes the result as JPG. Images taller
/// than the configured cap are cropped to it.
pub fn capture<S: BrowserSession + ?Sized>(
    session: &mut S,
    url: &str,
    config: &CaptureConfig,
) -> Result<CapturedImage, CaptureFailure> {
    url::Url::parse(url).map_err(|e| CaptureFailure::Navigation(format!("{url}: {e}")))?;
    let raw = session.render_full_page(url, config.viewport, config.max_height)?;
    let img = ImageReader::new(Cursor::new(&raw))
        .with_guessed_format()
        .map_err(|e| CaptureFailure::Protocol(e.to_string()))?
        .decode()
        .map_err(|e| CaptureFailure::Protocol(format!("undecodable screenshot: {e}")))?;
    let img = if img.height() > config.max_height {
        img.crop_imm(0, 0, img.width(), config.max_height)
    } else {
        img
    };
    let jpg = encode_jpeg(&img, config.jpeg_quality)?;
    let (width, height) = jpeg_dimensions(&jpg)?;
    Ok(CapturedImage { jpg, width, height })
}

fn encode_jpeg(img: &DynamicImage, quality: u8) -> Result<Vec<u8>, CaptureFailure> {
    let rgb = img.to_rgb8();
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality.clamp(1, 100))
        .encode_image(&rgb)
        .map_err(|e| CaptureFailure::Protocol(format!("jpeg encoding: {e}")))?;
    Ok(out)
}

/// Reads width and height from an encoded image header.
pub fn jpeg_dimensions(bytes: &[u8]) -> Result<(u32, u32), CaptureFailure> {
    ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| CaptureFailure::Protocol(e.to_string()))?
        .into_dimensions()
        .map_err(|e| CaptureFailure::Protocol(e.to_string()))
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("could not open any browser session: {0}")]
    NoSession(CaptureFailure),
    #[error("writing webshot {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One successful capture, tied back to its input record.
#[derive(Debug, Clone)]
pub struct Shot {
    pub record_index: usize,
    pub path: PathBuf,
    pub meta: WebshotMeta,
}

#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub shots: Vec<Shot>,
    pub failures: Vec<(usize, CaptureFailure)>,
}

/// Where a webshot lives under the image root.
pub fn image_path(root: &Path, name: &WebshotName) -> PathBuf {
    root.join(name.category.slug()).join(name.to_string())
}

/// Captures every record and writes the successes as
/// `<out_dir>/<category slug>/<name>`. Sequence numbers are handed out per
/// `(technique, category, country)` group to successes only, in input
/// order, starting at `start_seq[group]` (1 when absent).
pub fn capture_batch<L: BrowserLauncher>(
    launcher: &L,
    records: &[UrlRecord],
    out_dir: &Path,
    start_seq: &HashMap<GroupKey, u32>,
    config: &CaptureConfig,
) -> Result<BatchOutcome, BatchError> {
    let mut outcome = BatchOutcome::default();
    if records.is_empty() {
        return Ok(outcome);
    }

    let wanted = config.sessions.max(1).min(records.len());
    let mut sessions = Vec::with_capacity(wanted);
    let mut last_err = None;
    for _ in 0..wanted {
        match launcher.open() {
            Ok(s) => sessions.push(Mutex::new(s)),
            Err(e) => {
                warn!(error = %e, "failed to open browser session");
                last_err = Some(e);
            }
        }
    }
    if sessions.is_empty() {
        return Err(BatchError::NoSession(last_err.expect("at least one attempt")));
    }

    let mut next_seq: HashMap<GroupKey, u32> = HashMap::new();
    // Bounded chunks keep at most a few encoded images in memory at once.
    let chunk_len = sessions.len() * 4;
    for (chunk_idx, chunk) in records.chunks(chunk_len).enumerate() {
        let base = chunk_idx * chunk_len;
        let results = capture_parallel(&sessions, chunk, config);
        for (offset, result) in results.into_iter().enumerate() {
            let idx = base + offset;
            let record = &records[idx];
            let img = match result {
                Ok(img) => img,
                Err(e) => {
                    warn!(url = %record.url, error = %e, "capture failed");
                    outcome.failures.push((idx, e));
                    continue;
                }
            };
            let group = canonical_group(record);
            let seq = next_seq
                .entry(group.clone())
                .or_insert_with(|| start_seq.get(&group).copied().unwrap_or(1).max(1));
            let name = WebshotName::for_group(&group, *seq);
            *seq += 1;

            let path = image_path(out_dir, &name);
            write_file(&path, &img.jpg)?;
            let img_bytes = fs::metadata(&path)
                .map_err(|source| BatchError::Io {
                    path: path.clone(),
                    source,
                })?
                .len();
            info!(url = %record.url, name = %name, "captured");
            outcome.shots.push(Shot {
                record_index: idx,
                path,
                meta: WebshotMeta {
                    name: name.to_string(),
                    img_bytes,
                    img_width: img.width,
                    img_height: img.height,
                },
            });
        }
    }
    Ok(outcome)
}

/// Group key with the country compacted the way names store it.
pub fn canonical_group(record: &UrlRecord) -> GroupKey {
    GroupKey {
        technique: record.technique,
        category: record.category,
        country: compact_country(&record.country),
    }
}

fn capture_parallel<S: BrowserSession>(
    sessions: &[Mutex<S>],
    records: &[UrlRecord],
    config: &CaptureConfig,
) -> Vec<Result<CapturedImage, CaptureFailure>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<CapturedImage, CaptureFailure>>>> =
        Mutex::new(vec![None; records.len()]);
    std::thread::scope(|s| {
        for session in sessions.iter().take(records.len()) {
            s.spawn(|| {
                let mut session = session.lock().expect("session lock");
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(record) = records.get(i) else { break };
                    let r = capture(&mut *session, &record.url, config);
                    results.lock().expect("results lock")[i] = Some(r);
                }
            });
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every record attempted"))
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), BatchError> {
    let io = |source| BatchError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Category, Continent, Country, Technique};
    use image::{ImageFormat, RgbImage};

    /// Renders pages whose height is encoded in the URL path (`/h/<px>`);
    /// paths containing `fail` error out.
    struct FakeSession;

    impl BrowserSession for FakeSession {
        fn render_full_page(
            &mut self,
            url: &str,
            viewport: Viewport,
            max_height: u32,
        ) -> Result<Vec<u8>, CaptureFailure> {
            if url.contains("fail") {
                return Err(CaptureFailure::Navigation(url.into()));
            }
            let content: u32 = url.rsplit('/').next().and_then(|s| s.parse().ok()).unwrap_or(0);
            let h = content.max(viewport.height).min(max_height);
            let img = RgbImage::from_pixel(viewport.width, h, image::Rgb([200, 30, 30]));
            let mut out = Cursor::new(Vec::new());
            img.write_to(&mut out, ImageFormat::Png).unwrap();
            Ok(out.into_inner())
        }
    }

    struct FakeLauncher;

    impl BrowserLauncher for FakeLauncher {
        type Session = FakeSession;
        fn open(&self) -> Result<FakeSession, CaptureFailure> {
            Ok(FakeSession)
        }
    }

    fn rec(url: &str) -> UrlRecord {
        let nl = Country::new("Netherlands", "nl", Continent::Europe).unwrap();
        UrlRecord::new(url, &nl, Category::BusinessEconomy, Technique::Browsing).unwrap()
    }

    #[test]
    fn viewport_parse() {
        assert_eq!("992x744".parse::<Viewport>().unwrap(), DEFAULT_VIEWPORT);
        assert!("992".parse::<Viewport>().is_err());
        assert!("0x744".parse::<Viewport>().is_err());
    }

    #[test]
    fn short_page_uses_viewport() {
        let img = capture(&mut FakeSession, "http://x.nl/h/100", &CaptureConfig::default()).unwrap();
        assert_eq!((img.width, img.height), (992, 744));
        assert_eq!(&img.jpg[..2], &[0xFF, 0xD8]);
    }

    #[test]
    fn tall_page_cropped_to_cap() {
        let cfg = CaptureConfig {
            max_height: 2000,
            ..CaptureConfig::default()
        };
        let img = capture(&mut FakeSession, "http://x.nl/h/3000", &cfg).unwrap();
        assert_eq!(img.height, 2000);
    }

    #[test]
    fn failed_captures_leave_no_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![rec("http://a.nl/h/800"), rec("http://fail.nl/"), rec("http://c.nl/h/900")];
        let out = capture_batch(&FakeLauncher, &records, dir.path(), &HashMap::new(), &CaptureConfig::default())
            .unwrap();
        let names: Vec<_> = out.shots.iter().map(|s| s.meta.name.as_str()).collect();
        assert_eq!(names, ["B2Netherlands_1.jpg", "B2Netherlands_2.jpg"]);
        assert_eq!(out.shots[1].record_index, 2);
        assert_eq!(out.failures.len(), 1);
        for s in &out.shots {
            assert_eq!(fs::metadata(&s.path).unwrap().len(), s.meta.img_bytes);
            assert!(s.path.starts_with(dir.path().join("Business-and-Economy")));
        }
    }

    #[test]
    fn start_seq_continues_numbering() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![rec("http://a.nl/h/800")];
        let mut start = HashMap::new();
        start.insert(canonical_group(&records[0]), 791);
        let out = capture_batch(&FakeLauncher, &records, dir.path(), &start, &CaptureConfig::default()).unwrap();
        assert_eq!(out.shots[0].meta.name, "B2Netherlands_791.jpg");
    }

    #[test]
    fn empty_batch() {
        let dir = tempfile::tempdir().unwrap();
        let out = capture_batch(&FakeLauncher, &[], dir.path(), &HashMap::new(), &CaptureConfig::default()).unwrap();
        assert!(out.shots.is_empty() && out.failures.is_empty());
    }
}
