//! URL collection by search-engine queries (Searching) and by web-directory
//! paths (Browsing).

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use scraper::{Html, Selector};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::{info, warn};
use url::Url;

use crate::model::{Category, Continent, Country, ModelError, Technique, UrlRecord};

/// Default number of results requested per query.
pub const DEFAULT_LIMIT: usize = 100;

pub const DIRECTORY_ROOT: &str = "https://botw.org/top/Regional/";

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("country `{0}` has an empty country code")]
    EmptyCountryCode(String),
    #[error("no region mapped for continent {0}")]
    UnknownRegion(Continent),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend quota exceeded")]
    QuotaExceeded,
    #[error("limit must be at least 1")]
    InvalidLimit,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Builds the Searching query `site:<cc> kw1 OR kw2 ... ext:html`.
pub fn build_search_query(country: &Country, category: Category) -> Result<String, CollectError> {
    let cc = country.cc_tld().trim();
    if cc.is_empty() {
        return Err(CollectError::EmptyCountryCode(country.name().to_string()));
    }
    let terms = category.keywords().join(" OR ");
    Ok(format!("site:{cc} {terms} ext:html"))
}

/// Maps continents onto the directory's regional path segment.
#[derive(Debug, Clone)]
pub struct RegionTable {
    regions: BTreeMap<Continent, String>,
}

impl Default for RegionTable {
    fn default() -> Self {
        let regions = Continent::ALL
            .into_iter()
            .map(|c| (c, c.as_str().to_string()))
            .collect();
        RegionTable { regions }
    }
}

impl RegionTable {
    pub fn empty() -> Self {
        RegionTable {
            regions: BTreeMap::new(),
        }
    }

    pub fn with(mut self, continent: Continent, region: &str) -> Self {
        self.regions.insert(continent, region.to_string());
        self
    }

    pub fn region(&self, continent: Continent) -> Option<&str> {
        self.regions.get(&continent).map(String::as_str)
    }
}

/// Builds `https://botw.org/top/Regional/<Region>/<Country>/<Category-Slug>/`.
/// Spaces in country names become underscores, as directory paths do.
pub fn build_directory_url(
    regions: &RegionTable,
    country: &Country,
    category: Category,
) -> Result<String, CollectError> {
    let region = regions
        .region(country.continent())
        .ok_or(CollectError::UnknownRegion(country.continent()))?;
    let name = country.name().replace(' ', "_");
    Ok(format!("{DIRECTORY_ROOT}{region}/{name}/{}/", category.slug()))
}

/// A source of result pages. `key` is a search query (Searching) or a
/// directory URL (Browsing).
pub trait SearchBackend {
    fn fetch(&self, key: &str, limit: usize) -> Result<String, CollectError>;
}

impl<B: SearchBackend + ?Sized> SearchBackend for &B {
    fn fetch(&self, key: &str, limit: usize) -> Result<String, CollectError> {
        (**self).fetch(key, limit)
    }
}

/// Serves canned documents from a directory. Each document lives at
/// `<dir>/<sha256(key) hex>.html`.
#[derive(Debug, Clone)]
pub struct FixtureBackend {
    dir: PathBuf,
}

impl FixtureBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureBackend { dir: dir.into() }
    }

    pub fn key_hash(key: &str) -> String {
        hex::encode(Sha256::digest(key.as_bytes()))
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{}.html", Self::key_hash(key)))
    }

    /// Stores a document so later fetches of `key` return it.
    pub fn register(&self, key: &str, document: &str) -> std::io::Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(key);
        fs::write(&path, document)?;
        Ok(path)
    }
}

impl SearchBackend for FixtureBackend {
    fn fetch(&self, key: &str, limit: usize) -> Result<String, CollectError> {
        if limit == 0 {
            return Err(CollectError::InvalidLimit);
        }
        let path = self.path_for(key);
        fs::read_to_string(&path).map_err(|e| {
            CollectError::BackendUnavailable(format!("no fixture for `{key}` ({}): {e}", path.display()))
        })
    }
}

/// Queries a live search engine or directory over HTTP. Searching keys are
/// sent to `search_endpoint` as `?q=<key>&num=<limit>`; keys that are already
/// absolute URLs are fetched directly.
#[derive(Debug, Clone)]
pub struct LiveBackend {
    client: reqwest::blocking::Client,
    search_endpoint: String,
}

impl LiveBackend {
    pub fn new(search_endpoint: &str, timeout: Duration, user_agent: &str) -> Result<Self, CollectError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(user_agent)
            .build()
            .map_err(|e| CollectError::BackendUnavailable(e.to_string()))?;
        Ok(LiveBackend {
            client,
            search_endpoint: search_endpoint.to_string(),
        })
    }
}

impl SearchBackend for LiveBackend {
    fn fetch(&self, key: &str, limit: usize) -> Result<String, CollectError> {
        if limit == 0 {
            return Err(CollectError::InvalidLimit);
        }
        let target = if key.starts_with("http://") || key.starts_with("https://") {
            Url::parse(key).map_err(|e| CollectError::BackendUnavailable(e.to_string()))?
        } else {
            Url::parse_with_params(&self.search_endpoint, [("q", key), ("num", &limit.to_string())])
                .map_err(|e| CollectError::BackendUnavailable(e.to_string()))?
        };
        let resp = self
            .client
            .get(target)
            .send()
            .map_err(|e| CollectError::BackendUnavailable(e.to_string()))?;
        if resp.status() == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(CollectError::QuotaExceeded);
        }
        if !resp.status().is_success() {
            return Err(CollectError::BackendUnavailable(format!("HTTP {}", resp.status())));
        }
        resp.text()
            .map_err(|e| CollectError::BackendUnavailable(e.to_string()))
    }
}

/// Selector rules separating outbound result links from the results page's
/// own navigation and advertising.
#[derive(Debug, Clone)]
pub struct LinkRules {
    /// Anchors matched by any of these selectors are skipped.
    pub exclude_selectors: Vec<String>,
    /// Hosts (or host suffixes) that belong to the results page itself.
    pub exclude_hosts: Vec<String>,
}

impl Default for LinkRules {
    fn default() -> Self {
        LinkRules {
            exclude_selectors: vec![
                "nav a".into(),
                "header a".into(),
                "footer a".into(),
                "[data-ad] a".into(),
                "a[data-ad]".into(),
                ".ad a".into(),
                "a[rel~=\"sponsored\"]".into(),
            ],
            exclude_hosts: vec![
                "google.com".into(),
                "googleusercontent.com".into(),
                "botw.org".into(),
            ],
        }
    }
}

impl LinkRules {
    fn host_excluded(&self, host: &str) -> bool {
        self.exclude_hosts
            .iter()
            .any(|h| host == h || host.ends_with(&format!(".{h}")))
    }
}

/// Extracts the ordered, de-duplicated outbound links of a results page.
pub fn parse_result_links(document: &str, rules: &LinkRules) -> Vec<String> {
    let html = Html::parse_document(document);
    let anchors = Selector::parse("a[href]").expect("static selector");

    let mut excluded = HashSet::new();
    for sel in &rules.exclude_selectors {
        match Selector::parse(sel) {
            Ok(s) => excluded.extend(html.select(&s).map(|e| e.id())),
            Err(_) => warn!(selector = %sel, "ignoring unparsable exclusion selector"),
        }
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for a in html.select(&anchors) {
        if excluded.contains(&a.id()) {
            continue;
        }
        let Some(href) = a.value().attr("href") else { continue };
        let Some(url) = resolve_result_href(href.trim()) else { continue };
        let Some(host) = url.host_str() else { continue };
        if rules.host_excluded(host) {
            continue;
        }
        let s = url.to_string();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

/// Accepts absolute http(s) hrefs and unwraps `/url?q=<target>` redirect
/// wrappers used by search result pages.
fn resolve_result_href(href: &str) -> Option<Url> {
    if href.starts_with("/url?") || href.starts_with("/url?q=") {
        let wrapped = Url::parse("http://wrapper.invalid").ok()?.join(href).ok()?;
        let target = wrapped
            .query_pairs()
            .find(|(k, _)| k == "q" || k == "url")
            .map(|(_, v)| v.into_owned())?;
        return resolve_result_href(&target);
    }
    let url = Url::parse(href).ok()?;
    matches!(url.scheme(), "http" | "https").then_some(url)
}

/// One failed `(country, category)` pair.
#[derive(Debug)]
pub struct CollectFailure {
    pub country: String,
    pub category: Category,
    pub error: CollectError,
}

#[derive(Debug, Default)]
pub struct CollectReport {
    pub records: Vec<UrlRecord>,
    pub failures: Vec<CollectFailure>,
}

#[derive(Debug, Clone)]
pub struct CollectConfig {
    pub technique: Technique,
    pub limit: usize,
    pub rules: LinkRules,
    pub regions: RegionTable,
}

impl CollectConfig {
    pub fn new(technique: Technique) -> Self {
        CollectConfig {
            technique,
            limit: DEFAULT_LIMIT,
            rules: LinkRules::default(),
            regions: RegionTable::default(),
        }
    }
}

/// Iterates the countries × categories cross product, fetching and parsing
/// one results page per pair. Backend failures are recorded per pair and do
/// not stop the run. URLs are de-duplicated across the whole run; the first
/// pair to produce a URL keeps it.
pub fn collect<B: SearchBackend>(
    countries: &[Country],
    categories: &[Category],
    config: &CollectConfig,
    backend: &B,
) -> Result<CollectReport, CollectError> {
    if countries.is_empty() {
        return Err(CollectError::EmptyInput("countries"));
    }
    if categories.is_empty() {
        return Err(CollectError::EmptyInput("categories"));
    }
    if config.limit == 0 {
        return Err(CollectError::InvalidLimit);
    }

    let mut report = CollectReport::default();
    let mut seen = HashSet::new();
    for country in countries {
        for &category in categories {
            let key = match config.technique {
                Technique::Searching => build_search_query(country, category),
                Technique::Browsing => build_directory_url(&config.regions, country, category),
            };
            let document = key.and_then(|k| backend.fetch(&k, config.limit));
            let document = match document {
                Ok(d) => d,
                Err(error) => {
                    warn!(country = country.name(), category = category.id(), %error, "collection failed");
                    report.failures.push(CollectFailure {
                        country: country.name().to_string(),
                        category,
                        error,
                    });
                    continue;
                }
            };
            let links = parse_result_links(&document, &config.rules);
            let mut added = 0;
            for link in links.into_iter().take(config.limit) {
                if !seen.insert(link.clone()) {
                    continue;
                }
                report
                    .records
                    .push(UrlRecord::new(&link, country, category, config.technique)?);
                added += 1;
            }
            info!(country = country.name(), category = category.id(), added, "collected");
        }
    }
    Ok(report)
}

pub const URL_LIST_HEADER: [&str; 5] = ["url", "country", "continent", "category_id", "technique"];

/// Appends records to a URL list CSV, writing the header if the file is new
/// or empty.
pub fn append_url_list(path: &Path, records: &[UrlRecord]) -> Result<usize, CollectError> {
    let needs_header = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if needs_header {
        w.write_record(URL_LIST_HEADER)?;
    }
    for r in records {
        w.write_record([
            r.url.as_str(),
            r.country.as_str(),
            r.continent.as_str(),
            &r.category.id().to_string(),
            r.technique.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(records.len())
}

pub fn read_url_list(path: &Path) -> Result<Vec<UrlRecord>, CollectError> {
    let data = fs::read(path)?;
    parse_url_list(&data[..])
}

pub fn parse_url_list<R: std::io::Read>(reader: R) -> Result<Vec<UrlRecord>, CollectError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let category_id: u8 = field(3).parse().map_err(|_| ModelError::UnknownCategory(0))?;
        out.push(UrlRecord::from_parts(
            field(0),
            field(1),
            field(2).parse()?,
            Category::from_id(category_id)?,
            field(4).parse()?,
        )?);
    }
    Ok(out)
}

/// Renders records as a URL list CSV into any writer.
pub fn write_url_list<W: Write>(writer: W, records: &[UrlRecord]) -> Result<(), CollectError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(URL_LIST_HEADER)?;
    for r in records {
        w.write_record([
            r.url.as_str(),
            r.country.as_str(),
            r.continent.as_str(),
            &r.category.id().to_string(),
            r.technique.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
