//! The datasheet, the per-category image tree, and train/validation splits.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;
use tracing::info;

use crate::fetcher::{PageMetrics, SENTINEL};
use crate::model::{Category, Continent, GroupKey, ModelError, Technique, UrlRecord};
use crate::webshot::{canonical_group, parse_name, WebshotMeta, WebshotName};

pub const DATASHEET_FILE: &str = "datasheet.csv";

pub const DATASHEET_HEADER: [&str; 17] = [
    "name",
    "url",
    "country",
    "continent",
    "category_id",
    "technique",
    "time_ms",
    "bytes",
    "images",
    "script_files",
    "css_files",
    "tables",
    "iframes",
    "style_tags",
    "img_bytes",
    "img_width",
    "img_height",
];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate names: {}", .0.join(", "))]
    DuplicateName(Vec<String>),
    #[error("class `{0}` has no files")]
    EmptyClass(String),
    #[error("no classes to split")]
    NoClasses,
    #[error("train ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("datasheet line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One datasheet record, joined to its webshot by `name`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub name: String,
    pub url: String,
    pub country: String,
    pub continent: Continent,
    pub category: Category,
    pub technique: Technique,
    pub metrics: PageMetrics,
    pub webshot: Option<WebshotMeta>,
}

impl DatasetRow {
    pub fn from_record(name: String, record: &UrlRecord, metrics: PageMetrics) -> Self {
        DatasetRow {
            name,
            url: record.url.clone(),
            country: record.country.clone(),
            continent: record.continent,
            category: record.category,
            technique: record.technique,
            metrics,
            webshot: None,
        }
    }

    fn fields(&self) -> Vec<String> {
        let m = &self.metrics;
        let (ib, iw, ih) = match &self.webshot {
            Some(w) => (w.img_bytes as i64, w.img_width as i64, w.img_height as i64),
            None => (SENTINEL, SENTINEL, SENTINEL),
        };
        vec![
            self.name.clone(),
            self.url.clone(),
            self.country.clone(),
            self.continent.to_string(),
            self.category.id().to_string(),
            self.technique.to_string(),
            format_time(m.time_ms),
            m.bytes.to_string(),
            m.images.to_string(),
            m.script_files.to_string(),
            m.css_files.to_string(),
            m.tables.to_string(),
            m.iframes.to_string(),
            m.style_tags.to_string(),
            ib.to_string(),
            iw.to_string(),
            ih.to_string(),
        ]
    }
}

fn format_time(ms: f64) -> String {
    if ms == SENTINEL as f64 {
        "-1".to_string()
    } else {
        format!("{ms:.3}")
    }
}

#[derive(Debug, Deserialize)]
struct RawRow {
    name: String,
    url: String,
    country: String,
    continent: String,
    category_id: u8,
    technique: String,
    time_ms: f64,
    bytes: i64,
    images: i64,
    script_files: i64,
    css_files: i64,
    tables: i64,
    iframes: i64,
    style_tags: i64,
    img_bytes: i64,
    img_width: i64,
    img_height: i64,
}

impl RawRow {
    fn into_row(self) -> Result<DatasetRow, String> {
        let continent = self.continent.parse().map_err(|e: ModelError| e.to_string())?;
        let category = Category::from_id(self.category_id).map_err(|e| e.to_string())?;
        let technique = self.technique.parse().map_err(|e: ModelError| e.to_string())?;
        let img = [self.img_bytes, self.img_width, self.img_height];
        let webshot = if img.iter().all(|&v| v == SENTINEL) {
            None
        } else if img.iter().all(|&v| v >= 1) {
            Some(WebshotMeta {
                name: self.name.clone(),
                img_bytes: self.img_bytes as u64,
                img_width: self.img_width as u32,
                img_height: self.img_height as u32,
            })
        } else {
            return Err(format!("webshot fields {img:?} are neither all -1 nor all positive"));
        };
        Ok(DatasetRow {
            name: self.name,
            url: self.url,
            country: self.country,
            continent,
            category,
            technique,
            metrics: PageMetrics {
                time_ms: self.time_ms,
                bytes: self.bytes,
                images: self.images,
                script_files: self.script_files,
                css_files: self.css_files,
                tables: self.tables,
                iframes: self.iframes,
                style_tags: self.style_tags,
            },
            webshot,
        })
    }
}

/// Parses a datasheet, returning per-line results so callers can decide how
/// to treat malformed lines.
pub fn parse_datasheet_lenient(text: &[u8]) -> Vec<(u64, Result<DatasetRow, String>)> {
    let mut rdr = csv::Reader::from_reader(text);
    rdr.deserialize::<RawRow>()
        .enumerate()
        .map(|(i, r)| {
            let line = i as u64 + 2;
            (line, r.map_err(|e| e.to_string()).and_then(RawRow::into_row))
        })
        .collect()
}

pub fn parse_datasheet(text: &[u8]) -> Result<Vec<DatasetRow>, StoreError> {
    parse_datasheet_lenient(text)
        .into_iter()
        .map(|(line, r)| r.map_err(|reason| StoreError::Malformed { line, reason }))
        .collect()
}

/// Reads a datasheet; a missing file is an empty sheet.
pub fn read_datasheet(path: &Path) -> Result<Vec<DatasetRow>, StoreError> {
    match fs::read(path) {
        Ok(bytes) => parse_datasheet(&bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn render_datasheet(rows: &[DatasetRow]) -> Result<Vec<u8>, StoreError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DATASHEET_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.into_inner().map_err(|e| StoreError::Csv(e.into_error().into()))
}

/// Replaces the datasheet atomically (temp file in the same directory, then rename).
pub fn write_datasheet(path: &Path, rows: &[DatasetRow]) -> Result<(), StoreError> {
    let names = duplicate_names(rows.iter().map(|r| r.name.as_str()));
    if !names.is_empty() {
        return Err(StoreError::DuplicateName(names));
    }
    let bytes = render_datasheet(rows)?;
    write_atomic(path, &bytes)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let file_name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{file_name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

fn duplicate_names<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for n in names {
        if !seen.insert(n) && !dups.iter().any(|d| d == n) {
            dups.push(n.to_string());
        }
    }
    dups
}

/// Appends rows to the datasheet at `path`. Any name already present (in the
/// sheet or twice in `rows`) aborts the whole append.
pub fn append_rows(path: &Path, rows: &[DatasetRow]) -> Result<usize, StoreError> {
    if rows.is_empty() {
        return Ok(0);
    }
    let mut sheet = read_datasheet(path)?;
    let existing: HashSet<&str> = sheet.iter().map(|r| r.name.as_str()).collect();
    let mut offenders: Vec<String> = rows
        .iter()
        .filter(|r| existing.contains(r.name.as_str()))
        .map(|r| r.name.clone())
        .collect();
    for d in duplicate_names(rows.iter().map(|r| r.name.as_str())) {
        if !offenders.contains(&d) {
            offenders.push(d);
        }
    }
    if !offenders.is_empty() {
        return Err(StoreError::DuplicateName(offenders));
    }
    sheet.extend_from_slice(rows);
    write_datasheet(path, &sheet)?;
    Ok(rows.len())
}

fn name_seq(row: &DatasetRow) -> Option<(GroupKey, u32)> {
    parse_name(&row.name).ok().map(|n| (n.group(), n.seq))
}

/// Names for freshly measured rows: per group, continue after the highest
/// sequence number already used in `existing`.
pub fn assign_row_names(existing: &[DatasetRow], records: &[UrlRecord]) -> Vec<String> {
    let mut next: HashMap<GroupKey, u32> = HashMap::new();
    for (g, seq) in existing.iter().filter_map(name_seq) {
        let e = next.entry(g).or_insert(1);
        *e = (*e).max(seq + 1);
    }
    records
        .iter()
        .map(|r| {
            let g = canonical_group(r);
            let seq = next.entry(g.clone()).or_insert(1);
            let name = WebshotName::for_group(&g, *seq).to_string();
            *seq += 1;
            name
        })
        .collect()
}

/// First free webshot sequence number per group: one past the highest
/// sequence among rows that already have a webshot.
pub fn webshot_start_seq(rows: &[DatasetRow]) -> HashMap<GroupKey, u32> {
    let mut out = HashMap::new();
    for r in rows.iter().filter(|r| r.webshot.is_some()) {
        if let Some((g, seq)) = name_seq(r) {
            let e = out.entry(g).or_insert(1);
            *e = (*e).max(seq + 1);
        }
    }
    out
}

/// Joins captured webshots into the sheet. Each capture claims the first
/// row with the same URL and group that has no webshot yet (a sentineled
/// row is added when none exists) and takes the webshot's name. Rows
/// without webshots in the touched groups are then renumbered after the
/// highest webshot sequence so names stay unique.
pub fn attach_webshots(rows: &mut Vec<DatasetRow>, captures: &[(UrlRecord, WebshotMeta)]) {
    let mut touched = HashSet::new();
    for (record, meta) in captures {
        let group = canonical_group(record);
        touched.insert(group.clone());
        let slot = rows.iter().position(|r| {
            r.webshot.is_none()
                && r.url == record.url
                && r.technique == record.technique
                && r.category == record.category
                && crate::webshot::compact_country(&r.country) == group.country
        });
        let idx = match slot {
            Some(i) => i,
            None => {
                rows.push(DatasetRow::from_record(String::new(), record, PageMetrics::failed()));
                rows.len() - 1
            }
        };
        rows[idx].name = meta.name.clone();
        rows[idx].webshot = Some(meta.clone());
    }

    let mut next = webshot_start_seq(rows);
    for r in rows.iter_mut().filter(|r| r.webshot.is_none()) {
        let g = GroupKey {
            technique: r.technique,
            category: r.category,
            country: crate::webshot::compact_country(&r.country),
        };
        if !touched.contains(&g) {
            continue;
        }
        let seq = next.entry(g.clone()).or_insert(1);
        r.name = WebshotName::for_group(&g, *seq).to_string();
        *seq += 1;
    }
}

/// Train/validation split parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub ratio_train: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            ratio_train: 0.8,
            seed: 1337,
        }
    }
}

impl SplitSpec {
    pub fn new(ratio_train: f64, seed: u64) -> Result<Self, StoreError> {
        if !(ratio_train > 0.0 && ratio_train < 1.0) {
            return Err(StoreError::InvalidRatio(ratio_train));
        }
        Ok(SplitSpec { ratio_train, seed })
    }

    /// `floor(ratio * n)`. The epsilon absorbs binary representation error
    /// such as `0.29 * 100 = 28.999999999999996`.
    pub fn train_count(&self, n: usize) -> usize {
        ((self.ratio_train * n as f64) + 1e-9).floor() as usize
    }
}

/// Per-class assignment produced by [`plan_split`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassSplit {
    pub train: Vec<PathBuf>,
    pub val: Vec<PathBuf>,
}

pub type SplitPlan = BTreeMap<String, ClassSplit>;

/// Uniform integer in `0..bound` by rejection sampling over 64-bit draws.
fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}

/// Deterministic shuffle: items are first sorted, then permuted by a
/// Fisher-Yates pass (`i` from `n-1` down to 1, swap with `j` uniform in
/// `0..=i`) driven by ChaCha8 seeded from `seed`.
pub fn seeded_shuffle(items: &mut [PathBuf], seed: u64) {
    items.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..items.len()).rev() {
        let j = uniform_below(&mut rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// Assigns `floor(ratio * n)` files of each class to train and the rest to
/// val. Each class is shuffled independently with the same seed.
pub fn plan_split(
    classes: &BTreeMap<String, Vec<PathBuf>>,
    spec: &SplitSpec,
) -> Result<SplitPlan, StoreError> {
    SplitSpec::new(spec.ratio_train, spec.seed)?;
    if classes.is_empty() {
        return Err(StoreError::NoClasses);
    }
    let mut plan = SplitPlan::new();
    for (label, files) in classes {
        if files.is_empty() {
            return Err(StoreError::EmptyClass(label.clone()));
        }
        let mut shuffled = files.clone();
        seeded_shuffle(&mut shuffled, spec.seed);
        let k = spec.train_count(shuffled.len());
        let val = shuffled.split_off(k);
        plan.insert(label.clone(), ClassSplit { train: shuffled, val });
    }
    Ok(plan)
}

/// Lists `<root>/<class>/<file>` for every visible subdirectory of `root`.
pub fn list_class_dirs(root: &Path) -> Result<BTreeMap<String, Vec<PathBuf>>, StoreError> {
    let mut classes = BTreeMap::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let path = entry.path();
        let label = entry.file_name().to_string_lossy().into_owned();
        if !path.is_dir() || label.starts_with('.') {
            continue;
        }
        let mut files = Vec::new();
        for f in fs::read_dir(&path).map_err(io_err(&path))? {
            let f = f.map_err(io_err(&path))?;
            let fname = f.file_name().to_string_lossy().into_owned();
            if f.path().is_file() && !fname.starts_with('.') {
                files.push(f.path());
            }
        }
        files.sort();
        classes.insert(label, files);
    }
    Ok(classes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferMode {
    Copy,
    Move,
}

/// Materializes a plan as `<out>/train/<label>/...` and `<out>/val/<label>/...`.
pub fn execute_split(plan: &SplitPlan, out: &Path, mode: TransferMode) -> Result<(), StoreError> {
    for (label, split) in plan {
        for (subset, files) in [("train", &split.train), ("val", &split.val)] {
            let dir = out.join(subset).join(label);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            for src in files {
                let dst = dir.join(src.file_name().unwrap_or_default());
                match mode {
                    TransferMode::Copy => fs::copy(src, &dst).map(|_| ()),
                    TransferMode::Move => fs::rename(src, &dst).or_else(|_| {
                        fs::copy(src, &dst)?;
                        fs::remove_file(src)
                    }),
                }
                .map_err(io_err(src))?;
            }
        }
        info!(class = %label, train = split.train.len(), val = split.val.len(), "split");
    }
    Ok(())
}

/// Lists class folders under `input`, plans the split and writes it to `out`.
pub fn split(input: &Path, out: &Path, spec: &SplitSpec, mode: TransferMode) -> Result<SplitPlan, StoreError> {
    let classes = list_class_dirs(input)?;
    let plan = plan_split(&classes, spec)?;
    execute_split(&plan, out, mode)?;
    Ok(plan)
}

/// A webshot file found in the image tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageFile {
    pub path: PathBuf,
    pub name: String,
    pub bytes: u64,
}

/// Every `.jpg` directly inside the six category folders of `root`.
pub fn image_census(root: &Path) -> Result<Vec<ImageFile>, StoreError> {
    let mut out = Vec::new();
    for category in Category::ALL {
        let dir = root.join(category.slug());
        if !dir.is_dir() {
            continue;
        }
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let meta = entry.metadata().map_err(io_err(&dir))?;
            if meta.is_file() && name.to_ascii_lowercase().ends_with(".jpg") {
                out.push(ImageFile {
                    path: entry.path(),
                    name,
                    bytes: meta.len(),
                });
            }
        }
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// Inconsistencies between the datasheet and the image tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    /// Image files with no datasheet row claiming them.
    pub orphan_files: Vec<PathBuf>,
    /// Rows with webshot metadata but no file.
    pub orphan_rows: Vec<String>,
    /// Rows whose page metrics are partly sentineled.
    pub sentinel_violations: Vec<String>,
    /// Rows whose recorded image size differs from the file on disk.
    pub size_mismatches: Vec<String>,
    pub duplicate_names: Vec<String>,
    pub malformed_lines: Vec<(u64, String)>,
    pub files_checked: usize,
    pub rows_checked: usize,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.orphan_files.is_empty()
            && self.orphan_rows.is_empty()
            && self.sentinel_violations.is_empty()
            && self.size_mismatches.is_empty()
            && self.duplicate_names.is_empty()
            && self.malformed_lines.is_empty()
    }

    pub fn issue_count(&self) -> usize {
        self.orphan_files.len()
            + self.orphan_rows.len()
            + self.sentinel_violations.len()
            + self.size_mismatches.len()
            + self.duplicate_names.len()
            + self.malformed_lines.len()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "checked {} rows, {} files", self.rows_checked, self.files_checked)?;
        for p in &self.orphan_files {
            writeln!(f, "orphan-file {}", p.display())?;
        }
        for n in &self.orphan_rows {
            writeln!(f, "orphan-row {n}")?;
        }
        for n in &self.sentinel_violations {
            writeln!(f, "partial-sentinel {n}")?;
        }
        for n in &self.size_mismatches {
            writeln!(f, "size-mismatch {n}")?;
        }
        for n in &self.duplicate_names {
            writeln!(f, "duplicate-name {n}")?;
        }
        for (line, reason) in &self.malformed_lines {
            writeln!(f, "malformed line {line}: {reason}")?;
        }
        if self.is_clean() {
            writeln!(f, "consistent")?;
        }
        Ok(())
    }
}

/// Cross-checks `<root>/datasheet.csv` against the image tree under `root`.
pub fn verify(root: &Path) -> Result<VerifyReport, StoreError> {
    let sheet_path = root.join(DATASHEET_FILE);
    let text = match fs::read(&sheet_path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(io_err(&sheet_path)(e)),
    };
    let mut report = VerifyReport::default();
    let mut rows = Vec::new();
    if !text.is_empty() {
        for (line, r) in parse_datasheet_lenient(&text) {
            match r {
                Ok(row) => rows.push(row),
                Err(reason) => report.malformed_lines.push((line, reason)),
            }
        }
    }
    report.rows_checked = rows.len();
    report.duplicate_names = duplicate_names(rows.iter().map(|r| r.name.as_str()));

    let files = image_census(root)?;
    report.files_checked = files.len();
    let by_name: HashMap<&str, &ImageFile> = files.iter().map(|f| (f.name.as_str(), f)).collect();

    let mut claimed = HashSet::new();
    for row in &rows {
        if !row.metrics.is_consistent() {
            report.sentinel_violations.push(row.name.clone());
        }
        let Some(shot) = &row.webshot else { continue };
        match by_name.get(row.name.as_str()) {
            Some(file) => {
                claimed.insert(row.name.as_str());
                if file.bytes != shot.img_bytes {
                    report.size_mismatches.push(row.name.clone());
                }
            }
            None => report.orphan_rows.push(row.name.clone()),
        }
    }
    report.orphan_files = files
        .iter()
        .filter(|f| !claimed.contains(f.name.as_str()))
        .map(|f| f.path.clone())
        .collect();
    Ok(report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellTotals {
    pub files: u64,
    pub bytes: u64,
}

impl CellTotals {
    fn add(&mut self, other: CellTotals) {
        self.files += other.files;
        self.bytes += other.bytes;
    }
}

/// File counts and sizes per (category, technique) over the image tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSummary {
    pub cells: BTreeMap<(Category, Technique), CellTotals>,
    /// Files whose names do not follow the naming grammar.
    pub unrecognized: Vec<PathBuf>,
}

impl DatasetSummary {
    pub fn cell(&self, category: Category, technique: Technique) -> CellTotals {
        self.cells.get(&(category, technique)).copied().unwrap_or_default()
    }

    pub fn category_total(&self, category: Category) -> CellTotals {
        let mut t = CellTotals::default();
        for tech in Technique::ALL {
            t.add(self.cell(category, tech));
        }
        t
    }

    pub fn technique_total(&self, technique: Technique) -> CellTotals {
        let mut t = CellTotals::default();
        for c in Category::ALL {
            t.add(self.cell(c, technique));
        }
        t
    }

    pub fn total(&self) -> CellTotals {
        let mut t = CellTotals::default();
        for c in self.cells.values() {
            t.add(*c);
        }
        t
    }
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |c: CellTotals| format!("{} ({})", c.files, human_bytes(c.bytes));
        writeln!(f, "Category | Browsing | Searching | Total")?;
        for c in Category::ALL {
            writeln!(
                f,
                "{} | {} | {} | {}",
                c.label(),
                cell(self.cell(c, Technique::Browsing)),
                cell(self.cell(c, Technique::Searching)),
                self.category_total(c).files
            )?;
        }
        writeln!(
            f,
            "Total | {} | {} | {}",
            cell(self.technique_total(Technique::Browsing)),
            cell(self.technique_total(Technique::Searching)),
            self.total().files
        )
    }
}

/// Decimal units with at most two fraction digits: `200 KB`, `2.58 GB`.
pub fn human_bytes(bytes: u64) -> String {
    const UNITS: [&str; 5] = ["B", "KB", "MB", "GB", "TB"];
    let mut value = bytes as f64;
    let mut unit = 0;
    while value >= 1000.0 && unit < UNITS.len() - 1 {
        value /= 1000.0;
        unit += 1;
    }
    let mut s = String::new();
    let _ = write!(s, "{value:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    format!("{s} {}", UNITS[unit])
}

/// Counts webshots per category and technique, parsed from file names.
pub fn summarize(root: &Path) -> Result<DatasetSummary, StoreError> {
    let mut summary = DatasetSummary::default();
    for file in image_census(root)? {
        match parse_name(&file.name) {
            Ok(n) => summary.cells.entry((n.category, n.technique)).or_default().add(CellTotals {
                files: 1,
                bytes: file.bytes,
            }),
            Err(_) => summary.unrecognized.push(file.path),
        }
    }
    Ok(summary)
}
