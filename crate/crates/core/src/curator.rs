//! Quarantine of predicted error pages and confusion-matrix evaluation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;
use tracing::{info, warn};
use walkdir::WalkDir;

/// Scores strictly above this are predicted valid.
pub const VALID_THRESHOLD: f64 = 0.5;

pub const JOURNAL_FILE: &str = ".quarantine-journal";

#[derive(Debug, Error)]
pub enum CuratorError {
    #[error("score {score} for `{name}` outside [0, 1]")]
    ScoreOutOfRange { name: String, score: f64 },
    #[error("`{0}` has no ground-truth label")]
    UnlabeledName(String),
    #[error("unknown class label `{0}`")]
    UnknownClass(String),
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("error directory {0} does not exist")]
    MissingErrorDir(PathBuf),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CuratorError + '_ {
    move |source| CuratorError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Binary page class, in the row/column order used by the matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PageClass {
    Error,
    Valid,
}

impl PageClass {
    pub const ORDER: [PageClass; 2] = [PageClass::Error, PageClass::Valid];

    pub fn label(self) -> &'static str {
        match self {
            PageClass::Error => "ERROR",
            PageClass::Valid => "VALID",
        }
    }

    pub fn from_score(score: f64) -> Self {
        if score > VALID_THRESHOLD {
            PageClass::Valid
        } else {
            PageClass::Error
        }
    }
}

impl fmt::Display for PageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PageClass {
    type Err = CuratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ERROR" => Ok(PageClass::Error),
            "VALID" => Ok(PageClass::Valid),
            _ => Err(CuratorError::UnknownClass(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub name: String,
    pub score: f64,
}

impl Prediction {
    pub fn new(name: &str, score: f64) -> Result<Self, CuratorError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(CuratorError::ScoreOutOfRange {
                name: name.to_string(),
                score,
            });
        }
        Ok(Prediction {
            name: name.to_string(),
            score,
        })
    }

    pub fn predicted(&self) -> PageClass {
        PageClass::from_score(self.score)
    }
}

/// Parses the `name,score` interchange CSV.
pub fn parse_predictions<R: std::io::Read>(reader: R) -> Result<Vec<Prediction>, CuratorError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["name", "score"] {
        return Err(CuratorError::Malformed {
            line: 1,
            reason: format!("expected header `name,score`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let (Some(name), Some(score)) = (rec.get(0), rec.get(1)) else {
            return Err(CuratorError::Malformed {
                line,
                reason: "expected 2 fields".into(),
            });
        };
        let score: f64 = score.parse().map_err(|_| CuratorError::Malformed {
            line,
            reason: format!("bad score `{score}`"),
        })?;
        out.push(Prediction::new(name, score)?);
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, CuratorError> {
    parse_predictions(fs::File::open(path).map_err(io_err(path))?)
}

pub fn write_predictions<W: Write>(writer: W, preds: &[Prediction]) -> Result<(), CuratorError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["name", "score"])?;
    for p in preds {
        w.write_record([p.name.as_str(), &p.score.to_string()])?;
    }
    w.flush().map_err(io_err(Path::new("<predictions>")))?;
    Ok(())
}

/// Parses a `name,label` ground-truth CSV with labels `ERROR`/`VALID`.
pub fn parse_truth<R: std::io::Read>(reader: R) -> Result<HashMap<String, PageClass>, CuratorError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (Some(name), Some(label)) = (rec.get(0), rec.get(1)) else {
            return Err(CuratorError::Malformed {
                line: i as u64 + 2,
                reason: "expected 2 fields".into(),
            });
        };
        out.insert(name.to_string(), label.parse()?);
    }
    Ok(out)
}

pub fn read_truth(path: &Path) -> Result<HashMap<String, PageClass>, CuratorError> {
    parse_truth(fs::File::open(path).map_err(io_err(path))?)
}

/// Square count matrix: rows are the real class, columns the predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: &[&str]) -> Self {
        let k = labels.len();
        ConfusionMatrix {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            counts: vec![vec![0; k]; k],
        }
    }

    /// `counts[real][predicted]`; panics if not square or not matching labels.
    pub fn from_counts(labels: &[&str], counts: Vec<Vec<u64>>) -> Self {
        assert_eq!(counts.len(), labels.len(), "row count must match labels");
        assert!(counts.iter().all(|r| r.len() == labels.len()), "matrix must be square");
        ConfusionMatrix {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            counts,
        }
    }

    /// Binary matrix in ERROR, VALID order.
    pub fn binary(err_err: u64, err_valid: u64, valid_err: u64, valid_valid: u64) -> Self {
        Self::from_counts(&["ERROR", "VALID"], vec![vec![err_err, err_valid], vec![valid_err, valid_valid]])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, real: usize, predicted: usize) -> u64 {
        self.counts[real][predicted]
    }

    pub fn record(&mut self, real: usize, predicted: usize) {
        self.counts[real][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Applies the same label permutation to rows and columns:
    /// new index `i` takes old index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let counts = perm
            .iter()
            .map(|&r| perm.iter().map(|&c| self.counts[r][c]).collect())
            .collect();
        ConfusionMatrix { labels, counts }
    }

    /// CSV with a header of predicted labels and one row per real label.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CuratorError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["real\\predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(io_err(Path::new("<matrix>")))?;
        Ok(())
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>8}", "")?;
        for l in &self.labels {
            write!(f, " {l:>8}")?;
        }
        writeln!(f)?;
        for (l, row) in self.labels.iter().zip(&self.counts) {
            write!(f, "{l:>8}")?;
            for c in row {
                write!(f, " {c:>8}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Tallies (real, predicted) pairs into an ERROR/VALID matrix.
pub fn confusion(
    truth: &HashMap<String, PageClass>,
    predictions: &[Prediction],
) -> Result<ConfusionMatrix, CuratorError> {
    let mut m = ConfusionMatrix::zeros(&["ERROR", "VALID"]);
    let index = |c: PageClass| PageClass::ORDER.iter().position(|&o| o == c).expect("class in order");
    for p in predictions {
        let real = *truth
            .get(&p.name)
            .ok_or_else(|| CuratorError::UnlabeledName(p.name.clone()))?;
        m.record(index(real), index(p.predicted()));
    }
    Ok(m)
}

/// Accuracy as a percentage, `100 * trace / total`.
pub fn accuracy(m: &ConfusionMatrix) -> Result<f64, CuratorError> {
    let total = m.total();
    if total == 0 {
        return Err(CuratorError::EmptyMatrix);
    }
    Ok(100.0 * m.trace() as f64 / total as f64)
}

/// Accuracy rounded to two decimals for reporting.
pub fn accuracy_2dp(m: &ConfusionMatrix) -> Result<f64, CuratorError> {
    accuracy(m).map(|a| (a * 100.0).round() / 100.0)
}

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct QuarantineReport {
    pub moved: Vec<String>,
    /// Predicted errors already sitting in the error directory.
    pub already_quarantined: Vec<String>,
    pub missing: Vec<String>,
    pub kept: usize,
}

/// Moves every webshot predicted as ERROR from under `image_root` into
/// `error_dir`. Each move is journaled (`PENDING` then `DONE`) in
/// `error_dir/.quarantine-journal`; pending entries left by an interrupted
/// run are completed first.
pub fn quarantine(
    predictions: &[Prediction],
    image_root: &Path,
    error_dir: &Path,
) -> Result<QuarantineReport, CuratorError> {
    if !error_dir.is_dir() {
        return Err(CuratorError::MissingErrorDir(error_dir.to_path_buf()));
    }
    let journal_path = error_dir.join(JOURNAL_FILE);
    recover_journal(&journal_path)?;

    let error_canon = error_dir.canonicalize().map_err(io_err(error_dir))?;
    let index = index_files(image_root, &error_canon);
    let mut journal = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&journal_path)
        .map_err(io_err(&journal_path))?;

    let mut report = QuarantineReport::default();
    let mut handled = HashSet::new();
    for p in predictions {
        if p.predicted() == PageClass::Valid {
            report.kept += 1;
            continue;
        }
        if !handled.insert(p.name.as_str()) {
            continue;
        }
        let dst = error_dir.join(&p.name);
        let Some(src) = index.get(p.name.as_str()) else {
            if dst.is_file() {
                report.already_quarantined.push(p.name.clone());
            } else {
                warn!(name = %p.name, "missing file");
                report.missing.push(p.name.clone());
            }
            continue;
        };
        writeln!(journal, "PENDING\t{}\t{}", src.display(), dst.display()).map_err(io_err(&journal_path))?;
        journal.flush().map_err(io_err(&journal_path))?;
        move_file(src, &dst)?;
        if !dst.is_file() || src.exists() {
            return Err(io_err(&dst)(std::io::Error::other("move did not complete")));
        }
        writeln!(journal, "DONE\t{}\t{}", src.display(), dst.display()).map_err(io_err(&journal_path))?;
        info!(from = %src.display(), to = %dst.display(), "quarantined");
        report.moved.push(p.name.clone());
    }
    Ok(report)
}

fn move_file(src: &Path, dst: &Path) -> Result<(), CuratorError> {
    fs::rename(src, dst)
        .or_else(|_| fs::copy(src, dst).and_then(|_| fs::remove_file(src)))
        .map_err(io_err(src))
}

/// Completes moves recorded as PENDING without a matching DONE.
fn recover_journal(path: &Path) -> Result<(), CuratorError> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut pending: BTreeMap<(String, String), usize> = BTreeMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        let mut parts = line.splitn(3, '\t');
        let (Some(state), Some(src), Some(dst)) = (parts.next(), parts.next(), parts.next()) else {
            continue;
        };
        let key = (src.to_string(), dst.to_string());
        match state {
            "PENDING" => *pending.entry(key).or_default() += 1,
            "DONE" => {
                if let Some(c) = pending.get_mut(&key) {
                    *c = c.saturating_sub(1);
                }
            }
            _ => {}
        }
    }
    let mut journal = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
    for ((src, dst), count) in pending {
        if count == 0 {
            continue;
        }
        let (src, dst) = (PathBuf::from(src), PathBuf::from(dst));
        if src.is_file() {
            move_file(&src, &dst)?;
        }
        if dst.is_file() {
            writeln!(journal, "DONE\t{}\t{}", src.display(), dst.display()).map_err(io_err(path))?;
            info!(to = %dst.display(), "recovered interrupted move");
        }
    }
    Ok(())
}

fn index_files(root: &Path, skip: &Path) -> HashMap<String, PathBuf> {
    let mut out = HashMap::new();
    let walker = WalkDir::new(root).into_iter().filter_entry(|e| {
        e.path().canonicalize().map(|p| p != skip).unwrap_or(true)
    });
    for entry in walker.filter_map(Result::ok) {
        if entry.file_type().is_file() {
            let name = entry.file_name().to_string_lossy().into_owned();
            out.entry(name).or_insert_with(|| entry.path().to_path_buf());
        }
    }
    out
}
