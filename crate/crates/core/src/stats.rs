//! Descriptive statistics over the datasheet: IQR outlier removal, summary
//! indicators, categorical distributions and histogram tables.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::Technique;
use crate::store::DatasetRow;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("no values left after outlier filtering")]
    EmptyAfterFilter,
    #[error("histogram needs at least one bin of positive width")]
    InvalidBins,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Quantitative variables of the datasheet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    UrlLength,
    TimeMs,
    SizeKb,
    Images,
    Scripts,
    CssFiles,
    Tables,
    Iframes,
    StyleTags,
    ImgSizeKb,
    ImgWidth,
    ImgHeight,
}

impl Variable {
    pub const ALL: [Variable; 12] = [
        Variable::UrlLength,
        Variable::TimeMs,
        Variable::SizeKb,
        Variable::Images,
        Variable::Scripts,
        Variable::CssFiles,
        Variable::Tables,
        Variable::Iframes,
        Variable::StyleTags,
        Variable::ImgSizeKb,
        Variable::ImgWidth,
        Variable::ImgHeight,
    ];

    /// The eight variables measured from page source.
    pub const PAGE: [Variable; 8] = [
        Variable::TimeMs,
        Variable::SizeKb,
        Variable::Images,
        Variable::Scripts,
        Variable::CssFiles,
        Variable::Tables,
        Variable::Iframes,
        Variable::StyleTags,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Variable::UrlLength => "url_length",
            Variable::TimeMs => "time_ms",
            Variable::SizeKb => "size_kb",
            Variable::Images => "images",
            Variable::Scripts => "scripts",
            Variable::CssFiles => "css_files",
            Variable::Tables => "tables",
            Variable::Iframes => "iframes",
            Variable::StyleTags => "style_tags",
            Variable::ImgSizeKb => "img_size_kb",
            Variable::ImgWidth => "img_width",
            Variable::ImgHeight => "img_height",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variable::UrlLength => "URL length",
            Variable::TimeMs => "Time (ms)",
            Variable::SizeKb => "Size (KB)",
            Variable::Images => "Images",
            Variable::Scripts => "Scripts",
            Variable::CssFiles => "CSS files",
            Variable::Tables => "Tables",
            Variable::Iframes => "iFrames",
            Variable::StyleTags => "Style tags",
            Variable::ImgSizeKb => "Webshot size (KB)",
            Variable::ImgWidth => "Width (px)",
            Variable::ImgHeight => "Height (px)",
        }
    }

    /// Value of this variable for `row`, or `None` when the underlying field
    /// is a sentinel. URL length is always defined.
    pub fn value(self, row: &DatasetRow) -> Option<f64> {
        if self == Variable::UrlLength {
            return Some(row.url.chars().count() as f64);
        }
        if Variable::PAGE.contains(&self) {
            let m = &row.metrics;
            if !m.is_complete() {
                return None;
            }
            return Some(match self {
                Variable::TimeMs => m.time_ms,
                Variable::SizeKb => m.bytes as f64 / 1024.0,
                Variable::Images => m.images as f64,
                Variable::Scripts => m.script_files as f64,
                Variable::CssFiles => m.css_files as f64,
                Variable::Tables => m.tables as f64,
                Variable::Iframes => m.iframes as f64,
                Variable::StyleTags => m.style_tags as f64,
                _ => unreachable!(),
            });
        }
        let w = row.webshot.as_ref()?;
        Some(match self {
            Variable::ImgSizeKb => w.img_bytes as f64 / 1024.0,
            Variable::ImgWidth => w.img_width as f64,
            Variable::ImgHeight => w.img_height as f64,
            _ => unreachable!(),
        })
    }
}

/// Values of one variable for one technique, sentinels excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableSeries {
    pub variable: Variable,
    pub technique: Technique,
    pub values: Vec<f64>,
}

impl VariableSeries {
    pub fn from_rows(rows: &[DatasetRow], variable: Variable, technique: Technique) -> Self {
        let values = rows
            .iter()
            .filter(|r| r.technique == technique)
            .filter_map(|r| variable.value(r))
            .collect();
        VariableSeries {
            variable,
            technique,
            values,
        }
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

/// Quantile of sorted data by linear interpolation between order
/// statistics: `h = (n - 1) p`, `x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h])`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Lower and upper fences `Q1 - 1.5 IQR`, `Q3 + 1.5 IQR`.
pub fn iqr_fences(values: &[f64]) -> Result<(f64, f64), StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let s = sorted(values);
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    Ok((q1 - 1.5 * iqr, q3 + 1.5 * iqr))
}

/// Keeps the values inside the IQR fences (inclusive), in input order.
pub fn iqr_filter(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    let (lo, hi) = iqr_fences(values)?;
    Ok(values.iter().copied().filter(|&x| x >= lo && x <= hi).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryIndicators {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub std_dev: f64,
}

pub fn summarize_variable(values: &[f64]) -> Result<SummaryIndicators, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyAfterFilter);
    }
    let n = values.len();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    let mean = sum / n as f64;
    let std_dev = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    // Accumulated rounding can push the mean a hair outside [min, max].
    let mean = mean.clamp(min, max);
    Ok(SummaryIndicators {
        n,
        min,
        max,
        mean,
        std_dev,
    })
}

/// Drops outliers by the IQR rule, then summarizes what is left.
pub fn analyze(values: &[f64]) -> Result<SummaryIndicators, StatsError> {
    summarize_variable(&iqr_filter(values)?)
}

/// Two decimals with trailing zeros dropped: `31.73`, `5.1`, `14`.
pub fn format_number(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// `label | min | max | mean | std` report line.
pub fn format_report_row(label: &str, s: &SummaryIndicators) -> String {
    format!(
        "{label} | {} | {} | {} | {}",
        format_number(s.min),
        format_number(s.max),
        format_number(s.mean),
        format_number(s.std_dev)
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualitativeField {
    Category,
    Continent,
    Technique,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelCount {
    pub level: String,
    pub count: usize,
    pub percent: f64,
}

/// Counts per level with percentages of the total, most frequent first
/// (ties broken by level name). Levels with no rows do not appear.
pub fn categorical_distribution(rows: &[DatasetRow], field: QualitativeField) -> Vec<LevelCount> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in rows {
        let level = match field {
            QualitativeField::Category => r.category.label().to_string(),
            QualitativeField::Continent => r.continent.to_string(),
            QualitativeField::Technique => r.technique.to_string(),
        };
        *counts.entry(level).or_default() += 1;
    }
    let total = rows.len() as f64;
    let mut out: Vec<LevelCount> = counts
        .into_iter()
        .map(|(level, count)| LevelCount {
            level,
            count,
            percent: 100.0 * count as f64 / total,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.level.cmp(&b.level)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bins {
    Count(usize),
    Width(f64),
    /// `ceil(log2 n) + 1` bins.
    Sturges,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Equal-width bins from min to max. Bins are `[a, b)` except the last,
/// which is closed. Constant data gets unit-width bins starting at the value.
pub fn histogram(values: &[f64], bins: Bins) -> Result<Histogram, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let s = sorted(values);
    let (min, max) = (s[0], s[s.len() - 1]);
    let range = max - min;
    let (k, width) = match bins {
        Bins::Count(0) => return Err(StatsError::InvalidBins),
        Bins::Count(k) => (k, if range > 0.0 { range / k as f64 } else { 1.0 }),
        Bins::Width(w) if !(w > 0.0) || !w.is_finite() => return Err(StatsError::InvalidBins),
        Bins::Width(w) => (((range / w).ceil() as usize).max(1), w),
        Bins::Sturges => {
            let k = (values.len() as f64).log2().ceil() as usize + 1;
            (k, if range > 0.0 { range / k as f64 } else { 1.0 })
        }
    };
    let mut edges: Vec<f64> = (0..=k).map(|i| min + i as f64 * width).collect();
    if range > 0.0 && matches!(bins, Bins::Count(_) | Bins::Sturges) {
        edges[k] = max;
    }
    let mut counts = vec![0; k];
    for &x in values {
        let mut i = (((x - min) / width).floor().max(0.0) as usize).min(k - 1);
        while i > 0 && x < edges[i] {
            i -= 1;
        }
        while i + 1 < k && x >= edges[i + 1] {
            i += 1;
        }
        counts[i] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// One line of the indicators table.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRow {
    pub variable: Variable,
    pub technique: Technique,
    /// `None` when the series was empty before or after filtering.
    pub summary: Option<SummaryIndicators>,
}

pub fn indicator_table(rows: &[DatasetRow]) -> Vec<IndicatorRow> {
    let mut out = Vec::new();
    for variable in Variable::ALL {
        for technique in Technique::ALL {
            let series = VariableSeries::from_rows(rows, variable, technique);
            out.push(IndicatorRow {
                variable,
                technique,
                summary: analyze(&series.values).ok(),
            });
        }
    }
    out
}

/// Side-by-side text table of the indicators (Browsing then Searching).
pub struct IndicatorReport<'a>(pub &'a [IndicatorRow]);

impl fmt::Display for IndicatorReport<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Parameter | Browsing Min | Max | Mean | Std. Dev. | Searching Min | Max | Mean | Std. Dev.")?;
        for variable in Variable::ALL {
            let mut line = variable.label().to_string();
            for technique in Technique::ALL {
                let s = self
                    .0
                    .iter()
                    .find(|r| r.variable == variable && r.technique == technique)
                    .and_then(|r| r.summary);
                match s {
                    Some(s) => {
                        let row = format_report_row("", &s);
                        line.push_str(&row);
                    }
                    None => line.push_str(" | - | - | - | -"),
                }
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Files written by [`write_reports`].
#[derive(Debug, Default)]
pub struct ReportFiles {
    pub indicators: PathBuf,
    pub categories: PathBuf,
    pub continents: PathBuf,
    pub histograms: Vec<PathBuf>,
}

/// Writes `indicators.csv`, `categories.csv`, `continents.csv` and one
/// `hist_<variable>_<technique>.csv` per non-empty filtered series.
pub fn write_reports(rows: &[DatasetRow], out_dir: &Path, bins: Bins) -> Result<ReportFiles, StatsError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| StatsError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut files = ReportFiles::default();

    files.indicators = out_dir.join("indicators.csv");
    let mut w = csv::Writer::from_path(&files.indicators)?;
    w.write_record(["variable", "technique", "n", "min", "max", "mean", "std_dev"])?;
    for r in indicator_table(rows) {
        let Some(s) = r.summary else { continue };
        w.write_record([
            r.variable.key().to_string(),
            r.technique.to_string(),
            s.n.to_string(),
            format!("{:.2}", s.min),
            format!("{:.2}", s.max),
            format!("{:.2}", s.mean),
            format!("{:.2}", s.std_dev),
        ])?;
    }
    w.flush().map_err(io(&files.indicators))?;

    for (field, file, column) in [
        (QualitativeField::Category, "categories.csv", "category"),
        (QualitativeField::Continent, "continents.csv", "continent"),
    ] {
        let path = out_dir.join(file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["technique", column, "count", "percent"])?;
        let subsets: Vec<(String, Vec<DatasetRow>)> = Technique::ALL
            .iter()
            .map(|t| (t.to_string(), rows.iter().filter(|r| r.technique == *t).cloned().collect()))
            .chain(std::iter::once(("All".to_string(), rows.to_vec())))
            .collect();
        for (name, subset) in subsets {
            for lc in categorical_distribution(&subset, field) {
                w.write_record([
                    name.clone(),
                    lc.level,
                    lc.count.to_string(),
                    format!("{:.2}", lc.percent),
                ])?;
            }
        }
        w.flush().map_err(io(&path))?;
        match field {
            QualitativeField::Category => files.categories = path,
            _ => files.continents = path,
        }
    }

    for variable in Variable::ALL {
        for technique in Technique::ALL {
            let series = VariableSeries::from_rows(rows, variable, technique);
            let Ok(kept) = iqr_filter(&series.values) else { continue };
            let h = histogram(&kept, bins)?;
            let path = out_dir.join(format!(
                "hist_{}_{}.csv",
                variable.key(),
                technique.as_str().to_ascii_lowercase()
            ));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["bin_start", "bin_end", "count"])?;
            for (i, c) in h.counts.iter().enumerate() {
                w.write_record([h.edges[i].to_string(), h.edges[i + 1].to_string(), c.to_string()])?;
            }
            w.flush().map_err(io(&path))?;
            files.histograms.push(path);
        }
    }
    Ok(files)
}
