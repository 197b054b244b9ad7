use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use webcorpus::collector::{self, CollectConfig, FixtureBackend, LiveBackend};
use webcorpus::curator;
use webcorpus::fetcher::{FetchConfig, Fetcher, DEFAULT_MAX_REDIRECTS, DEFAULT_USER_AGENT};
use webcorpus::model::parse_countries;
use webcorpus::pipeline;
use webcorpus::stats::{self, Bins};
use webcorpus::store::{self, SplitSpec, TransferMode, DATASHEET_FILE};
use webcorpus::webshot::{CaptureConfig, Viewport, WebDriverLauncher, DEFAULT_JPEG_QUALITY, DEFAULT_MAX_HEIGHT};
use webcorpus::{Category, Technique};

#[derive(Parser)]
#[command(name = "webcorpus", version, about = "Build and curate a multi-country corpus of web pages and webshots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gather URLs per (country, category) and append them to a URL list.
    Collect {
        #[arg(long)]
        technique: Technique,
        /// Tab-separated file: name, ccTLD, continent.
        #[arg(long)]
        countries: PathBuf,
        /// Comma-separated category ids (1-6) or `all`.
        #[arg(long, default_value = "all")]
        categories: String,
        /// `fixture:<dir>` or `live`.
        #[arg(long)]
        backend: String,
        #[arg(long, default_value = "https://www.google.com/search")]
        search_endpoint: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = collector::DEFAULT_LIMIT)]
        limit: usize,
    },
    /// Download every URL and append its measurements to a datasheet.
    Fetch {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "30s", value_parser = humantime::parse_duration)]
        timeout: Duration,
        #[arg(long, default_value_t = webcorpus::fetcher::DEFAULT_WORKERS)]
        workers: usize,
    },
    /// Capture full-page webshots and join them into the datasheet.
    Shoot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value = "992x744")]
        viewport: Viewport,
        #[arg(long, default_value = "60s", value_parser = humantime::parse_duration)]
        timeout: Duration,
        #[arg(long, default_value_t = webcorpus::webshot::DEFAULT_SESSIONS)]
        sessions: usize,
        /// WebDriver endpoint, e.g. a local chromedriver.
        #[arg(long, default_value = "http://localhost:9515")]
        webdriver: String,
        /// Defaults to `<out-dir>/datasheet.csv`.
        #[arg(long)]
        datasheet: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_HEIGHT)]
        max_height: u32,
        #[arg(long, default_value_t = DEFAULT_JPEG_QUALITY)]
        quality: u8,
    },
    /// Split class folders into train/ and val/ subsets.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
        #[arg(long, default_value_t = 1337)]
        seed: u64,
        /// Move files instead of copying them.
        #[arg(long = "move")]
        move_files: bool,
    },
    /// Cross-check the datasheet against the image tree.
    Verify {
        #[arg(long)]
        root: PathBuf,
    },
    /// Webshot counts and sizes per category and technique.
    Summarize {
        #[arg(long)]
        root: PathBuf,
    },
    /// Move webshots predicted as errors into a review folder.
    Curate {
        /// CSV with header `name,score`.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        error_dir: PathBuf,
    },
    /// Confusion matrix and accuracy of predictions against labels.
    Evaluate {
        /// CSV with header `name,label` (labels ERROR or VALID).
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Where to write the confusion matrix as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Descriptive statistics, distributions and histograms.
    Stats {
        #[arg(long)]
        datasheet: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// `sturges`, a bin count, or `width:<w>`.
        #[arg(long, default_value = "sturges", value_parser = parse_bins)]
        bins: Bins,
    },
}

fn parse_bins(s: &str) -> Result<Bins, String> {
    if s.eq_ignore_ascii_case("sturges") {
        return Ok(Bins::Sturges);
    }
    if let Some(w) = s.strip_prefix("width:") {
        let w: f64 = w.parse().map_err(|_| format!("bad bin width `{w}`"))?;
        if !(w > 0.0 && w.is_finite()) {
            return Err("bin width must be positive".into());
        }
        return Ok(Bins::Width(w));
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Bins::Count(n)),
        _ => Err(format!("expected `sturges`, a positive count or `width:<w>`, got `{s}`")),
    }
}

fn parse_categories(s: &str) -> Result<Vec<Category>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Category::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let id: u8 = part.parse().with_context(|| format!("bad category id `{part}`"))?;
        let c = Category::from_id(id)?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    if out.is_empty() {
        bail!("no categories given");
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Collect {
            technique,
            countries,
            categories,
            backend,
            search_endpoint,
            out,
            limit,
        } => {
            let text = fs::read_to_string(&countries).with_context(|| format!("reading {}", countries.display()))?;
            let countries = parse_countries(&text)?;
            let categories = parse_categories(&categories)?;
            let mut cfg = CollectConfig::new(technique);
            cfg.limit = limit;
            let report = if let Some(dir) = backend.strip_prefix("fixture:") {
                collector::collect(&countries, &categories, &cfg, &FixtureBackend::new(dir))?
            } else if backend == "live" {
                let live = LiveBackend::new(&search_endpoint, Duration::from_secs(30), DEFAULT_USER_AGENT)?;
                collector::collect(&countries, &categories, &cfg, &live)?
            } else {
                bail!("unknown backend `{backend}`; use `fixture:<dir>` or `live`");
            };
            collector::append_url_list(&out, &report.records)?;
            for f in &report.failures {
                eprintln!("failed: {} / {}: {}", f.country, f.category.label(), f.error);
            }
            println!("{} URLs appended to {}, {} pairs failed", report.records.len(), out.display(), report.failures.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Fetch {
            input,
            out,
            timeout,
            workers,
        } => {
            let records = collector::read_url_list(&input)?;
            let fetcher = Fetcher::new(FetchConfig {
                timeout,
                max_redirects: DEFAULT_MAX_REDIRECTS,
                user_agent: DEFAULT_USER_AGENT.to_string(),
                workers,
            })?;
            let rows = pipeline::fetch_into_datasheet(&fetcher, &records, &out)?;
            let failed = rows.iter().filter(|r| r.metrics.is_failed()).count();
            println!("{} rows appended to {}, {failed} failed", rows.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Shoot {
            input,
            out_dir,
            viewport,
            timeout,
            sessions,
            webdriver,
            datasheet,
            max_height,
            quality,
        } => {
            let records = collector::read_url_list(&input)?;
            let datasheet = datasheet.unwrap_or_else(|| out_dir.join(DATASHEET_FILE));
            fs::create_dir_all(&out_dir)?;
            let launcher = WebDriverLauncher::new(&webdriver, timeout);
            let cfg = CaptureConfig {
                viewport,
                jpeg_quality: quality,
                max_height,
                sessions,
            };
            let report = pipeline::shoot_into_dataset(&launcher, &records, &out_dir, &datasheet, &cfg)?;
            for (url, e) in &report.failures {
                eprintln!("failed: {url}: {e}");
            }
            println!("{} webshots captured, {} failed", report.captured, report.failures.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Split {
            input,
            out,
            ratio,
            seed,
            move_files,
        } => {
            let spec = SplitSpec::new(ratio, seed)?;
            let mode = if move_files { TransferMode::Move } else { TransferMode::Copy };
            let plan = store::split(&input, &out, &spec, mode)?;
            for (label, s) in &plan {
                println!("{label}: train {}, val {}", s.train.len(), s.val.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { root } => {
            let report = store::verify(&root)?;
            print!("{report}");
            Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Summarize { root } => {
            let summary = store::summarize(&root)?;
            print!("{summary}");
            for p in &summary.unrecognized {
                eprintln!("unrecognized file name: {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Curate {
            predictions,
            root,
            error_dir,
        } => {
            let preds = curator::read_predictions(&predictions)?;
            fs::create_dir_all(&error_dir)?;
            let report = curator::quarantine(&preds, &root, &error_dir)?;
            for name in &report.missing {
                eprintln!("missing: {name}");
            }
            println!(
                "moved {}, already quarantined {}, missing {}, kept {}",
                report.moved.len(),
                report.already_quarantined.len(),
                report.missing.len(),
                report.kept
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { truth, predictions, out } => {
            let truth = curator::read_truth(&truth)?;
            let preds = curator::read_predictions(&predictions)?;
            let m = curator::confusion(&truth, &preds)?;
            print!("{m}");
            println!("accuracy {:.2}%", curator::accuracy(&m)?);
            if let Some(out) = out {
                let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
                m.write_csv(file)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats {
            datasheet,
            out_dir,
            bins,
        } => {
            let rows = store::read_datasheet(&datasheet)?;
            if rows.is_empty() {
                bail!("{} has no rows", datasheet.display());
            }
            print!("{}", stats::IndicatorReport(&stats::indicator_table(&rows)));
            let files = stats::write_reports(&rows, &out_dir, bins)?;
            println!("reports written to {} ({} histograms)", out_dir.display(), files.histograms.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
