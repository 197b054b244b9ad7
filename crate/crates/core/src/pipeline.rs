//! Stage glue shared by the command-line front end and the end-to-end tests.

use std::path::Path;

use thiserror::Error;
use tracing::info;

use crate::fetcher::Fetcher;
use crate::model::UrlRecord;
use crate::store::{self, DatasetRow, StoreError};
use crate::webshot::{self, BatchError, BrowserLauncher, CaptureConfig, CaptureFailure};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Capture(#[from] BatchError),
}

/// Measures every record and appends one datasheet row per record (failed
/// fetches included, fully sentineled). Returns the appended rows.
pub fn fetch_into_datasheet(
    fetcher: &Fetcher,
    records: &[UrlRecord],
    datasheet: &Path,
) -> Result<Vec<DatasetRow>, PipelineError> {
    let existing = store::read_datasheet(datasheet)?;
    let names = store::assign_row_names(&existing, records);
    let metrics = fetcher.measure_batch(records);
    let rows: Vec<DatasetRow> = records
        .iter()
        .zip(names)
        .zip(metrics)
        .map(|((r, n), m)| DatasetRow::from_record(n, r, m))
        .collect();
    store::append_rows(datasheet, &rows)?;
    let failed = rows.iter().filter(|r| r.metrics.is_failed()).count();
    info!(rows = rows.len(), failed, "datasheet updated");
    Ok(rows)
}

#[derive(Debug, Default)]
pub struct ShootReport {
    pub captured: usize,
    pub failures: Vec<(String, CaptureFailure)>,
}

/// Captures webshots into `root/<category>/` and joins their metadata into
/// the datasheet, continuing sequence numbers already used there.
pub fn shoot_into_dataset<L: BrowserLauncher>(
    launcher: &L,
    records: &[UrlRecord],
    root: &Path,
    datasheet: &Path,
    config: &CaptureConfig,
) -> Result<ShootReport, PipelineError> {
    let mut rows = store::read_datasheet(datasheet)?;
    let start = store::webshot_start_seq(&rows);
    let outcome = webshot::capture_batch(launcher, records, root, &start, config)?;
    let captures: Vec<_> = outcome
        .shots
        .iter()
        .map(|s| (records[s.record_index].clone(), s.meta.clone()))
        .collect();
    store::attach_webshots(&mut rows, &captures);
    store::write_datasheet(datasheet, &rows)?;
    Ok(ShootReport {
        captured: captures.len(),
        failures: outcome
            .failures
            .into_iter()
            .map(|(i, e)| (records[i].url.clone(), e))
            .collect(),
    })
}
