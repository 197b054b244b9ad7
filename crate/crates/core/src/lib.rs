//! Tooling to build a labeled corpus of web pages: URL collection by search
//! queries and directory crawling, page measurement, full-page screenshots,
//! dataset bookkeeping, error-page quarantine and descriptive statistics.

pub mod collector;
pub mod curator;
pub mod fetcher;
pub mod model;
pub mod pipeline;
pub mod stats;
pub mod store;
pub mod webshot;

pub use model::{Category, Continent, Country, Technique, UrlRecord};
