mod common;

use std::io::Write;
use std::time::Duration;

use common::{refused_url, Response, TestServer};
use flate2::write::GzEncoder;
use flate2::Compression;
use webcorpus::fetcher::{FetchConfig, FetchFailureKind, Fetcher, SENTINEL};
use webcorpus::{Category, Continent, Country, Technique, UrlRecord};

fn fetcher(timeout: Duration) -> Fetcher {
    Fetcher::new(FetchConfig {
        timeout,
        ..FetchConfig::default()
    })
    .unwrap()
}

fn record(url: &str) -> UrlRecord {
    let es = Country::new("Spain", "es", Continent::Europe).unwrap();
    UrlRecord::new(url, &es, Category::ScienceEnvironment, Technique::Searching).unwrap()
}

fn routes() -> TestServer {
    TestServer::start(|req| match req.path.as_str() {
        "/thousand" => Response::html(vec![b'a'; 1000]),
        "/missing" => Response::new(404, "nope"),
        "/slow" => Response::html("late").delayed(Duration::from_millis(1500)),
        "/gzip" => {
            let body = format!("<html><body>{}</body></html>", "<img src=x.png>".repeat(40));
            let mut enc = GzEncoder::new(Vec::new(), Compression::default());
            enc.write_all(body.as_bytes()).unwrap();
            Response::html(enc.finish().unwrap()).header("Content-Encoding", "gzip")
        }
        "/moved" => Response::new(301, "").header("Location", "/thousand"),
        p if p.starts_with("/page/") => Response::html(format!("<p>{p}</p>")),
        _ => Response::new(500, "unrouted"),
    })
}

#[test]
fn body_length_and_timing() {
    let srv = routes();
    let page = fetcher(Duration::from_secs(5)).fetch(&srv.url("/thousand")).unwrap();
    assert_eq!(page.bytes, 1000);
    assert!(page.time_ms > 0.0);
}

#[test]
fn http_error_is_classified() {
    let srv = routes();
    let err = fetcher(Duration::from_secs(5)).fetch(&srv.url("/missing")).unwrap_err();
    assert_eq!(err.kind, FetchFailureKind::HttpStatus(404));
}

#[test]
fn slow_response_times_out() {
    let srv = routes();
    let err = fetcher(Duration::from_millis(300)).fetch(&srv.url("/slow")).unwrap_err();
    assert_eq!(err.kind, FetchFailureKind::Timeout);
}

#[test]
fn refused_connection() {
    let err = fetcher(Duration::from_secs(5)).fetch(&refused_url()).unwrap_err();
    assert_eq!(err.kind, FetchFailureKind::ConnectionError);
}

#[test]
fn gzip_is_measured_decoded() {
    let srv = routes();
    let page = fetcher(Duration::from_secs(5)).fetch(&srv.url("/gzip")).unwrap();
    let expected = format!("<html><body>{}</body></html>", "<img src=x.png>".repeat(40));
    assert_eq!(page.bytes, expected.len() as u64);
    let m = fetcher(Duration::from_secs(5)).measure(&record(&srv.url("/gzip")));
    assert_eq!(m.images, 40);
}

#[test]
fn redirects_are_followed() {
    let srv = routes();
    let page = fetcher(Duration::from_secs(5)).fetch(&srv.url("/moved")).unwrap();
    assert_eq!(page.bytes, 1000);
    assert!(page.final_url.ends_with("/thousand"));
}

#[test]
fn failed_measure_is_fully_sentineled() {
    let srv = routes();
    let m = fetcher(Duration::from_secs(5)).measure(&record(&srv.url("/missing")));
    assert!(m.is_failed());
    assert_eq!(m.time_ms, SENTINEL as f64);
    assert_eq!((m.bytes, m.images, m.tables), (SENTINEL, SENTINEL, SENTINEL));
}

#[test]
fn batch_keeps_input_order() {
    let srv = routes();
    let mut records: Vec<_> = (0..20).map(|i| record(&srv.url(&format!("/page/{i}")))).collect();
    records.insert(7, record(&srv.url("/missing")));
    let out = fetcher(Duration::from_secs(5)).measure_batch(&records);
    assert_eq!(out.len(), 21);
    for (i, m) in out.iter().enumerate() {
        if i == 7 {
            assert!(m.is_failed());
            continue;
        }
        let n = if i < 7 { i } else { i - 1 };
        let expected = format!("<p>/page/{n}</p>").len() as i64;
        assert_eq!(m.bytes, expected, "row {i}");
        assert!(m.is_complete());
    }
}
