mod common;

use std::collections::HashMap;
use std::time::Duration;

use common::{refused_url, tall_page, FakeWebDriver, Response, TestServer};
use webcorpus::webshot::WebDriverLauncher;
use webcorpus::webshot::{capture, capture_batch, BrowserLauncher, CaptureConfig, CaptureFailure};
use webcorpus::{Category, Continent, Country, Technique, UrlRecord};

fn pages() -> TestServer {
    TestServer::start(|req| match req.path.as_str() {
        "/short" => Response::html("<html><body><p>hello</p></body></html>"),
        "/tall" => Response::html(tall_page(5000)),
        "/huge" => Response::html(tall_page(60_000)),
        _ => Response::new(404, "missing"),
    })
}

fn launcher(driver: &FakeWebDriver) -> WebDriverLauncher {
    WebDriverLauncher::new(&driver.endpoint(), Duration::from_secs(10))
}

#[test]
fn short_page_is_viewport_sized() {
    let (driver, srv) = (FakeWebDriver::start(), pages());
    let mut session = launcher(&driver).open().unwrap();
    let img = capture(&mut session, &srv.url("/short"), &CaptureConfig::default()).unwrap();
    assert_eq!((img.width, img.height), (992, 744));
    assert_eq!(&img.jpg[..2], &[0xFF, 0xD8]);
}

#[test]
fn tall_page_captures_full_height() {
    let (driver, srv) = (FakeWebDriver::start(), pages());
    let mut session = launcher(&driver).open().unwrap();
    let img = capture(&mut session, &srv.url("/tall"), &CaptureConfig::default()).unwrap();
    assert_eq!(img.width, 992);
    let err = (img.height as f64 - 5000.0).abs() / 5000.0;
    assert!(err <= 0.02, "height {}", img.height);
}

#[test]
fn height_is_capped() {
    let (driver, srv) = (FakeWebDriver::start(), pages());
    let mut session = launcher(&driver).open().unwrap();
    let cfg = CaptureConfig {
        max_height: 8000,
        ..CaptureConfig::default()
    };
    let img = capture(&mut session, &srv.url("/huge"), &cfg).unwrap();
    assert_eq!(img.height, 8000);
}

#[test]
fn unreachable_url_is_navigation_failure() {
    let driver = FakeWebDriver::start();
    let mut session = launcher(&driver).open().unwrap();
    let err = capture(&mut session, &refused_url(), &CaptureConfig::default()).unwrap_err();
    assert!(matches!(err, CaptureFailure::Navigation(_)), "{err:?}");
}

#[test]
fn no_endpoint_no_session() {
    let l = WebDriverLauncher::new(refused_url().trim_end_matches('/'), Duration::from_secs(2));
    assert!(matches!(l.open(), Err(CaptureFailure::Protocol(_))));
}

#[test]
fn batch_names_successes_only() {
    let (driver, srv) = (FakeWebDriver::start(), pages());
    let nl = Country::new("The Netherlands", "nl", Continent::Europe).unwrap();
    let rec = |p: &str| UrlRecord::new(&srv.url(p), &nl, Category::Education, Technique::Searching).unwrap();
    let records = vec![rec("/short"), rec("/gone"), rec("/tall"), rec("/short")];
    let dir = tempfile::tempdir().unwrap();
    let out = capture_batch(&launcher(&driver), &records, dir.path(), &HashMap::new(), &CaptureConfig::default()).unwrap();
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].0, 1);
    let names: Vec<_> = out.shots.iter().map(|s| s.meta.name.as_str()).collect();
    assert_eq!(names, ["S3TheNetherlands_1.jpg", "S3TheNetherlands_2.jpg", "S3TheNetherlands_3.jpg"]);
    for s in &out.shots {
        assert!(s.path.starts_with(dir.path().join("Education")));
        assert_eq!(std::fs::metadata(&s.path).unwrap().len(), s.meta.img_bytes);
    }
}
