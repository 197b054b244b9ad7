use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use webcorpus::collector::{build_search_query, FixtureBackend};
use webcorpus::fetcher::{PageMetrics, StructuralCounts};
use webcorpus::store::{write_datasheet, DatasetRow, DATASHEET_FILE};
use webcorpus::webshot::WebshotMeta;
use webcorpus::{Category, Continent, Country, Technique, UrlRecord};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_webcorpus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn collect_from_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let countries = dir.path().join("countries.tsv");
    fs::write(&countries, "# name\tcc\tcontinent\nSpain\tes\tEurope\nPeru\t.pe\tAmericas\n").unwrap();
    let fx = FixtureBackend::new(dir.path().join("fx"));
    for (c, cc) in [("Spain", "es"), ("Peru", "pe")] {
        let country = Country::new(c, cc, Continent::Europe).unwrap();
        let q = build_search_query(&country, Category::Education).unwrap();
        fx.register(&q, &format!("<a href=\"https://uni.{cc}/\">u</a><a href=\"https://col.{cc}/\">c</a>"))
            .unwrap();
    }
    let out = dir.path().join("urls.csv");
    let o = run(&[
        "collect",
        "--technique",
        "searching",
        "--countries",
        p(&countries),
        "--categories",
        "3",
        "--backend",
        &format!("fixture:{}", p(&dir.path().join("fx"))),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("https://col.pe/,Peru,Americas,3,Searching"));
}

#[test]
fn fetch_unreachable_writes_sentinel_row() {
    let dir = tempfile::tempdir().unwrap();
    let urls = dir.path().join("urls.csv");
    fs::write(&urls, "url,country,continent,category_id,technique\nhttp://127.0.0.1:9/,Spain,Europe,1,Browsing\n").unwrap();
    let sheet = dir.path().join(DATASHEET_FILE);
    let o = run(&["fetch", "--in", p(&urls), "--out", p(&sheet), "--timeout", "2s"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&sheet).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("B1Spain_1.jpg,http://127.0.0.1:9/,Spain,Europe,1,Browsing,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1,-1"), "{row}");
}

#[test]
fn split_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (label, n) in [("VALID", 10), ("ERROR", 5)] {
        let d = dir.path().join("in").join(label);
        fs::create_dir_all(&d).unwrap();
        for i in 0..n {
            fs::write(d.join(format!("{i}.jpg")), []).unwrap();
        }
    }
    let o = run(&["split", "--in", p(&dir.path().join("in")), "--out", p(&dir.path().join("out"))]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("VALID: train 8, val 2"), "{s}");
    assert!(s.contains("ERROR: train 4, val 1"), "{s}");
    assert!(dir.path().join("in/VALID/0.jpg").exists());
}

#[test]
fn evaluate_and_curate() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.csv");
    fs::write(&preds, "name,score\nS1Spain_1.jpg,0.2\nS1Spain_2.jpg,0.9\nS1Spain_3.jpg,0.5\n").unwrap();
    let truth = dir.path().join("truth.csv");
    fs::write(&truth, "name,label\nS1Spain_1.jpg,ERROR\nS1Spain_2.jpg,VALID\nS1Spain_3.jpg,VALID\n").unwrap();
    let matrix = dir.path().join("matrix.csv");
    let o = run(&["evaluate", "--truth", p(&truth), "--predictions", p(&preds), "--out", p(&matrix)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("accuracy 66.67%"));
    assert!(fs::read_to_string(&matrix).unwrap().starts_with("real\\predicted,ERROR,VALID"));

    let root = dir.path().join("img");
    fs::create_dir_all(root.join("Arts-and-Entertainment")).unwrap();
    for i in 1..=3 {
        fs::write(root.join(format!("Arts-and-Entertainment/S1Spain_{i}.jpg")), b"x").unwrap();
    }
    let err_dir = dir.path().join("ERROR");
    let o = run(&["curate", "--predictions", p(&preds), "--root", p(&root), "--error-dir", p(&err_dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("moved 2"));
    assert!(err_dir.join("S1Spain_3.jpg").is_file());
}

fn sample_rows() -> Vec<DatasetRow> {
    let cl = Country::new("Chile", "cl", Continent::Americas).unwrap();
    (1..=6)
        .map(|i| {
            let rec = UrlRecord::new(&format!("https://s{i}.cl/"), &cl, Category::NewsMedia, Technique::Searching).unwrap();
            let counts = StructuralCounts {
                images: i,
                ..StructuralCounts::default()
            };
            let mut r = DatasetRow::from_record(format!("S5Chile_{i}.jpg"), &rec, PageMetrics::measured(10.0 * i as f64, 1000 * i, counts));
            r.webshot = Some(WebshotMeta {
                name: r.name.clone(),
                img_bytes: 1,
                img_width: 992,
                img_height: 744 + i as u32,
            });
            r
        })
        .collect()
}

#[test]
fn verify_reports_orphans_with_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    write_datasheet(&dir.path().join(DATASHEET_FILE), &sample_rows()).unwrap();
    let news = dir.path().join("News-and-Media");
    fs::create_dir_all(&news).unwrap();
    for i in 1..=6 {
        fs::write(news.join(format!("S5Chile_{i}.jpg")), b"x").unwrap();
    }
    let o = run(&["verify", "--root", p(dir.path())]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("consistent"));

    fs::write(news.join("S5Chile_7.jpg"), b"x").unwrap();
    let o = run(&["verify", "--root", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("orphan-file"));

    let o = run(&["summarize", "--root", p(dir.path())]);
    assert!(stdout(&o).contains("News and Media | 0 (0 B) | 7 (7 B) | 7"), "{}", stdout(&o));
}

#[test]
fn stats_reports() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = dir.path().join(DATASHEET_FILE);
    write_datasheet(&sheet, &sample_rows()).unwrap();
    let out = dir.path().join("stats");
    let o = run(&["stats", "--datasheet", p(&sheet), "--out-dir", p(&out), "--bins", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("indicators.csv").is_file());
    assert!(out.join("categories.csv").is_file());
    assert!(out.join("hist_images_searching.csv").is_file());

    let o = run(&["stats", "--datasheet", p(&sheet), "--out-dir", p(&out), "--bins", "0"]);
    assert!(!o.status.success());
}
