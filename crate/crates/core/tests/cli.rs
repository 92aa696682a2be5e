use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use xmlbench::xml::SAMPLE_BOOK;

const BIN: &str = env!("CARGO_BIN_EXE_xmlbench");

fn xb(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn xmlbench")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_corpus(dir: &Path, files: &[(&str, String)]) {
    std::fs::create_dir_all(dir).unwrap();
    for (name, body) in files {
        std::fs::write(dir.join(name), body).unwrap();
    }
}

fn small_corpus(dir: &Path) {
    write_corpus(
        dir,
        &[
            ("DB01.xml", "<db><row><c>1</c><c>2</c></row><row><c>3</c></row></db>\n".to_string()),
            ("SI02.xml", format!("<sites>{}</sites>\n", "<site id=\"s\">host name</site>".repeat(30))),
            ("TR03.xml", format!("<tree>{}</tree>\n", "<n><n><leaf>x</leaf></n></n>".repeat(12))),
        ],
    );
}

#[test]
fn profile_of_the_sample_book() {
    let tmp = tempfile::tempdir().unwrap();
    let book = tmp.path().join("BK01.xml");
    std::fs::write(&book, SAMPLE_BOOK).unwrap();
    let out = tmp.path().join("out");
    let o = xb(&out, &["profile", "--corpus", book.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("profiles.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], ["BK01", "BK", &SAMPLE_BOOK.len().to_string()]);
    assert_eq!((row[5], row[6]), ("5", "3"));
    assert!(stdout(&o).contains("BK01"));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(code(&xb(&out, &["frobnicate"])), 2);
    assert_eq!(code(&xb(&out, &["run", "--mode", "sideways", "--corpus", "x.xml"])), 2);
    assert_eq!(code(&xb(&out, &["profile"])), 2);
    assert_eq!(code(&xb(&out, &["hsd", "--metric", "nope"])), 2);
    assert_eq!(code(&xb(&out, &["--help"])), 0);
}

#[test]
fn partial_campaign_exits_3_then_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    small_corpus(&corpus);
    let out = tmp.path().join("out");
    let args = ["run", "--corpus", corpus.to_str().unwrap(), "--codecs", "ARI,BWT", "--pause", "0"];
    let first = xb(&out, &[&args[..], &["--max-runs", "2"]].concat());
    assert_eq!(code(&first), 3, "{}", String::from_utf8_lossy(&first.stderr));
    let second = xb(&out, &args);
    assert_eq!(code(&second), 0);
    assert!(stdout(&second).contains("skipped 2, remaining 0"), "{}", stdout(&second));
    let runs = std::fs::read_to_string(out.join("runs.jsonl")).unwrap();
    assert_eq!(runs.lines().filter(|l| l.contains("\"type\":\"run\"")).count(), 6);
}

#[test]
fn killed_campaign_resumes_without_duplicates() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    small_corpus(&corpus);
    let out = tmp.path().join("out");
    let args = ["run", "--corpus", corpus.to_str().unwrap(), "--codecs", "ARI,BWT,XMI", "--pause", "0.25"];
    let mut child = Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(&out)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    std::thread::sleep(Duration::from_millis(700));
    child.kill().unwrap();
    child.wait().unwrap();
    let before = std::fs::read_to_string(out.join("runs.jsonl")).unwrap_or_default();
    let done = before.lines().filter(|l| l.contains("\"type\":\"run\"")).count();
    assert!(done < 9, "campaign finished before the kill");

    let o = xb(&out, &[&args[..3], &["--codecs", "ARI,BWT,XMI", "--pause", "0"]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let runs = std::fs::read_to_string(out.join("runs.jsonl")).unwrap();
    let mut ordinals: Vec<u64> = runs
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["type"] == "run")
        .map(|v| v["run_ordinal"].as_u64().unwrap())
        .collect();
    ordinals.sort();
    assert_eq!(ordinals, (1..=9).collect::<Vec<_>>());
    assert!(runs.starts_with(&before[..before.rfind('\n').map_or(0, |i| i + 1)]));
}

fn header() -> String {
    r#"{"type":"header","campaign_id":"c1","created_at":"2026-01-01T00:00:00Z","seed":1,"plan_size":24,"pause_seconds":0.0,"time_scale":{},"environment":{"cpu":"x","cores":1,"memory":"1 kB","os":"test","arch":"x86_64"}}"#.to_string()
}

/// Three codecs with ratios 10:1, 3.3:1 and 1.1:1 plus a little jitter.
fn separated_runs(out: &Path) {
    let mut lines = vec![header()];
    let mut ordinal = 0;
    for (codec, class, base) in [("AAA", "ZIP", 1000u64), ("BBB", "XSC", 3000), ("CCC", "CTL", 9000)] {
        for f in 0..8u64 {
            ordinal += 1;
            let s_native = if f < 4 { 2000 + 100 * f } else { 20_000 + 1000 * f };
            let s_comp = s_native * (base + 37 * f) / 10_000;
            lines.push(format!(
                r#"{{"type":"run","campaign_id":"c1","codec":"{codec}","class":"{class}","file":"DB{f:02}","mode":"default","run_ordinal":{ordinal},"s_native":{s_native},"s_comp":{s_comp},"started_at":"2026-01-01T00:00:00Z","status":"success","t_exec":{:e}}}"#,
                1e-7 * (1.0 + f as f64 / 10.0)
            ));
        }
    }
    std::fs::create_dir_all(out).unwrap();
    std::fs::write(out.join("runs.jsonl"), lines.join("\n") + "\n").unwrap();
}

#[test]
fn hsd_separates_distinct_codecs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    separated_runs(&out);
    let o = xb(&out, &["hsd", "--metric", "comp_ratio"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("hsd_comp_ratio.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["rank", "codec", "mean", "n", "T1", "T2", "T3"]);
    let codecs: Vec<&str> = rows[1..].iter().map(|r| r[1]).collect();
    assert_eq!(codecs, ["AAA", "BBB", "CCC"]);
    for (i, r) in rows[1..].iter().enumerate() {
        let marks: Vec<bool> = r[4..].iter().map(|m| *m == "X").collect();
        assert_eq!(marks, (0..3).map(|g| g == i).collect::<Vec<_>>());
    }
    assert!(stdout(&o).contains("Tukey-Kramer"));
}

#[test]
fn size_filter_restricts_plot_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    separated_runs(&out);
    let o = xb(&out, &["report", "--size-filter", "<6KB"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("efficiency.csv")).unwrap();
    let sizes: Vec<u64> = table.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(sizes.len(), 12);
    assert!(sizes.iter().all(|&s| s < 6144));
    assert_eq!(code(&xb(&out, &["report", "--size-filter", ">=6KB"])), 0);
    let table = std::fs::read_to_string(out.join("efficiency.csv")).unwrap();
    assert_eq!(table.lines().count() - 1, 12);
    assert_eq!(code(&xb(&out, &["report", "--size-filter", "~6KB"])), 2);
}

#[test]
fn external_gzip_codec_runs_and_verifies() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    small_corpus(&corpus);
    let out = tmp.path().join("out");
    let registry = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/smoke_registry.json");
    let o = xb(&out, &["run", "--corpus", corpus.to_str().unwrap(), "--codecs", registry, "--pause", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let runs = std::fs::read_to_string(out.join("runs.jsonl")).unwrap();
    let gz: Vec<serde_json::Value> = runs
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["codec"] == "GZI")
        .collect();
    assert_eq!(gz.len(), 3);
    assert!(gz.iter().all(|v| v["status"] == "success" && v["s_comp"].as_u64().unwrap() > 0));
}
