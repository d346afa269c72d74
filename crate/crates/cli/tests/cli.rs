use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fiiss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiiss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn figure1_is_deterministic_and_complete() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = fiiss(&["figure1", "--seed", "42", "--output", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let files = read_dir_sorted(a.path());
    assert_eq!(files.len(), 6);
    assert_eq!(files, read_dir_sorted(b.path()));
    let text = String::from_utf8(files[0].1.clone()).unwrap();
    assert!(text.contains("# seed=42\n"));
    assert!(text.contains("# version="));
    assert!(text.contains("# alpha=0.75\n"));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "u,value");
    let row = text.lines().filter(|l| !l.starts_with('#')).nth(2).unwrap();
    let first = row.split(',').next().unwrap();
    // 17 significant digits in scientific form.
    assert_eq!(first.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    assert!(!text.contains('\r'));
}

#[test]
fn worker_count_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, streams) in [(&a, "1"), (&b, "3")] {
        let out = fiiss(&[
            "converge", "--alpha", "0.7", "--beta", "0.2", "--n", "300", "--t-ladder", "10,100",
            "--streams", streams, "--format", "json", "--output", dir.path().to_str().unwrap(),
        ]);
        assert!(matches!(out.status.code(), Some(0) | Some(1)));
    }
    let strip = |p: &Path| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(p.join("converge.json")).unwrap()).unwrap();
        v["meta"]["streams"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn verify_reports_moment_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = fiiss(&[
        "verify", "--alpha", "0.5", "--beta", "0", "--n", "100000", "--format", "json",
        "--output", dir.path().to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    let entries = report["data"]["report"]["entries"].as_array().unwrap();
    for name in ["mittag_leffler_moment_1", "mittag_leffler_moment_2", "moment_formula_identity"] {
        let e = entries.iter().find(|e| e["name"] == name).unwrap();
        assert_eq!(e["pass"], true, "{e}");
    }
    let all = entries.iter().all(|e| e["pass"] == true);
    assert_eq!(out.status.code(), Some(if all { 0 } else { 1 }));
}

#[test]
fn failing_verify_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = fiiss(&["verify", "--alpha", "0.3", "--n", "3", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = fs::read_to_string(dir.path().join("verify.csv")).unwrap();
    assert!(text.contains("mittag_leffler_moment_1,"));
    assert!(text.contains(",false"));
}

#[test]
fn exit_codes_and_error_records() {
    let usage = fiiss(&["verify", "--alpha", "1.2"]);
    assert_eq!(usage.status.code(), Some(2));
    let record: serde_json::Value = serde_json::from_slice(usage.stderr.trim_ascii()).unwrap();
    assert_eq!(record["error"], "usage");

    assert_eq!(fiiss(&["bogus"]).status.code(), Some(2));
    assert_eq!(fiiss(&["lil", "--alpha", "0.5", "--beta", "-0.9"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cap = fiiss(&["simulate", "--alpha", "0.5", "--t-step", "1e-12", "--output", dir.path().to_str().unwrap()]);
    assert_eq!(cap.status.code(), Some(3));
    let record: serde_json::Value = serde_json::from_slice(cap.stderr.trim_ascii()).unwrap();
    assert_eq!(record["error"], "resource");
}

#[test]
fn config_file_drives_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let out_dir = dir.path().join("paths");
    fs::write(&conf, format!("alpha = 0.6\nbeta = 0.4\nformat = json\nt_step = 1e-4\noutput = {}\n", out_dir.display())).unwrap();
    let out = fiiss(&["simulate", "--config", conf.to_str().unwrap(), "--u-step", "0.01"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("simulate.json")).unwrap()).unwrap();
    assert_eq!(v["meta"]["params"]["alpha"], 0.6);
    assert_eq!(v["meta"]["params"]["u_step"], 0.01);
    assert_eq!(v["data"]["u"].as_array().unwrap().len(), 101);
}
