use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_irs-wsr"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn run_eta(out: &Path) -> std::process::Output {
    bin()
        .args(["run", "sweep_eta", "--seeds", "2", "--method", "mm,noirs", "--n-max", "8", "--no-timing", "--jobs", "2"])
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_eta(&a).status.success());
    assert!(run_eta(&b).status.success());
    for name in ["sweep_eta.csv", "sweep_eta_summary.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn summary_means_recompute_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_eta(dir.path()).status.success());
    let mut rows = csv::Reader::from_path(dir.path().join("sweep_eta.csv")).unwrap();
    let headers = rows.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["sweep_value", "method", "seed", "wsr_bits", "iterations", "wall_ms"]);
    let rows: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6 * 2 * 2);
    let mut summary = csv::Reader::from_path(dir.path().join("sweep_eta_summary.csv")).unwrap();
    for s in summary.records().map(Result::unwrap) {
        let group: Vec<f64> =
            rows.iter().filter(|r| r[0] == s[0] && r[1] == s[1]).map(|r| r[3].parse().unwrap()).collect();
        let mean = group.iter().sum::<f64>() / group.len() as f64;
        let reported: f64 = s[3].parse().unwrap();
        assert!((mean - reported).abs() <= 1e-12 * mean.abs(), "{mean} vs {reported}");
    }
    // zero reflection amplitude is the same as no IRS
    let at_zero: Vec<f64> = rows.iter().filter(|r| &r[0] == "0.0").map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(at_zero.len(), 4);
    assert!((at_zero[0] - at_zero[2]).abs() < 1e-9 && (at_zero[1] - at_zero[3]).abs() < 1e-9);
}

#[test]
fn errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = bin().args(["run", "sweep_nothing", "--seeds", "1"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(unknown.status.code(), Some(3));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"L\": 2,").unwrap();
    let malformed = bin().args(["run", "sweep_eta", "--seeds", "1", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(malformed.status.code(), Some(4));
    let missing = bin().args(["run", "sweep_eta", "--config", "/nonexistent/cfg.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(4));

    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    let unwritable = bin()
        .args(["run", "sweep_eta", "--seeds", "1", "--method", "noirs", "--n-max", "2", "--out"])
        .arg(file.join("sub"))
        .output()
        .unwrap();
    assert_eq!(unwritable.status.code(), Some(5));
}

#[test]
fn shipped_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/two_cell.json");
    let out = bin()
        .args(["run", "weights_fairness", "--seeds", "1", "--n-max", "5", "--config", cfg])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let users = std::fs::read_to_string(dir.path().join("weights_fairness_users.csv")).unwrap();
    assert_eq!(users.lines().count(), 1 + 2 * 4);
}
