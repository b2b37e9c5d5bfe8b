use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paneitz-lab"))
        .args(args)
        .env("PANEITZ_LAB_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_dirs(root: &Path) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(root.join("runs"))
        .map(|rd| rd.map(|e| e.unwrap().path()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

fn record(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("record.json")).unwrap()).unwrap()
}

#[test]
fn coeffs_round_five() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(tmp.path(), &["coeffs", "--n", "5", "--round"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in ["alpha = 5.5", "alpha_bar = 6.5625", "a = 1.75", "b = 3.75", "102.38", "DISCREPANCY"] {
        assert!(text.contains(needle), "missing {needle:?} in\n{text}");
    }
    let dirs = run_dirs(tmp.path());
    assert_eq!(dirs.len(), 1);
    let rec = record(&dirs[0]);
    assert_eq!(rec["schema"], 1);
    assert_eq!(rec["command"], "coeffs");
    assert!(rec.get("started_unix_ms").is_none());
    assert!(dirs[0].join("meta.json").exists());
    let csv = fs::read_to_string(dirs[0].join("coeffs.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
}

#[test]
fn constant_spectrum_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(tmp.path(), &["spectrum", "--n", "5", "--round", "--density", "const", "--k", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("102.38"));
    let dir = &run_dirs(tmp.path())[0];
    let mut r = csv::Reader::from_path(dir.join("spectrum.csv")).unwrap();
    let header = r.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (bar, closed) = (col("lambda_bar"), col("closed_form"));
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    let bars: Vec<f64> = rows.iter().map(|row| row[bar].parse().unwrap()).collect();
    for (row, &x) in rows.iter().zip(&bars) {
        let c: f64 = row[closed].parse().unwrap();
        assert!(((x - c) / c).abs() < 1e-10);
    }
    assert_eq!(bars.len(), 3);
    let vol = std::f64::consts::PI.powi(3);
    let scale = vol.powf(0.8);
    assert!(((bars[0] - 6.5625 * scale) / bars[0]).abs() < 1e-10);
    assert!(((bars[1] - (25.0 + 5.5 * 5.0 + 6.5625) * scale) / bars[1]).abs() < 1e-10);
}

#[test]
fn identical_configs_give_identical_records() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--n", "6", "--density", "random:6:0.2", "--seed", "9", "--k", "4"];
    assert!(lab(a.path(), &args).status.success());
    assert!(lab(b.path(), &args).status.success());
    let (da, db) = (&run_dirs(a.path())[0], &run_dirs(b.path())[0]);
    assert_eq!(da.file_name(), db.file_name());
    assert_eq!(fs::read(da.join("record.json")).unwrap(), fs::read(db.join("record.json")).unwrap());
    assert_eq!(fs::read(da.join("spectrum.csv")).unwrap(), fs::read(db.join("spectrum.csv")).unwrap());

    // a different seed is a different configuration
    assert!(lab(a.path(), &["spectrum", "--n", "6", "--density", "random:6:0.2", "--seed", "10", "--k", "4"])
        .status
        .success());
    assert_eq!(run_dirs(a.path()).len(), 2);
}

#[test]
fn flags_beat_set_beat_file() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("lab.conf");
    fs::write(&file, "# layered\nn = 6\nl = 12\nq = 80\n").unwrap();
    let conf = file.to_str().unwrap();
    let o = lab(tmp.path(), &["--config", conf, "--set", "n=7", "coeffs", "--round"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(record(&run_dirs(tmp.path())[0])["config"]["n"], 7);

    let other = tempfile::tempdir().unwrap();
    let o = lab(other.path(), &["--config", conf, "--set", "n=7", "coeffs", "--round", "--n", "8"]);
    assert!(o.status.success());
    let rec = record(&run_dirs(other.path())[0]);
    assert_eq!(rec["config"]["n"], 8);
    assert_eq!(rec["config"]["l"], 12);
}

#[test]
fn out_flag_beats_environment() {
    let env_root = tempfile::tempdir().unwrap();
    let flag_root = tempfile::tempdir().unwrap();
    let o = lab(env_root.path(), &["--out", flag_root.path().to_str().unwrap(), "coeffs", "--round"]);
    assert!(o.status.success());
    assert_eq!(run_dirs(flag_root.path()).len(), 1);
    assert!(run_dirs(env_root.path()).is_empty());
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["coeffs", "--n", "4"][..],
        &["--set", "bogus=1", "coeffs"],
        &["--set", "no-equals-sign", "coeffs"],
        &["spectrum", "--density", "lumpy"],
        &["bubble-sweep", "--eps-grid", "0.1,-0.2"],
        &["frobnicate"],
    ] {
        let o = lab(tmp.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(run_dirs(tmp.path()).is_empty());
}

#[test]
fn report_on_empty_root() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(tmp.path(), &["report"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("no runs"));
}

#[test]
fn report_groups_by_dimension_and_skips_corrupt_records() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    assert!(lab(root, &["coeffs", "--n", "5", "--round"]).status.success());
    assert!(lab(root, &["lemma3-bound", "--n", "12"]).status.success());
    assert!(lab(root, &["minimize", "--n", "6", "--restarts", "1", "--iters", "15", "--l-opt", "6", "--l-eig", "16", "--q", "80"])
        .status
        .success());
    let bad = root.join("runs").join("0000000000000000");
    fs::create_dir_all(&bad).unwrap();
    fs::write(bad.join("record.json"), "{ not json").unwrap();

    let o = lab(root, &["report"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipping"));
    let report: Value = serde_json::from_slice(&fs::read(root.join("report").join("report.json")).unwrap()).unwrap();
    let ns: Vec<u64> = report["groups"].as_array().unwrap().iter().map(|g| g["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, vec![5, 6, 12]);
    assert_eq!(report["skipped"].as_array().unwrap().len(), 1);
    let twelve = &report["groups"][2];
    assert!(twelve["lemma3_bound"].as_f64().unwrap() > 2400.0);
    assert!(report["groups"][1]["mu2_hat"].as_f64().is_some());
    assert!(root.join("report").join("groups.csv").exists());
    assert!(root.join("report").join("runs.csv").exists());
}
