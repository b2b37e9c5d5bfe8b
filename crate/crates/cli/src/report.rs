//! Cross-run consolidation of every record under `<root>/runs`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use paneitz_core::einstein::sharp_constant_oracle;
use serde::{Deserialize, Serialize};

use crate::commands::payload_f64;
use crate::config::Command;
use crate::record::{RunRecord, Table, SCHEMA};

/// One run as seen by the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: u32,
    pub config_hash: String,
    pub command: Command,
    pub k: Option<usize>,
    pub mu1_hat: Option<f64>,
    pub mu2_hat: Option<f64>,
    pub lemma3_bound: Option<f64>,
    /// `μ̂₂ K₂² 2^{−4/n}`.
    pub pro1_value: Option<f64>,
    pub sign_changes: Option<u64>,
    pub weighted_orthogonality: Option<f64>,
    pub initial_residual: Option<f64>,
    pub final_residual: Option<f64>,
}

/// Best values per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportGroup {
    pub n: u32,
    pub runs: Vec<ReportRow>,
    pub mu1_hat: Option<f64>,
    pub mu2_hat: Option<f64>,
    pub lemma3_bound: Option<f64>,
    pub pro1_value: Option<f64>,
    pub pro1_flag: Option<bool>,
    /// `μ̂₂ ≤` the best two-plane bound.
    pub mu2_within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub status: String,
    pub skipped: Vec<SkippedRecord>,
    pub groups: Vec<ReportGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutcome {
    pub report: Report,
    pub dir: PathBuf,
    pub summary: String,
}

/// Error returned when no valid record exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoRuns(pub PathBuf);

impl std::fmt::Display for NoRuns {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "no runs under {}", self.0.display())
    }
}

impl std::error::Error for NoRuns {}

fn row_of(record: &RunRecord) -> ReportRow {
    let p = &record.payload;
    let cfg = &record.config;
    let mut row = ReportRow {
        n: cfg.n,
        config_hash: record.config_hash.clone(),
        command: record.command,
        k: None,
        mu1_hat: None,
        mu2_hat: None,
        lemma3_bound: None,
        pro1_value: None,
        sign_changes: None,
        weighted_orthogonality: None,
        initial_residual: None,
        final_residual: None,
    };
    match record.command {
        Command::Minimize => {
            let best = payload_f64(p, &["report", "best_objective"]);
            row.k = Some(cfg.k);
            if cfg.k == 1 {
                row.mu1_hat = best;
            } else {
                row.mu2_hat = best;
                row.pro1_value = payload_f64(p, &["report", "pro1_value"]);
            }
            row.sign_changes = p.pointer("/nodal/sign_changes").and_then(|v| v.as_u64());
            row.weighted_orthogonality = payload_f64(p, &["nodal", "weighted_orthogonality"]);
            row.initial_residual = payload_f64(p, &["report", "initial_residual"]);
            row.final_residual = payload_f64(p, &["report", "final_residual"]);
        }
        Command::Lemma3Bound => row.lemma3_bound = payload_f64(p, &["best_bound"]),
        Command::Audit => row.mu1_hat = payload_f64(p, &["mu_relation", "mu1_hat"]),
        _ => {}
    }
    row
}

fn min_of(rows: &[ReportRow], f: impl Fn(&ReportRow) -> Option<f64>) -> Option<f64> {
    rows.iter().filter_map(f).reduce(f64::min)
}

/// Scan `<root>/runs/*/record.json`, skip unreadable records with a warning,
/// and write `<root>/report/{runs,groups}.csv` plus `report.json`.
pub fn build_report(root: &Path) -> Result<ReportOutcome> {
    let runs = root.join("runs");
    let mut entries: Vec<PathBuf> = match fs::read_dir(&runs) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect(),
        Err(_) => Vec::new(),
    };
    entries.sort();
    let mut skipped = Vec::new();
    let mut rows = Vec::new();
    for dir in entries {
        let path = dir.join("record.json");
        match RunRecord::load(&path) {
            Ok(rec) => rows.push(row_of(&rec)),
            Err(e) => {
                eprintln!("warning: skipping {}: {e:#}", path.display());
                skipped.push(SkippedRecord {
                    path,
                    reason: format!("{e:#}"),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(NoRuns(runs).into());
    }

    let mut by_n: BTreeMap<u32, Vec<ReportRow>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r);
    }
    let groups: Vec<ReportGroup> = by_n
        .into_iter()
        .map(|(n, mut runs)| {
            runs.sort_by(|a, b| (a.command.name(), &a.config_hash).cmp(&(b.command.name(), &b.config_hash)));
            let mu1_hat = min_of(&runs, |r| r.mu1_hat);
            let mu2_hat = min_of(&runs, |r| r.mu2_hat);
            let lemma3_bound = min_of(&runs, |r| r.lemma3_bound);
            let pro1_value = mu2_hat.and_then(|m| {
                let k = sharp_constant_oracle::<f64>(n).ok()?;
                Some(m / k * 2f64.powf(-4.0 / f64::from(n)))
            });
            ReportGroup {
                n,
                mu1_hat,
                mu2_hat,
                lemma3_bound,
                pro1_value,
                pro1_flag: pro1_value.map(|v| v < 1.0),
                mu2_within_bound: mu2_hat.zip(lemma3_bound).map(|(m, b)| m <= b),
                runs,
            }
        })
        .collect();

    let report = Report {
        schema: SCHEMA,
        status: "ok".into(),
        skipped,
        groups,
    };
    let out = root.join("report");
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut runs_t = Table::new(
        "runs",
        &[
            "n", "config_hash", "command", "k", "mu1_hat", "mu2_hat", "lemma3_bound", "pro1_value", "sign_changes",
            "weighted_orthogonality", "initial_residual", "final_residual",
        ],
    );
    let mut groups_t = Table::new(
        "groups",
        &["n", "runs", "mu1_hat", "mu2_hat", "lemma3_bound", "pro1_value", "pro1_flag", "mu2_within_bound"],
    );
    for g in &report.groups {
        for r in &g.runs {
            runs_t.push(vec![
                r.n.into(),
                r.config_hash.clone().into(),
                r.command.name().into(),
                r.k.into(),
                r.mu1_hat.into(),
                r.mu2_hat.into(),
                r.lemma3_bound.into(),
                r.pro1_value.into(),
                r.sign_changes.into(),
                r.weighted_orthogonality.into(),
                r.initial_residual.into(),
                r.final_residual.into(),
            ]);
        }
        groups_t.push(vec![
            g.n.into(),
            g.runs.len().into(),
            g.mu1_hat.into(),
            g.mu2_hat.into(),
            g.lemma3_bound.into(),
            g.pro1_value.into(),
            g.pro1_flag.into(),
            g.mu2_within_bound.into(),
        ]);
    }
    runs_t.write(&out)?;
    groups_t.write(&out)?;
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    fs::write(out.join("report.json"), bytes)?;

    let mut summary = String::new();
    for g in &report.groups {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
        writeln!(
            summary,
            "n = {:>2}: {} run(s)  mu1 {}  mu2 {}  two-plane bound {}  mu2 K2^2 2^(-4/n) {}{}",
            g.n,
            g.runs.len(),
            fmt(g.mu1_hat),
            fmt(g.mu2_hat),
            fmt(g.lemma3_bound),
            fmt(g.pro1_value),
            match g.mu2_within_bound {
                Some(true) => "  (mu2 within bound)",
                Some(false) => "  (mu2 above bound)",
                None => "",
            }
        )?;
    }
    if !report.skipped.is_empty() {
        writeln!(summary, "{} record(s) skipped", report.skipped.len())?;
    }
    Ok(ReportOutcome { report, dir: out, summary })
}
