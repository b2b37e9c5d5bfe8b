//! Command-line harness for the Paneitz–Branson laboratory: configuration,
//! dispatch to the numerical core, and persistence of run records.

pub mod commands;
pub mod config;
pub mod record;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Command, ConfigError, ExperimentConfig, RawConfig};
use record::{persist, unix_ms, RunRecord};

#[derive(Debug, Parser)]
#[command(name = "paneitz-lab", version, about = "Paneitz-Branson invariants on round spheres")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output root (overrides PANEITZ_LAB_OUT and the config file).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Operator coefficients and the sharp-constant audit.
    Coeffs(Flags),
    /// Generalized spectrum of a density.
    Spectrum(Flags),
    /// Minimize the k-th normalized invariant.
    Minimize(Flags),
    /// Concentration sweep of the sharp quotient over bubbles.
    BubbleSweep(Flags),
    /// Two-plane upper bound for the second invariant.
    Lemma3Bound(Flags),
    /// Sobolev-type inequality audits.
    Audit(Flags),
    /// Consolidate every run under the output root.
    Report {
        /// Root to scan; defaults to the output root.
        dir: Option<PathBuf>,
    },
}

/// Per-run settings; each maps to the config key of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub n: Option<u32>,
    /// Scalar curvature.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Round sphere, S = n(n-1).
    #[arg(long)]
    pub round: bool,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub l_opt: Option<usize>,
    #[arg(long)]
    pub l_eig: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated concentration grid.
    #[arg(long)]
    pub eps_grid: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// const, random[:L[:amp]] or two-bubble[:eps[:split]].
    #[arg(long)]
    pub density: Option<String>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub audit_eps: Option<f64>,
    #[arg(long)]
    pub audit_a: Option<f64>,
    /// Skip the optimizer-backed part of `audit`.
    #[arg(long)]
    pub no_mu_relation: bool,
}

impl Flags {
    fn apply(&self, raw: &mut RawConfig) -> Result<(), ConfigError> {
        let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| raw.set(k, &v));
        set("n", self.n.map(|x| x.to_string()))?;
        set("s", self.s.map(|x| x.to_string()))?;
        set("round", self.round.then(|| "true".into()))?;
        set("l", self.l.map(|x| x.to_string()))?;
        set("q", self.q.map(|x| x.to_string()))?;
        set("k", self.k.map(|x| x.to_string()))?;
        set("l_opt", self.l_opt.map(|x| x.to_string()))?;
        set("l_eig", self.l_eig.map(|x| x.to_string()))?;
        set("restarts", self.restarts.map(|x| x.to_string()))?;
        set("iters", self.iters.map(|x| x.to_string()))?;
        set("seed", self.seed.map(|x| x.to_string()))?;
        set("eps_grid", self.eps_grid.clone())?;
        set("delta", self.delta.map(|x| x.to_string()))?;
        set("density", self.density.clone())?;
        set("mu1", self.mu1.map(|x| x.to_string()))?;
        set("audit_eps", self.audit_eps.map(|x| x.to_string()))?;
        set("audit_a", self.audit_a.map(|x| x.to_string()))?;
        set("mu_relation", self.no_mu_relation.then(|| "false".into()))?;
        Ok(())
    }
}

/// Merge defaults, config file, `--set` pairs and flags into a validated
/// configuration.
pub fn resolve_config(cli: &Cli, command: Command, flags: &Flags) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::default(),
    };
    for pair in &cli.set {
        raw.set_pair(pair)?;
    }
    flags.apply(&mut raw)?;
    let mut cfg = raw.resolve(command)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

/// A persisted run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub dir: PathBuf,
    pub summary: String,
}

/// Execute one configuration and persist its record under `cfg.out`.
pub fn dispatch(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let started = unix_ms();
    let clock = Instant::now();
    let outcome = commands::execute(cfg)?;
    let record = RunRecord::new(cfg, outcome.payload);
    let dir = persist(&cfg.out, &record, &outcome.tables, started, clock.elapsed().as_secs_f64())?;
    Ok(RunOutcome {
        record,
        dir,
        summary: outcome.summary,
    })
}

/// Exit status for usage errors.
pub const EXIT_USAGE: i32 = 2;

/// Run the parsed command line; returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let (command, flags) = match &cli.command {
        Sub::Coeffs(f) => (Command::Coeffs, f),
        Sub::Spectrum(f) => (Command::Spectrum, f),
        Sub::Minimize(f) => (Command::Minimize, f),
        Sub::BubbleSweep(f) => (Command::BubbleSweep, f),
        Sub::Lemma3Bound(f) => (Command::Lemma3Bound, f),
        Sub::Audit(f) => (Command::Audit, f),
        Sub::Report { dir } => {
            let root = match dir {
                Some(d) => d.clone(),
                None => match resolve_config(&cli, Command::Coeffs, &Flags::default()) {
                    Ok(cfg) => cfg.out,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return EXIT_USAGE;
                    }
                },
            };
            return match report::build_report(&root) {
                Ok(r) => {
                    print!("{}", r.summary);
                    println!("report written to {}", r.dir.display());
                    0
                }
                Err(e) if e.is::<report::NoRuns>() => {
                    println!("no runs: {e}");
                    1
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    1
                }
            };
        }
    };
    let cfg = match resolve_config(&cli, command, flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match dispatch(&cfg) {
        Ok(out) => {
            print!("{}", out.summary);
            println!("run {} written to {}", out.record.config_hash, out.dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {} failed: {e:#}", cfg.command);
            1
        }
    }
}

/// Parse `args` (including the program name) and run.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                0
            }
        }
    }
}
