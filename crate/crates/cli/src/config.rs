//! Flat `key = value` experiment configuration.
//!
//! Sources are merged in order: built-in defaults, a config file, `--set`
//! pairs, then dedicated command-line flags. Every field is validated before
//! dispatch and errors name the offending key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use paneitz_core::bubbles::{DEFAULT_BUBBLE_NODES, DEFAULT_DELTA, DEFAULT_EPS_GRID};
use paneitz_core::OptimizerConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable overriding the output root.
pub const OUT_ENV: &str = "PANEITZ_LAB_OUT";
pub const DEFAULT_OUT: &str = "lab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Coeffs,
    Spectrum,
    Minimize,
    BubbleSweep,
    Lemma3Bound,
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Coeffs => "coeffs",
            Self::Spectrum => "spectrum",
            Self::Minimize => "minimize",
            Self::BubbleSweep => "bubble-sweep",
            Self::Lemma3Bound => "lemma3-bound",
            Self::Audit => "audit",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Density used by `spectrum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DensitySpec {
    Const,
    /// `u = q²` with a seeded random `q` of degree `degree`.
    Random { degree: usize, amplitude: f64 },
    /// Two pole-centered bubbles.
    TwoBubble { eps: f64, split: f64 },
}

impl FromStr for DensitySpec {
    type Err = String;

    /// `const`, `random[:degree[:amplitude]]` or `two-bubble[:eps[:split]]`.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default().trim();
        let rest: Vec<&str> = parts.collect();
        let num = |i: usize, default: f64| -> Result<f64, String> {
            rest.get(i)
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
                .unwrap_or(Ok(default))
        };
        let spec = match head {
            "const" | "constant" if rest.is_empty() => Self::Const,
            "random" if rest.len() <= 2 => Self::Random {
                degree: num(0, 6.0)? as usize,
                amplitude: num(1, 0.25)?,
            },
            "two-bubble" if rest.len() <= 2 => Self::TwoBubble {
                eps: num(0, 0.3)?,
                split: num(1, 0.5)?,
            },
            _ => return Err(format!("unknown density `{s}` (const, random[:L[:amp]], two-bubble[:eps[:split]])")),
        };
        Ok(spec)
    }
}

/// Every setting of one run. The output root is not part of the hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n: u32,
    /// Scalar curvature; `None` is the round sphere `S = n(n−1)`.
    pub s: Option<f64>,
    /// Eigenfield basis degree for `spectrum`.
    pub l: usize,
    /// Quadrature nodes; the default depends on the command.
    pub q: usize,
    /// Eigenvalue count for `spectrum`, invariant index for `minimize`.
    pub k: usize,
    pub l_opt: usize,
    pub l_eig: usize,
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    pub eps_grid: Vec<f64>,
    pub delta: f64,
    pub density: DensitySpec,
    /// `μ₁` for the two-plane bound; `None` uses `K₂^{−2}`.
    pub mu1: Option<f64>,
    /// `ε` and candidate `A(ε)` for the Sobolev audit.
    pub audit_eps: f64,
    pub audit_a: f64,
    /// Run the optimizer-backed `μ = μ₁` audit.
    pub mu_relation: bool,
    #[serde(skip)]
    pub out: PathBuf,
}

const KEYS: &[&str] = &[
    "n", "s", "round", "l", "q", "k", "l_opt", "l_eig", "restarts", "iters", "seed", "eps_grid", "delta",
    "density", "mu1", "audit_eps", "audit_a", "mu_relation", "out",
];

/// Field-level configuration error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

/// Raw `key → value` pairs before typing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig(BTreeMap<String, String>);

impl RawConfig {
    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(&format!("line {}", i + 1), format!("expected `key = value`, got `{line}`")))?;
            out.set(k.trim(), v.trim())?;
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(err(&key, format!("unknown key (known: {})", KEYS.join(", "))));
        }
        self.0.insert(key, value.to_string());
        Ok(())
    }

    /// Parse a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| err(pair, "expected key=value"))?;
        self.set(k.trim(), v.trim())
    }

    pub fn merge(&mut self, other: &RawConfig) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| err(key, format!("`{v}`: {e}"))))
            .transpose()
    }

    /// Typed, validated configuration for `command`.
    pub fn resolve(&self, command: Command) -> Result<ExperimentConfig, ConfigError> {
        let defaults = OptimizerConfig::default();
        let n: u32 = self.parsed("n")?.unwrap_or(5);
        let round: bool = self.parsed("round")?.unwrap_or(false);
        let s = match self.get("s") {
            Some("round") => None,
            Some(_) if round => return Err(err("s", "conflicts with `round`")),
            Some(_) => self.parsed::<f64>("s")?,
            None => None,
        };
        let default_q = match command {
            Command::BubbleSweep | Command::Lemma3Bound | Command::Audit => DEFAULT_BUBBLE_NODES,
            _ => defaults.nodes,
        };
        let default_k = match command {
            Command::Spectrum => 10,
            _ => defaults.k,
        };
        let eps_grid = match self.get("eps_grid") {
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| err("eps_grid", format!("`{x}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => DEFAULT_EPS_GRID.to_vec(),
        };
        // the environment overrides the file; an explicit `--out` flag is
        // applied by the caller after resolution
        let out = match (std::env::var_os(OUT_ENV), self.get("out")) {
            (Some(env), _) => PathBuf::from(env),
            (None, Some(dir)) => PathBuf::from(dir),
            (None, None) => PathBuf::from(DEFAULT_OUT),
        };
        let cfg = ExperimentConfig {
            command,
            n,
            s,
            l: self.parsed("l")?.unwrap_or(24),
            q: self.parsed("q")?.unwrap_or(default_q),
            k: self.parsed("k")?.unwrap_or(default_k),
            l_opt: self.parsed("l_opt")?.unwrap_or(defaults.l_opt),
            l_eig: self.parsed("l_eig")?.unwrap_or(defaults.l_eig),
            restarts: self.parsed("restarts")?.unwrap_or(defaults.restarts),
            iters: self.parsed("iters")?.unwrap_or(defaults.max_iters),
            seed: self.parsed("seed")?.unwrap_or(0),
            eps_grid,
            delta: self.parsed("delta")?.unwrap_or(DEFAULT_DELTA),
            density: self.parsed("density")?.unwrap_or(DensitySpec::Const),
            mu1: self.parsed("mu1")?,
            audit_eps: self.parsed("audit_eps")?.unwrap_or(0.1),
            audit_a: self.parsed("audit_a")?.unwrap_or(0.0),
            mu_relation: self.parsed("mu_relation")?.unwrap_or(true),
            out,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 5 {
            return Err(err("n", format!("need n >= 5, got {}", self.n)));
        }
        if self.n > 64 {
            return Err(err("n", format!("n = {} is beyond the supported range (<= 64)", self.n)));
        }
        if let Some(s) = self.s {
            if !s.is_finite() {
                return Err(err("s", "must be finite"));
            }
            if s <= 0.0 && self.command != Command::Coeffs {
                return Err(err("s", format!("{} needs positive scalar curvature, got {s}", self.command)));
            }
        }
        if self.q < 2 {
            return Err(err("q", format!("need at least 2 nodes, got {}", self.q)));
        }
        match self.command {
            Command::Spectrum => {
                if self.k == 0 {
                    return Err(err("k", "need at least one eigenvalue"));
                }
                if self.l >= self.q {
                    return Err(err("l", format!("basis degree {} must be below q = {}", self.l, self.q)));
                }
                if self.k > self.l + 1 {
                    return Err(err("k", format!("{} eigenvalues need l >= {}", self.k, self.k - 1)));
                }
                match self.density {
                    DensitySpec::Random { degree, amplitude } => {
                        if degree == 0 || degree >= self.q {
                            return Err(err("density", format!("random degree {degree} must lie in [1, q)")));
                        }
                        if !(amplitude >= 0.0 && amplitude.is_finite()) {
                            return Err(err("density", "amplitude must be finite and nonnegative"));
                        }
                    }
                    DensitySpec::TwoBubble { eps, split } => {
                        if !(eps > 0.0) {
                            return Err(err("density", "bubble scale must be positive"));
                        }
                        if !(0.0..=1.0).contains(&split) {
                            return Err(err("density", "split must lie in [0, 1]"));
                        }
                    }
                    DensitySpec::Const => {}
                }
            }
            Command::Minimize => self
                .optimizer()
                .validate()
                .map_err(|e| err("optimizer", e.to_string()))?,
            Command::BubbleSweep | Command::Lemma3Bound => {
                if self.eps_grid.is_empty() || self.eps_grid.iter().any(|&e| !(e > 0.0)) {
                    return Err(err("eps_grid", "needs positive entries"));
                }
                if !(self.delta > 0.0 && self.delta <= std::f64::consts::FRAC_PI_2) {
                    return Err(err("delta", format!("must lie in (0, pi/2], got {}", self.delta)));
                }
                if self.command == Command::BubbleSweep && self.eps_grid.len() < 3 {
                    return Err(err("eps_grid", "the sweep needs at least 3 points"));
                }
                if let Some(mu1) = self.mu1 {
                    if !(mu1 > 0.0) {
                        return Err(err("mu1", "must be positive"));
                    }
                }
            }
            Command::Audit => {
                if !(self.audit_eps >= 0.0) {
                    return Err(err("audit_eps", "must be nonnegative"));
                }
                if !(self.audit_a >= 0.0) {
                    return Err(err("audit_a", "must be nonnegative"));
                }
                if self.mu_relation {
                    self.optimizer()
                        .validate()
                        .map_err(|e| err("optimizer", e.to_string()))?;
                }
            }
            Command::Coeffs => {}
        }
        Ok(())
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            k: self.k,
            l_opt: self.l_opt,
            l_eig: self.l_eig,
            nodes: self.q,
            restarts: self.restarts,
            max_iters: self.iters,
            seed: self.seed,
            ..OptimizerConfig::default()
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut raw = RawConfig::parse("# comment\nn = 12\nseed=3 # trailing\n\nk = 1\n").unwrap();
        raw.set_pair("seed=7").unwrap();
        let cfg = raw.resolve(Command::Minimize).unwrap();
        assert_eq!((cfg.n, cfg.seed, cfg.k), (12, 7, 1));
        assert_eq!(cfg.q, 200);
        assert_eq!(raw.resolve(Command::BubbleSweep).unwrap().q, 400);
    }

    #[test]
    fn field_level_errors() {
        let e = RawConfig::parse("n = 4").unwrap().resolve(Command::Coeffs).unwrap_err();
        assert_eq!(e.field, "n");
        let e = RawConfig::parse("bogus = 1").unwrap_err();
        assert_eq!(e.field, "bogus");
        let e = RawConfig::parse("n = five").unwrap().resolve(Command::Coeffs).unwrap_err();
        assert_eq!(e.field, "n");
        let e = RawConfig::parse("l = 300").unwrap().resolve(Command::Spectrum).unwrap_err();
        assert_eq!(e.field, "l");
        let e = RawConfig::parse("k = 3").unwrap().resolve(Command::Minimize).unwrap_err();
        assert_eq!(e.field, "optimizer");
        assert!(RawConfig::parse("just words").is_err());
        let e = RawConfig::parse("s = 1\nround = true").unwrap().resolve(Command::Coeffs).unwrap_err();
        assert_eq!(e.field, "s");
    }

    #[test]
    fn densities_parse() {
        assert_eq!("const".parse::<DensitySpec>().unwrap(), DensitySpec::Const);
        assert_eq!(
            "random:4:0.1".parse::<DensitySpec>().unwrap(),
            DensitySpec::Random { degree: 4, amplitude: 0.1 }
        );
        assert_eq!(
            "two-bubble:0.2".parse::<DensitySpec>().unwrap(),
            DensitySpec::TwoBubble { eps: 0.2, split: 0.5 }
        );
        assert!("weird".parse::<DensitySpec>().is_err());
    }

    #[test]
    fn hash_ignores_output_root() {
        let mut a = RawConfig::parse("n = 6\nout = /tmp/a").unwrap().resolve(Command::Coeffs).unwrap();
        let b = RawConfig::parse("n = 6\nout = /tmp/b").unwrap().resolve(Command::Coeffs).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        a.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
