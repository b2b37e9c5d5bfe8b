//! One function per subcommand. Each returns a JSON payload, its CSV tables
//! and a human-readable summary; persistence happens in the caller.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use paneitz_core::audit::{
    default_two_bubble_configs, euclidean_bubble, euclidean_corollary_check, lemma1_audit, mu_relation_audit,
    refined_inequality_ratio, standard_trials, two_bubble_audit, InequalityReport, MuRelationAudit,
};
use paneitz_core::bubbles::{epsilon_sweep, lemma3_bound};
use paneitz_core::einstein::{derive_coefficients, q_curvature_einstein, sharp_constant_report};
use paneitz_core::optimizer::{minimize, InvariantProblem};
use paneitz_core::spectral::{density_spectrum, normalized_invariant};
use paneitz_core::toolkit::{lebesgue_norm, nodal_profile};
use paneitz_core::zonal::{build_basis, build_quadrature};
use paneitz_core::{
    ConformalDensity, EinsteinData, EuclideanRadialGrid, Lemma1Audit, NodalProfile, NodalSamples, OperatorCoefficients,
    OptimizerReport, RefinedAudit, SharpConstantReport, SweepReport,
};
use serde::{Deserialize, Serialize};

use crate::config::{Command, DensitySpec, ExperimentConfig};
use crate::record::Table;

/// Result of one subcommand before persistence.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub payload: serde_json::Value,
    pub tables: Vec<Table>,
    pub summary: String,
}

pub fn einstein_data(cfg: &ExperimentConfig) -> Result<EinsteinData> {
    let data = match cfg.s {
        None => EinsteinData::round_sphere(cfg.n),
        Some(s) => EinsteinData::new(cfg.n, s),
    };
    data.with_context(|| format!("n = {}, S = {:?}", cfg.n, cfg.s))
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Coeffs => coeffs(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Minimize => run_minimize(cfg),
        Command::BubbleSweep => bubble_sweep(cfg),
        Command::Lemma3Bound => lemma3(cfg),
        Command::Audit => audit(cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffsPayload {
    pub scalar_curvature: f64,
    pub round: bool,
    pub coefficients: OperatorCoefficients,
    pub q_curvature: f64,
    /// `(n−4)/2 · Q` against `ᾱ`.
    pub q_identity_residual: f64,
    /// `α² − 4ᾱ` against `(2S/(n(n−1)))²`.
    pub discriminant_residual: f64,
    pub sharp_constant: SharpConstantReport,
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn coeffs(cfg: &ExperimentConfig) -> Result<Outcome> {
    let data = einstein_data(cfg)?;
    let c = derive_coefficients(&data);
    let s = data.scalar_curvature();
    let n = f64::from(cfg.n);
    let q = q_curvature_einstein(&data);
    let sharp = sharp_constant_report(&data);
    let disc = c.alpha.mul_add(c.alpha, -4.0 * c.alpha_bar);
    let payload = CoeffsPayload {
        scalar_curvature: s,
        round: data.is_round(),
        coefficients: c,
        q_curvature: q,
        q_identity_residual: rel((n - 4.0) / 2.0 * q, c.alpha_bar),
        discriminant_residual: rel(disc, (2.0 * s / (n * (n - 1.0))).powi(2)),
        sharp_constant: sharp.clone(),
    };
    let mut t = Table::new("coeffs", &["quantity", "value"]);
    for (k, v) in [
        ("S", s),
        ("alpha", c.alpha),
        ("alpha_bar", c.alpha_bar),
        ("a", c.a),
        ("b", c.b),
        ("N", c.exponent()),
        ("Q", q),
        ("K2^-2 oracle", sharp.oracle),
        ("K2^-2 printed gamma formula", sharp.printed_gamma_formula),
        ("K2^-2 printed volume formula", sharp.printed_volume_formula),
        ("K2^-2 candidate gamma formula", sharp.candidate_gamma_formula),
        ("ratio printed gamma / oracle", sharp.ratio_gamma_to_oracle),
        ("ratio printed volume / oracle", sharp.ratio_volume_to_oracle),
    ] {
        t.push(vec![k.into(), v.into()]);
    }
    let mut summary = String::new();
    writeln!(summary, "n = {}, S = {s}{}", cfg.n, if data.is_round() { " (round)" } else { "" })?;
    writeln!(summary, "alpha = {}, alpha_bar = {}, a = {}, b = {}", c.alpha, c.alpha_bar, c.a, c.b)?;
    writeln!(summary, "N = {}, Q = {q}", c.exponent())?;
    writeln!(summary, "K2^-2 (oracle) = {:.6}", sharp.oracle)?;
    writeln!(
        summary,
        "printed gamma formula = {:.6} (ratio {:.6}), printed volume formula = {:.6} (ratio {:.6})",
        sharp.printed_gamma_formula,
        sharp.ratio_gamma_to_oracle,
        sharp.printed_volume_formula,
        sharp.ratio_volume_to_oracle
    )?;
    if sharp.discrepancy {
        writeln!(summary, "DISCREPANCY: a printed formula for K2 departs from the oracle")?;
    }
    Ok(Outcome {
        payload: serde_json::to_value(&payload)?,
        tables: vec![t],
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPayload {
    pub density: DensitySpec,
    pub density_volume: f64,
    pub eigenvalues: Vec<f64>,
    pub normalized: Vec<f64>,
    pub residuals: Vec<f64>,
    pub shift: f64,
    /// `(μ_l² + αμ_l + ᾱ) Vol^{4/n}` for the constant density.
    pub closed_form: Option<Vec<f64>>,
}

/// Node values of the density selected in the config.
fn build_density(cfg: &ExperimentConfig, basis_rule: &paneitz_core::QuadratureRule) -> Result<ConformalDensity> {
    let d = match cfg.density {
        DensitySpec::Const => ConformalDensity::constant(basis_rule, 1.0)?,
        DensitySpec::Random { degree, amplitude } => {
            let qb = build_basis(basis_rule, degree)?;
            ConformalDensity::from_q(basis_rule, &qb.random_field(amplitude, cfg.seed)?)?
        }
        DensitySpec::TwoBubble { eps, split } => {
            let m = (f64::from(cfg.n) - 4.0) / 2.0;
            let thetas = basis_rule.colatitudes();
            let profile = |r: f64| (r * r + eps * eps).powf(-m);
            let north: Vec<f64> = thetas.iter().map(|&t| profile(t)).collect();
            let big_n = 2.0 * f64::from(cfg.n) / (f64::from(cfg.n) - 4.0);
            let scale = 1.0 / lebesgue_norm(&north, big_n, basis_rule);
            let u = thetas
                .iter()
                .zip(&north)
                .map(|(&t, &a)| (split * a + (1.0 - split) * profile(std::f64::consts::PI - t)) * scale)
                .collect();
            ConformalDensity::from_values(basis_rule, u)?
        }
    };
    Ok(d)
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome> {
    let data = einstein_data(cfg)?;
    let coeffs = derive_coefficients(&data);
    let rule = build_quadrature(&data, cfg.q)?;
    let basis = build_basis(&rule, cfg.l)?;
    let density = build_density(cfg, &rule)?;
    let spec = density_spectrum(&coeffs, &basis, &density, cfg.k)?;
    let bars = normalized_invariant(&spec, &density);
    let closed_form = (cfg.density == DensitySpec::Const).then(|| {
        let vf = density.volume().powf(4.0 / f64::from(cfg.n));
        (0..cfg.k)
            .map(|l| coeffs.symbol(basis.laplace_eigenvalues()[l]) * vf)
            .collect::<Vec<_>>()
    });
    let mut t = Table::new("spectrum", &["index", "lambda", "lambda_bar", "residual", "closed_form"]);
    for i in 0..spec.len() {
        t.push(vec![
            (i + 1).into(),
            spec.eigenvalues[i].into(),
            bars[i].into(),
            spec.residuals[i].into(),
            closed_form.as_ref().map(|c| c[i]).into(),
        ]);
    }
    let mut summary = String::new();
    writeln!(summary, "n = {}, density {:?}, L = {}, q = {}", cfg.n, cfg.density, cfg.l, cfg.q)?;
    let shown: Vec<String> = bars.iter().take(6).map(|b| format!("{b:.4}")).collect();
    writeln!(summary, "normalized eigenvalues: ({}{})", shown.join(", "), if bars.len() > 6 { ", ..." } else { "" })?;
    writeln!(summary, "max residual {:.3e}, mass shift {:.3e}", spec.max_residual(), spec.shift)?;
    let payload = SpectrumPayload {
        density: cfg.density,
        density_volume: density.volume(),
        eigenvalues: spec.eigenvalues.clone(),
        normalized: bars,
        residuals: spec.residuals.clone(),
        shift: spec.shift,
        closed_form,
    };
    Ok(Outcome {
        payload: serde_json::to_value(&payload)?,
        tables: vec![t],
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizePayload {
    pub report: OptimizerReport,
    /// Sign structure of the second eigenfield at the best density.
    pub nodal: NodalProfile,
}

fn run_minimize(cfg: &ExperimentConfig) -> Result<Outcome> {
    let data = einstein_data(cfg)?;
    let ocfg = cfg.optimizer();
    let report = minimize(&data, &ocfg)?;
    let problem = InvariantProblem::new(&data, ocfg.l_opt, ocfg.l_eig, ocfg.nodes)?;
    let eval = problem.evaluate(&report.best_params, 2)?;
    let nodal = nodal_profile(
        eval.spectrum.eigenfields[1].values(),
        &eval.density,
        eval.spectrum.eigenfields[0].values(),
        problem.qbasis.rule(),
    )?;

    let mut trace = Table::new(
        "trace",
        &[
            "start", "seed", "iteration", "objective", "smoothed", "grad_norm", "gap", "fixed_point_residual", "step",
            "temperature",
        ],
    );
    let mut starts = Table::new("starts", &["start", "seed", "status", "steps", "final_objective", "monotone"]);
    for tr in &report.traces {
        for s in &tr.steps {
            trace.push(vec![
                tr.start.into(),
                tr.seed.into(),
                s.iteration.into(),
                s.objective.into(),
                s.smoothed.into(),
                s.grad_norm.into(),
                s.gap.into(),
                s.fixed_point_residual.into(),
                s.step.into(),
                s.temperature.into(),
            ]);
        }
        starts.push(vec![
            tr.start.into(),
            tr.seed.into(),
            format!("{:?}", tr.status).into(),
            tr.steps.len().into(),
            tr.final_objective.into(),
            tr.is_monotone().into(),
        ]);
    }
    let mut summary = String::new();
    writeln!(summary, "n = {}, k = {}, {} starts, seed {}", cfg.n, cfg.k, report.traces.len(), cfg.seed)?;
    writeln!(
        summary,
        "best start {}: lambda_bar_{} = {:.6} (initial {:.6})",
        report.best_start, cfg.k, report.best_objective, report.initial_objective
    )?;
    writeln!(summary, "lambda_bar = {:?}", report.best_bars)?;
    if cfg.k == 2 {
        writeln!(
            summary,
            "mu2 K2^2 2^(-4/n) = {:.6} ({}), two-plane right side {:.6}",
            report.pro1_value,
            if report.pro1_flag { "below 1" } else { "not below 1" },
            report.lemma3_rhs
        )?;
    }
    writeln!(
        summary,
        "second eigenfield: {} sign change(s), weighted orthogonality {:.3e}",
        nodal.sign_changes, nodal.weighted_orthogonality
    )?;
    writeln!(
        summary,
        "fixed-point residual {:.6e} -> {:.6e}",
        report.initial_residual, report.final_residual
    )?;
    let payload = MinimizePayload { report, nodal };
    Ok(Outcome {
        payload: serde_json::to_value(&payload)?,
        tables: vec![trace, starts],
        summary,
    })
}

fn bubble_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let data = einstein_data(cfg)?;
    let coeffs = derive_coefficients(&data);
    let rule = build_quadrature(&data, cfg.q)?;
    let sweep: SweepReport = epsilon_sweep(&coeffs, &rule, &cfg.eps_grid, cfg.delta)?;
    let mut t = Table::new("sweep", &["eps", "y", "ratio_to_oracle", "c_norm"]);
    for p in &sweep.points {
        t.push(vec![p.eps.into(), p.y.into(), p.ratio_to_oracle.into(), p.c_norm.into()]);
    }
    let mut fit = Table::new("fit", &["quantity", "value"]);
    for (k, v) in [
        ("A", sweep.a),
        ("C", sweep.c_quadratic),
        ("relative_residual", sweep.relative_residual),
        ("oracle", sweep.oracle),
        ("limit_error", sweep.limit_error),
        ("c_norm_slope", sweep.c_norm_slope),
    ] {
        fit.push(vec![k.into(), v.into()]);
    }
    let mut summary = String::new();
    writeln!(summary, "n = {}, q = {}, delta = {}", cfg.n, cfg.q, cfg.delta)?;
    for p in &sweep.points {
        writeln!(summary, "  eps {:<6} Y = {:.6}  Y/K2^-2 = {:.8}", p.eps, p.y, p.ratio_to_oracle)?;
    }
    writeln!(
        summary,
        "fit Y = A - C eps^2: A = {:.6} ({:.3}% from oracle {:.6}), C = {:.6}, residual {:.2e}",
        sweep.a,
        100.0 * sweep.limit_error,
        sweep.oracle,
        sweep.c_quadratic,
        sweep.relative_residual
    )?;
    if sweep.c_quadratic <= 0.0 {
        writeln!(summary, "C is not positive: Y increases with eps on this grid")?;
    }
    Ok(Outcome {
        payload: serde_json::to_value(&sweep)?,
        tables: vec![t, fit],
        summary,
    })
}

fn lemma3(cfg: &ExperimentConfig) -> Result<Outcome> {
    let data = einstein_data(cfg)?;
    let coeffs = derive_coefficients(&data);
    let rule = build_quadrature(&data, cfg.q)?;
    let mu1 = cfg.mu1.unwrap_or(coeffs.k2_inv_sq);
    let report = lemma3_bound(&coeffs, &rule, mu1, &cfg.eps_grid, cfg.delta)?;
    let mut t = Table::new("lemma3", &["eps", "y_eps", "bound", "ratio"]);
    for r in &report.rows {
        t.push(vec![r.eps.into(), r.y_eps.into(), r.bound.into(), r.ratio.into()]);
    }
    let mut summary = String::new();
    writeln!(summary, "n = {}, mu1 = {mu1:.6}, right side {:.6}", cfg.n, report.rhs)?;
    writeln!(
        summary,
        "best bound {:.6} at eps = {} (ratio {:.6})",
        report.best_bound,
        report.best_eps,
        report.best_ratio()
    )?;
    if let Some(note) = &report.note {
        writeln!(summary, "note: {note}")?;
    }
    Ok(Outcome {
        payload: serde_json::to_value(&report)?,
        tables: vec![t],
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPayload {
    pub lemma1: Lemma1Audit,
    pub refined_constant: RefinedAudit,
    pub two_bubble: Vec<(paneitz_core::audit::TwoBubbleConfig<f64>, RefinedAudit)>,
    pub euclidean: Vec<InequalityReport<f64>>,
    pub mu_relation: Option<MuRelationAudit<f64>>,
}

fn audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let data = einstein_data(cfg)?;
    let coeffs = derive_coefficients(&data);
    let rule = build_quadrature(&data, cfg.q)?;
    let trial_basis = build_basis(&rule, 8.min(cfg.q - 1))?;
    let trials = standard_trials(&trial_basis, &cfg.eps_grid)?;
    let lemma1 = lemma1_audit(&coeffs, &rule, cfg.audit_eps, cfg.audit_a, &trials)?;

    let basis = build_basis(&rule, cfg.l_eig.min(cfg.q - 1))?;
    let u = ConformalDensity::constant(&rule, 1.0)?;
    let v = NodalSamples::constant(1.0, rule.len());
    let refined_constant = refined_inequality_ratio(&coeffs, &basis, &u, &v, 0.0)?;
    let two_bubble = default_two_bubble_configs()
        .into_iter()
        .map(|c| Ok((c, two_bubble_audit(&coeffs, &basis, &c, 0.0)?)))
        .collect::<Result<Vec<_>>>()?;

    let grid = EuclideanRadialGrid::standard(cfg.n)?;
    let bubble = euclidean_bubble::<f64>(cfg.n);
    let mut euclidean = vec![euclidean_corollary_check(&grid, |r| bubble(r).0, &bubble)?];
    euclidean[0].label = "euclidean bubble pair".into();
    let bump = |r: f64| {
        if r >= 1.0 {
            (0.0, 0.0, 0.0)
        } else {
            let s = 1.0 - r * r;
            (s.powi(4), -8.0 * r * s.powi(3), -8.0 * s.powi(3) + 48.0 * r * r * s.powi(2))
        }
    };
    let shell = |r: f64| if r > 2.0 && r < 4.0 { ((r - 2.0) * (4.0 - r)).powi(3) } else { 0.0 };
    let mut disjoint = euclidean_corollary_check(&grid, shell, bump)?;
    disjoint.label = "euclidean disjoint supports".into();
    euclidean.push(disjoint);

    let mu_relation = if cfg.mu_relation {
        Some(mu_relation_audit(&data, &cfg.optimizer())?)
    } else {
        None
    };

    let mut t = Table::new("audit", &["group", "label", "lhs", "rhs", "ratio", "sense", "verdict", "fingerprint"]);
    let mut push = |group: &str, r: &InequalityReport<f64>| {
        t.push(vec![
            group.into(),
            r.label.clone().into(),
            r.lhs.into(),
            r.rhs.into(),
            r.ratio.into(),
            format!("{:?}", r.sense).into(),
            format!("{:?}", r.verdict).into(),
            r.fingerprint.clone().into(),
        ]);
    };
    for row in &lemma1.rows {
        push("lemma1", &row.report);
        push("lemma1 printed K2", &row.printed);
    }
    push("refined constant", &refined_constant.printed);
    push("refined constant", &refined_constant.second_eigenvalue);
    for (c, a) in &two_bubble {
        let g = format!("two-bubble eps={} split={}", c.eps, c.split);
        push(&g, &a.printed);
        push(&g, &a.second_eigenvalue);
    }
    for r in &euclidean {
        push("euclidean", r);
    }
    if let Some(m) = &mu_relation {
        push("mu relation", &m.hypothesis);
        push("mu relation", &m.direction);
    }

    let mut summary = String::new();
    writeln!(summary, "n = {}, q = {}", cfg.n, cfg.q)?;
    let violated = lemma1.rows.iter().filter(|r| r.report.verdict == paneitz_core::audit::Verdict::Violated).count();
    writeln!(
        summary,
        "lemma1 (eps = {}, A = {}): {} of {} trial fields violated; minimal A = {:.6e} (printed K2: {:.6e})",
        cfg.audit_eps,
        cfg.audit_a,
        violated,
        lemma1.rows.len(),
        lemma1.minimal_a,
        lemma1.minimal_a_printed
    )?;
    writeln!(
        summary,
        "refined inequality, constants: ratio {:.12} ({:?} as printed); second-eigenvalue form ratio {:.6} ({:?})",
        refined_constant.printed.ratio,
        refined_constant.printed.verdict,
        refined_constant.second_eigenvalue.ratio,
        refined_constant.second_eigenvalue.verdict
    )?;
    let worst = two_bubble
        .iter()
        .map(|(_, a)| a.second_eigenvalue.ratio)
        .fold(f64::INFINITY, f64::min);
    writeln!(summary, "two-bubble second-eigenvalue form: smallest ratio {worst:.6} over {} configurations", two_bubble.len())?;
    for r in &euclidean {
        writeln!(summary, "{}: ratio {:.10} ({:?})", r.label, r.ratio, r.verdict)?;
    }
    if let Some(m) = &mu_relation {
        writeln!(
            summary,
            "mu relation: mu1_hat K2^2 = {:.9} ({:?}), mu1_hat = {:.6}, mu_hat = {:.6} ({})",
            m.product, m.hypothesis.verdict, m.mu1_hat, m.mu_hat, m.mu_hat_label
        )?;
    }
    let payload = AuditPayload {
        lemma1,
        refined_constant,
        two_bubble,
        euclidean,
        mu_relation,
    };
    Ok(Outcome {
        payload: serde_json::to_value(&payload)?,
        tables: vec![t],
        summary,
    })
}

/// Number at `path` inside a payload. `report` reads payloads this way so
/// that records with non-finite ratios (stored as `null`) still load.
pub fn payload_f64(payload: &serde_json::Value, path: &[&str]) -> Option<f64> {
    let mut v = payload;
    for p in path {
        v = v.get(p)?;
    }
    v.as_f64()
}
