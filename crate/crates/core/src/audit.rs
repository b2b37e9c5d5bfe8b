//! Numerical audits of the Sobolev-type inequalities.
//!
//! Every statement is evaluated on explicit trial data and reported as a
//! ratio with a verdict. A "violated" verdict is a finding, not an error: the
//! audits map which statements hold as printed and which only hold in their
//! second-eigenvalue form.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubbles::{bubble_field, check_resolution, functional_y, BubbleSpec, Pole, DEFAULT_BUBBLE_NODES};
use crate::einstein::{derive_coefficients, sharp_constant_report, CriticalExponent, EinsteinData, OperatorCoefficients};
use crate::error::{LabError, Result};
use crate::optimizer::{minimize, OptimizerConfig};
use crate::scalar::Real;
use crate::special::{gauss_legendre, sphere_volume};
use crate::spectral::{density_spectrum, normalized_invariant, ConformalDensity};
use crate::toolkit::lebesgue_norm;
use crate::zonal::{build_quadrature, NodalSamples, QuadratureRule, ZonalBasis};

/// Half-width of the band around ratio 1 reported as a boundary case.
pub const VERDICT_BAND: f64 = 1e-10;
/// Default truncation radius of the Euclidean grid.
pub const EUCLIDEAN_RADIUS: f64 = 50.0;
/// Largest tolerated error of the tail integral, relative to the total.
pub const DECAY_TOL: f64 = 1e-8;

/// Direction of the audited inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `lhs ≤ rhs`.
    AtMost,
    /// `lhs ≥ rhs`.
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Boundary,
}

/// Classify `ratio = lhs/rhs` against 1 with the band [`VERDICT_BAND`].
pub fn verdict_for<T: Real>(ratio: T, sense: Sense) -> Verdict {
    let band = T::lit(VERDICT_BAND);
    if ratio.is_nan() {
        return Verdict::Violated;
    }
    let above = ratio >= T::one() + band;
    let below = ratio <= T::one() - band;
    match (sense, above, below) {
        (Sense::AtMost, _, true) | (Sense::AtLeast, true, _) => Verdict::Holds,
        (Sense::AtMost, true, _) | (Sense::AtLeast, _, true) => Verdict::Violated,
        _ => Verdict::Boundary,
    }
}

fn safe_ratio<T: Real>(lhs: T, rhs: T) -> T {
    if rhs != T::zero() {
        lhs / rhs
    } else if lhs == T::zero() {
        T::one()
    } else {
        T::infinity() * lhs.signum()
    }
}

/// One evaluated inequality. Pure data: the verdict is a function of
/// `lhs`, `rhs` and `sense`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct InequalityReport<T: Real> {
    pub label: String,
    pub lhs: T,
    pub rhs: T,
    pub ratio: T,
    pub sense: Sense,
    pub verdict: Verdict,
    /// Hash of the inputs that produced the two sides.
    pub fingerprint: String,
}

impl<T: Real> InequalityReport<T> {
    pub fn new(label: impl Into<String>, lhs: T, rhs: T, sense: Sense, fingerprint: String) -> Self {
        let ratio = safe_ratio(lhs, rhs);
        Self {
            label: label.into(),
            lhs,
            rhs,
            ratio,
            sense,
            verdict: verdict_for(ratio, sense),
            fingerprint,
        }
    }

    /// Verdict recomputed from `lhs` and `rhs` alone.
    pub fn recomputed_verdict(&self) -> Verdict {
        verdict_for(safe_ratio(self.lhs, self.rhs), self.sense)
    }
}

/// Hex digest of the label and the bit patterns of every input array.
pub fn fingerprint<T: Real>(label: &str, parts: &[&[T]]) -> String {
    let mut h = DefaultHasher::new();
    label.hash(&mut h);
    for part in parts {
        part.len().hash(&mut h);
        for x in part.iter() {
            x.to_f64_lossy().to_bits().hash(&mut h);
        }
    }
    format!("{:016x}", h.finish())
}

/// A named test function sampled on a quadrature rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrialField<T: Real> {
    pub label: String,
    pub samples: NodalSamples<T>,
}

/// Constants, low harmonics on top of a constant, and every bubble of
/// `eps_grid` that the rule resolves.
pub fn standard_trials<T: Real>(basis: &ZonalBasis<T>, eps_grid: &[T]) -> Result<Vec<TrialField<T>>> {
    let rule = basis.rule();
    let mut out = vec![TrialField {
        label: "constant".into(),
        samples: NodalSamples::constant(T::one(), rule.len()),
    }];
    let constant = basis.samples(&basis.harmonic(0)?)?;
    let c0 = constant.values[0];
    for l in 1..=basis.degree().min(4) {
        let z = basis.samples(&basis.harmonic(l)?)?;
        let scale = T::lit(0.5) / basis.pole_values()[l];
        out.push(TrialField {
            label: format!("constant + Z_{l}/2"),
            samples: constant.scaled(T::one() / c0).combine(T::one(), &z, scale),
        });
    }
    for &eps in eps_grid {
        let spec = BubbleSpec::north(eps)?;
        if check_resolution(rule, &spec).is_err() {
            continue;
        }
        out.push(TrialField {
            label: format!("bubble eps={}", eps.to_f64_lossy()),
            samples: bubble_field(&spec, rule)?.normalized,
        });
    }
    Ok(out)
}

struct SphereNorms<T> {
    lebesgue_sq: T,
    laplacian_sq: T,
    l2_sq: T,
}

fn sphere_norms<T: Real>(f: &NodalSamples<T>, big_n: T, rule: &QuadratureRule<T>) -> SphereNorms<T> {
    let ln = lebesgue_norm(&f.values, big_n, rule);
    let lap: Vec<T> = f.laplacian.iter().map(|&x| x * x).collect();
    let sq: Vec<T> = f.values.iter().map(|&x| x * x).collect();
    SphereNorms {
        lebesgue_sq: ln * ln,
        laplacian_sq: rule.integrate(&lap),
        l2_sq: rule.integrate(&sq),
    }
}

/// One trial field checked against `‖u‖_N² ≤ (K₂² + ε)‖Δu‖₂² + A‖u‖₂²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Lemma1Row<T: Real> {
    /// With the oracle value of `K₂`.
    pub report: InequalityReport<T>,
    /// With the printed Gamma-function formula for `K₂`.
    pub printed: InequalityReport<T>,
    /// `‖u‖_N² / (K₂²‖Δu‖₂²)`; `None` when `Δu = 0`.
    pub sharpness: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Lemma1Audit<T: Real> {
    pub n: u32,
    pub eps: T,
    pub a_eps: T,
    pub k2_sq: T,
    pub k2_sq_printed: T,
    pub rows: Vec<Lemma1Row<T>>,
    /// Smallest `A(ε)` clearing every trial field (bisection), oracle `K₂`.
    pub minimal_a: T,
    pub minimal_a_printed: T,
}

/// Smallest `A ≥ 0` with `lhs_i ≤ c·lap_i + A·l2_i` for all `i`, by bisection.
fn minimal_constant<T: Real>(norms: &[SphereNorms<T>], c: T) -> T {
    let clears = |a: T| {
        norms
            .iter()
            .all(|m| m.lebesgue_sq <= c * m.laplacian_sq + a * m.l2_sq)
    };
    if clears(T::zero()) {
        return T::zero();
    }
    let mut hi = T::one();
    for _ in 0..2000 {
        if clears(hi) {
            break;
        }
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if clears(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn lemma1_audit<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    rule: &QuadratureRule<T>,
    eps: T,
    a_eps: T,
    trials: &[TrialField<T>],
) -> Result<Lemma1Audit<T>> {
    if !(eps >= T::zero()) || !(a_eps >= T::zero()) {
        return Err(LabError::InvalidArgument(format!(
            "need ε ≥ 0 and A(ε) ≥ 0, got ε = {eps}, A = {a_eps}"
        )));
    }
    if trials.is_empty() {
        return Err(LabError::InvalidArgument("empty trial family".into()));
    }
    for t in trials {
        if t.samples.len() != rule.len() {
            return Err(LabError::LengthMismatch {
                expected: rule.len(),
                got: t.samples.len(),
            });
        }
    }
    let n = coeffs.n;
    let big_n = coeffs.exponent();
    let k2_sq = coeffs.k2_sq();
    let printed = sharp_constant_report(&EinsteinData::<T>::round_sphere(n)?);
    let k2_sq_printed = T::one() / printed.printed_gamma_formula;

    let norms: Vec<SphereNorms<T>> = trials.iter().map(|t| sphere_norms(&t.samples, big_n, rule)).collect();
    let rows = trials
        .iter()
        .zip(&norms)
        .map(|(t, m)| {
            let fp = fingerprint(&t.label, &[&t.samples.values, &t.samples.laplacian]);
            let side = |k: T| (k + eps) * m.laplacian_sq + a_eps * m.l2_sq;
            Lemma1Row {
                report: InequalityReport::new(t.label.clone(), m.lebesgue_sq, side(k2_sq), Sense::AtMost, fp.clone()),
                printed: InequalityReport::new(
                    format!("{} (printed K2)", t.label),
                    m.lebesgue_sq,
                    side(k2_sq_printed),
                    Sense::AtMost,
                    fp,
                ),
                sharpness: (m.laplacian_sq > T::zero()).then(|| m.lebesgue_sq / (k2_sq * m.laplacian_sq)),
            }
        })
        .collect();
    Ok(Lemma1Audit {
        n,
        eps,
        a_eps,
        k2_sq,
        k2_sq_printed,
        rows,
        minimal_a: minimal_constant(&norms, k2_sq + eps),
        minimal_a_printed: minimal_constant(&norms, k2_sq_printed + eps),
    })
}

/// The refined inequality for one `(u, v)`, read two ways.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RefinedAudit<T: Real> {
    /// `∫ u^{N−2} v² ≤ 2^{−4/n} K₂² ∫ v P v (∫ u^N)^{2/N}`, literally.
    pub printed: InequalityReport<T>,
    /// `λ̄₂(u) ≥ 2^{4/n} K₂^{−2} (1+ε)^{−1}`.
    pub second_eigenvalue: InequalityReport<T>,
    pub lambda2_bar: T,
    pub threshold: T,
}

/// Evaluate both readings of the refined inequality; `u` is rescaled to
/// `∫ u^N = 1` first, `v` is used as given.
pub fn refined_inequality_ratio<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    basis: &ZonalBasis<T>,
    u: &ConformalDensity<T>,
    v: &NodalSamples<T>,
    eps: T,
) -> Result<RefinedAudit<T>> {
    let rule = basis.rule();
    if v.len() != rule.len() || u.values().len() != rule.len() {
        return Err(LabError::LengthMismatch {
            expected: rule.len(),
            got: v.len().min(u.values().len()),
        });
    }
    if !(eps >= T::zero()) {
        return Err(LabError::InvalidArgument(format!("ε must be nonnegative, got {eps}")));
    }
    let n = T::lit(f64::from(coeffs.n));
    let u = u.normalized();
    let two_pow = T::lit(2.0).powf(T::lit(4.0) / n);
    let energy = crate::bubbles::energy_form(v, v, coeffs, rule);
    let lhs = u.weighted_inner(rule, &v.values, &v.values);
    let rhs = coeffs.k2_sq() * energy / two_pow;
    let fp = fingerprint("refined", &[u.values(), &v.values]);

    let spectrum = density_spectrum(coeffs, basis, &u, 2)?;
    let lambda2_bar = normalized_invariant(&spectrum, &u)[1];
    let threshold = two_pow * coeffs.k2_inv_sq / (T::one() + eps);
    Ok(RefinedAudit {
        printed: InequalityReport::new("refined inequality as printed", lhs, rhs, Sense::AtMost, fp.clone()),
        second_eigenvalue: InequalityReport::new(
            "second-eigenvalue form",
            lambda2_bar,
            threshold,
            Sense::AtLeast,
            fp,
        ),
        lambda2_bar,
        threshold,
    })
}

/// Cut-off bubbles at both poles with disjoint supports, mixed as
/// `u = split·v_N + (1 − split)·v_S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TwoBubbleConfig<T: Real> {
    pub eps: T,
    pub delta: T,
    pub split: T,
}

/// Configurations exercised by the default audit.
pub fn default_two_bubble_configs<T: Real>() -> Vec<TwoBubbleConfig<T>> {
    let mut out = Vec::new();
    for &eps in &[0.1, 0.15, 0.25, 0.4] {
        for &split in &[0.5, 0.75] {
            out.push(TwoBubbleConfig {
                eps: T::lit(eps),
                delta: T::lit(0.5),
                split: T::lit(split),
            });
        }
    }
    out
}

/// Refined audit at a two-bubble density with `v` the northern bubble.
pub fn two_bubble_audit<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    basis: &ZonalBasis<T>,
    config: &TwoBubbleConfig<T>,
    eps_claim: T,
) -> Result<RefinedAudit<T>> {
    if !(config.split > T::zero() && config.split < T::one()) {
        return Err(LabError::InvalidArgument(format!(
            "split must lie in (0, 1), got {}",
            config.split
        )));
    }
    let rule = basis.rule();
    let north = bubble_field(&BubbleSpec::new(config.eps, config.delta, Pole::North)?, rule)?;
    let south = bubble_field(&BubbleSpec::new(config.eps, config.delta, Pole::South)?, rule)?;
    let u = north
        .normalized
        .combine(config.split, &south.normalized, T::one() - config.split);
    let density = ConformalDensity::from_values(rule, u.values)?;
    refined_inequality_ratio(coeffs, basis, &density, &north.normalized, eps_claim)
}

/// Mapped Gauss nodes on `(0, R)` with `r = R s²`, plus a Gauss rule in
/// `t = R/r` for the tail `(R, ∞)`. Weights carry `ω_{n−1} r^{n−1}` and the
/// Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EuclideanRadialGrid<T: Real> {
    pub n: u32,
    pub radius: T,
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub tail_nodes: Vec<T>,
    pub tail_weights: Vec<T>,
    /// Half-size tail rule; the difference estimates the tail error.
    coarse_tail_nodes: Vec<T>,
    coarse_tail_weights: Vec<T>,
}

impl<T: Real> EuclideanRadialGrid<T> {
    pub fn new(n: u32, radius: T, interior: usize, tail: usize) -> Result<Self> {
        CriticalExponent::new(n)?;
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(LabError::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if tail < 4 {
            return Err(LabError::InvalidArgument(format!("tail rule needs at least 4 nodes, got {tail}")));
        }
        let omega: T = sphere_volume(n - 1);
        let nm1 = i32::try_from(n - 1).expect("small dimension");
        let half = T::lit(0.5);
        let (x, w) = gauss_legendre::<T>(interior)?;
        let mut nodes = Vec::with_capacity(interior);
        let mut weights = Vec::with_capacity(interior);
        for (&xi, &wi) in x.iter().zip(&w) {
            let s = (xi + T::one()) * half;
            let r = radius * s * s;
            nodes.push(r);
            // dr = 2R s ds, ds = dx/2
            weights.push(omega * r.powi(nm1) * radius * s * wi);
        }
        let tail_rule = |m: usize| -> Result<(Vec<T>, Vec<T>)> {
            let (x, w) = gauss_legendre::<T>(m)?;
            Ok(x.iter()
                .zip(&w)
                .map(|(&xi, &wi)| {
                    let t = (xi + T::one()) * half;
                    let r = radius / t;
                    // dr = R/t² dt
                    (r, omega * r.powi(nm1) * radius / (t * t) * wi * half)
                })
                .unzip())
        };
        let (tail_nodes, tail_weights) = tail_rule(tail)?;
        let (coarse_tail_nodes, coarse_tail_weights) = tail_rule(tail / 2)?;
        Ok(Self {
            n,
            radius,
            nodes,
            weights,
            tail_nodes,
            tail_weights,
            coarse_tail_nodes,
            coarse_tail_weights,
        })
    }

    /// `R = 50`, 256 interior and 64 tail nodes.
    pub fn standard(n: u32) -> Result<Self> {
        Self::new(n, T::lit(EUCLIDEAN_RADIUS), 256, 64)
    }

    /// `ω_{n−1} R^n / n`.
    pub fn ball_volume(&self) -> T {
        let omega: T = sphere_volume(self.n - 1);
        let n = T::lit(f64::from(self.n));
        omega * self.radius.powf(n) / n
    }

    /// `∫_{|x| ≤ R} f(|x|) dx`.
    pub fn integrate_ball(&self, f: impl Fn(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&r, &w)| w * f(r)).sum()
    }

    /// `∫_{Rⁿ} f(|x|) dx`, rejected when the tail rule does not converge.
    pub fn integrate(&self, f: impl Fn(T) -> T) -> Result<T> {
        let inner = self.integrate_ball(&f);
        let tail: T = self.tail_nodes.iter().zip(&self.tail_weights).map(|(&r, &w)| w * f(r)).sum();
        let coarse: T = self
            .coarse_tail_nodes
            .iter()
            .zip(&self.coarse_tail_weights)
            .map(|(&r, &w)| w * f(r))
            .sum();
        let total = inner + tail;
        let err = (tail - coarse).abs();
        let scale = total.abs().max(T::min_positive_value());
        if !total.is_finite() || err > T::lit(DECAY_TOL) * scale {
            let frac = (tail.abs() / scale).to_f64_lossy();
            return Err(LabError::InsufficientDecay {
                radius: self.radius.to_f64_lossy(),
                tail: frac,
                required_radius: self.required_radius(&f, frac),
            });
        }
        Ok(total)
    }

    /// Radius at which plain truncation would lose less than [`DECAY_TOL`],
    /// from the local decay rate of `f` between `R` and `2R`.
    fn required_radius(&self, f: &impl Fn(T) -> T, tail_fraction: f64) -> f64 {
        let r = self.radius.to_f64_lossy();
        let (a, b) = (f(self.radius).abs().to_f64_lossy(), f(self.radius * T::lit(2.0)).abs().to_f64_lossy());
        let decay = (a / b).log2();
        let excess = decay - f64::from(self.n);
        if !(excess > 0.0) || !decay.is_finite() {
            return f64::INFINITY;
        }
        r * (tail_fraction / DECAY_TOL).max(1.0).powf(1.0 / excess)
    }
}

/// Euclidean form of the refined inequality for radial `u ≥ 0` and `v`
/// (given as `r ↦ (v, v', v'')`). `u` is rescaled to `∫ u^N dx = 1`, which
/// the statement needs to be scale-consistent.
pub fn euclidean_corollary_check<T: Real>(
    grid: &EuclideanRadialGrid<T>,
    u: impl Fn(T) -> T + Sync,
    v: impl Fn(T) -> (T, T, T) + Sync,
) -> Result<InequalityReport<T>> {
    let n = grid.n;
    let exponent = CriticalExponent::new(n)?;
    let big_n: T = exponent.value();
    let wexp: T = exponent.weight_value();
    let nm1 = T::lit(f64::from(n) - 1.0);
    let k2_sq = T::one() / crate::einstein::sharp_constant_oracle::<T>(n)?;

    let volume = grid.integrate(|r| u(r).abs().powf(big_n))?;
    if !(volume > T::zero()) {
        return Err(LabError::DegenerateDensity);
    }
    let scale = volume.powf(-T::one() / big_n);
    let lhs = grid.integrate(|r| {
        let (val, _, _) = v(r);
        (scale * u(r).abs()).powf(wexp) * val * val
    })?;
    let energy = grid.integrate(|r| {
        let (_, d1, d2) = v(r);
        let lap = -d2 - nm1 * d1 / r;
        lap * lap
    })?;
    if !(energy > T::zero()) {
        return Err(LabError::InvalidArgument("v has no bending energy".into()));
    }
    let two_pow = T::lit(2.0).powf(T::lit(4.0 / f64::from(n)));
    let rhs = k2_sq * energy / two_pow;
    let samples: Vec<T> = grid.nodes.iter().map(|&r| u(r)).chain(grid.nodes.iter().map(|&r| v(r).0)).collect();
    Ok(InequalityReport::new(
        "euclidean refined inequality",
        lhs,
        rhs,
        Sense::AtMost,
        fingerprint("euclidean", &[&samples]),
    ))
}

/// `r ↦ (f, f', f'')` for the standard bubble `(1 + r²)^{−(n−4)/2}`.
pub fn euclidean_bubble<T: Real>(n: u32) -> impl Fn(T) -> (T, T, T) + Sync {
    let m = T::lit((f64::from(n) - 4.0) / 2.0);
    move |r: T| {
        let base = T::one() + r * r;
        let g = base.powf(-m);
        let two = T::lit(2.0);
        let g1 = -two * m * r * g / base;
        let g2 = -two * m * g / base + T::lit(4.0) * m * (m + T::one()) * r * r * g / (base * base);
        (g, g1, g2)
    }
}

/// Relation between the first invariant and the Yamabe-type infimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MuRelationAudit<T: Real> {
    pub n: u32,
    /// Optimizer estimate of `μ₁`.
    pub mu1_hat: T,
    /// Infimum of `Y` over the trial family.
    pub mu_hat: T,
    pub mu_hat_label: String,
    /// Infimum of `Y` over constants alone.
    pub mu_hat_constants: T,
    /// `μ̂₁ K₂²`; the proposition needs this below 1.
    pub product: T,
    pub gap: T,
    /// `μ̂₁ K₂² < 1`.
    pub hypothesis: InequalityReport<T>,
    /// `μ̂₁ ≤ μ̂`, the unconditional direction.
    pub direction: InequalityReport<T>,
    /// `μ̂₁ ≤ μ̂ (1 + 1e−8)`.
    pub direction_ok: bool,
    pub trial_values: Vec<(String, T)>,
}

pub fn mu_relation_audit<T: Real>(data: &EinsteinData<T>, config: &OptimizerConfig<T>) -> Result<MuRelationAudit<T>> {
    let n = data.dimension();
    let coeffs = derive_coefficients(data);
    let config = OptimizerConfig { k: 1, ..*config };
    let run = minimize(data, &config)?;
    let mu1_hat = run.best_objective;

    let rule = build_quadrature(data, DEFAULT_BUBBLE_NODES)?;
    let basis = crate::zonal::build_basis(&rule, 8)?;
    let grid: Vec<T> = crate::bubbles::DEFAULT_EPS_GRID.iter().map(|&e| T::lit(e)).collect();
    let trials = standard_trials(&basis, &grid)?;
    let trial_values: Vec<(String, T)> = trials
        .par_iter()
        .map(|t| Ok((t.label.clone(), functional_y(&t.samples, &coeffs, &rule)?)))
        .collect::<Result<_>>()?;
    let (mu_hat_label, mu_hat) = trial_values
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .cloned()
        .expect("trial family is non-empty");
    let mu_hat_constants = trial_values[0].1;
    let product = mu1_hat * coeffs.k2_sq();
    let fp = fingerprint("mu relation", &[&run.best_params, &[mu_hat]]);
    Ok(MuRelationAudit {
        n,
        mu1_hat,
        mu_hat,
        mu_hat_label,
        mu_hat_constants,
        product,
        gap: (mu_hat - mu1_hat).abs(),
        hypothesis: InequalityReport::new("mu1 * K2^2 < 1", product, T::one(), Sense::AtMost, fp.clone()),
        direction: InequalityReport::new("mu1 <= mu", mu1_hat, mu_hat, Sense::AtMost, fp),
        direction_ok: mu1_hat <= mu_hat * (T::one() + T::lit(1e-8)),
        trial_values,
    })
}
