//! Concentrated test functions `φ_ε = η (r² + ε²)^{−(n−4)/2}`, the sharp
//! quotient `Y`, the small-ε sweep, the two-plane upper bound built from
//! `u_ε`, and the elementary inequality sampler.
//!
//! Bubble energies are evaluated in physical space from closed-form
//! derivatives. Projecting a bubble onto a truncated zonal basis would alias
//! badly for small ε.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::einstein::{CriticalExponent, OperatorCoefficients};
use crate::error::{LabError, Result};
use crate::scalar::Real;
use crate::spectral::{ConformalDensity, PlanePencil};
use crate::toolkit::lebesgue_norm;
use crate::zonal::{NodalSamples, QuadratureRule, ZonalBasis, ZonalField};

/// Nodes required inside the core `r ≤ 2ε` of a bubble.
pub const MIN_CORE_NODES: usize = 8;
/// Default cutoff radius.
pub const DEFAULT_DELTA: f64 = 0.5;
/// Default node count for bubble quadrature.
pub const DEFAULT_BUBBLE_NODES: usize = 400;
/// Default concentration grid.
pub const DEFAULT_EPS_GRID: [f64; 5] = [0.05, 0.075, 0.1, 0.15, 0.2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pole {
    North,
    South,
}

/// Shape of a cut-off bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BubbleSpec<T: Real> {
    pub eps: T,
    /// Cutoff radius: `η = 1` on `[0, δ]`, `η = 0` on `[2δ, π]`.
    pub delta: T,
    pub center: Pole,
    /// Continuity order of the cutoff (the quintic smoothstep is C²).
    pub smoothness: u32,
}

impl<T: Real> BubbleSpec<T> {
    pub fn new(eps: T, delta: T, center: Pole) -> Result<Self> {
        if !(eps > T::zero()) || !eps.is_finite() {
            return Err(LabError::InvalidArgument(format!("bubble scale must be positive, got {eps}")));
        }
        if !(delta > T::zero() && delta <= T::FRAC_PI_2()) {
            return Err(LabError::InvalidArgument(format!(
                "cutoff radius must lie in (0, π/2], got {delta}"
            )));
        }
        Ok(Self {
            eps,
            delta,
            center,
            smoothness: 2,
        })
    }

    pub fn north(eps: T) -> Result<Self> {
        Self::new(eps, T::lit(DEFAULT_DELTA), Pole::North)
    }
}

/// Quintic smoothstep cutoff and its first two derivatives in `r`.
fn cutoff<T: Real>(r: T, delta: T) -> (T, T, T) {
    if r <= delta {
        return (T::one(), T::zero(), T::zero());
    }
    if r >= T::lit(2.0) * delta {
        return (T::zero(), T::zero(), T::zero());
    }
    let s = (r - delta) / delta;
    let (s2, s3) = (s * s, s * s * s);
    let eta = T::one() - (T::lit(10.0) * s3 - T::lit(15.0) * s2 * s2 + T::lit(6.0) * s3 * s2);
    let d1 = -(T::lit(30.0) * s2 - T::lit(60.0) * s3 + T::lit(30.0) * s2 * s2) / delta;
    let d2 = -(T::lit(60.0) * s - T::lit(180.0) * s2 + T::lit(120.0) * s3) / (delta * delta);
    (eta, d1, d2)
}

/// `(r² + ε²)^{−m}` and its first two `r`-derivatives.
fn core_profile<T: Real>(r: T, eps: T, m: T) -> (T, T, T) {
    let base = r * r + eps * eps;
    let g = base.powf(-m);
    let two = T::lit(2.0);
    let g1 = -two * m * r * g / base;
    let g2 = -two * m * g / base + T::lit(4.0) * m * (m + T::one()) * r * r * g / (base * base);
    (g, g1, g2)
}

/// Node samples of a radial profile given as `r ↦ (f, f_r, f_rr)`, with
/// `r` the geodesic distance to `center`.
pub fn radial_samples<T: Real>(
    rule: &QuadratureRule<T>,
    center: Pole,
    profile: impl Fn(T) -> (T, T, T),
) -> NodalSamples<T> {
    let nm1 = T::lit(f64::from(rule.dimension()) - 1.0);
    let mut out = NodalSamples::constant(T::zero(), rule.len());
    for (j, theta) in rule.colatitudes().into_iter().enumerate() {
        let r = match center {
            Pole::North => theta,
            Pole::South => T::PI() - theta,
        };
        let (f, fr, frr) = profile(r);
        out.values[j] = f;
        out.dtheta[j] = match center {
            Pole::North => fr,
            Pole::South => -fr,
        };
        out.laplacian[j] = -frr - nm1 * fr / r.tan();
    }
    out
}

/// A bubble sampled at the nodes, before and after `L^N` normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BubbleField<T: Real> {
    pub spec: BubbleSpec<T>,
    pub phi: NodalSamples<T>,
    /// `v_ε = c_ε φ_ε` with `∫ v_ε^N = 1`.
    pub normalized: NodalSamples<T>,
    /// Normalizing constant `c_ε = (∫ φ_ε^N)^{−1/N}`.
    pub c_norm: T,
}

impl<T: Real> BubbleField<T> {
    /// Quadrature projection of `v_ε` onto a basis (aliases for small ε).
    pub fn to_field(&self, basis: &ZonalBasis<T>) -> Result<ZonalField<T>> {
        basis.analyze(&self.normalized.values)
    }
}

fn core_node_count<T: Real>(rule: &QuadratureRule<T>, spec: &BubbleSpec<T>) -> usize {
    let reach = T::lit(2.0) * spec.eps;
    rule.colatitudes()
        .into_iter()
        .filter(|&th| match spec.center {
            Pole::North => th <= reach,
            Pole::South => T::PI() - th <= reach,
        })
        .count()
}

/// Reject bubbles whose core is not resolved by the rule.
pub fn check_resolution<T: Real>(rule: &QuadratureRule<T>, spec: &BubbleSpec<T>) -> Result<()> {
    let nodes = core_node_count(rule, spec);
    if nodes < MIN_CORE_NODES {
        // Gauss nodes are roughly equispaced in θ with spacing π/q, a little
        // sparser next to the pole
        let required_q = (T::lit(MIN_CORE_NODES as f64 + 2.0) * T::PI() / (T::lit(2.0) * spec.eps))
            .ceil()
            .to_f64_lossy() as usize;
        return Err(LabError::Aliasing {
            nodes,
            required_nodes: MIN_CORE_NODES,
            required_q: required_q.max(rule.len() + 1),
        });
    }
    Ok(())
}

pub fn bubble_field<T: Real>(spec: &BubbleSpec<T>, rule: &QuadratureRule<T>) -> Result<BubbleField<T>> {
    check_resolution(rule, spec)?;
    let n = rule.dimension();
    let m = T::lit((f64::from(n) - 4.0) / 2.0);
    let (eps, delta) = (spec.eps, spec.delta);
    let phi = radial_samples(rule, spec.center, |r| {
        let (g, g1, g2) = core_profile(r, eps, m);
        let (e, e1, e2) = cutoff(r, delta);
        (e * g, e1 * g + e * g1, e2 * g + T::lit(2.0) * e1 * g1 + e * g2)
    });
    let big_n: T = CriticalExponent::new(n)?.value();
    let c_norm = T::one() / lebesgue_norm(&phi.values, big_n, rule);
    Ok(BubbleField {
        spec: *spec,
        normalized: phi.scaled(c_norm),
        phi,
        c_norm,
    })
}

/// `∫ (Δf Δg + α ∇f·∇g + ᾱ f g) dv`.
pub fn energy_form<T: Real>(
    f: &NodalSamples<T>,
    g: &NodalSamples<T>,
    coeffs: &OperatorCoefficients<T>,
    rule: &QuadratureRule<T>,
) -> T {
    let w = rule.weights();
    (0..rule.len())
        .map(|j| {
            w[j] * (f.laplacian[j] * g.laplacian[j]
                + coeffs.alpha * f.dtheta[j] * g.dtheta[j]
                + coeffs.alpha_bar * f.values[j] * g.values[j])
        })
        .sum()
}

/// `Y(v) = ∫ v P v / (∫ |v|^N)^{2/N}`.
pub fn functional_y<T: Real>(
    v: &NodalSamples<T>,
    coeffs: &OperatorCoefficients<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    let norm = lebesgue_norm(&v.values, coeffs.exponent(), rule);
    if !(norm > T::zero()) {
        return Err(LabError::InvalidArgument("Y of the zero field".into()));
    }
    Ok(energy_form(v, v, coeffs, rule) / (norm * norm))
}

/// One point of the concentration sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepPoint<T: Real> {
    pub eps: T,
    pub y: T,
    /// `Y / K₂^{−2}`.
    pub ratio_to_oracle: T,
    pub c_norm: T,
}

/// Least-squares fit `Y(ε) ≈ A − C ε²` over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepReport<T: Real> {
    pub n: u32,
    pub points: Vec<SweepPoint<T>>,
    /// Limit estimate `A`.
    pub a: T,
    /// Quadratic coefficient `C` of the fit.
    pub c_quadratic: T,
    /// Root-mean-square fit residual divided by `A`.
    pub relative_residual: T,
    pub oracle: T,
    /// `|A − K₂^{−2}| / K₂^{−2}`.
    pub limit_error: T,
    /// Regression slope of `log c_ε` against `log ε`; expected `(n−4)/2`.
    pub c_norm_slope: T,
}

fn linear_fit<T: Real>(x: &[T], y: &[T]) -> (T, T) {
    let m = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / m;
    let my = y.iter().copied().sum::<T>() / m;
    let sxy: T = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let sxx: T = x.iter().map(|&a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

pub fn epsilon_sweep<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    rule: &QuadratureRule<T>,
    grid: &[T],
    delta: T,
) -> Result<SweepReport<T>> {
    let n = coeffs.n;
    if n <= 6 {
        return Err(LabError::Dimension(n));
    }
    if grid.len() < 3 {
        return Err(LabError::InvalidArgument(format!(
            "the sweep needs at least 3 grid points, got {}",
            grid.len()
        )));
    }
    let points: Vec<SweepPoint<T>> = grid
        .par_iter()
        .map(|&eps| {
            let spec = BubbleSpec::new(eps, delta, Pole::North)?;
            let b = bubble_field(&spec, rule)?;
            let y = functional_y(&b.phi, coeffs, rule)?;
            Ok(SweepPoint {
                eps,
                y,
                ratio_to_oracle: y / coeffs.k2_inv_sq,
                c_norm: b.c_norm,
            })
        })
        .collect::<Result<_>>()?;
    let x: Vec<T> = points.iter().map(|p| p.eps * p.eps).collect();
    let y: Vec<T> = points.iter().map(|p| p.y).collect();
    let (a, slope) = linear_fit(&x, &y);
    let rms = (x
        .iter()
        .zip(&y)
        .map(|(&xi, &yi)| (a + slope * xi - yi).powi(2))
        .sum::<T>()
        / T::from_usize_lossy(x.len()))
    .sqrt();
    let lx: Vec<T> = points.iter().map(|p| p.eps.ln()).collect();
    let lc: Vec<T> = points.iter().map(|p| p.c_norm.ln()).collect();
    let (_, c_norm_slope) = linear_fit(&lx, &lc);
    Ok(SweepReport {
        n,
        points,
        a,
        c_quadratic: -slope,
        relative_residual: rms / a,
        oracle: coeffs.k2_inv_sq,
        limit_error: ((a - coeffs.k2_inv_sq) / coeffs.k2_inv_sq).abs(),
        c_norm_slope,
    })
}

/// Two-plane bound at one concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Lemma3Row<T: Real> {
    pub eps: T,
    /// `Y(v_ε)`.
    pub y_eps: T,
    /// `sup_{span(v_ε, v)} R · (∫ u_ε^N)^{4/n}`, an upper bound for `λ̄₂(u_ε)`.
    pub bound: T,
    /// `bound / rhs`.
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Lemma3Report<T: Real> {
    pub n: u32,
    pub mu1: T,
    /// `[μ₁^{n/4} + (K₂^{−2})^{n/4}]^{4/n}`.
    pub rhs: T,
    pub rows: Vec<Lemma3Row<T>>,
    /// Smallest bound over the grid.
    pub best_bound: T,
    pub best_eps: T,
    /// `n ≥ 12`.
    pub in_hypothesis: bool,
    pub note: Option<String>,
}

impl<T: Real> Lemma3Report<T> {
    pub fn best_ratio(&self) -> T {
        self.best_bound / self.rhs
    }
}

/// `[μ₁^{n/4} + (K₂^{−2})^{n/4}]^{4/n}`.
pub fn lemma3_rhs<T: Real>(n: u32, mu1: T, k2_inv_sq: T) -> T {
    let q = T::lit(f64::from(n) / 4.0);
    (mu1.powf(q) + k2_inv_sq.powf(q)).powf(T::one() / q)
}

/// Upper bound for `λ̄₂` at `u_ε = Y(v_ε)^{1/(N−2)} v_ε + μ₁^{1/(N−2)} v`
/// with `v` the normalized constant, over the plane `span(v_ε, v)`.
pub fn lemma3_bound<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    rule: &QuadratureRule<T>,
    mu1: T,
    grid: &[T],
    delta: T,
) -> Result<Lemma3Report<T>> {
    let n = coeffs.n;
    if grid.is_empty() {
        return Err(LabError::InvalidArgument("empty concentration grid".into()));
    }
    if !(mu1 > T::zero()) {
        return Err(LabError::InvalidArgument(format!("μ₁ must be positive, got {mu1}")));
    }
    let big_n = coeffs.exponent();
    let inv_w = T::one() / coeffs.weight_exponent();
    let vol = rule.volume();
    let constant = NodalSamples::constant(vol.powf(-T::one() / big_n), rule.len());
    let rhs = lemma3_rhs(n, mu1, coeffs.k2_inv_sq);
    let four_over_n = T::lit(4.0 / f64::from(n));

    let rows: Vec<Lemma3Row<T>> = grid
        .par_iter()
        .map(|&eps| {
            let spec = BubbleSpec::new(eps, delta, Pole::North)?;
            let b = bubble_field(&spec, rule)?;
            let ve = &b.normalized;
            let y_eps = functional_y(ve, coeffs, rule)?;
            let u = ve.combine(y_eps.powf(inv_w), &constant, mu1.powf(inv_w));
            let density = ConformalDensity::from_values(rule, u.values.clone())?;
            let pencil = PlanePencil {
                a: [
                    [energy_form(ve, ve, coeffs, rule), energy_form(ve, &constant, coeffs, rule)],
                    [energy_form(&constant, ve, coeffs, rule), energy_form(&constant, &constant, coeffs, rule)],
                ],
                b: [
                    [
                        density.weighted_inner(rule, &ve.values, &ve.values),
                        density.weighted_inner(rule, &ve.values, &constant.values),
                    ],
                    [
                        density.weighted_inner(rule, &constant.values, &ve.values),
                        density.weighted_inner(rule, &constant.values, &constant.values),
                    ],
                ],
            };
            let (_, high) = pencil.eigenvalues()?;
            let bound = high * density.volume().powf(four_over_n);
            Ok(Lemma3Row {
                eps,
                y_eps,
                bound,
                ratio: bound / rhs,
            })
        })
        .collect::<Result<_>>()?;
    let best = rows
        .iter()
        .min_by(|p, q| p.bound.partial_cmp(&q.bound).unwrap_or(std::cmp::Ordering::Equal))
        .copied()
        .expect("grid is non-empty");
    let in_hypothesis = n >= 12;
    Ok(Lemma3Report {
        n,
        mu1,
        rhs,
        best_bound: best.bound,
        best_eps: best.eps,
        rows,
        in_hypothesis,
        note: (!in_hypothesis).then(|| format!("n = {n} is outside the lemma's hypothesis n ≥ 12")),
    })
}

/// Outcome of sampling `(x+y)^p ≤ x^p + y^p + C(x^{p−1}y + x y^{p−1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementaryReport {
    pub p: f64,
    pub c: f64,
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs/rhs − 1` seen.
    pub max_excess: f64,
    pub seed: u64,
}

/// Sample `(x, y)` log-uniformly on `[1e−6, 1e6]²` and count violations.
///
/// Both sides are divided by `max(x, y)^p`, which leaves the scale-free form
/// `(1+s)^p ≤ 1 + s^p + C(s + s^{p−1})` with `s = min/max`.
pub fn elementary_inequality_check(p: f64, c: f64, samples: usize, seed: u64) -> Result<ElementaryReport> {
    if !(p > 2.0) {
        return Err(LabError::InvalidArgument(format!("exponent must exceed 2, got {p}")));
    }
    if !(c > 0.0) {
        return Err(LabError::InvalidArgument(format!("constant must be positive, got {c}")));
    }
    if samples == 0 {
        return Err(LabError::InvalidArgument("at least one sample is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..samples {
        let x = 10f64.powf(rng.gen_range(-6.0..=6.0));
        let y = 10f64.powf(rng.gen_range(-6.0..=6.0));
        let s = x.min(y) / x.max(y);
        let lhs = (1.0 + s).powf(p);
        let rhs = 1.0 + s.powf(p) + c * (s + s.powf(p - 1.0));
        let excess = lhs / rhs - 1.0;
        max_excess = max_excess.max(excess);
        if excess > 1e-12 {
            violations += 1;
        }
    }
    Ok(ElementaryReport {
        p,
        c,
        samples,
        violations,
        max_excess,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::einstein::{derive_coefficients, EinsteinData};
    use crate::zonal::{build_basis, build_quadrature};
    use proptest::prelude::*;

    fn setup(n: u32, q: usize) -> (OperatorCoefficients<f64>, QuadratureRule<f64>) {
        let data = EinsteinData::round_sphere(n).unwrap();
        (derive_coefficients(&data), build_quadrature(&data, q).unwrap())
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn cutoff_is_c2() {
        let d = 0.5f64;
        for &r in &[d, 2.0 * d] {
            let (l0, l1, l2) = cutoff(r - 1e-9, d);
            let (h0, h1, h2) = cutoff(r + 1e-9, d);
            assert!((l0 - h0).abs() < 1e-8 && (l1 - h1).abs() < 1e-6 && (l2 - h2).abs() < 1e-6);
        }
        // derivative consistency by central differences
        let r = 0.73;
        let h = 1e-5;
        let (_, d1, d2) = cutoff(r, d);
        let fd1 = (cutoff(r + h, d).0 - cutoff(r - h, d).0) / (2.0 * h);
        let fd2 = (cutoff(r + h, d).1 - cutoff(r - h, d).1) / (2.0 * h);
        assert!((d1 - fd1).abs() < 1e-8 && (d2 - fd2).abs() < 1e-6);
    }

    #[test]
    fn bubble_matches_profile_inside_cutoff() {
        let (_, rule) = setup(12, 400);
        let spec = BubbleSpec::north(0.1).unwrap();
        let b = bubble_field(&spec, &rule).unwrap();
        for (j, th) in rule.colatitudes().into_iter().enumerate() {
            if th <= 0.5 {
                assert_eq!(b.phi.values[j], (th * th + 0.1f64 * 0.1).powf(-4.0));
            }
            if th >= 1.0 {
                assert_eq!(b.phi.values[j], 0.0);
            }
        }
        let vn: Vec<f64> = b.normalized.values.iter().map(|v| v.powi(3)).collect();
        assert!((rule.integrate(&vn) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn south_bubble_mirrors_north() {
        let (coeffs, rule) = setup(8, 200);
        let n = bubble_field(&BubbleSpec::north(0.2).unwrap(), &rule).unwrap();
        let s = bubble_field(&BubbleSpec::new(0.2, 0.5, Pole::South).unwrap(), &rule).unwrap();
        let yn = functional_y(&n.phi, &coeffs, &rule).unwrap();
        let ys = functional_y(&s.phi, &coeffs, &rule).unwrap();
        assert!(rel(yn, ys) < 1e-12);
        let q = rule.len();
        assert!((n.phi.values[0] - s.phi.values[q - 1]).abs() < 1e-9 * n.phi.values[0].abs().max(1e-300));
    }

    #[test]
    fn physical_energy_matches_coefficient_energy() {
        let (coeffs, rule) = setup(7, 80);
        let basis = build_basis(&rule, 12).unwrap();
        let f = basis.field(vec![1.0, -0.3, 0.2, 0.0, 0.1, 0.0, 0.0, 0.05, 0.0, 0.0, 0.0, 0.0, 0.02]).unwrap();
        let s = basis.samples(&f).unwrap();
        let phys = energy_form(&s, &s, &coeffs, &rule);
        let spectral: f64 = f
            .coeffs()
            .iter()
            .zip(basis.laplace_eigenvalues())
            .map(|(c, &mu)| coeffs.symbol(mu) * c * c)
            .sum();
        assert!(rel(phys, spectral) < 1e-12);
    }

    #[test]
    fn y_examples() {
        let (coeffs, rule) = setup(5, 60);
        let basis = build_basis(&rule, 6).unwrap();
        let c = NodalSamples::constant(0.3, rule.len());
        let yc = functional_y(&c, &coeffs, &rule).unwrap();
        assert!(rel(yc, coeffs.k2_inv_sq) < 1e-12);
        assert!((yc - 102.38).abs() < 0.01);
        let z1 = basis.samples(&basis.harmonic(1).unwrap()).unwrap();
        let y1 = functional_y(&z1, &coeffs, &rule).unwrap();
        assert!(y1 > yc);
        assert!(rel(functional_y(&z1.scaled(-4.0), &coeffs, &rule).unwrap(), y1) < 1e-12);
        assert!(functional_y(&NodalSamples::constant(0.0, rule.len()), &coeffs, &rule).is_err());
    }

    #[test]
    fn unresolved_bubbles_are_rejected() {
        let (_, rule) = setup(12, 200);
        match bubble_field(&BubbleSpec::north(0.05).unwrap(), &rule) {
            Err(LabError::Aliasing { nodes, required_q, .. }) => {
                assert!(nodes < MIN_CORE_NODES);
                assert!(required_q > 200);
            }
            other => panic!("{other:?}"),
        }
        assert!(BubbleSpec::<f64>::north(0.0).is_err());
        assert!(BubbleSpec::new(0.1, 2.0, Pole::North).is_err());
    }

    #[test]
    fn sweep_guards() {
        let (coeffs, rule) = setup(5, 400);
        assert_eq!(
            epsilon_sweep(&coeffs, &rule, &DEFAULT_EPS_GRID, 0.5).unwrap_err(),
            LabError::Dimension(5)
        );
        let (coeffs, rule) = setup(12, 400);
        assert!(epsilon_sweep(&coeffs, &rule, &[0.1, 0.2], 0.5).is_err());
    }

    #[test]
    fn sweep_limit_and_norm_scaling_at_twelve() {
        let (coeffs, rule) = setup(12, DEFAULT_BUBBLE_NODES);
        let r = epsilon_sweep(&coeffs, &rule, &DEFAULT_EPS_GRID, DEFAULT_DELTA).unwrap();
        assert!(r.limit_error < 0.02, "A = {} vs {}", r.a, r.oracle);
        assert!(r.relative_residual < 0.01);
        assert!((r.c_norm_slope - 4.0).abs() < 0.4, "slope {}", r.c_norm_slope);
        for p in &r.points {
            assert!(p.ratio_to_oracle >= 1.0 - 1e-6, "{p:?}");
        }
    }

    #[test]
    fn lemma3_rhs_at_twelve_and_bound() {
        let (coeffs, rule) = setup(12, DEFAULT_BUBBLE_NODES);
        let k = coeffs.k2_inv_sq;
        assert!(rel(lemma3_rhs(12, k, k), 2f64.powf(1.0 / 3.0) * k) < 1e-14);
        let r = lemma3_bound(&coeffs, &rule, k, &[0.05, 0.1, 0.2], DEFAULT_DELTA).unwrap();
        assert!(r.in_hypothesis && r.note.is_none());
        assert!(r.best_ratio() <= 1.05, "ratio {}", r.best_ratio());
        assert_eq!(r.best_eps, 0.05);
        let wide = lemma3_bound(&coeffs, &rule, k, &[1.5], DEFAULT_DELTA).unwrap();
        assert!(wide.best_ratio() > r.best_ratio());
        let (c8, r8) = setup(8, 200);
        let low = lemma3_bound(&c8, &r8, c8.k2_inv_sq, &[0.2], DEFAULT_DELTA).unwrap();
        assert!(!low.in_hypothesis && low.note.is_some());
    }

    #[test]
    fn elementary_examples() {
        assert_eq!(elementary_inequality_check(3.0, 3.0, 10_000, 1).unwrap().violations, 0);
        assert_eq!(elementary_inequality_check(4.0, 16.0, 100_000, 2).unwrap().violations, 0);
        assert!(elementary_inequality_check(4.0, 0.1, 10_000, 3).unwrap().violations > 0);
        assert!(elementary_inequality_check(2.0, 1.0, 10, 3).is_err());
        assert!(elementary_inequality_check(3.0, 0.0, 10, 3).is_err());
        assert!(elementary_inequality_check(3.0, 1.0, 0, 3).is_err());
        let a = elementary_inequality_check(5.5, 45.0, 1000, 9).unwrap();
        let b = elementary_inequality_check(5.5, 45.0, 1000, 9).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn y_bounded_below_by_sharp_constant(c in proptest::collection::vec(-1.0f64..1.0, 9), n in 5u32..14) {
            let (coeffs, rule) = setup(n, 40);
            let basis = build_basis(&rule, 8).unwrap();
            let f = basis.field(c).unwrap();
            prop_assume!(f.max_abs() > 1e-3);
            let y = functional_y(&basis.samples(&f).unwrap(), &coeffs, &rule).unwrap();
            prop_assert!(y >= coeffs.k2_inv_sq * (1.0 - 1e-10));
        }
    }
}
