//! Eigenfunction constructions: the positive lift of a first eigenfield, the
//! orthogonal pair, nodal profiles and the `|w| = u` fixed-point diagnostic.

use serde::{Deserialize, Serialize};

use crate::einstein::OperatorCoefficients;
use crate::error::{LabError, Result};
use crate::scalar::Real;
use crate::spectral::{
    assemble_mass, assemble_stiffness, rayleigh, solve_generalized_eigen, ConformalDensity,
};
use crate::zonal::{QuadratureRule, ZonalBasis, ZonalField};

/// Relative dead-band used when reading signs off node values.
pub const SIGN_DEAD_BAND: f64 = 1e-9;

/// Positive lift `f` of a first eigenfield `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PositivityResult<T: Real> {
    /// Lift solving `Δf + (α/2)f = |Δv + (α/2)v|`.
    pub f: ZonalField<T>,
    /// `f̂ = k f`, normalized so that `∫ u^{N−2} f̂² = 1`.
    pub f_hat: ZonalField<T>,
    pub k: T,
    /// `∫ (Δf̂)² + α|∇f̂|² + ᾱ f̂²`.
    pub energy: T,
    /// First eigenvalue of the pencil.
    pub lambda1: T,
    /// Rayleigh quotient of the input `v`; equals `λ₁` for a first eigenfield.
    pub v_rayleigh: T,
    /// `energy − λ₁`.
    pub gap: T,
    /// `min_j (f − |v|)(x_j)`.
    pub min_margin: T,
    /// `min_j f(x_j)`.
    pub min_value: T,
}

fn curvature_from_alpha<T: Real>(coeffs: &OperatorCoefficients<T>) -> T {
    let n = T::lit(f64::from(coeffs.n));
    coeffs.alpha * T::lit(2.0) * n * (n - T::one()) / (n * n - T::lit(2.0) * n - T::lit(4.0))
}

/// Lift `v` to a positive field with no larger Paneitz energy per unit mass.
///
/// `r = Δv + (α/2)v` is formed at the nodes, `|r|` is projected onto the
/// basis, and `(Δ + α/2)` is inverted diagonally.
pub fn positivity_lift<T: Real>(
    v: &ZonalField<T>,
    coeffs: &OperatorCoefficients<T>,
    basis: &ZonalBasis<T>,
    density: &ConformalDensity<T>,
) -> Result<PositivityResult<T>> {
    if !(coeffs.alpha > T::zero()) {
        return Err(LabError::NonPositiveCurvature(
            curvature_from_alpha(coeffs).to_f64_lossy(),
        ));
    }
    let a = assemble_stiffness(coeffs, basis)?;
    let b = assemble_mass(density, basis)?;
    let v_rayleigh = rayleigh(&a, &b, v)?;
    let lambda1 = solve_generalized_eigen(&a, &b, 1, basis)?.eigenvalues[0];

    let half = coeffs.alpha * T::lit(0.5);
    let lap = basis.laplacian_coeffs(v.coeffs())?;
    let r_coeffs: Vec<T> = lap.iter().zip(v.coeffs()).map(|(&d, &c)| d + half * c).collect();
    let r_abs: Vec<T> = basis.synthesize(&r_coeffs)?.iter().map(|x| x.abs()).collect();
    let projected = basis.project(&r_abs)?;
    let f_coeffs: Vec<T> = projected
        .iter()
        .zip(basis.laplace_eigenvalues())
        .map(|(&r, &mu)| r / (mu + half))
        .collect();
    let f = basis.field(f_coeffs)?;

    let mass = b.bilinear(f.coeffs(), f.coeffs());
    if !(mass > T::zero()) {
        return Err(LabError::NullMass);
    }
    let v_mass = b.bilinear(v.coeffs(), v.coeffs());
    // f ≥ |v| gives ∫u^{N−2}f² ≥ ∫u^{N−2}v², so k ≤ 1 for B-normalized v
    let k = (v_mass / mass).sqrt();
    let f_hat = f.scaled(k / v_mass.sqrt());
    let energy = a.bilinear(f_hat.coeffs(), f_hat.coeffs());
    let min_margin = f
        .values()
        .iter()
        .zip(v.values())
        .map(|(&fv, &vv)| fv - vv.abs())
        .fold(T::infinity(), T::min);
    let min_value = f.values().iter().copied().fold(T::infinity(), T::min);
    Ok(PositivityResult {
        f,
        f_hat,
        k,
        energy,
        lambda1,
        v_rayleigh,
        gap: energy - lambda1,
        min_margin,
        min_value,
    })
}

/// Result of the orthogonal pair construction `w = α v + β s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OrthogonalPair<T: Real> {
    /// `t = ∫ u^{N−2} v s`.
    pub t: T,
    pub alpha: T,
    pub beta: T,
    /// Node values of `w`.
    pub w: Vec<T>,
    /// `∫ u^{N−2} v w`.
    pub orthogonality: T,
    /// `∫ u^{N−2} w²`.
    pub normalization: T,
    /// The printed pair `(√(t/(1−t)), −1/√((1−t)t))`, defined for `0 < t < 1`.
    pub printed: Option<PrintedPair<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PrintedPair<T: Real> {
    pub alpha: T,
    pub beta: T,
    pub orthogonality: T,
    /// Measured `∫ u^{N−2} w²`; symbolically `(1+t)/t`.
    pub normalization: T,
    /// `(1+t)/t`.
    pub normalization_closed_form: T,
    pub defective: bool,
}

/// Rescale node values so that `∫ u^{N−2} v² = 1`.
pub fn weighted_normalize<T: Real>(
    values: &[T],
    density: &ConformalDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<Vec<T>> {
    let m = density.weighted_inner(rule, values, values);
    if !(m > T::zero()) {
        return Err(LabError::NullMass);
    }
    let s = m.sqrt();
    Ok(values.iter().map(|&x| x / s).collect())
}

/// `w = α v + β s` with `∫u^{N−2}vw = 0` and `∫u^{N−2}w² = 1`.
///
/// `v` and `s` are node values, each of unit weighted norm.
pub fn orthogonal_pair<T: Real>(
    v: &[T],
    s: &[T],
    density: &ConformalDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<OrthogonalPair<T>> {
    let tol = T::lit(1e-8);
    for (name, f) in [("v", v), ("s", s)] {
        let m = density.weighted_inner(rule, f, f);
        if (m - T::one()).abs() > tol {
            return Err(LabError::InvalidArgument(format!(
                "{name} must have unit weighted norm, got {m}"
            )));
        }
    }
    let t = density.weighted_inner(rule, v, s);
    if !(t.abs() < T::one() - T::lit(1e-12)) {
        return Err(LabError::Colinear(t.to_f64_lossy()));
    }
    let root = ((T::one() - t) * (T::one() + t)).sqrt();
    let alpha = -t / root;
    let beta = T::one() / root;
    let combine = |a: T, b: T| -> Vec<T> { v.iter().zip(s).map(|(&x, &y)| a * x + b * y).collect() };
    let w = combine(alpha, beta);
    let orthogonality = density.weighted_inner(rule, v, &w);
    let normalization = density.weighted_inner(rule, &w, &w);

    let printed = (t > T::lit(1e-12)).then(|| {
        let pa = (t / (T::one() - t)).sqrt();
        let pb = -T::one() / ((T::one() - t) * t).sqrt();
        let pw = combine(pa, pb);
        let norm = density.weighted_inner(rule, &pw, &pw);
        PrintedPair {
            alpha: pa,
            beta: pb,
            orthogonality: density.weighted_inner(rule, v, &pw),
            normalization: norm,
            normalization_closed_form: (T::one() + t) / t,
            defective: (norm - T::one()).abs() > tol,
        }
    });
    Ok(OrthogonalPair {
        t,
        alpha,
        beta,
        w,
        orthogonality,
        normalization,
        printed,
    })
}

/// Sign structure of a zonal field along the meridian `θ ∈ [0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NodalProfile<T: Real> {
    pub sign_changes: usize,
    pub min_value: T,
    pub max_value: T,
    /// Colatitudes of the crossings, by linear interpolation, increasing.
    pub crossings: Vec<T>,
    /// `∫ u^{N−2} v w`.
    pub weighted_orthogonality: T,
    pub nodal: bool,
}

pub fn nodal_profile<T: Real>(
    w: &[T],
    density: &ConformalDensity<T>,
    v: &[T],
    rule: &QuadratureRule<T>,
) -> Result<NodalProfile<T>> {
    if w.len() != rule.len() {
        return Err(LabError::LengthMismatch {
            expected: rule.len(),
            got: w.len(),
        });
    }
    let big = w.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if big == T::zero() {
        return Err(LabError::InvalidArgument("nodal profile of the zero field".into()));
    }
    let band = big * T::lit(SIGN_DEAD_BAND);
    let thetas = rule.colatitudes();
    // nodes run north to south when traversed in reverse
    let mut last: Option<(T, T)> = None;
    let mut crossings = Vec::new();
    for j in (0..w.len()).rev() {
        let (th, val) = (thetas[j], w[j]);
        if val.abs() <= band {
            continue;
        }
        if let Some((th0, v0)) = last {
            if (v0 > T::zero()) != (val > T::zero()) {
                crossings.push(th0 + (th - th0) * v0 / (v0 - val));
            }
        }
        last = Some((th, val));
    }
    let min_value = w.iter().copied().fold(T::infinity(), T::min);
    let max_value = w.iter().copied().fold(T::neg_infinity(), T::max);
    Ok(NodalProfile {
        sign_changes: crossings.len(),
        min_value,
        max_value,
        nodal: !crossings.is_empty(),
        crossings,
        weighted_orthogonality: density.weighted_inner(rule, v, w),
    })
}

/// `(∫ |f|^N dv)^{1/N}`.
pub fn lebesgue_norm<T: Real>(values: &[T], p: T, rule: &QuadratureRule<T>) -> T {
    let pw: Vec<T> = values.iter().map(|x| x.abs().powf(p)).collect();
    rule.integrate(&pw).powf(T::one() / p)
}

/// `‖ |w|/‖w‖_N − u/‖u‖_N ‖_N`; zero exactly when `u ∝ |w|` at the nodes.
pub fn fixed_point_residual<T: Real>(
    w: &[T],
    density: &ConformalDensity<T>,
    rule: &QuadratureRule<T>,
) -> Result<T> {
    if w.len() != rule.len() {
        return Err(LabError::LengthMismatch {
            expected: rule.len(),
            got: w.len(),
        });
    }
    let p: T = crate::einstein::CriticalExponent::new(rule.dimension())?.value();
    let wn = lebesgue_norm(w, p, rule);
    if !(wn > T::zero()) {
        return Err(LabError::InvalidArgument("fixed-point residual of the zero field".into()));
    }
    let un = lebesgue_norm(density.values(), p, rule);
    let diff: Vec<T> = w
        .iter()
        .zip(density.values())
        .map(|(&a, &u)| a.abs() / wn - u / un)
        .collect();
    Ok(lebesgue_norm(&diff, p, rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::einstein::{derive_coefficients, EinsteinData};
    use crate::spectral::density_spectrum;
    use crate::zonal::{build_basis, build_quadrature};
    use proptest::prelude::*;

    fn setup(n: u32, l: usize, q: usize) -> (OperatorCoefficients<f64>, ZonalBasis<f64>) {
        let data = EinsteinData::round_sphere(n).unwrap();
        let rule = build_quadrature(&data, q).unwrap();
        (derive_coefficients(&data), build_basis(&rule, l).unwrap())
    }

    #[test]
    fn constant_lift_is_identity() {
        let (coeffs, basis) = setup(5, 12, 40);
        let u = ConformalDensity::constant(basis.rule(), 1.0).unwrap();
        let spec = density_spectrum(&coeffs, &basis, &u, 1).unwrap();
        let v = &spec.eigenfields[0];
        let r = positivity_lift(v, &coeffs, &basis, &u).unwrap();
        assert!((r.k - 1.0).abs() < 1e-12);
        assert!(r.gap.abs() < 1e-9 * r.lambda1);
        for (a, b) in r.f.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let neg = v.scaled(-1.0);
        let rn = positivity_lift(&neg, &coeffs, &basis, &u).unwrap();
        for (a, b) in rn.f.values().iter().zip(v.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn first_harmonic_lift_dominates() {
        let (coeffs, basis) = setup(5, 48, 200);
        let u = ConformalDensity::constant(basis.rule(), 1.0).unwrap();
        let v = basis.harmonic(1).unwrap();
        let r = positivity_lift(&v, &coeffs, &basis, &u).unwrap();
        assert!(r.min_value > 0.0);
        assert!(r.min_margin > 0.0, "{} {} {}", r.min_margin, r.min_value, r.k);
        assert!(r.k > 0.0 && r.k <= 1.0);
        assert!(r.gap >= -1e-8);
    }

    #[test]
    fn lift_requires_positive_curvature() {
        let data = EinsteinData::<f64>::new(5, -1.0).unwrap();
        let rule = build_quadrature(&data, 20).unwrap();
        let basis = build_basis(&rule, 4).unwrap();
        let coeffs = derive_coefficients(&data);
        let u = ConformalDensity::constant(&rule, 1.0).unwrap();
        match positivity_lift(&basis.harmonic(0).unwrap(), &coeffs, &basis, &u) {
            Err(LabError::NonPositiveCurvature(s)) => assert!((s + 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    fn unit_pair(t: f64) -> (Vec<f64>, Vec<f64>, ConformalDensity<f64>, QuadratureRule<f64>) {
        let (_, basis) = setup(6, 4, 20);
        let rule = basis.rule().clone();
        let u = ConformalDensity::constant(&rule, 1.0).unwrap();
        let z0 = basis.harmonic(0).unwrap();
        let z1 = basis.harmonic(1).unwrap();
        let s = z0.combine(t, &z1, (1.0 - t * t).sqrt());
        (z0.values().to_vec(), s.values().to_vec(), u, rule)
    }

    #[test]
    fn orthogonal_pair_examples() {
        let (v, s, u, rule) = unit_pair(0.0);
        let p = orthogonal_pair(&v, &s, &u, &rule).unwrap();
        assert!(p.alpha.abs() < 1e-12 && (p.beta - 1.0).abs() < 1e-12);
        assert!(p.printed.is_none());

        let (v, s, u, rule) = unit_pair(0.5);
        let p = orthogonal_pair(&v, &s, &u, &rule).unwrap();
        assert!((p.t - 0.5).abs() < 1e-12);
        assert!((p.alpha + 0.577350269189626).abs() < 1e-12);
        assert!((p.beta - 1.154700538379252).abs() < 1e-12);
        assert!(p.orthogonality.abs() < 1e-12);
        assert!((p.normalization - 1.0).abs() < 1e-12);
        let printed = p.printed.unwrap();
        assert!(printed.defective, "{printed:?}");
        assert!((printed.normalization - 3.0).abs() < 1e-10);
        assert!((printed.normalization_closed_form - 3.0).abs() < 1e-12);
        assert!(printed.orthogonality.abs() < 1e-10);

        let (v, _, u, rule) = unit_pair(0.0);
        assert!(matches!(orthogonal_pair(&v, &v, &u, &rule), Err(LabError::Colinear(_))));
        let doubled: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        assert!(orthogonal_pair(&doubled, &v, &u, &rule).is_err());
    }

    #[test]
    fn nodal_profile_of_low_harmonics() {
        let (_, basis) = setup(5, 6, 40);
        let rule = basis.rule();
        let u = ConformalDensity::constant(rule, 1.0).unwrap();
        let z0 = basis.harmonic(0).unwrap();
        let z1 = basis.harmonic(1).unwrap();
        let p = nodal_profile(z1.values(), &u, z0.values(), rule).unwrap();
        assert_eq!(p.sign_changes, 1);
        assert!((p.crossings[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(p.weighted_orthogonality.abs() < 1e-12);
        let p0 = nodal_profile(z0.values(), &u, z0.values(), rule).unwrap();
        assert_eq!(p0.sign_changes, 0);
        assert!(!p0.nodal);
        let z3 = basis.harmonic(3).unwrap();
        assert_eq!(nodal_profile(z3.values(), &u, z0.values(), rule).unwrap().sign_changes, 3);
    }

    #[test]
    fn fixed_point_residual_cases() {
        let (_, basis) = setup(7, 6, 40);
        let rule = basis.rule();
        let w = basis.harmonic(2).unwrap();
        let abs: Vec<f64> = w.values().iter().map(|x| 3.0 * x.abs()).collect();
        let u = ConformalDensity::from_values(rule, abs).unwrap();
        assert!(fixed_point_residual(w.values(), &u, rule).unwrap() < 1e-14);
        let c = ConformalDensity::constant(rule, 1.0).unwrap();
        let z1 = basis.harmonic(1).unwrap();
        assert!(fixed_point_residual(z1.values(), &c, rule).unwrap() > 0.1);
    }

    proptest! {
        #[test]
        fn sign_count_is_scale_and_sign_invariant(
            c in proptest::collection::vec(-1.0f64..1.0, 7),
            scale in 0.01f64..100.0,
        ) {
            let (_, basis) = setup(6, 6, 30);
            let rule = basis.rule();
            let u = ConformalDensity::constant(rule, 1.0).unwrap();
            let w = basis.field(c).unwrap();
            prop_assume!(w.max_abs() > 1e-6);
            let base = nodal_profile(w.values(), &u, w.values(), rule).unwrap();
            let neg: Vec<f64> = w.values().iter().map(|x| -x).collect();
            let sc: Vec<f64> = w.values().iter().map(|x| scale * x).collect();
            prop_assert_eq!(nodal_profile(&neg, &u, w.values(), rule).unwrap().sign_changes, base.sign_changes);
            prop_assert_eq!(nodal_profile(&sc, &u, w.values(), rule).unwrap().sign_changes, base.sign_changes);
        }
    }
}
