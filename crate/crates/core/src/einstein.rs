//! Closed-form constants of the Paneitz–Branson operator on Einstein manifolds.
//!
//! On an Einstein manifold the operator reduces to `Δ² + αΔ + ᾱ` with constant
//! coefficients determined by the dimension and the scalar curvature.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::Real;
use crate::special::{gamma, sphere_volume};

/// The critical Sobolev exponent `N = 2n/(n−4)`, kept as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalExponent(Ratio<i64>);

impl CriticalExponent {
    pub fn new(n: u32) -> Result<Self> {
        if n < 5 {
            return Err(LabError::Dimension(n));
        }
        let n = i64::from(n);
        Ok(Self(Ratio::new(2 * n, n - 4)))
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    /// `N − 2 = 8/(n−4)`, the exponent of the mass weight `u^{N−2}`.
    pub fn weight_exponent(self) -> Ratio<i64> {
        self.0 - 2
    }

    pub fn value<T: Real>(self) -> T {
        T::from_ratio(self.0)
    }

    pub fn weight_value<T: Real>(self) -> T {
        T::from_ratio(self.weight_exponent())
    }
}

/// Dimension and scalar curvature of an Einstein manifold, with the volume of
/// the round unit sphere of that dimension cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EinsteinData<T: Real> {
    n: u32,
    scalar_curvature: T,
    volume: T,
    round: bool,
}

impl<T: Real> EinsteinData<T> {
    /// Arbitrary scalar curvature; `S <= 0` is accepted for coefficient algebra.
    pub fn new(n: u32, scalar_curvature: T) -> Result<Self> {
        if n < 5 {
            return Err(LabError::Dimension(n));
        }
        if !scalar_curvature.is_finite() {
            return Err(LabError::InvalidArgument("scalar curvature must be finite".into()));
        }
        Ok(Self {
            n,
            scalar_curvature,
            volume: sphere_volume(n),
            round: false,
        })
    }

    /// The round unit sphere Sⁿ, `S = n(n−1)`.
    pub fn round_sphere(n: u32) -> Result<Self> {
        let mut d = Self::new(n, T::lit(f64::from(n) * f64::from(n.saturating_sub(1))))?;
        d.round = true;
        Ok(d)
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn scalar_curvature(&self) -> T {
        self.scalar_curvature
    }

    /// Vol(Sⁿ) = 2π^{(n+1)/2}/Γ((n+1)/2).
    pub fn volume(&self) -> T {
        self.volume
    }

    pub fn is_round(&self) -> bool {
        self.round
    }

    pub fn has_positive_curvature(&self) -> bool {
        self.scalar_curvature > T::zero()
    }

    pub fn critical_exponent(&self) -> CriticalExponent {
        CriticalExponent::new(self.n).expect("validated at construction")
    }

    fn nf(&self) -> T {
        T::lit(f64::from(self.n))
    }
}

/// Coefficients of `P = Δ² + αΔ + ᾱ = (Δ + a)(Δ + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OperatorCoefficients<T: Real> {
    pub n: u32,
    pub alpha: T,
    pub alpha_bar: T,
    /// Smaller root of `x² − αx + ᾱ`.
    pub a: T,
    /// Larger root of `x² − αx + ᾱ`.
    pub b: T,
    pub critical_exponent: CriticalExponent,
    /// Inverse square of the sharp Sobolev constant, `K₂^{−2}`.
    pub k2_inv_sq: T,
}

impl<T: Real> OperatorCoefficients<T> {
    /// Symbol of the operator on the Laplace eigenvalue `mu`.
    pub fn symbol(&self, mu: T) -> T {
        (mu + self.a) * (mu + self.b)
    }

    pub fn exponent(&self) -> T {
        self.critical_exponent.value()
    }

    pub fn weight_exponent(&self) -> T {
        self.critical_exponent.weight_value()
    }

    /// `K₂² = 1 / K₂^{−2}`.
    pub fn k2_sq(&self) -> T {
        T::one() / self.k2_inv_sq
    }
}

/// Zeroth-order coefficient of the round unit sphere, `n(n+2)(n−2)(n−4)/16`.
pub fn round_alpha_bar<T: Real>(n: u32) -> T {
    let n = f64::from(n);
    T::lit(n * (n + 2.0) * (n - 2.0) * (n - 4.0) / 16.0)
}

/// `K₂^{−2}` as the constant-function value of the sharp quotient on the
/// round sphere: `ᾱ_round · Vol(Sⁿ)^{4/n}`.
pub fn sharp_constant_oracle<T: Real>(n: u32) -> Result<T> {
    if n < 5 {
        return Err(LabError::Dimension(n));
    }
    let vol: T = sphere_volume(n);
    Ok(round_alpha_bar::<T>(n) * vol.powf(T::lit(4.0) / T::lit(f64::from(n))))
}

pub fn derive_coefficients<T: Real>(data: &EinsteinData<T>) -> OperatorCoefficients<T> {
    let n = data.nf();
    let s = data.scalar_curvature();
    let one = T::one();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let alpha = (n * n - two * n - four) / (two * n * (n - one)) * s;
    // half the root separation: sqrt(α²/4 − ᾱ) = |S| / (n(n−1))
    let half_gap = s.abs() / (n * (n - one));
    // ᾱ = (n−4)(n²−4)S²/(16n(n−1)²) = α²/4 − half_gap². The second form keeps
    // the difference α²/4 − ᾱ accurate; it is 8000x smaller than ᾱ at n = 20.
    let half_alpha = alpha / two;
    let alpha_bar = half_alpha.mul_add(half_alpha, -(half_gap * half_gap));
    let a = alpha / two - half_gap;
    let b = alpha / two + half_gap;
    OperatorCoefficients {
        n: data.dimension(),
        alpha,
        alpha_bar,
        a,
        b,
        critical_exponent: data.critical_exponent(),
        k2_inv_sq: sharp_constant_oracle(data.dimension()).expect("n validated"),
    }
}

/// Q-curvature of an Einstein metric (`ΔS = 0`, `|Ric|² = S²/n`).
pub fn q_curvature_einstein<T: Real>(data: &EinsteinData<T>) -> T {
    let n = data.nf();
    let s = data.scalar_curvature();
    let one = T::one();
    let two = T::lit(2.0);
    let nm1 = n - one;
    let nm2 = n - two;
    let quadratic = (n * n * n - T::lit(4.0) * n * n + T::lit(16.0) * nm1)
        / (T::lit(8.0) * nm1 * nm1 * nm2 * nm2);
    let ric_sq = s * s / n;
    quadratic * s * s - two / (nm2 * nm2) * ric_sq
}

/// The sharp constant computed three ways, with pairwise ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SharpConstantReport<T: Real> {
    pub n: u32,
    /// `ᾱ_round · Vol(Sⁿ)^{4/n}`; the canonical value.
    pub oracle: T,
    /// `π² n(n−1)(n²−4) Γ(n/2)/Γ(n)`, evaluated as printed.
    pub printed_gamma_formula: T,
    /// `n(n+2)(n−2)(n−4)/16 · ω_{n−1}^{4/n}` with `ω_{n−1} = Vol(S^{n−1})`, as printed.
    pub printed_volume_formula: T,
    /// `π² n(n−4)(n²−4) [Γ(n/2)/Γ(n)]^{4/n}`: a Gamma-function form that
    /// reproduces the oracle; checked numerically only.
    pub candidate_gamma_formula: T,
    pub ratio_gamma_to_oracle: T,
    pub ratio_volume_to_oracle: T,
    pub ratio_candidate_to_oracle: T,
    /// Set when a printed formula departs from the oracle by more than 1e−6.
    pub discrepancy: bool,
}

pub fn sharp_constant_report<T: Real>(data: &EinsteinData<T>) -> SharpConstantReport<T> {
    let n = data.dimension();
    let nf = data.nf();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let pi2 = T::PI() * T::PI();
    let oracle = sharp_constant_oracle::<T>(n).expect("n validated");
    let gamma_ratio = gamma(nf / two) / gamma(nf);
    let printed_gamma_formula = pi2 * nf * (nf - T::one()) * (nf * nf - four) * gamma_ratio;
    let omega_lower: T = sphere_volume(n - 1);
    let printed_volume_formula = round_alpha_bar::<T>(n) * omega_lower.powf(four / nf);
    let candidate_gamma_formula =
        pi2 * nf * (nf - four) * (nf * nf - four) * gamma_ratio.powf(four / nf);
    let ratio_gamma_to_oracle = printed_gamma_formula / oracle;
    let ratio_volume_to_oracle = printed_volume_formula / oracle;
    let ratio_candidate_to_oracle = candidate_gamma_formula / oracle;
    let tol = T::lit(1e-6);
    let discrepancy = (ratio_gamma_to_oracle - T::one()).abs() > tol
        || (ratio_volume_to_oracle - T::one()).abs() > tol;
    SharpConstantReport {
        n,
        oracle,
        printed_gamma_formula,
        printed_volume_formula,
        candidate_gamma_formula,
        ratio_gamma_to_oracle,
        ratio_volume_to_oracle,
        ratio_candidate_to_oracle,
        discrepancy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b.abs().max(1e-300)).abs()
    }

    #[test]
    fn five_dimensional_coefficients() {
        let d = EinsteinData::new(5, 20.0).unwrap();
        let c = derive_coefficients(&d);
        assert!(rel(c.alpha, 5.5) < 1e-15);
        assert!(rel(c.alpha_bar, 6.5625) < 1e-15);
        assert!(rel(c.a, 1.75) < 1e-15);
        assert!(rel(c.b, 3.75) < 1e-15);
        assert_eq!(c.critical_exponent.ratio(), Ratio::from_integer(10));
    }

    #[test]
    fn twelve_dimensional_coefficients() {
        let d = EinsteinData::new(12, 132.0).unwrap();
        let c = derive_coefficients(&d);
        assert!(rel(c.alpha, 58.0) < 1e-15);
        assert!(rel(c.alpha_bar, 840.0) < 1e-15);
        assert!(rel(c.a, 28.0) < 1e-15);
        assert!(rel(c.b, 30.0) < 1e-15);
        assert_eq!(c.critical_exponent.ratio(), Ratio::from_integer(3));
        // 132 = 12·11, so this is the round sphere
        assert!(EinsteinData::<f64>::round_sphere(12).unwrap().is_round());
    }

    #[test]
    fn flat_curvature_kills_every_coefficient() {
        let c = derive_coefficients(&EinsteinData::new(5, 0.0).unwrap());
        assert_eq!((c.alpha, c.alpha_bar, c.a, c.b), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(q_curvature_einstein(&EinsteinData::new(9, 0.0).unwrap()), 0.0);
    }

    #[test]
    fn low_dimensions_rejected() {
        assert_eq!(EinsteinData::new(4, 1.0).unwrap_err(), LabError::Dimension(4));
        assert!(CriticalExponent::new(3).is_err());
        assert!(sharp_constant_oracle::<f64>(4).is_err());
    }

    #[test]
    fn q_curvature_examples() {
        let q = q_curvature_einstein(&EinsteinData::new(5, 20.0).unwrap());
        assert!(rel(q, 13.125) < 1e-14);
        let d6 = EinsteinData::new(6, 30.0).unwrap();
        assert!(rel(q_curvature_einstein(&d6), 24.0) < 1e-14);
        assert!(rel(derive_coefficients(&d6).alpha_bar, 24.0) < 1e-14);
    }

    #[test]
    fn weight_exponent_identity_is_exact() {
        for n in 5..40u32 {
            let e = CriticalExponent::new(n).unwrap();
            // (N−2)/N = 4/n
            assert_eq!(e.weight_exponent() / e.ratio(), Ratio::new(4, i64::from(n)));
        }
    }

    #[test]
    fn sharp_constant_five() {
        let r = sharp_constant_report(&EinsteinData::<f64>::round_sphere(5).unwrap());
        let pi = std::f64::consts::PI;
        assert!(rel(r.oracle, 6.5625 * pi.powf(12.0 / 5.0)) < 1e-13);
        assert!((r.oracle - 102.38).abs() < 0.01);
        assert!((r.printed_gamma_formula - 229.6).abs() < 0.1);
        assert!((r.ratio_gamma_to_oracle - 2.24).abs() < 0.01);
        assert!(rel(r.candidate_gamma_formula, r.oracle) < 1e-10);
        assert!(r.discrepancy);
    }

    #[test]
    fn candidate_formula_tracks_oracle_for_many_dimensions() {
        for n in 5..30 {
            let r = sharp_constant_report(&EinsteinData::<f64>::round_sphere(n).unwrap());
            assert!(r.ratio_candidate_to_oracle > 0.0);
            assert!((r.ratio_candidate_to_oracle - 1.0).abs() < 1e-10, "n = {n}");
            assert!(r.printed_volume_formula > 0.0 && r.printed_gamma_formula > 0.0);
        }
    }

    #[test]
    fn single_precision_coefficients() {
        let c = derive_coefficients(&EinsteinData::new(5, 20.0f32).unwrap());
        assert!((c.alpha - 5.5).abs() < 1e-5);
        assert!((c.a * c.b - c.alpha_bar).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn coefficient_identities(n in 5u32..=20, s in 1e-6f64..1e3) {
            let c = derive_coefficients(&EinsteinData::new(n, s).unwrap());
            let nf = f64::from(n);
            // exact product inside the fused multiply-add
            let lhs = c.alpha.mul_add(c.alpha, -4.0 * c.alpha_bar) / 4.0;
            let rhs = s * s / (nf * nf * (nf - 1.0) * (nf - 1.0));
            prop_assert!(rel(lhs, rhs) < 1e-12);
            let closed_form = (nf - 4.0) * (nf * nf - 4.0) / (16.0 * nf * (nf - 1.0) * (nf - 1.0)) * s * s;
            prop_assert!(rel(c.alpha_bar, closed_form) < 1e-14);
            prop_assert!(rel(c.a + c.b, c.alpha) < 1e-14);
            prop_assert!(rel(c.a * c.b, c.alpha_bar) < 1e-14);
            prop_assert!(rel(c.b - c.a, 2.0 * s / (nf * (nf - 1.0))) < 1e-12);
            let q = q_curvature_einstein(&EinsteinData::new(n, s).unwrap());
            prop_assert!(rel((nf - 4.0) / 2.0 * q, c.alpha_bar) < 1e-12);
        }
    }
}
