//! Quadrature and an orthonormal zonal basis on the round sphere Sⁿ.
//!
//! Zonal functions depend only on the colatitude θ, written through
//! `x = cos θ`. The surface measure becomes `ω_{n−1} (1−x²)^{(n−2)/2} dx`, and
//! the zonal spherical harmonics are the Gegenbauer polynomials of parameter
//! `(n−1)/2`, eigenfunctions of `Δ = −div ∇` with eigenvalue `l(l+n−1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::einstein::EinsteinData;
use crate::error::{LabError, Result};
use crate::linalg::tridiagonal_eigenvalues;
use crate::scalar::Real;
use crate::special::sphere_volume;

/// Squared recurrence coefficients of the monic Gegenbauer polynomials with
/// parameter `lambda`: `P_{l+1} = x P_l − β_l P_{l−1}`.
fn monic_beta<T: Real>(l: usize, lambda: T) -> T {
    let l = T::from_usize_lossy(l);
    let four = T::lit(4.0);
    l * (l + T::lit(2.0) * lambda - T::one()) / (four * (l + lambda) * (l + lambda - T::one()))
}

/// Orthonormal polynomial values `p_0..=p_degree` and derivatives at `x`,
/// orthonormal for the weight `(1−x²)^{lambda−1/2}` on `[−1, 1]`.
fn orthonormal_values<T: Real>(
    x: T,
    degree: usize,
    mass: T,
    sqrt_beta: &[T],
    values: &mut [T],
    derivs: &mut [T],
) {
    values[0] = T::one() / mass.sqrt();
    derivs[0] = T::zero();
    if degree == 0 {
        return;
    }
    values[1] = x * values[0] / sqrt_beta[1];
    derivs[1] = values[0] / sqrt_beta[1];
    for l in 1..degree {
        let sb = sqrt_beta[l + 1];
        values[l + 1] = (x * values[l] - sqrt_beta[l] * values[l - 1]) / sb;
        derivs[l + 1] = (values[l] + x * derivs[l] - sqrt_beta[l] * derivs[l - 1]) / sb;
    }
}

/// Gauss rule for zonal integrals over Sⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct QuadratureRule<T: Real> {
    n: u32,
    /// `x_j = cos θ_j`, strictly increasing in (−1, 1).
    nodes: Vec<T>,
    /// Weights including the surface factor `ω_{n−1}(1−x²)^{(n−2)/2}`.
    weights: Vec<T>,
    /// Gegenbauer parameter `(n−1)/2`.
    lambda: T,
    /// `∫_{−1}^{1} (1−x²)^{(n−2)/2} dx`.
    interval_mass: T,
    /// `ω_{n−1}`, area of the unit sphere S^{n−1}.
    omega: T,
}

impl<T: Real> QuadratureRule<T> {
    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Colatitudes θ_j = arccos x_j (decreasing, since x_j increases).
    pub fn colatitudes(&self) -> Vec<T> {
        self.nodes.iter().map(|x| x.acos()).collect()
    }

    pub fn volume(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// `Σ_j w_j f_j`.
    pub fn integrate(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(&w, &f)| w * f).sum()
    }

    pub fn integrate_fn(&self, f: impl Fn(T) -> T) -> T {
        self.weights.iter().zip(&self.nodes).map(|(&w, &x)| w * f(x)).sum()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(LabError::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Gauss–Gegenbauer rule with `q` nodes; exact for polynomials in `x` of
/// degree `≤ 2q − 1` against the zonal surface measure.
pub fn build_quadrature<T: Real>(data: &EinsteinData<T>, q: usize) -> Result<QuadratureRule<T>> {
    if q < 2 {
        return Err(LabError::InvalidArgument(format!(
            "quadrature needs at least 2 nodes, got {q}"
        )));
    }
    let n = data.dimension();
    let lambda = T::lit((f64::from(n) - 1.0) / 2.0);
    let omega: T = sphere_volume(n - 1);
    let interval_mass = data.volume() / omega;

    let sqrt_beta: Vec<T> = (0..=q)
        .map(|l| if l == 0 { T::zero() } else { monic_beta(l, lambda).sqrt() })
        .collect();
    let diag = vec![T::zero(); q];
    let mut nodes = tridiagonal_eigenvalues(&diag, &sqrt_beta[1..q])?;

    let mut values = vec![T::zero(); q + 1];
    let mut derivs = vec![T::zero(); q + 1];
    let mut weights = Vec::with_capacity(q);
    for x in nodes.iter_mut() {
        // one Newton step on the degree-q orthonormal polynomial
        orthonormal_values(*x, q, interval_mass, &sqrt_beta, &mut values, &mut derivs);
        if derivs[q] != T::zero() {
            let step = values[q] / derivs[q];
            if step.abs() < T::lit(1e-6) {
                *x -= step;
            }
        }
        orthonormal_values(*x, q - 1, interval_mass, &sqrt_beta, &mut values, &mut derivs);
        let christoffel: T = values[..q].iter().map(|&p| p * p).sum();
        weights.push(omega / christoffel);
    }

    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(LabError::NoConvergence("quadrature nodes not strictly increasing"));
    }
    Ok(QuadratureRule {
        n,
        nodes,
        weights,
        lambda,
        interval_mass,
        omega,
    })
}

/// Orthonormal zonal harmonics `Z_0..=Z_L` tabulated on a quadrature rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ZonalBasis<T: Real> {
    rule: QuadratureRule<T>,
    degree: usize,
    /// Laplace eigenvalues `μ_l = l(l+n−1)`.
    eigs: Vec<T>,
    /// `table[l][j] = Z_l(x_j)`.
    table: Vec<Vec<T>>,
    /// `dtable[l][j] = Z_l'(x_j)` (derivative in x).
    dtable: Vec<Vec<T>>,
    /// `Z_l(1)`, the value at the north pole.
    pole_values: Vec<T>,
}

pub fn build_basis<T: Real>(rule: &QuadratureRule<T>, degree: usize) -> Result<ZonalBasis<T>> {
    if degree >= rule.len() {
        return Err(LabError::InvalidArgument(format!(
            "basis degree {degree} must be below the node count {} to avoid aliasing",
            rule.len()
        )));
    }
    let n = f64::from(rule.dimension());
    let sqrt_beta: Vec<T> = (0..=degree + 1)
        .map(|l| if l == 0 { T::zero() } else { monic_beta(l, rule.lambda).sqrt() })
        .collect();
    let scale = T::one() / rule.omega.sqrt();
    let mut table = vec![Vec::with_capacity(rule.len()); degree + 1];
    let mut dtable = vec![Vec::with_capacity(rule.len()); degree + 1];
    let mut values = vec![T::zero(); degree + 1];
    let mut derivs = vec![T::zero(); degree + 1];
    let eval = |x: T, values: &mut [T], derivs: &mut [T]| {
        orthonormal_values(x, degree, rule.interval_mass, &sqrt_beta, values, derivs)
    };
    for &x in &rule.nodes {
        eval(x, &mut values, &mut derivs);
        for l in 0..=degree {
            table[l].push(values[l] * scale);
            dtable[l].push(derivs[l] * scale);
        }
    }
    eval(T::one(), &mut values, &mut derivs);
    let pole_values = values.iter().map(|&v| v * scale).collect();
    let eigs = (0..=degree)
        .map(|l| T::lit(l as f64 * (l as f64 + n - 1.0)))
        .collect();
    Ok(ZonalBasis {
        rule: rule.clone(),
        degree,
        eigs,
        table,
        dtable,
        pole_values,
    })
}

/// A zonal function as coefficients `c_0..c_L` plus its node values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ZonalField<T: Real> {
    coeffs: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> ZonalField<T> {
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&x| x * c).collect(),
            values: self.values.iter().map(|&x| x * c).collect(),
        }
    }

    /// `a·self + b·other`; both fields must come from the same basis.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        let mix = |x: &[T], y: &[T]| x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect();
        Self {
            coeffs: mix(&self.coeffs, &other.coeffs),
            values: mix(&self.values, &other.values),
        }
    }
}

/// Node samples of a zonal function together with the derivatives needed by
/// the Paneitz energy. Produced from basis coefficients or from closed-form
/// profiles such as bubbles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NodalSamples<T: Real> {
    pub values: Vec<T>,
    /// `∂f/∂θ`, so that `|∇f|² = (∂f/∂θ)²`.
    pub dtheta: Vec<T>,
    /// `Δf = −div ∇f`.
    pub laplacian: Vec<T>,
}

impl<T: Real> NodalSamples<T> {
    pub fn constant(value: T, len: usize) -> Self {
        Self {
            values: vec![value; len],
            dtheta: vec![T::zero(); len],
            laplacian: vec![T::zero(); len],
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        let s = |v: &Vec<T>| v.iter().map(|&x| x * c).collect();
        Self {
            values: s(&self.values),
            dtheta: s(&self.dtheta),
            laplacian: s(&self.laplacian),
        }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        let mix = |x: &Vec<T>, y: &Vec<T>| x.iter().zip(y).map(|(&p, &q)| a * p + b * q).collect();
        Self {
            values: mix(&self.values, &other.values),
            dtheta: mix(&self.dtheta, &other.dtheta),
            laplacian: mix(&self.laplacian, &other.laplacian),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<T: Real> ZonalBasis<T> {
    pub fn rule(&self) -> &QuadratureRule<T> {
        &self.rule
    }

    pub fn dimension(&self) -> u32 {
        self.rule.dimension()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions, `L + 1`.
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn laplace_eigenvalues(&self) -> &[T] {
        &self.eigs
    }

    pub fn node_table(&self) -> &[Vec<T>] {
        &self.table
    }

    /// `Z_l(x = 1)`, the value at the north pole.
    pub fn pole_values(&self) -> &[T] {
        &self.pole_values
    }

    fn check_coeffs(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(LabError::LengthMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }

    /// Node values `Σ c_l Z_l(x_j)`; `coeffs` may be shorter than the basis.
    pub fn synthesize(&self, coeffs: &[T]) -> Result<Vec<T>> {
        if coeffs.len() > self.len() {
            return Err(LabError::LengthMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        let mut out = vec![T::zero(); self.rule.len()];
        for (row, &c) in self.table.iter().zip(coeffs) {
            if c == T::zero() {
                continue;
            }
            for (o, &z) in out.iter_mut().zip(row) {
                *o += c * z;
            }
        }
        Ok(out)
    }

    /// Quadrature projection `c_l = Σ_j w_j f(x_j) Z_l(x_j)`.
    pub fn project(&self, values: &[T]) -> Result<Vec<T>> {
        self.rule.check_len(values.len())?;
        let wf: Vec<T> = self
            .rule
            .weights
            .iter()
            .zip(values)
            .map(|(&w, &f)| w * f)
            .collect();
        Ok(self
            .table
            .iter()
            .map(|row| row.iter().zip(&wf).map(|(&z, &g)| z * g).sum())
            .collect())
    }

    /// Project node values onto the basis; the cached values are the
    /// synthesis of the projected coefficients.
    pub fn analyze(&self, values: &[T]) -> Result<ZonalField<T>> {
        let coeffs = self.project(values)?;
        self.field(coeffs)
    }

    pub fn field(&self, mut coeffs: Vec<T>) -> Result<ZonalField<T>> {
        if coeffs.len() > self.len() {
            return Err(LabError::LengthMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        coeffs.resize(self.len(), T::zero());
        let values = self.synthesize(&coeffs)?;
        Ok(ZonalField { coeffs, values })
    }

    /// Basis element `Z_l` as a field.
    pub fn harmonic(&self, l: usize) -> Result<ZonalField<T>> {
        if l > self.degree {
            return Err(LabError::InvalidArgument(format!(
                "harmonic degree {l} exceeds basis degree {}",
                self.degree
            )));
        }
        let mut c = vec![T::zero(); self.len()];
        c[l] = T::one();
        self.field(c)
    }

    /// Seeded field `Z_0/Z_0(1) + Σ_{l≥1} c_l Z_l/Z_l(1)` with `c_l` uniform in
    /// `[−amplitude, amplitude]`, so `c_l` bounds each harmonic's amplitude.
    /// With `amplitude < 1/L` the field is positive.
    pub fn random_field(&self, amplitude: T, seed: u64) -> Result<ZonalField<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = amplitude.to_f64_lossy();
        let coeffs = self
            .pole_values()
            .iter()
            .enumerate()
            .map(|(l, &p)| {
                let c = if l == 0 { T::one() } else { T::lit(rng.gen_range(-a..=a)) };
                c / p
            })
            .collect();
        self.field(coeffs)
    }

    /// Coefficients of `Δf`.
    pub fn laplacian_coeffs(&self, coeffs: &[T]) -> Result<Vec<T>> {
        self.check_coeffs(coeffs.len())?;
        Ok(coeffs.iter().zip(&self.eigs).map(|(&c, &m)| c * m).collect())
    }

    /// Values, θ-derivative and Laplacian of a field at the nodes.
    pub fn samples(&self, field: &ZonalField<T>) -> Result<NodalSamples<T>> {
        self.check_coeffs(field.coeffs.len())?;
        let lap = self.synthesize(&self.laplacian_coeffs(&field.coeffs)?)?;
        let mut dx = vec![T::zero(); self.rule.len()];
        for (row, &c) in self.dtable.iter().zip(&field.coeffs) {
            for (o, &z) in dx.iter_mut().zip(row) {
                *o += c * z;
            }
        }
        // d/dθ = −sin θ d/dx
        let dtheta = dx
            .iter()
            .zip(&self.rule.nodes)
            .map(|(&d, &x)| -(T::one() - x * x).sqrt() * d)
            .collect();
        Ok(NodalSamples {
            values: field.values.clone(),
            dtheta,
            laplacian: lap,
        })
    }

    /// `∫ f² dv` from coefficients (Parseval).
    pub fn l2_norm_sq(&self, field: &ZonalField<T>) -> T {
        field.coeffs.iter().map(|&c| c * c).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::einstein::EinsteinData;
    use proptest::prelude::*;

    fn rule(n: u32, q: usize) -> QuadratureRule<f64> {
        build_quadrature(&EinsteinData::round_sphere(n).unwrap(), q).unwrap()
    }

    /// `∫_{−1}^{1} x^k (1−x²)^a dx` by the integration-by-parts recurrence
    /// `I_k = I_{k−2} (k−1)/(k+2a+1)`, seeded with the interval mass.
    fn wallis_moment(k: usize, a: f64, mass: f64) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        let mut m = mass;
        let mut j = 2;
        while j <= k {
            m *= (j as f64 - 1.0) / (j as f64 + 2.0 * a + 1.0);
            j += 2;
        }
        m
    }

    #[test]
    fn five_sphere_volume_is_pi_cubed() {
        let r = rule(5, 40);
        let pi3 = std::f64::consts::PI.powi(3);
        assert!(((r.volume() - pi3) / pi3).abs() < 1e-12);
        assert!(r.weights().iter().all(|&w| w > 0.0));
        assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn second_moment_on_five_sphere() {
        let r = rule(5, 40);
        let m2 = r.integrate_fn(|x| x * x);
        assert!((m2 / r.volume() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn monomial_exactness_against_wallis() {
        for &(n, q) in &[(5u32, 12usize), (8, 30), (12, 200), (20, 64)] {
            let r = rule(n, q);
            let a = (f64::from(n) - 2.0) / 2.0;
            let omega = sphere_volume::<f64>(n - 1);
            let mass = sphere_volume::<f64>(n) / omega;
            for k in 0..(2 * q) {
                let exact = omega * wallis_moment(k, a, mass);
                let got = r.integrate_fn(|x| x.powi(k as i32));
                let scale = omega * wallis_moment(k - k % 2, a, mass);
                assert!(
                    (got - exact).abs() <= 1e-12 * scale,
                    "n={n} q={q} k={k}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn rejects_tiny_rules_and_aliasing_bases() {
        let d = EinsteinData::<f64>::round_sphere(5).unwrap();
        assert!(build_quadrature(&d, 1).is_err());
        let r = rule(5, 10);
        assert!(build_basis(&r, 10).is_err());
        assert!(build_basis(&r, 9).is_ok());
    }

    #[test]
    fn basis_is_orthonormal_with_exact_eigenvalues() {
        let r = rule(5, 60);
        let b = build_basis(&r, 24).unwrap();
        let pi3 = std::f64::consts::PI.powi(3);
        assert!((b.node_table()[0][0] - pi3.powf(-0.5)).abs() < 1e-14);
        assert_eq!(b.laplace_eigenvalues()[1], 5.0);
        assert_eq!(b.laplace_eigenvalues()[2], 12.0);
        for l in 0..=24 {
            for m in 0..=24 {
                let prod: Vec<f64> = b.node_table()[l]
                    .iter()
                    .zip(&b.node_table()[m])
                    .map(|(a, c)| a * c)
                    .collect();
                let g = r.integrate(&prod);
                let want = if l == m { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-10, "gram[{l}][{m}] = {g}");
            }
        }
    }

    #[test]
    fn laplacian_matches_differential_form() {
        // f = x³ − 2x² + x, Δf = −(1−x²)f″ + n x f′
        for n in [5u32, 7, 12] {
            let r = rule(n, 50);
            let b = build_basis(&r, 10).unwrap();
            let f = |x: f64| x * x * x - 2.0 * x * x + x;
            let fp = |x: f64| 3.0 * x * x - 4.0 * x + 1.0;
            let fpp = |x: f64| 6.0 * x - 4.0;
            let vals: Vec<f64> = r.nodes().iter().map(|&x| f(x)).collect();
            let field = b.analyze(&vals).unwrap();
            let s = b.samples(&field).unwrap();
            let nf = f64::from(n);
            for (j, &x) in r.nodes().iter().enumerate() {
                let want = -(1.0 - x * x) * fpp(x) + nf * x * fp(x);
                assert!((s.laplacian[j] - want).abs() < 1e-8);
                let want_dtheta = -(1.0 - x * x).sqrt() * fp(x);
                assert!((s.dtheta[j] - want_dtheta).abs() < 1e-9);
                assert!((s.values[j] - f(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_round_trip_and_length_checks() {
        let r = rule(6, 30);
        let b = build_basis(&r, 8).unwrap();
        let mut c = vec![0.0; 9];
        c[0] = 1.0;
        let f = b.field(c.clone()).unwrap();
        let first = f.values()[0];
        assert!(f.values().iter().all(|v| (v - first).abs() < 1e-14));
        let back = b.analyze(f.values()).unwrap();
        for (x, y) in back.coeffs().iter().zip(&c) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!(b.analyze(&[1.0; 7]).is_err());
        assert!(b.field(vec![0.0; 12]).is_err());
    }

    #[test]
    fn projection_drops_higher_degrees() {
        let r = rule(5, 40);
        let small = build_basis(&r, 12).unwrap();
        let big = build_basis(&r, 15).unwrap();
        let high = big.harmonic(15).unwrap();
        let field = small.analyze(high.values()).unwrap();
        let err = field
            .values()
            .iter()
            .zip(high.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err > 0.1, "degree L+3 content must be lost, err = {err}");
        assert!(field.coeffs().iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn pole_values_follow_addition_theorem() {
        // Z_l(1)² = dim H_l / Vol with dim H_l = C(l+n, n) − C(l+n−2, n)
        fn binom(a: u64, b: u64) -> f64 {
            (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
        }
        for n in [5u32, 7, 12] {
            let r = rule(n, 40);
            let b = build_basis(&r, 10).unwrap();
            let vol = r.volume();
            for l in 0..=10u64 {
                let nn = u64::from(n);
                let dim = binom(l + nn, nn) - if l >= 2 { binom(l + nn - 2, nn) } else { 0.0 };
                let want = (dim / vol).sqrt();
                let got = b.pole_values()[l as usize];
                assert!((got - want).abs() < 1e-11 * want, "n={n} l={l}");
            }
        }
    }

    proptest! {
        #[test]
        fn analyze_synthesize_round_trip(coeffs in proptest::collection::vec(-1.0f64..1.0, 17)) {
            let r = rule(7, 40);
            let b = build_basis(&r, 16).unwrap();
            let f = b.field(coeffs.clone()).unwrap();
            let back = b.analyze(f.values()).unwrap();
            for (x, y) in back.coeffs().iter().zip(&coeffs) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            // Parseval
            let sq: Vec<f64> = f.values().iter().map(|v| v * v).collect();
            let energy = r.integrate(&sq);
            prop_assert!((energy - b.l2_norm_sq(&f)).abs() < 1e-10 * energy.max(1.0));
        }
    }

    #[test]
    fn random_fields_are_seeded_and_bounded() {
        let data = EinsteinData::round_sphere(5).unwrap();
        let basis = build_basis(&build_quadrature(&data, 40).unwrap(), 6).unwrap();
        let a = basis.random_field(0.1, 3).unwrap();
        assert_eq!(a, basis.random_field(0.1, 3).unwrap());
        assert_ne!(a, basis.random_field(0.1, 4).unwrap());
        // |Z_l| ≤ Z_l(1), so the field stays within 1 ± 6·0.1
        assert!(a.values().iter().all(|&x| x > 0.4 - 1e-12 && x < 1.6 + 1e-12));
    }
}
