//! The Paneitz pencil `(A, B)` on zonal fields and its generalized spectrum.
//!
//! `A` is the quadratic form `∫ v P v`, diagonal in the zonal basis, and `B`
//! is the mass form `∫ u^{N−2} v²` of a conformal density `u`.

use serde::{Deserialize, Serialize};

use crate::einstein::{CriticalExponent, OperatorCoefficients};
use crate::error::{LabError, Result};
use crate::linalg::{
    backward_substitute_transpose, cholesky, dot, forward_substitute, norm2, symmetric_eigen,
    Matrix,
};
use crate::scalar::Real;
use crate::zonal::{QuadratureRule, ZonalBasis, ZonalField};

/// Nonnegative density `u` sampled at the quadrature nodes, defining the
/// generalized metric `u^{N−2} g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConformalDensity<T: Real> {
    n: u32,
    /// Square root field `q` when the density was built as `u = q²`.
    q: Option<ZonalField<T>>,
    u: Vec<T>,
    /// `u^{N−2}` at the nodes.
    weight: Vec<T>,
    /// `∫ u^N dv`.
    volume: T,
    normalized: bool,
}

impl<T: Real> ConformalDensity<T> {
    /// Density from node values. Negative or non-finite entries are rejected,
    /// as is the zero density.
    pub fn from_values(rule: &QuadratureRule<T>, u: Vec<T>) -> Result<Self> {
        if u.len() != rule.len() {
            return Err(LabError::LengthMismatch {
                expected: rule.len(),
                got: u.len(),
            });
        }
        if u.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
            return Err(LabError::InvalidArgument(
                "density must be finite and nonnegative at every node".into(),
            ));
        }
        if u.iter().all(|&x| x == T::zero()) {
            return Err(LabError::DegenerateDensity);
        }
        let n = rule.dimension();
        let exponent = CriticalExponent::new(n)?;
        let big_n: T = exponent.value();
        let weight_exp: T = exponent.weight_value();
        let weight = u.iter().map(|&x| x.powf(weight_exp)).collect();
        let powers: Vec<T> = u.iter().map(|&x| x.powf(big_n)).collect();
        let volume = rule.integrate(&powers);
        Ok(Self {
            n,
            q: None,
            u,
            weight,
            volume,
            normalized: false,
        })
    }

    /// `u = q²` at the nodes.
    pub fn from_q(rule: &QuadratureRule<T>, q: &ZonalField<T>) -> Result<Self> {
        let u = q.values().iter().map(|&x| x * x).collect();
        let mut d = Self::from_values(rule, u)?;
        d.q = Some(q.clone());
        Ok(d)
    }

    pub fn constant(rule: &QuadratureRule<T>, value: T) -> Result<Self> {
        Self::from_values(rule, vec![value; rule.len()])
    }

    /// Rescale so that `∫ u^N dv = 1`.
    pub fn normalized(&self) -> Self {
        let big_n: T = CriticalExponent::new(self.n)
            .map(|e| e.value())
            .unwrap_or_else(|_| T::one());
        let c = self.volume.powf(-T::one() / big_n);
        let mut out = self.scaled(c);
        out.volume = T::one();
        out.normalized = true;
        out
    }

    /// `u → c u` (and `q → √c q`), `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        let exponent = CriticalExponent::new(self.n).expect("dimension validated on construction");
        let big_n: T = exponent.value();
        let weight_exp: T = exponent.weight_value();
        let wc = c.powf(weight_exp);
        Self {
            n: self.n,
            q: self.q.as_ref().map(|q| q.scaled(c.sqrt())),
            u: self.u.iter().map(|&x| x * c).collect(),
            weight: self.weight.iter().map(|&x| x * wc).collect(),
            volume: self.volume * c.powf(big_n),
            normalized: false,
        }
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.u
    }

    pub fn weight(&self) -> &[T] {
        &self.weight
    }

    pub fn q(&self) -> Option<&ZonalField<T>> {
        self.q.as_ref()
    }

    /// `∫ u^N dv`, the volume of the generalized metric.
    pub fn volume(&self) -> T {
        self.volume
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `∫ u^{N−2} v w dv` for node values `v`, `w`.
    pub fn weighted_inner(&self, rule: &QuadratureRule<T>, v: &[T], w: &[T]) -> T {
        rule.weights()
            .iter()
            .zip(&self.weight)
            .zip(v.iter().zip(w))
            .map(|((&wt, &rho), (&a, &b))| wt * rho * a * b)
            .sum()
    }
}

fn check_dimension<T: Real>(n: u32, basis: &ZonalBasis<T>) -> Result<()> {
    if n != basis.dimension() {
        return Err(LabError::InvalidArgument(format!(
            "dimension mismatch: n = {n} but basis built for n = {}",
            basis.dimension()
        )));
    }
    Ok(())
}

/// Stiffness form `A_{ll} = (μ_l + a)(μ_l + b)`.
pub fn assemble_stiffness<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    basis: &ZonalBasis<T>,
) -> Result<Matrix<T>> {
    check_dimension(coeffs.n, basis)?;
    let diag: Vec<T> = basis
        .laplace_eigenvalues()
        .iter()
        .map(|&mu| coeffs.symbol(mu))
        .collect();
    Ok(Matrix::from_diagonal(&diag))
}

/// Mass form `B_{lm} = Σ_j w_j u^{N−2}(x_j) Z_l(x_j) Z_m(x_j)`.
pub fn assemble_mass<T: Real>(density: &ConformalDensity<T>, basis: &ZonalBasis<T>) -> Result<Matrix<T>> {
    check_dimension(density.dimension(), basis)?;
    let rule = basis.rule();
    if density.values().len() != rule.len() {
        return Err(LabError::LengthMismatch {
            expected: rule.len(),
            got: density.values().len(),
        });
    }
    let mw: Vec<T> = rule
        .weights()
        .iter()
        .zip(density.weight())
        .map(|(&w, &r)| w * r)
        .collect();
    let table = basis.node_table();
    let dim = basis.len();
    let mut b = Matrix::zeros(dim);
    let mut scratch = vec![T::zero(); rule.len()];
    for l in 0..dim {
        for (s, (&z, &m)) in scratch.iter_mut().zip(table[l].iter().zip(&mw)) {
            *s = z * m;
        }
        for m in 0..=l {
            let v = dot(&scratch, &table[m]);
            b[(l, m)] = v;
            b[(m, l)] = v;
        }
    }
    Ok(b)
}

/// Smallest eigenvalue of a symmetric form (the mass floor of `B`).
pub fn smallest_eigenvalue<T: Real>(m: &Matrix<T>) -> T {
    symmetric_eigen(m).values[0]
}

/// Lowest part of the spectrum of the pencil `A v = λ B v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GeneralizedSpectrum<T: Real> {
    /// Ascending `λ_1 ≤ λ_2 ≤ …`.
    pub eigenvalues: Vec<T>,
    /// `B`-orthonormal eigenfields, first significant coefficient positive.
    pub eigenfields: Vec<ZonalField<T>>,
    /// `‖A v − λ B v‖ / ‖A v‖` per pair.
    pub residuals: Vec<T>,
    /// Shift `δ` added to `B` when it was numerically singular, else zero.
    pub shift: T,
}

impl<T: Real> GeneralizedSpectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> T {
        self.residuals.iter().fold(T::zero(), |m, &r| m.max(r))
    }
}

fn sign_normalize<T: Real>(v: &mut [T]) {
    let big = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let cut = big * T::lit(1e-8);
    if let Some(first) = v.iter().find(|x| x.abs() > cut) {
        if *first < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Smallest `k` eigenpairs of `A v = λ B v`.
///
/// The pencil is reduced through the Cholesky factor `A = L Lᵀ` to the
/// standard problem `L⁻¹ B L⁻ᵀ y = ν y` with `λ = 1/ν`, so the lowest `λ`
/// come from the best-conditioned end of the reduced spectrum.
pub fn solve_generalized_eigen<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    k: usize,
    basis: &ZonalBasis<T>,
) -> Result<GeneralizedSpectrum<T>> {
    let dim = a.dim();
    if b.dim() != dim || basis.len() != dim {
        return Err(LabError::LengthMismatch {
            expected: dim,
            got: if b.dim() != dim { b.dim() } else { basis.len() },
        });
    }
    if k == 0 || k > dim {
        return Err(LabError::InvalidArgument(format!(
            "requested {k} eigenvalues from a pencil of dimension {dim}"
        )));
    }
    let l = cholesky(a, T::zero()).map_err(|e| match e {
        LabError::NotPositiveDefinite { pivot, value } => LabError::Indefinite(format!(
            "Paneitz form not positive definite: pivot {pivot} = {value:e} (S ≤ 0 regime?)"
        )),
        other => other,
    })?;

    let trace = b.trace();
    if !(trace > T::zero()) {
        return Err(LabError::NullMass);
    }
    let delta = T::lit(1e-12) * trace / T::from_usize_lossy(dim);
    let (b_used, shift) = match cholesky(b, delta) {
        Ok(_) => (b.clone(), T::zero()),
        Err(_) => (b.shifted(delta), delta),
    };

    // C = L⁻¹ B L⁻ᵀ = L⁻¹ (L⁻¹ B)ᵀ
    let mut half = Matrix::zeros(dim);
    for j in 0..dim {
        let col: Vec<T> = (0..dim).map(|i| b_used[(i, j)]).collect();
        let y = forward_substitute(&l, &col);
        for i in 0..dim {
            half[(j, i)] = y[i];
        }
    }
    let mut c = Matrix::zeros(dim);
    for j in 0..dim {
        let col: Vec<T> = (0..dim).map(|i| half[(i, j)]).collect();
        let y = forward_substitute(&l, &col);
        for i in 0..dim {
            c[(i, j)] = y[i];
        }
    }
    for i in 0..dim {
        for j in 0..i {
            let s = (c[(i, j)] + c[(j, i)]) * T::lit(0.5);
            c[(i, j)] = s;
            c[(j, i)] = s;
        }
    }
    let eig = symmetric_eigen(&c);

    let mut vectors: Vec<Vec<T>> = Vec::with_capacity(k);
    for idx in (dim - k..dim).rev() {
        if !(eig.values[idx] > T::zero()) {
            return Err(LabError::NullMass);
        }
        vectors.push(backward_substitute_transpose(&l, &eig.vectors[idx]));
    }
    // two passes of B-orthonormalization against the previous vectors
    for i in 0..k {
        for _ in 0..2 {
            let bx = b_used.mul_vec(&vectors[i]);
            for j in 0..i {
                let proj = dot(&vectors[j], &bx);
                let (head, tail) = vectors.split_at_mut(i);
                for (x, &y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= proj * y;
                }
            }
            let norm = b_used.bilinear(&vectors[i], &vectors[i]).sqrt();
            vectors[i].iter_mut().for_each(|v| *v /= norm);
        }
    }

    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenfields = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for mut x in vectors {
        sign_normalize(&mut x);
        let ax = a.mul_vec(&x);
        let bx = b_used.mul_vec(&x);
        // Rayleigh quotient: error quadratic in the eigenvector error, where
        // 1/ν alone loses relative accuracy high in the spectrum
        let lambda = dot(&x, &ax) / dot(&x, &bx);
        let r: Vec<T> = ax.iter().zip(&bx).map(|(&p, &q)| p - lambda * q).collect();
        residuals.push(norm2(&r) / norm2(&ax));
        eigenvalues.push(lambda);
        eigenfields.push(basis.field(x)?);
    }
    Ok(GeneralizedSpectrum {
        eigenvalues,
        eigenfields,
        residuals,
        shift,
    })
}

/// Assemble both forms for `density` and solve for `k` eigenpairs.
pub fn density_spectrum<T: Real>(
    coeffs: &OperatorCoefficients<T>,
    basis: &ZonalBasis<T>,
    density: &ConformalDensity<T>,
    k: usize,
) -> Result<GeneralizedSpectrum<T>> {
    let a = assemble_stiffness(coeffs, basis)?;
    let b = assemble_mass(density, basis)?;
    solve_generalized_eigen(&a, &b, k, basis)
}

/// `∫ v P v / ∫ u^{N−2} v²`.
pub fn rayleigh<T: Real>(a: &Matrix<T>, b: &Matrix<T>, v: &ZonalField<T>) -> Result<T> {
    let c = v.coeffs();
    let mass = b.bilinear(c, c);
    let floor = T::epsilon() * b.max_abs() * dot(c, c);
    if !(mass > floor) {
        return Err(LabError::NullMass);
    }
    Ok(a.bilinear(c, c) / mass)
}

/// Restriction of a pencil to `span(v, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PlanePencil<T: Real> {
    pub a: [[T; 2]; 2],
    pub b: [[T; 2]; 2],
}

impl<T: Real> PlanePencil<T> {
    pub fn restrict(a: &Matrix<T>, b: &Matrix<T>, v: &[T], w: &[T]) -> Self {
        let avw = (a.bilinear(v, w) + a.bilinear(w, v)) * T::lit(0.5);
        let bvw = (b.bilinear(v, w) + b.bilinear(w, v)) * T::lit(0.5);
        Self {
            a: [[a.bilinear(v, v), avw], [avw, a.bilinear(w, w)]],
            b: [[b.bilinear(v, v), bvw], [bvw, b.bilinear(w, w)]],
        }
    }

    /// Both eigenvalues `(low, high)` of the 2×2 pencil.
    pub fn eigenvalues(&self) -> Result<(T, T)> {
        let [[a11, a12], [_, a22]] = self.a;
        let [[b11, b12], [_, b22]] = self.b;
        let det_b = b11 * b22 - b12 * b12;
        let scale = b11 * b22;
        if !(det_b > T::lit(1e3) * T::epsilon() * scale) {
            let cos2 = if scale > T::zero() { b12 * b12 / scale } else { T::one() };
            return Err(LabError::Colinear(cos2.to_f64_lossy()));
        }
        let p = a11 * b22 + a22 * b11 - T::lit(2.0) * a12 * b12;
        let c = a11 * a22 - a12 * a12;
        let disc = (p * p - T::lit(4.0) * det_b * c).max(T::zero());
        let high = (p + disc.sqrt()) / (T::lit(2.0) * det_b);
        let low = if high != T::zero() { c / (det_b * high) } else { T::zero() };
        Ok((low, high))
    }

    /// Rayleigh quotient of `cos θ v + sin θ w`.
    pub fn quotient_at(&self, theta: T) -> T {
        let (c, s) = (theta.cos(), theta.sin());
        let q = |m: &[[T; 2]; 2]| c * c * m[0][0] + T::lit(2.0) * c * s * m[0][1] + s * s * m[1][1];
        q(&self.a) / q(&self.b)
    }
}

/// `sup_{span(v, w)} R`, the larger eigenvalue of the restricted pencil.
pub fn minimax_over_plane<T: Real>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    v: &ZonalField<T>,
    w: &ZonalField<T>,
) -> Result<T> {
    PlanePencil::restrict(a, b, v.coeffs(), w.coeffs())
        .eigenvalues()
        .map(|(_, high)| high)
}

/// `λ̄_k = λ_k (∫ u^N)^{4/n}` for every computed eigenvalue.
pub fn normalized_invariant<T: Real>(spectrum: &GeneralizedSpectrum<T>, density: &ConformalDensity<T>) -> Vec<T> {
    let factor = density
        .volume()
        .powf(T::lit(4.0) / T::lit(f64::from(density.dimension())));
    spectrum.eigenvalues.iter().map(|&l| l * factor).collect()
}
