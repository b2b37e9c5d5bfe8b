//! Small dense linear algebra: symmetric eigensolvers and Cholesky.
//!
//! Problem sizes in this crate are tiny (at most a few hundred rows), so the
//! routines favour accuracy and simplicity over blocking or vectorization.

use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Build from a row-major slice; panics when the length is not a square.
    pub fn from_row_major(dim: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data must be dim²");
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self[(i, j)] == T::zero()))
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let row = &self.data[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(v).map(|(&a, &b)| a * b).sum()
            })
            .collect()
    }

    /// vᵀ M w
    pub fn bilinear(&self, v: &[T], w: &[T]) -> T {
        dot(v, &self.mul_vec(w))
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    /// Copy with `shift` added to every diagonal entry.
    pub fn shifted(&self, shift: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)] += shift;
        }
        m
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.dim + j]
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
///
/// Fails when a pivot drops to `min_pivot` or below.
pub fn cholesky<T: Real>(m: &Matrix<T>, min_pivot: T) -> Result<Matrix<T>> {
    let n = m.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > min_pivot) {
            return Err(LabError::NotPositiveDefinite {
                pivot: j,
                value: d.to_f64_lossy(),
            });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solve `L x = b` for lower-triangular `L`.
pub fn forward_substitute<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.dim();
    let mut x = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solve `Lᵀ x = b` for lower-triangular `L`.
pub fn backward_substitute_transpose<T: Real>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.dim();
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// `vectors[i]` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<Vec<T>>,
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// A rotation is applied only while `|a_pq| > ε √|a_pp a_qq|`, which gives
/// eigenvalues and vectors with small relative error on graded matrices
/// `D M D` whose scaled core `M` is well conditioned.
pub fn symmetric_eigen<T: Real>(m: &Matrix<T>) -> SymmetricEigen<T> {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = Matrix::<T>::identity(n);
    let eps = T::epsilon();

    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if !(apq.abs() > eps * (app * aqq).abs().sqrt()) {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = if theta.is_infinite() {
                    T::one() / (T::lit(2.0) * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                let tau = s / (T::one() + c);
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[(r, p)];
                        let arq = a[(r, q)];
                        let new_rp = arp - s * (arq + tau * arp);
                        let new_rq = arq + s * (arp - tau * arq);
                        a[(r, p)] = new_rp;
                        a[(p, r)] = new_rp;
                        a[(r, q)] = new_rq;
                        a[(q, r)] = new_rq;
                    }
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp - s * (vrq + tau * vrp);
                    v[(r, q)] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    SymmetricEigen {
        values: order.iter().map(|&i| a[(i, i)]).collect(),
        vectors: order
            .iter()
            .map(|&i| (0..n).map(|r| v[(r, i)]).collect())
            .collect(),
    }
}

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with the given
/// diagonal and sub-diagonal, by implicit QL with Wilkinson shifts.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], offdiag: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    assert!(offdiag.len() + 1 == n || (n == 0 && offdiag.is_empty()));
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(T::zero());
    let two = T::lit(2.0);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LabError::NoConvergence("tridiagonal QL"));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs() * g.signum());
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_symmetric(n: usize) -> Matrix<f64> {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let x = ((i * 7 + j * 13) % 11) as f64 - 5.0 + if i == j { 3.0 } else { 0.0 };
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let m = sample_symmetric(9);
        let eig = symmetric_eigen(&m);
        for (lam, v) in eig.values.iter().zip(&eig.vectors) {
            let mv = m.mul_vec(v);
            for (a, b) in mv.iter().zip(v) {
                assert!((a - lam * b).abs() < 1e-11);
            }
            assert!((norm2(v) - 1.0f64).abs() < 1e-13);
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn jacobi_on_diagonal_is_sorted_copy() {
        let m = Matrix::from_diagonal(&[3.0, -1.0, 2.0]);
        let eig = symmetric_eigen(&m);
        assert_eq!(eig.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn cholesky_round_trip_and_failure() {
        let mut m = Matrix::<f64>::identity(3).scaled(4.0);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let l = cholesky(&m, 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                assert!((s - m[(i, j)]).abs() < 1e-14);
            }
        }
        let b = [1.0, 2.0, 3.0];
        let y = forward_substitute(&l, &b);
        let x = backward_substitute_transpose(&l, &y);
        let mx = m.mul_vec(&x);
        for (a, b) in mx.iter().zip(&b) {
            assert!((a - b).abs() < 1e-13);
        }
        let indefinite = Matrix::from_diagonal(&[1.0, -1.0]);
        assert!(cholesky(&indefinite, 0.0).is_err());
    }

    #[test]
    fn tridiagonal_matches_jacobi() {
        let d = [2.0f64, -1.0, 0.5, 3.0, 1.0];
        let e = [1.0, 0.3, -0.7, 2.0];
        let mut m = Matrix::from_diagonal(&d);
        for (i, &x) in e.iter().enumerate() {
            m[(i, i + 1)] = x;
            m[(i + 1, i)] = x;
        }
        let ql = tridiagonal_eigenvalues(&d, &e).unwrap();
        let jac = symmetric_eigen(&m).values;
        for (a, b) in ql.iter().zip(&jac) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
