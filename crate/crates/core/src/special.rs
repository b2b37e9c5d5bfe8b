//! Gamma function, sphere volumes and Gauss–Legendre nodes.

use crate::error::{LabError, Result};
use crate::linalg::tridiagonal_eigenvalues;
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of Γ(x) for x > 0 (Lanczos approximation, g = 7).
pub fn ln_gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G) + half;
    half * (T::lit(2.0) * T::PI()).ln() + (x + half) * t.ln() - t + acc.ln()
}

/// Γ(x) for real x, including negative non-integers.
pub fn gamma<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    ln_gamma(x).exp()
}

/// Surface area of the unit sphere Sᵏ ⊂ Rᵏ⁺¹, via the exact two-step recursion
/// Vol(Sᵏ) = 2π/(k−1) · Vol(Sᵏ⁻²).
pub fn sphere_volume<T: Real>(k: u32) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    let (mut vol, mut dim) = if k % 2 == 0 {
        (T::lit(2.0), 0u32)
    } else {
        (two_pi, 1u32)
    };
    while dim < k {
        dim += 2;
        vol = vol * two_pi / T::lit(f64::from(dim - 1));
    }
    vol
}

/// `m`-point Gauss–Legendre rule on `[−1, 1]`: Golub–Welsch nodes polished
/// by Newton steps, weights `2 / ((1 − x²) P_m'(x)²)`.
pub fn gauss_legendre<T: Real>(m: usize) -> Result<(Vec<T>, Vec<T>)> {
    if m == 0 {
        return Err(LabError::InvalidArgument("Gauss–Legendre rule needs at least one node".into()));
    }
    let off: Vec<T> = (1..m)
        .map(|k| {
            let k = T::from_usize_lossy(k);
            k / (T::lit(4.0) * k * k - T::one()).sqrt()
        })
        .collect();
    let mut nodes = tridiagonal_eigenvalues(&vec![T::zero(); m], &off)?;
    let mut weights = Vec::with_capacity(m);
    for x in nodes.iter_mut() {
        let mut dp = T::zero();
        for _ in 0..3 {
            let (p, d) = legendre_with_derivative(*x, m);
            dp = d;
            let step = p / d;
            *x -= step;
            if step.abs() <= T::epsilon() {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(*x, m);
        if d.is_finite() {
            dp = d;
        }
        weights.push(T::lit(2.0) / ((T::one() - *x * *x) * dp * dp));
    }
    Ok((nodes, weights))
}

/// `P_m(x)` and `P_m'(x)` for `|x| < 1`.
fn legendre_with_derivative<T: Real>(x: T, m: usize) -> (T, T) {
    let (mut p0, mut p1) = (T::one(), x);
    if m == 0 {
        return (T::one(), T::zero());
    }
    for k in 1..m {
        let k = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * k + T::one()) * x * p1 - k * p0) / (k + T::one());
        p0 = p1;
        p1 = p2;
    }
    let mf = T::from_usize_lossy(m);
    (p1, mf * (x * p1 - p0) / (x * x - T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Γ at half-integers by the recurrence Γ(x+1) = xΓ(x) from Γ(1/2) = √π.
    fn gamma_half_integer(twice: u32) -> f64 {
        let (mut g, mut x) = if twice % 2 == 0 {
            (1.0, 1.0)
        } else {
            (std::f64::consts::PI.sqrt(), 0.5)
        };
        while 2.0 * x < f64::from(twice) {
            g *= x;
            x += 1.0;
        }
        g
    }

    #[test]
    fn gamma_matches_recurrence_oracle() {
        for twice in 1..60 {
            let x = f64::from(twice) / 2.0;
            let oracle = gamma_half_integer(twice);
            let got = gamma(x);
            assert!(
                ((got - oracle) / oracle).abs() < 1e-13,
                "Γ({x}) = {got}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn gamma_reflection_branch() {
        // Γ(−1/2) = −2√π
        let got = gamma(-0.5f64);
        let want = -2.0 * std::f64::consts::PI.sqrt();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn sphere_volumes_closed_form() {
        let pi = std::f64::consts::PI;
        assert!((sphere_volume::<f64>(1) - 2.0 * pi).abs() < 1e-14);
        assert!((sphere_volume::<f64>(2) - 4.0 * pi).abs() < 1e-14);
        assert!((sphere_volume::<f64>(4) - 8.0 * pi * pi / 3.0).abs() < 1e-12);
        assert!((sphere_volume::<f64>(5) - pi.powi(3)).abs() < 1e-12);
        for k in 1..25u32 {
            let via_gamma = 2.0 * pi.powf(f64::from(k + 1) / 2.0) / gamma(f64::from(k + 1) / 2.0);
            let v = sphere_volume::<f64>(k);
            assert!(((v - via_gamma) / v).abs() < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn single_precision_volume() {
        let v = sphere_volume::<f32>(5);
        assert!((v - std::f32::consts::PI.powi(3)).abs() < 1e-4);
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for m in [1usize, 2, 5, 40, 400] {
            let (x, w) = gauss_legendre::<f64>(m).unwrap();
            assert!(w.iter().all(|&wi| wi > 0.0));
            for deg in 0..(2 * m).min(60) {
                let got: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "m={m} deg={deg}: {got} vs {exact}");
            }
        }
    }
}
