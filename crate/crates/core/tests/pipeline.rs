use paneitz_core::einstein::{derive_coefficients, sharp_constant_oracle};
use paneitz_core::spectral::{density_spectrum, normalized_invariant};
use paneitz_core::zonal::{build_basis, build_quadrature};
use paneitz_core::{ConformalDensity, EinsteinData, QuadratureRule, ZonalBasis};
use proptest::prelude::*;

fn round(n: u32, q: usize, l: usize) -> (paneitz_core::OperatorCoefficients, ZonalBasis) {
    let data = EinsteinData::round_sphere(n).unwrap();
    let rule: QuadratureRule = build_quadrature(&data, q).unwrap();
    (derive_coefficients(&data), build_basis(&rule, l).unwrap())
}

#[test]
fn single_precision_follows_double() {
    let d32 = paneitz_core::einstein::EinsteinData::<f32>::round_sphere(6).unwrap();
    let r32 = build_quadrature(&d32, 60).unwrap();
    let b32 = build_basis(&r32, 8).unwrap();
    let u32 = paneitz_core::spectral::ConformalDensity::constant(&r32, 1.0f32).unwrap();
    let s32 = density_spectrum(&derive_coefficients(&d32), &b32, &u32, 3).unwrap();
    let bars32 = normalized_invariant(&s32, &u32);

    let (c, b) = round(6, 60, 8);
    let u = ConformalDensity::constant(b.rule(), 1.0).unwrap();
    let bars = normalized_invariant(&density_spectrum(&c, &b, &u, 3).unwrap(), &u);
    for (x, y) in bars32.iter().zip(&bars) {
        assert!((f64::from(*x) - y).abs() / y < 1e-4, "{x} vs {y}");
    }
}

#[test]
fn first_invariant_of_the_constant_is_the_oracle() {
    for n in [5u32, 7, 9, 12, 16] {
        let (c, b) = round(n, 80, 6);
        let u = ConformalDensity::constant(b.rule(), 2.5).unwrap();
        let bar = normalized_invariant(&density_spectrum(&c, &b, &u, 1).unwrap(), &u)[0];
        let k = sharp_constant_oracle::<f64>(n).unwrap();
        assert!((bar - k).abs() < 1e-10 * k, "n={n}: {bar} vs {k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Galerkin eigenvalues sit above the exact ones, and the round sphere
    // minimizes the first invariant at the constant.
    #[test]
    fn random_densities_stay_above_the_sharp_levels(
        n in 5u32..=12,
        amplitude in 0.05f64..0.4,
        seed in any::<u64>(),
    ) {
        let (c, b) = round(n, 200, 24);
        let q = build_basis(b.rule(), 6).unwrap().random_field(amplitude, seed).unwrap();
        let u = ConformalDensity::from_q(b.rule(), &q).unwrap();
        let bars = normalized_invariant(&density_spectrum(&c, &b, &u, 2).unwrap(), &u);
        let k = sharp_constant_oracle::<f64>(n).unwrap();
        prop_assert!(bars[0] >= k * (1.0 - 1e-10), "{} < {}", bars[0], k);
        prop_assert!(bars[1] >= 2f64.powf(4.0 / f64::from(n)) * k, "{} vs {}", bars[1], k);
    }
}
