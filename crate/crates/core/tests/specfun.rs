use m3v_core::specfun::{self, ModularMatrix, UpperHalfPoint};
use m3v_core::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

mod oracles;
use oracles::{clausen_oracle, eta_pentagonal, theta_series_oracle};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn uhp(re: f64, im: f64) -> UpperHalfPoint {
    UpperHalfPoint::new(Complex64::new(re, im)).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn dilog_values() {
    let tol = 1e-15;
    assert_eq!(specfun::dilog(Complex64::new(0.0, 0.0), tol).unwrap(), Complex64::new(0.0, 0.0));
    let half: f64 = (1..200).map(|k| 0.5f64.powi(k) / (k * k) as f64).sum();
    assert!((specfun::dilog(Complex64::new(0.5, 0.0), tol).unwrap().re - half).abs() < 1e-15);
    assert!((specfun::dilog(Complex64::new(-1.0, 0.0), tol).unwrap().re + PI * PI / 12.0).abs() < 1e-14);
    assert_eq!(specfun::dilog(Complex64::new(2.0, 0.0), tol).unwrap_err().code(), "on-branch-cut");
    assert_eq!(specfun::dilog(Complex64::new(0.5, 0.0), 0.0).unwrap_err().code(), "bad-tolerance");
}

#[test]
fn bloch_wigner_regular_tetrahedron() {
    let z = Complex64::from_polar(1.0, PI / 3.0);
    let d = specfun::bloch_wigner(z, 1e-15).unwrap();
    assert!((d - clausen_oracle(PI / 3.0)).abs() < 1e-12, "{d}");
    assert!((d - 1.0149416064096537).abs() < 1e-12);
}

#[test]
fn bloch_wigner_flat_and_degenerate() {
    assert!(specfun::bloch_wigner(Complex64::new(0.3, 0.0), 1e-15).unwrap().abs() < 1e-15);
    assert_eq!(specfun::bloch_wigner(Complex64::new(1.0, 0.0), 1e-15).unwrap_err().code(), "degenerate-shape");
    assert_eq!(specfun::bloch_wigner(Complex64::new(0.0, 0.0), 1e-15).unwrap_err().code(), "degenerate-shape");
}

#[test]
fn eta_at_i_matches_pentagonal_series() {
    let e = specfun::dedekind_eta(uhp(0.0, 1.0), 1e-16).unwrap();
    assert!(rel(e, eta_pentagonal(I)) < 1e-12);
    assert!((e.re - 0.7682254223260566).abs() < 1e-13);
}

#[test]
fn eta_translation() {
    let t = uhp(0.3, 1.1);
    let a = specfun::dedekind_eta(uhp(1.3, 1.1), 1e-16).unwrap();
    let b = specfun::dedekind_eta(t, 1e-16).unwrap();
    assert!(rel(a / b, (I * PI / 12.0).exp()) < 1e-13);
}

#[test]
fn eta_and_theta_at_large_imaginary_part() {
    let t = uhp(0.2, 12.0);
    let e = specfun::dedekind_eta(t, 1e-16).unwrap();
    assert!(rel(e, (2.0 * PI * I * t.value() / 24.0).exp()) < 1e-30f64.max(1e-15));
    assert!((specfun::theta01(t, 1e-15).unwrap() - 1.0).norm() < 1e-15);
    assert!(specfun::dedekind_eta(t, 1e-16).unwrap().norm() > 0.0);
}

#[test]
fn theta_at_i_and_product_form() {
    let th = specfun::theta01(uhp(0.0, 1.0), 1e-15).unwrap();
    assert!((th.re - 0.913579138156117).abs() < 1e-14);
    let both = specfun::theta01_both(uhp(0.2, 0.9), 1e-15).unwrap();
    assert!(rel(both.series.value, both.product.value) < 1e-12);
}

#[test]
fn lower_half_plane_rejected() {
    assert_eq!(UpperHalfPoint::new(Complex64::new(0.0, -1.0)).unwrap_err().code(), "not-upper-half");
    assert_eq!(UpperHalfPoint::new(Complex64::new(1.0, 0.0)).unwrap_err().code(), "not-upper-half");
}

/// η(γτ) rebuilt from η(τ), the principal ¼log(−(a+bτ)²) and the defect.
fn rebuild(g: ModularMatrix, tau: UpperHalfPoint) -> f64 {
    let k = specfun::eta_transform_defect(g, tau).unwrap();
    let a = g.automorphy(tau);
    let pred = specfun::dedekind_eta(tau, 1e-16).unwrap()
        * (specfun::principal_ln(-(a * a)) / 4.0 + I * PI * k as f64 / 12.0).exp();
    rel(pred, specfun::dedekind_eta(g.act(tau).unwrap(), 1e-16).unwrap())
}

#[test]
fn transform_defects_are_integers() {
    // the principal ¼log(−1) = iπ/4 is absorbed by the defect
    assert_eq!(specfun::eta_transform_defect(ModularMatrix::identity(), uhp(0.1, 0.7)).unwrap(), -3);
    assert!(rebuild(ModularMatrix::identity(), uhp(0.1, 0.7)) < 1e-13);
    let t = ModularMatrix::new(1, 1, 0, 1).unwrap();
    assert_eq!(specfun::eta_transform_defect(t, uhp(0.0, 1.0)).unwrap(), -2);
    assert!(rebuild(t, uhp(0.0, 1.0)) < 1e-13);
    let s = ModularMatrix::new(0, -1, 1, 0).unwrap();
    assert!(rebuild(s, uhp(0.0, 2.0)) < 1e-12);
    assert_eq!(ModularMatrix::new(2, 1, 1, 2).unwrap_err().code(), "not-unimodular");
}

fn random_sl2z(rng: &mut StdRng, steps: usize) -> ModularMatrix {
    let s = ModularMatrix::new(0, -1, 1, 0).unwrap();
    let mut g = ModularMatrix::identity();
    for _ in 0..steps {
        let k = rng.random_range(-3i64..=3);
        g = g.compose(&ModularMatrix::new(1, k, 0, 1).unwrap()).compose(&s);
    }
    g
}

fn random_tau(rng: &mut StdRng) -> UpperHalfPoint {
    uhp(rng.random_range(-1.0..1.0), rng.random_range(0.4..2.0))
}

#[test]
fn eta_24_covariance_on_random_pairs() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let g = random_sl2z(&mut rng, 3);
        let tau = random_tau(&mut rng);
        let gt = g.act(tau).unwrap();
        let lhs = specfun::dedekind_eta(gt, 1e-16).unwrap().powu(24);
        let rhs = g.automorphy(tau).powu(12) * specfun::dedekind_eta(tau, 1e-16).unwrap().powu(24);
        assert!(rel(lhs, rhs) < 1e-10, "{g:?} {tau:?}: {}", rel(lhs, rhs));
        assert!(rebuild(g, tau) < 1e-10);
    }
}

#[test]
fn theta_squared_gamma4_covariance() {
    let mut rng = StdRng::seed_from_u64(11);
    let gens = [
        ModularMatrix::new(1, 4, 0, 1).unwrap(),
        ModularMatrix::new(1, -4, 0, 1).unwrap(),
        ModularMatrix::new(1, 0, 4, 1).unwrap(),
        ModularMatrix::new(1, 0, -4, 1).unwrap(),
    ];
    for _ in 0..20 {
        let mut g = ModularMatrix::identity();
        for _ in 0..rng.random_range(1..4) {
            g = g.compose(&gens[rng.random_range(0..4)]);
        }
        assert!(g.d.rem_euclid(4) == 1 && g.a.rem_euclid(4) == 1 && g.b % 4 == 0 && g.c % 4 == 0);
        let tau = random_tau(&mut rng);
        let lhs = specfun::theta01(g.act(tau).unwrap(), 1e-15).unwrap().powu(2);
        let rhs = g.automorphy(tau) * specfun::theta01(tau, 1e-15).unwrap().powu(2);
        assert!(rel(lhs, rhs) < 1e-10, "{g:?}: {}", rel(lhs, rhs));
    }
}

#[test]
fn theta_series_product_on_random_points() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..20 {
        let tau = random_tau(&mut rng);
        let both = specfun::theta01_both(tau, 1e-15).unwrap();
        assert!(rel(both.series.value, both.product.value) < 1e-12);
        assert!(rel(both.series.value, theta_series_oracle(tau.value())) < 1e-12);
    }
}

proptest! {
    #[test]
    fn bloch_wigner_symmetries(re in -3.0f64..3.0, im in 0.05f64..3.0) {
        let z = Complex64::new(re, im);
        let one = Complex64::new(1.0, 0.0);
        let d = specfun::bloch_wigner(z, 1e-15).unwrap();
        prop_assert!(d > 0.0);
        let dc = specfun::bloch_wigner(z.conj(), 1e-15).unwrap();
        prop_assert!((d + dc).abs() < 1e-12);
        // cyclic invariance under z ↦ 1/(1−z) ↦ 1 − 1/z
        let d1 = specfun::bloch_wigner(one / (one - z), 1e-15).unwrap();
        let d2 = specfun::bloch_wigner(one - one / z, 1e-15).unwrap();
        prop_assert!((d - d1).abs() < 1e-12 && (d - d2).abs() < 1e-12);
        // orientation-reversing substitutions
        prop_assert!((d + specfun::bloch_wigner(one - z, 1e-15).unwrap()).abs() < 1e-12);
        prop_assert!((d + specfun::bloch_wigner(one / z, 1e-15).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn eta_is_pure_and_nonzero(re in -2.0f64..2.0, im in 0.1f64..3.0) {
        let t = uhp(re, im);
        let a = specfun::dedekind_eta(t, 1e-16).unwrap();
        let b = specfun::dedekind_eta(t, 1e-16).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.norm() > 0.0);
        prop_assert!(rel(a, eta_pentagonal(t.value())) < 1e-10);
    }
}
