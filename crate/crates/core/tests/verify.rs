use m3v_core::spectrum::{self, GeodesicTable, TailModel};
use m3v_core::specfun::{self, UpperHalfPoint};
use m3v_core::verify::{self, EqualityReport, Parity, Provenance, Settings};
use m3v_core::holonomy::{HolonomyRep, Peripheral, RepFile};
use m3v_core::{fixtures, Complex64};
use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use std::f64::consts::PI;

fn settings(l: usize) -> Settings {
    Settings { max_wordlen: l, ..Default::default() }
}

#[test]
fn coefficients_are_exact_rationals() {
    for n in 3..12i64 {
        let c = verify::coefficient(n as usize, Parity::Even).unwrap();
        // n² − n + 1/6 with denominators cleared by hand
        assert_eq!(c * 6, Ratio::from_integer(6 * n * n - 6 * n + 1));
    }
    for n in 2..12i64 {
        let c = verify::coefficient(n as usize, Parity::Odd).unwrap();
        assert_eq!(c * 12, Ratio::from_integer(12 * n * n - 1));
    }
    assert_eq!(verify::coefficient(2, Parity::Odd).unwrap(), Ratio::new(47, 12));
}

#[test]
fn pass_follows_from_stored_fields() {
    let r = EqualityReport::new("thm-1.1", 2.0, 2.02, 0.005, 1e-9, Provenance::default());
    assert!(!r.pass);
    let json = serde_json::to_string(&r).unwrap();
    let mut back: EqualityReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.recompute_pass(), r.pass);
    back.error_budget = 0.02;
    assert!(back.recompute_pass());
    // the floor takes over when the budget is smaller
    let r = EqualityReport::new("x", 1.0, 1.0 + 1e-10, 0.0, 1e-9, Provenance::default());
    assert!(r.pass);
}

#[test]
fn closed_check_with_empty_table() {
    let cw = fixtures::figure8_5_1_cw().unwrap();
    let rep = fixtures::figure8_5_1_rep().unwrap();
    let empty = GeodesicTable::from_lengths(&[], TailModel { l_c: 0.0, prefactor: 0.0 });
    let vol = 0.9813688288922;
    let s = Settings::default();
    let a = verify::check_closed(&cw, &rep, vol, &empty, 3, Parity::Even, &s, Provenance::default()).unwrap();
    assert!((a.rhs_modulus - (37.0 / 6.0 * vol / PI).exp()).abs() < 1e-12 * a.rhs_modulus);
    let b = verify::check_closed(&cw, &rep, vol, &empty, 3, Parity::Even, &s, Provenance::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(verify::check_closed(&cw, &rep, vol, &empty, 1, Parity::Even, &s, Provenance::default()).unwrap_err().code(), "below-threshold");
}

#[test]
fn closed_check_rejects_homology() {
    // the complete holonomy leaves H_* nonzero on the filled CW complex
    let cw = fixtures::figure8_5_1_cw().unwrap();
    let rep = fixtures::figure8_rep().unwrap();
    let empty = GeodesicTable::from_lengths(&[], TailModel { l_c: 0.0, prefactor: 0.0 });
    let err = verify::check_closed(&cw, &rep, 1.0, &empty, 3, Parity::Even, &Settings::default(), Provenance::default());
    assert!(err.is_err());
}

#[test]
fn shuffled_table_gives_identical_report() {
    let mf = fixtures::figure8_manifold().unwrap();
    let rep = fixtures::figure8_5_1_rep().unwrap();
    let cw = fixtures::figure8_5_1_cw().unwrap();
    let s = settings(5);
    let (_, _, ledger) = verify::filled_ledger(&mf, (5, 1), fixtures::COMPLETION_5_1, &s).unwrap();
    let table = spectrum::enumerate(&rep, s.max_wordlen, s.dedup_tol).unwrap();
    let mut shuffled = table.clone();
    shuffled.classes.shuffle(&mut StdRng::seed_from_u64(4));
    let a = verify::check_closed(&cw, &rep, ledger.vol_filled, &table, 3, Parity::Even, &s, Provenance::default()).unwrap();
    let b = verify::check_closed(&cw, &rep, ledger.vol_filled, &shuffled, 3, Parity::Even, &s, Provenance::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(ledger.re_v_cusped > ledger.vol_filled);
}

#[test]
fn reports_are_reproducible_and_carry_provenance() {
    let mf = fixtures::figure8_manifold().unwrap();
    let rep = fixtures::figure8_rep().unwrap();
    let s = settings(5);
    let prov = Provenance::default().with_fixture("rep", fixtures::FIGURE8_REP);
    let a = verify::check_cusped_even(&mf, &rep, 3, &s, None, prov.clone()).unwrap();
    let b = verify::check_cusped_even(&mf, &rep, 3, &s, None, prov).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.name, "thm-1.1");
    assert_eq!(a.inputs.cutoff_wordlen, Some(5));
    assert_eq!(a.inputs.k, 4);
    assert_eq!(a.inputs.fixtures["rep"], fixtures::sha256_hex(fixtures::FIGURE8_REP));
    assert_eq!(a.pass, a.recompute_pass());
}

#[test]
fn basis_independence_of_cusped_lhs() {
    let mf = fixtures::figure8_manifold().unwrap();
    let rep = fixtures::figure8_rep().unwrap();
    for pq in [(1, 2), (3, 1), (2, 3), (5, 1)] {
        let r = verify::basis_independence(&mf, &rep, 3, pq, &Settings::default(), Provenance::default()).unwrap();
        assert!(r.rel_gap <= 1e-8, "{pq:?}: {}", r.rel_gap);
    }
}

#[test]
fn theta_over_eta_normalizes_at_the_cusp() {
    // θ₀₁/η blows up like q^{−1/24}; the normalized ratio tends to 1
    let mut prev = f64::INFINITY;
    for im in [1.0, 2.0, 4.0, 8.0] {
        let tau = Complex64::new(0.3, im);
        let p = UpperHalfPoint::new(tau).unwrap();
        let q24 = (Complex64::i() * PI * tau / 12.0).exp();
        let r = specfun::theta01(p, 1e-15).unwrap() / specfun::dedekind_eta(p, 1e-16).unwrap() * q24;
        let gap = (r - 1.0).norm();
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 1e-5);
}

#[test]
fn odd_check_needs_an_acyclic_lift() {
    let mf = fixtures::figure8_manifold().unwrap();
    let s = settings(5);
    // a single parabolic generator fixes a line in every odd symmetric power
    let f = RepFile {
        n_gens: 1,
        mats: vec![[[[1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]],
        relators: vec![],
        peripheral: vec![Peripheral { m: vec![1], l: vec![1], name: None, torus_identity: None }],
        lift_declared: true,
    };
    let parabolic = HolonomyRep::from_file(&f).unwrap();
    assert_eq!(verify::check_cusped_odd(&mf, &parabolic, 2, &s, None, Provenance::default()).unwrap_err().code(), "not-acyclic");
    let mut undeclared = fixtures::figure8_spin_rep().unwrap();
    undeclared.lift_declared = false;
    assert_eq!(verify::check_cusped_odd(&mf, &undeclared, 2, &s, None, Provenance::default()).unwrap_err().code(), "lift-required");
}

#[test]
fn lift_flip_is_deterministic() {
    let mf = fixtures::figure8_manifold().unwrap();
    let s = settings(5);
    let spin = fixtures::figure8_spin_rep().unwrap();
    // the figure-eight has two lifts; negating both generators swaps them
    let flipped = spin.with_generator_signs(&[-1.0, -1.0]);
    assert_eq!((flipped.eps_m[0], flipped.eps_l[0]), (1, -1));
    let a = verify::check_cusped_odd(&mf, &flipped, 2, &s, None, Provenance::default()).unwrap();
    let b = verify::check_cusped_odd(&mf, &flipped, 2, &s, None, Provenance::default()).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let base = verify::check_cusped_odd(&mf, &spin, 2, &s, None, Provenance::default()).unwrap();
    let t = |r: &EqualityReport| r.observations["torsion_modulus"].as_f64().unwrap();
    assert!((t(&a) - t(&base)).abs() > 0.1);
}

#[test]
fn sweep_rejects_inadmissible_fillings() {
    let mf = fixtures::figure8_manifold().unwrap();
    let rep = fixtures::figure8_rep().unwrap();
    let s = settings(4);
    let err = verify::convergence_sweep(&mf, &rep, &[(4, 2)], 3, false, &s, Provenance::default()).unwrap_err();
    assert_eq!(err.code(), "bad-coefficients");
    let err = verify::convergence_sweep(&mf, &rep, &[(5, 1)], 3, true, &s, Provenance::default()).unwrap_err();
    assert_eq!(err.code(), "bad-coefficients");
}

#[test]
fn single_filling_sweep() {
    let mf = fixtures::figure8_manifold().unwrap();
    let rep = fixtures::figure8_rep().unwrap();
    let sw = verify::convergence_sweep(&mf, &rep, &[(9, 4)], 3, true, &settings(4), Provenance::default()).unwrap();
    assert_eq!(sw.reports.len(), 1);
    assert!(sw.monotone && sw.pass);
    let tt = &sw.reports[0].observations["tilde_tau"];
    assert!(tt[1].as_f64().unwrap() > 0.0);
}
