use m3v_core::fixtures;
use m3v_core::holonomy::{self, ComplexLength, HolonomyRep, RepFile};
use m3v_core::spectrum::{self, GeodesicTable, TailModel};
use m3v_core::Complex64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

mod oracles;
use oracles::{all_reduced_words, angle_close, brute_length, eval};

const NO_TAIL: TailModel = TailModel { l_c: 0.0, prefactor: 0.0 };

fn cl(l: f64, theta: f64) -> ComplexLength {
    ComplexLength { l, theta }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn one_generator(m: [[[f64; 2]; 2]; 2]) -> HolonomyRep {
    HolonomyRep::from_file(&RepFile { n_gens: 1, mats: vec![m], relators: vec![], peripheral: vec![], lift_declared: true }).unwrap()
}

#[test]
fn enumeration_matches_brute_force_at_length_eight() {
    let rep = fixtures::figure8_rep().unwrap();
    let table = spectrum::enumerate(&rep, 8, spectrum::DEFAULT_DEDUP_TOL).unwrap();
    let mut brute: Vec<(f64, f64)> = all_reduced_words(2, 8).iter().filter_map(|w| brute_length(&eval(&rep, w))).collect();
    brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
    brute.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-7 && angle_close(a.1, b.1, 1e-6));

    let tl: Vec<(f64, f64)> = table.classes.iter().map(|c| (c.length.l, c.length.theta)).collect();
    // every brute-force length is a multiple of a table length
    for &(l, th) in &brute {
        let hit = tl.iter().any(|&(t, tt)| {
            let j = (l / t).round();
            j >= 1.0 && (l - j * t).abs() < 1e-7 && angle_close(th, j * tt, 1e-6)
        });
        assert!(hit, "brute-force length {l} + {th}i has no primitive class in the table");
    }
    // and every table length occurs among brute-force lengths
    for &(t, tt) in &tl {
        assert!(brute.iter().any(|&(l, th)| (l - t).abs() < 1e-7 && angle_close(th, tt, 1e-6)));
    }
    // systole agrees with the shortest brute-force length
    let sys = brute.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    assert!((table.min_length().unwrap() - sys).abs() < 1e-10);
    assert!((sys - 1.0870701449957).abs() < 1e-10);
}

#[test]
fn table_invariants() {
    let rep = fixtures::figure8_rep().unwrap();
    let table = spectrum::enumerate(&rep, 6, spectrum::DEFAULT_DEDUP_TOL).unwrap();
    for c in &table.classes {
        assert!(c.primitive && c.length.l > 0.0 && c.q.norm() < 1.0);
        assert!((c.q - c.length.q()).norm() < 1e-15);
        assert!(!spectrum::is_proper_power(&c.word));
        let m = holonomy::evaluate_word(&rep, &c.word).unwrap();
        assert_eq!(holonomy::classify(&m), holonomy::Kind::Loxodromic);
    }
}

#[test]
fn parabolic_generators_give_an_empty_table() {
    let rep = one_generator([[[1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]);
    assert!(spectrum::enumerate(&rep, 1, 1e-9).unwrap().classes.is_empty());
    let rep = fixtures::figure8_rep().unwrap();
    assert!(spectrum::enumerate(&rep, 1, 1e-9).unwrap().classes.is_empty());
}

#[test]
fn cyclic_group_keeps_generator_and_inverse() {
    let rep = one_generator([[[2.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]);
    let table = spectrum::enumerate(&rep, 3, 1e-9).unwrap();
    let mut words: Vec<_> = table.classes.iter().map(|c| c.word.clone()).collect();
    words.sort();
    assert_eq!(words, vec![vec![-1], vec![1]]);
}

#[test]
fn thread_count_does_not_change_the_table() {
    let rep = fixtures::figure8_rep().unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| spectrum::enumerate(&rep, 6, 1e-9).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn zograf_products_on_small_tables() {
    let empty = GeodesicTable::from_lengths(&[], NO_TAIL);
    assert_eq!(spectrum::zograf_f(&empty, 3, 50).unwrap().value, c(1.0, 0.0));
    let f = GeodesicTable::from_lengths(&[(cl(10f64.ln(), 0.0), None)], NO_TAIL);
    let oracle: f64 = (3..=50).map(|m| 1.0 - 0.1f64.powi(m)).product();
    assert!((spectrum::zograf_f(&f, 3, 50).unwrap().value.re - oracle).abs() < 1e-15);
    assert!((oracle - 0.998_889_001_121_211).abs() < 1e-15);
    assert_eq!(spectrum::zograf_f(&f, 2, 50).unwrap_err().code(), "below-convergence-threshold");
    assert_eq!(spectrum::zograf_g(&f, 2, 50).unwrap_err().code(), "lift-required");

    let g = GeodesicTable::from_lengths(&[(cl(25f64.ln(), 0.0), Some(c(0.2, 0.0)))], NO_TAIL);
    let oracle: f64 = (2..=40).map(|m| 1.0 - 0.04f64.powf(m as f64 + 0.5)).product();
    let gv = spectrum::zograf_g(&g, 2, 40).unwrap().value;
    assert!((gv.re - oracle).abs() < 1e-15);
    let flipped = GeodesicTable::from_lengths(&[(cl(25f64.ln(), 0.0), Some(c(-0.2, 0.0)))], NO_TAIL);
    let oracle: f64 = (2..=40).map(|m| 1.0 + 0.04f64.powf(m as f64 + 0.5)).product();
    assert!((spectrum::zograf_g(&flipped, 2, 40).unwrap().value.re - oracle).abs() < 1e-15);
    assert_eq!(spectrum::zograf_g(&g, 1, 40).unwrap_err().code(), "below-convergence-threshold");
}

#[test]
fn conjugate_pairs_give_squared_moduli() {
    let pairs = [(0.9, 0.4), (1.3, -2.0), (2.2, 3.0)];
    let mut lens = Vec::new();
    let mut expect = 1.0;
    for (l, th) in pairs {
        lens.push((cl(l, th), None));
        lens.push((cl(l, -th), None));
        let q = cl(l, th).q();
        let p: Complex64 = (3..=60).map(|m| 1.0 - q.powi(m)).product();
        expect *= p.norm_sqr();
    }
    let v = spectrum::zograf_f(&GeodesicTable::from_lengths(&lens, NO_TAIL), 3, 60).unwrap().value;
    assert!(v.im.abs() < 1e-15 && (v.re - expect).abs() < 1e-14);
}

#[test]
fn ruelle_factor_cases() {
    let empty = GeodesicTable::from_lengths(&[], NO_TAIL);
    assert_eq!(spectrum::ruelle_factor(&empty, 0, c(3.0, 0.0), false).unwrap().value, c(1.0, 0.0));
    let one = GeodesicTable::from_lengths(&[(cl(2.0, 0.0), None)], NO_TAIL);
    let v = spectrum::ruelle_factor(&one, 0, c(3.0, 0.0), false).unwrap().value;
    assert!((v.re - (1.0 - (-6.0f64).exp())).abs() < 1e-16);
    assert_eq!(spectrum::ruelle_factor(&one, 0, c(2.0, 0.0), false).unwrap_err().code(), "outside-convergence");
    assert!(spectrum::ruelle_factor(&one, 0, c(2.0, 0.0), true).is_ok());

    let (l, th) = (1.1, 0.8);
    let pair = GeodesicTable::from_lengths(&[(cl(l, th), None), (cl(l, -th), None)], NO_TAIL);
    let v = spectrum::ruelle_factor(&pair, 2, c(3.0, 0.0), false).unwrap().value;
    let x = (-3.0 * l).exp();
    let oracle = (1.0 - Complex64::from_polar(x, th)) * (1.0 - Complex64::from_polar(x, -th));
    assert!((v - oracle).norm() < 1e-15 && v.im.abs() < 1e-16);
}

#[test]
fn ruelle_zeta_cases() {
    let (l, th) = (1.4, -0.6);
    let t = GeodesicTable::from_lengths(&[(cl(l, th), None)], NO_TAIL);
    let s = c(4.0, 0.5);
    let a = c(l, th).scale(0.5).exp();
    let x = (-s * l).exp();
    let oracle = (1.0 - a * a * x) * (1.0 - x) * (1.0 - x / (a * a));
    assert!((spectrum::ruelle_zeta(&t, 2, s).unwrap().value - oracle).norm() < 1e-15);
    let s0 = c(3.0, 0.0);
    assert_eq!(spectrum::ruelle_zeta(&t, 0, s0).unwrap().value, spectrum::ruelle_factor(&t, 0, s0, false).unwrap().value);
    assert_eq!(spectrum::ruelle_zeta(&t, 2, c(3.0, 0.0)).unwrap_err().code(), "outside-convergence");
}

fn synthetic_classes(seed: u64, n: usize) -> GeodesicTable {
    let mut rng = StdRng::seed_from_u64(seed);
    let lens: Vec<_> = (0..n)
        .map(|_| {
            let len = cl(rng.random_range(0.3..4.0), rng.random_range(-PI..PI));
            let root = (-len.lambda() / 2.0).exp() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (len, Some(root))
        })
        .collect();
    GeodesicTable::from_lengths(&lens, NO_TAIL)
}

#[test]
fn decomposition_identity_term_by_term() {
    let table = synthetic_classes(42, 50);
    for k in 1..=6usize {
        let s = c(2.6 + k as f64 / 2.0, 0.7);
        assert!(spectrum::decomposition_residual(&table, k, s).unwrap() <= 1e-12);
        // whole products as well, against the shifted Ruelle factors
        let lhs = spectrum::ruelle_zeta(&table, k, s).unwrap().value;
        let mut rhs = c(1.0, 0.0);
        for j in 0..=k as i64 {
            let kk = k as i64 - 2 * j;
            rhs *= spectrum::ruelle_factor(&table, kk, s - kk as f64 / 2.0, true).unwrap().value;
        }
        assert!((lhs - rhs).norm() / lhs.norm() <= 1e-12);
    }
}

#[test]
fn products_are_permutation_invariant() {
    let rep = fixtures::figure8_rep().unwrap();
    let table = spectrum::enumerate(&rep, 6, 1e-9).unwrap();
    let mut shuffled = table.clone();
    shuffled.classes.shuffle(&mut StdRng::seed_from_u64(9));
    let a = spectrum::zograf_f(&table, 3, 60).unwrap();
    let b = spectrum::zograf_f(&shuffled, 3, 60).unwrap();
    assert_eq!(a, b);
    let s = c(3.5, 0.0);
    let a = spectrum::ruelle_zeta(&table, 2, s).unwrap().value;
    let b = spectrum::ruelle_zeta(&shuffled, 2, s).unwrap().value;
    assert_eq!(a, b);
}

#[test]
fn nested_cutoffs_are_cauchy() {
    let rep = fixtures::figure8_rep().unwrap();
    let vals: Vec<_> = (5..=8).map(|l| spectrum::zograf_f(&spectrum::enumerate(&rep, l, 1e-9).unwrap(), 3, 60).unwrap()).collect();
    for w in vals.windows(2) {
        assert!((w[1].value - w[0].value).norm() <= w[0].tail_bound, "{:?}", w);
    }
}

#[test]
fn json_lines_round_trip() {
    let rep = fixtures::figure8_rep().unwrap();
    let table = spectrum::enumerate(&rep, 5, 1e-9).unwrap();
    let text = table.to_json_lines();
    assert_eq!(text.lines().count(), table.classes.len());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["word", "l", "theta", "primitive"] {
            assert!(v.get(key).is_some());
        }
    }
    let back = GeodesicTable::from_json_lines(&text, table.cutoff_wordlen, table.tail).unwrap();
    for (a, b) in table.classes.iter().zip(&back.classes) {
        assert_eq!(a.word, b.word);
        assert!((a.length.l - b.length.l).abs() < 1e-15 && (a.length.theta - b.length.theta).abs() < 1e-15);
    }
    let (fa, fb) = (spectrum::zograf_f(&table, 3, 60).unwrap(), spectrum::zograf_f(&back, 3, 60).unwrap());
    assert!((fa.value - fb.value).norm() < 1e-14);
}

#[test]
fn deformed_table_keeps_the_word_list() {
    let rep = fixtures::figure8_rep().unwrap();
    let table = spectrum::enumerate(&rep, 5, 1e-9).unwrap();
    let same = table.reevaluate(&rep).unwrap();
    for (a, b) in table.classes.iter().zip(&same.classes) {
        assert_eq!(a.word, b.word);
        assert!((a.length.l - b.length.l).abs() < 1e-12);
    }
    let filled = fixtures::figure8_5_1_rep().unwrap();
    let moved = table.reevaluate(&filled).unwrap();
    assert_eq!(moved.classes.len(), table.classes.len());
    assert!(moved.classes.iter().zip(&table.classes).any(|(a, b)| (a.length.l - b.length.l).abs() > 1e-3));
}

#[test]
fn half_powers_follow_the_lift() {
    let rep = fixtures::figure8_spin_rep().unwrap();
    let table = spectrum::enumerate(&rep, 4, 1e-9).unwrap();
    for c in &table.classes {
        let m = holonomy::evaluate_word(&rep, &c.word).unwrap();
        let h = c.half.unwrap();
        assert!((h * holonomy::large_eigenvalue(&m) - 1.0).norm() < 1e-12);
        assert!((h * h - c.q).norm() < 1e-12);
    }
}

proptest! {
    #[test]
    fn normal_form_is_rotation_and_inversion_invariant(w in proptest::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 1..10), r in 0usize..10) {
        let w = holonomy::cyclic_reduce(&holonomy::free_reduce(&w));
        prop_assume!(!w.is_empty());
        let k = r % w.len();
        let rot: Vec<i32> = w[k..].iter().chain(&w[..k]).copied().collect();
        prop_assert_eq!(spectrum::cyclic_normal_form(&rot), spectrum::cyclic_normal_form(&w));
        prop_assert_eq!(spectrum::cyclic_normal_form(&holonomy::inverse_word(&w)), spectrum::cyclic_normal_form(&w));
    }

    #[test]
    fn powers_are_detected(w in proptest::collection::vec(prop_oneof![Just(1), Just(-1), Just(2), Just(-2)], 1..5), n in 2usize..4) {
        let w = holonomy::cyclic_reduce(&holonomy::free_reduce(&w));
        prop_assume!(!w.is_empty());
        prop_assert!(spectrum::is_proper_power(&holonomy::word_power(&w, n)));
    }
}
