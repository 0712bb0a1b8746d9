//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use m3v_core::gluing::{Filling, ManifoldFile, ShapeSolution};
use m3v_core::holonomy::{self, HolonomyRep, Mat2};
use m3v_core::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Euler's pentagonal series, independent of the product used by the crate.
pub fn eta_pentagonal(tau: Complex64) -> Complex64 {
    let q = (2.0 * PI * I * tau).exp();
    let mut s = Complex64::new(1.0, 0.0);
    for n in 1..200i64 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let a = q.powf((n * (3 * n - 1) / 2) as f64);
        let b = q.powf((n * (3 * n + 1) / 2) as f64);
        if a.norm() < 1e-30 {
            break;
        }
        s += (a + b) * sign;
    }
    (2.0 * PI * I * tau / 24.0).exp() * s
}

/// Σ (−1)ⁿ exp(πin²τ) summed symmetrically.
pub fn theta_series_oracle(tau: Complex64) -> Complex64 {
    let mut s = Complex64::new(1.0, 0.0);
    for n in 1..200i64 {
        let t = (PI * I * tau * (n * n) as f64).exp() * 2.0 * if n % 2 == 0 { 1.0 } else { -1.0 };
        s += t;
        if t.norm() < 1e-30 {
            break;
        }
    }
    s
}

/// D(e^{iθ}) = −∫₀^θ log|2 sin(t/2)| dt, with the log t singularity
/// integrated in closed form and the smooth remainder by Gauss–Legendre
/// on many panels.
pub fn clausen_oracle(theta: f64) -> f64 {
    let smooth = |t: f64| if t == 0.0 { 0.0 } else { (2.0 * (t / 2.0).sin() / t).ln() };
    let nodes = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    let weights = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
    let panels = 400;
    let h = theta / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * h / 2.0 * smooth(mid + x * h / 2.0);
        }
    }
    -(acc + theta * theta.ln() - theta)
}

/// Every reduced word up to `max_len`, built without the crate's helpers.
pub fn all_reduced_words(n_gens: i32, max_len: usize) -> Vec<Vec<i32>> {
    let letters: Vec<i32> = (1..=n_gens).flat_map(|g| [g, -g]).collect();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for &a in &letters {
                if w.last() != Some(&-a) {
                    let mut v = w.clone();
                    v.push(a);
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn eval(rep: &HolonomyRep, w: &[i32]) -> Mat2 {
    let mut m = Mat2::identity();
    for &a in w {
        let g = rep.mats[(a.unsigned_abs() - 1) as usize];
        m *= if a > 0 { g } else { g.try_inverse().unwrap() };
    }
    m
}

/// Complex length straight from eigenvalues of the matrix.
pub fn brute_length(m: &Mat2) -> Option<(f64, f64)> {
    let t = m.trace();
    let disc = (t * t - 4.0).sqrt();
    let a = (t + disc) / 2.0;
    let b = (t - disc) / 2.0;
    let big = if a.norm() > b.norm() { a } else { b };
    let l = 2.0 * big.norm().ln();
    if l < 1e-6 {
        return None;
    }
    Some((l, holonomy::wrap_angle(2.0 * big.arg())))
}

pub fn angle_close(a: f64, b: f64, tol: f64) -> bool {
    holonomy::wrap_angle(a - b).abs() < tol
}

/// Max equation error recomputed from the file, independently of the solver.
pub fn residual_from_file(mf: &ManifoldFile, sol: &ShapeSolution) -> f64 {
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let mut r: f64 = 0.0;
    for e in &mf.edges {
        r = r.max(e.eval(&sol.z).norm());
    }
    for (c, f) in mf.cusps.iter().zip(&sol.fillings) {
        let err = match f {
            Filling::Complete(_) => c.m.eval(&sol.z).norm(),
            Filling::Coeffs(p, q) => (c.m.eval(&sol.z) * *p as f64 + c.l.eval(&sol.z) * *q as f64 - two_pi_i).norm(),
        };
        r = r.max(err);
    }
    r
}
