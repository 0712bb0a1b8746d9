//! Finitely presented groups with SL(2,ℂ) generator matrices: word
//! evaluation, symmetric powers, classification and complex lengths,
//! spin signs and deformation of the representation along the cusp.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

pub type Mat2 = Matrix2<Complex64>;
/// Signed 1-based generator indices; `-j` is the inverse of generator `j`.
pub type Word = Vec<i32>;

pub const RELATOR_TOL: f64 = 1e-10;
pub const PARABOLIC_TOL: f64 = 1e-8;

pub fn inverse_word(w: &[i32]) -> Word {
    w.iter().rev().map(|&a| -a).collect()
}

pub fn free_reduce(w: &[i32]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &a in w {
        if out.last() == Some(&-a) {
            out.pop();
        } else {
            out.push(a);
        }
    }
    out
}

pub fn is_freely_reduced(w: &[i32]) -> bool {
    w.windows(2).all(|p| p[0] != -p[1])
}

/// Conjugating away matching ends leaves a cyclically reduced word.
pub fn cyclic_reduce(w: &[i32]) -> Word {
    let mut v = free_reduce(w);
    while v.len() >= 2 && v[0] == -v[v.len() - 1] {
        v.remove(0);
        v.pop();
    }
    v
}

pub fn word_power(w: &[i32], n: usize) -> Word {
    let mut out = Vec::with_capacity(w.len() * n);
    for _ in 0..n {
        out.extend_from_slice(w);
    }
    out
}

/// `m^p l^q` as a freely reduced word.
pub fn peripheral_word(m: &[i32], l: &[i32], p: i64, q: i64) -> Word {
    let mw = if p >= 0 { m.to_vec() } else { inverse_word(m) };
    let lw = if q >= 0 { l.to_vec() } else { inverse_word(l) };
    let mut w = word_power(&mw, p.unsigned_abs() as usize);
    w.extend(word_power(&lw, q.unsigned_abs() as usize));
    free_reduce(&w)
}

/// `[a, b] = a b a⁻¹ b⁻¹`, freely reduced.
pub fn commutator(a: &[i32], b: &[i32]) -> Word {
    let mut w = a.to_vec();
    w.extend_from_slice(b);
    w.extend(inverse_word(a));
    w.extend(inverse_word(b));
    free_reduce(&w)
}

/// One factor `conj · R_relator^sign · conj⁻¹` of an expression of a
/// peripheral commutator as a product of relator conjugates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityTerm {
    pub sign: i32,
    #[serde(default)]
    pub relator: usize,
    pub conj: Word,
}

pub fn expand_identity(terms: &[IdentityTerm], relators: &[Word]) -> Result<Word> {
    let mut w = Vec::new();
    for t in terms {
        let r = relators
            .get(t.relator)
            .ok_or_else(|| Error::BadWord(format!("identity refers to relator {}", t.relator)))?;
        w.extend_from_slice(&t.conj);
        if t.sign >= 0 {
            w.extend_from_slice(r);
        } else {
            w.extend(inverse_word(r));
        }
        w.extend(inverse_word(&t.conj));
    }
    Ok(free_reduce(&w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peripheral {
    pub m: Word,
    pub l: Word,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Expression of `[m, l]` as a product of relator conjugates in the
    /// free group; it carries the fundamental class of the cusp torus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus_identity: Option<Vec<IdentityTerm>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPresentation {
    pub n_gens: usize,
    pub relators: Vec<Word>,
    pub peripheral: Vec<Peripheral>,
}

impl GroupPresentation {
    pub fn check_word(&self, w: &[i32]) -> Result<()> {
        for &a in w {
            if a == 0 || a.unsigned_abs() as usize > self.n_gens {
                return Err(Error::BadWord(format!("letter {a} with {} generators", self.n_gens)));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.relators {
            self.check_word(r)?;
            if !is_freely_reduced(r) {
                return Err(Error::BadWord("relator not freely reduced".into()));
            }
        }
        for p in &self.peripheral {
            self.check_word(&p.m)?;
            self.check_word(&p.l)?;
            if !is_freely_reduced(&p.m) || !is_freely_reduced(&p.l) {
                return Err(Error::BadWord("peripheral word not freely reduced".into()));
            }
            if let Some(id) = &p.torus_identity {
                for t in id {
                    self.check_word(&t.conj)?;
                }
                let lhs = commutator(&p.m, &p.l);
                if expand_identity(id, &self.relators)? != lhs {
                    return Err(Error::BadFixture("torus identity does not reduce to [m, l]".into()));
                }
            }
        }
        Ok(())
    }
}

/// A representation given by generator matrices; when `lift_declared` the
/// matrices are a genuine SL(2,ℂ) lift and signs of traces are meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyRep {
    pub pres: GroupPresentation,
    pub mats: Vec<Mat2>,
    pub eps_m: Vec<i8>,
    pub eps_l: Vec<i8>,
    pub lift_declared: bool,
}

/// Serialized form: matrices as nested `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepFile {
    pub n_gens: usize,
    pub mats: Vec<[[[f64; 2]; 2]; 2]>,
    pub relators: Vec<Word>,
    pub peripheral: Vec<Peripheral>,
    pub lift_declared: bool,
}

fn mat_from_pairs(m: &[[[f64; 2]; 2]; 2]) -> Mat2 {
    Mat2::new(
        Complex64::new(m[0][0][0], m[0][0][1]),
        Complex64::new(m[0][1][0], m[0][1][1]),
        Complex64::new(m[1][0][0], m[1][0][1]),
        Complex64::new(m[1][1][0], m[1][1][1]),
    )
}

fn mat_to_pairs(m: &Mat2) -> [[[f64; 2]; 2]; 2] {
    let e = |i, j| {
        let z: Complex64 = m[(i, j)];
        [z.re, z.im]
    };
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

impl RepFile {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::BadFixture(e.to_string()))
    }
}

impl HolonomyRep {
    /// Build and validate; at a parabolic cusp the spin signs are read off.
    pub fn from_file(f: &RepFile) -> Result<Self> {
        let pres = GroupPresentation {
            n_gens: f.n_gens,
            relators: f.relators.clone(),
            peripheral: f.peripheral.clone(),
        };
        if f.mats.len() != f.n_gens {
            return Err(Error::BadFixture(format!("{} matrices for {} generators", f.mats.len(), f.n_gens)));
        }
        let mats = f.mats.iter().map(mat_from_pairs).collect();
        let mut rep = HolonomyRep { pres, mats, eps_m: vec![], eps_l: vec![], lift_declared: f.lift_declared };
        rep.validate()?;
        if let Ok((m, l)) = spin_signs(&rep) {
            rep.eps_m = m;
            rep.eps_l = l;
        }
        Ok(rep)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&RepFile::from_json(s)?)
    }

    pub fn to_file(&self) -> RepFile {
        RepFile {
            n_gens: self.pres.n_gens,
            mats: self.mats.iter().map(mat_to_pairs).collect(),
            relators: self.pres.relators.clone(),
            peripheral: self.pres.peripheral.clone(),
            lift_declared: self.lift_declared,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pres.validate()?;
        for (j, m) in self.mats.iter().enumerate() {
            if (m.determinant() - 1.0).norm() > 1e-12 {
                return Err(Error::BadFixture(format!("generator {} has det ≠ 1", j + 1)));
            }
        }
        for r in &self.pres.relators {
            let v = evaluate_word(self, r)?;
            if !is_plus_minus_identity(&v, RELATOR_TOL) {
                return Err(Error::BadFixture("relator does not evaluate to ±I".into()));
            }
        }
        for p in &self.pres.peripheral {
            let m = evaluate_word(self, &p.m)?;
            let l = evaluate_word(self, &p.l)?;
            let c = m * l * m.try_inverse().unwrap() * l.try_inverse().unwrap();
            if !is_plus_minus_identity(&c, RELATOR_TOL) {
                return Err(Error::BadFixture("peripheral words do not commute".into()));
            }
        }
        Ok(())
    }

    /// Signs with which the relators evaluate (+1 for +I, −1 for −I).
    pub fn relator_signs(&self) -> Result<Vec<f64>> {
        self.pres
            .relators
            .iter()
            .map(|r| Ok(evaluate_word(self, r)?[(0, 0)].re.signum()))
            .collect()
    }

    /// Images of generators and their inverses, indexed by `letter_index`.
    pub fn letter_images(&self) -> Vec<Mat2> {
        let mut v = Vec::with_capacity(2 * self.mats.len());
        for m in &self.mats {
            v.push(*m);
            v.push(inv2(m));
        }
        v
    }

    /// Replace every generator image by `P⁻¹ X P`.
    pub fn conjugate(&self, p: &Mat2) -> HolonomyRep {
        let pi = p.try_inverse().expect("invertible conjugator");
        let mut out = self.clone();
        for m in out.mats.iter_mut() {
            *m = pi * *m * p;
        }
        out
    }

    /// Multiply generator images by the given signs; relator signs change by
    /// the parity of the exponent sums, which the caller is trusted to know.
    pub fn with_generator_signs(&self, signs: &[f64]) -> HolonomyRep {
        let mut out = self.clone();
        for (m, s) in out.mats.iter_mut().zip(signs) {
            *m *= Complex64::new(*s, 0.0);
        }
        if let Ok((m, l)) = spin_signs(&out) {
            out.eps_m = m;
            out.eps_l = l;
        }
        out
    }
}

/// Inverse of a determinant-one matrix via the adjugate.
pub fn inv2(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

pub fn letter_index(a: i32) -> usize {
    let j = (a.unsigned_abs() - 1) as usize;
    if a > 0 {
        2 * j
    } else {
        2 * j + 1
    }
}

pub fn is_plus_minus_identity(m: &Mat2, tol: f64) -> bool {
    let id = Mat2::identity();
    (m - id).iter().all(|z| z.norm() < tol) || (m + id).iter().all(|z| z.norm() < tol)
}

pub fn evaluate_word(rep: &HolonomyRep, word: &[i32]) -> Result<Mat2> {
    rep.pres.check_word(word)?;
    let mut acc = Mat2::identity();
    for &a in word {
        let g = rep.mats[(a.unsigned_abs() - 1) as usize];
        acc *= if a > 0 { g } else { inv2(&g) };
    }
    Ok(acc)
}

/// Product over a word using precomputed letter images.
pub fn eval_with(images: &[Mat2], word: &[i32]) -> Mat2 {
    word.iter().fold(Mat2::identity(), |acc, &a| acc * images[letter_index(a)])
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0; n + 1];
    for i in 1..n {
        row[i] = row[i - 1] * (n - i + 1) as f64 / i as f64;
    }
    row
}

/// Matrix of the action on degree-k binary forms in the basis
/// x^k, x^{k−1}y, …, y^k. Row i holds the coefficients of
/// (a x + b y)^{k−i}(c x + d y)^i, which makes the assignment multiplicative.
pub fn sym_power(mat: &Mat2, k: usize) -> CMat {
    let (a, b, c, d) = (mat[(0, 0)], mat[(0, 1)], mat[(1, 0)], mat[(1, 1)]);
    let mut s = CMat::zeros(k + 1, k + 1);
    for i in 0..=k {
        let n1 = k - i;
        let b1 = binomial_row(n1);
        let p1: Vec<Complex64> = (0..=n1).map(|j| a.powu((n1 - j) as u32) * b.powu(j as u32) * b1[j]).collect();
        let b2 = binomial_row(i);
        let p2: Vec<Complex64> = (0..=i).map(|j| c.powu((i - j) as u32) * d.powu(j as u32) * b2[j]).collect();
        for (j1, x) in p1.iter().enumerate() {
            for (j2, y) in p2.iter().enumerate() {
                s[(i, j1 + j2)] += x * y;
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Loxodromic,
    Parabolic,
    Elliptic,
    Identity,
}

pub fn classify(mat: &Mat2) -> Kind {
    let tol = PARABOLIC_TOL;
    let t = mat.trace();
    if is_plus_minus_identity(mat, tol) {
        return Kind::Identity;
    }
    if t.im.abs() > tol || t.re.abs() > 2.0 + tol {
        return Kind::Loxodromic;
    }
    if (t.re.abs() - 2.0).abs() <= tol {
        return Kind::Parabolic;
    }
    Kind::Elliptic
}

/// Complex length l + iθ with l > 0 and θ ∈ (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexLength {
    pub l: f64,
    pub theta: f64,
}

pub fn wrap_angle(t: f64) -> f64 {
    let mut x = t.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

impl ComplexLength {
    /// Normalize a complex number modulo 2πi, negating if needed so l > 0.
    pub fn from_lambda(lambda: Complex64) -> Result<Self> {
        let z = if lambda.re < 0.0 { -lambda } else { lambda };
        if !(z.re > 0.0) {
            return Err(Error::BadLength);
        }
        Ok(ComplexLength { l: z.re, theta: wrap_angle(z.im) })
    }

    pub fn lambda(&self) -> Complex64 {
        Complex64::new(self.l, self.theta)
    }

    /// 𝔮 = e^{−(l+iθ)}.
    pub fn q(&self) -> Complex64 {
        (-self.lambda()).exp()
    }
}

/// Complex length of an element from its trace, tr = 2cosh(λ/2).
pub fn complex_length_from_trace(t: Complex64) -> Result<ComplexLength> {
    let lam = 2.0 * (t / 2.0).acosh();
    if lam.re.abs() <= 1e-12 {
        return Err(Error::NotLoxodromic);
    }
    ComplexLength::from_lambda(lam)
}

pub fn complex_length(mat: &Mat2) -> Result<ComplexLength> {
    if classify(mat) != Kind::Loxodromic {
        return Err(Error::NotLoxodromic);
    }
    complex_length_from_trace(mat.trace())
}

/// Eigenvalue of largest modulus; for a lifted loxodromic its inverse is
/// the chosen square root 𝔮^{1/2}.
pub fn large_eigenvalue(mat: &Mat2) -> Complex64 {
    let t = mat.trace();
    let disc = (t * t - 4.0).sqrt();
    let a = (t + disc) / 2.0;
    let b = (t - disc) / 2.0;
    if a.norm() >= b.norm() {
        a
    } else {
        b
    }
}

/// Signs of the traces of peripheral images; each must be parabolic.
pub fn spin_signs(rep: &HolonomyRep) -> Result<(Vec<i8>, Vec<i8>)> {
    let mut em = Vec::new();
    let mut el = Vec::new();
    for p in &rep.pres.peripheral {
        for (w, out) in [(&p.m, &mut em), (&p.l, &mut el)] {
            let t = evaluate_word(rep, w)?.trace();
            if t.im.abs() > PARABOLIC_TOL || (t.re.abs() - 2.0).abs() > PARABOLIC_TOL {
                return Err(Error::NotParabolic);
            }
            out.push(if t.re > 0.0 { 1 } else { -1 });
        }
    }
    Ok((em, el))
}

fn deformation_residual(rep: &HolonomyRep, rel_signs: &[f64], targets: &[Complex64], eps_m: &[f64]) -> Vec<Complex64> {
    let mut r = Vec::new();
    for m in &rep.mats {
        r.push(m.determinant() - 1.0);
    }
    let id = Mat2::identity();
    for (w, s) in rep.pres.relators.iter().zip(rel_signs) {
        let v = eval_adj(rep, w) - id * Complex64::new(*s, 0.0);
        r.extend(v.iter().copied());
    }
    for ((p, u), e) in rep.pres.peripheral.iter().zip(targets).zip(eps_m) {
        let t = eval_adj(rep, &p.m).trace();
        r.push(t - 2.0 * e * (u / 2.0).cosh());
    }
    r
}

// Word product with inverses replaced by adjugates, a polynomial in the entries.
fn eval_adj(rep: &HolonomyRep, word: &[i32]) -> Mat2 {
    let mut acc = Mat2::identity();
    for &a in word {
        let g = rep.mats[(a.unsigned_abs() - 1) as usize];
        acc *= if a > 0 { g } else { inv2(&g) };
    }
    acc
}

fn residual_norm(r: &[Complex64]) -> f64 {
    r.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Move the representation so that each meridian has eigenvalues e^{±u_i/2}
/// (with its lift sign), keeping every relator at its current sign.
/// Continuation from the current point in `steps` stages, Gauss–Newton with
/// minimum-norm steps (the conjugation gauge is left free).
pub fn deform(rep: &HolonomyRep, targets: &[Complex64], steps: usize, tol: f64) -> Result<HolonomyRep> {
    let h = rep.pres.peripheral.len();
    if targets.len() != h {
        return Err(Error::BadFixture(format!("{} targets for {h} cusps", targets.len())));
    }
    let rel_signs = rep.relator_signs()?;
    let eps_m: Vec<f64> = rep
        .pres
        .peripheral
        .iter()
        .map(|p| evaluate_word(rep, &p.m).map(|m| m.trace().re.signum()))
        .collect::<Result<_>>()?;
    let start: Vec<Complex64> = rep
        .pres
        .peripheral
        .iter()
        .zip(&eps_m)
        .map(|(p, e)| evaluate_word(rep, &p.m).map(|m| 2.0 * ((m.trace() * e) / 2.0).acosh()))
        .collect::<Result<_>>()?;
    let mut cur = rep.clone();
    let n = 4 * cur.mats.len();
    for stage in 1..=steps.max(1) {
        let t = stage as f64 / steps.max(1) as f64;
        let tg: Vec<Complex64> = start.iter().zip(targets).map(|(a, b)| a + (b - a) * t).collect();
        let mut res = deformation_residual(&cur, &rel_signs, &tg, &eps_m);
        for _ in 0..60 {
            if residual_norm(&res) < tol * 1e-2 {
                break;
            }
            let mut jac = CMat::zeros(res.len(), n);
            for k in 0..n {
                let (g, e) = (k / 4, k % 4);
                let mut pert = cur.clone();
                let hstep = 1e-7 * (1.0 + cur.mats[g][(e / 2, e % 2)].norm());
                pert.mats[g][(e / 2, e % 2)] += hstep;
                let r2 = deformation_residual(&pert, &rel_signs, &tg, &eps_m);
                for (i, (a, b)) in r2.iter().zip(&res).enumerate() {
                    jac[(i, k)] = (a - b) / hstep;
                }
            }
            let rhs = CMat::from_iterator(res.len(), 1, res.iter().map(|z| -z));
            let dx = linalg::lstsq(&jac, &rhs, 1e-7);
            let r0 = residual_norm(&res);
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let mut next = cur.clone();
                for k in 0..n {
                    next.mats[k / 4][((k % 4) / 2, k % 2)] += dx[(k, 0)] * step;
                }
                let r2 = deformation_residual(&next, &rel_signs, &tg, &eps_m);
                if residual_norm(&r2) < r0 {
                    cur = next;
                    res = r2;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if residual_norm(&res) > tol {
            return Err(Error::SolverFailed(format!(
                "representation deformation stalled at residual {:e}",
                residual_norm(&res)
            )));
        }
    }
    // restore det = 1 exactly
    for m in cur.mats.iter_mut() {
        let d = m.determinant().sqrt();
        *m /= d;
    }
    cur.eps_m = rep.eps_m.clone();
    cur.eps_l = rep.eps_l.clone();
    Ok(cur)
}

/// Symmetric power of every letter image, indexed by `letter_index`.
pub fn sym_images(rep: &HolonomyRep, k: usize) -> Vec<CMat> {
    rep.letter_images().iter().map(|m| sym_power(m, k)).collect()
}

pub fn eval_sym(images: &[CMat], word: &[i32]) -> CMat {
    let n = images.first().map(|m| m.nrows()).unwrap_or(1);
    word.iter().fold(DMatrix::identity(n, n), |acc, &a| acc * &images[letter_index(a)])
}

/// Deform to meridian logarithms `u` and flip generator signs (if needed)
/// so that the filling curve `m^p l^q` of the single cusp maps to +I. The
/// result is a lifted representation of the filled manifold's group.
pub fn filled_rep(rep: &HolonomyRep, u: Complex64, pq: (i64, i64)) -> Result<HolonomyRep> {
    if rep.pres.peripheral.len() != 1 {
        return Err(Error::BadFixture("filled_rep needs exactly one cusp".into()));
    }
    let mut out = deform(rep, &[u], 32, 1e-12)?;
    let p = &out.pres.peripheral[0];
    let c = peripheral_word(&p.m, &p.l, pq.0, pq.1);
    let img = evaluate_word(&out, &c)?;
    if !is_plus_minus_identity(&img, 1e-8) {
        return Err(Error::InternalInconsistency("filling curve is not trivial under the deformed holonomy".into()));
    }
    if img[(0, 0)].re < 0.0 {
        // flip one generator appearing in c with odd total exponent and even
        // exponent in every relator
        let n = out.pres.n_gens;
        let flip = (1..=n as i32).find(|&g| {
            let odd = |w: &[i32]| w.iter().filter(|a| a.abs() == g).count() % 2 == 1;
            odd(&c) && out.pres.relators.iter().all(|r| !odd(r))
        });
        let signs: Vec<f64> = match flip {
            Some(g) => (1..=n as i32).map(|j| if j == g { -1.0 } else { 1.0 }).collect(),
            None => vec![-1.0; n],
        };
        out = out.with_generator_signs(&signs);
        if evaluate_word(&out, &c)?[(0, 0)].re < 0.0 {
            return Err(Error::InternalInconsistency("no generator sign change lifts the filling".into()));
        }
    }
    out.pres.peripheral[0].torus_identity = rep.pres.peripheral[0].torus_identity.clone();
    out.eps_m.clear();
    out.eps_l.clear();
    Ok(out)
}
