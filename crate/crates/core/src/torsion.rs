//! Twisted chain complexes (Fox calculus on a presentation, or an explicit
//! CW fixture), Milnor torsion with homology bases, cusp-induced bases,
//! basis-change determinants and Dehn-surgery factors.
//!
//! Chains are row vectors: C_q = ℂ^N ⊗ C_q(K̃) with v ⊗ g·e = vχ(g) ⊗ e.
//! Boundary matrices are stored column-wise (∂_q maps coordinate columns of
//! C_q to C_{q−1}), i.e. as transposes of the row-convention blocks.
//! Milnor's torsion is ∏_q [b_q h_q b̃_{q−1} / c_q]^{(−1)^q}; with this
//! placement a circle with holonomy A has torsion det(A − I).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::holonomy::{self, inverse_word, peripheral_word, ComplexLength, HolonomyRep, IdentityTerm, Word};
use crate::linalg::{self, CMat};

pub const RANK_TOL: f64 = 1e-8;
pub const COMPLEX_TOL: f64 = 1e-9;
pub const CONDITION_FLAG: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedChainComplex {
    pub dims: Vec<usize>,
    /// `boundaries[q-1]` is ∂_q : C_q → C_{q−1}, of shape dims[q−1] × dims[q].
    pub boundaries: Vec<CMat>,
    /// Columns are cycles representing a homology basis in degree q.
    pub homology_bases: BTreeMap<usize, CMat>,
}

impl TwistedChainComplex {
    pub fn new(boundaries: Vec<CMat>) -> Result<Self> {
        let mut dims = Vec::new();
        if let Some(first) = boundaries.first() {
            dims.push(first.nrows());
        }
        for (i, d) in boundaries.iter().enumerate() {
            if i > 0 && d.nrows() != dims[i] {
                return Err(Error::NotAComplex(f64::NAN));
            }
            dims.push(d.ncols());
        }
        let cx = TwistedChainComplex { dims, boundaries, homology_bases: BTreeMap::new() };
        cx.check_dd()?;
        Ok(cx)
    }

    pub fn top(&self) -> usize {
        self.boundaries.len()
    }

    /// Largest relative entry of ∂_{q−1}∘∂_q.
    pub fn dd_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for q in 1..self.boundaries.len() {
            let a = &self.boundaries[q - 1];
            let b = &self.boundaries[q];
            let scale = (linalg::max_abs(a) * linalg::max_abs(b)).max(1.0);
            worst = worst.max(linalg::max_abs(&(a * b)) / scale);
        }
        worst
    }

    pub fn check_dd(&self) -> Result<()> {
        let r = self.dd_residual();
        if r > COMPLEX_TOL {
            return Err(Error::NotAComplex(r));
        }
        Ok(())
    }

    /// dim H_q from ranks.
    pub fn betti(&self) -> Vec<usize> {
        let ranks: Vec<usize> = self.boundaries.iter().map(|d| linalg::pivoted_qr(d, RANK_TOL).rank).collect();
        (0..self.dims.len())
            .map(|q| {
                let out = if q >= 1 { ranks[q - 1] } else { 0 };
                let inc = if q < ranks.len() { ranks[q] } else { 0 };
                self.dims[q] - out - inc
            })
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.betti().iter().all(|&b| b == 0)
    }

    /// Direct sum with the elementary complex ℂ^n --E--> ℂ^n placed in
    /// degrees q, q−1.
    pub fn elementary_expansion(&self, q: usize, e: &CMat) -> Result<Self> {
        assert!(q >= 1 && q <= self.top() && e.is_square());
        let n = e.nrows();
        let mut bds = Vec::new();
        for (i, d) in self.boundaries.iter().enumerate() {
            let deg = i + 1;
            let add_rows = if deg - 1 == q - 1 { n } else if deg - 1 == q { n } else { 0 };
            let add_cols = if deg == q { n } else if deg == q - 1 { n } else { 0 };
            let mut m = CMat::zeros(d.nrows() + add_rows, d.ncols() + add_cols);
            m.view_mut((0, 0), d.shape()).copy_from(d);
            if deg == q {
                m.view_mut((d.nrows(), d.ncols()), (n, n)).copy_from(e);
            }
            bds.push(m);
        }
        let mut out = TwistedChainComplex::new(bds)?;
        for (deg, h) in &self.homology_bases {
            let mut m = CMat::zeros(out.dims[*deg], h.ncols());
            m.view_mut((0, 0), h.shape()).copy_from(h);
            out.homology_bases.insert(*deg, m);
        }
        Ok(out)
    }
}

/// Value of χ(∂word/∂x_j) in the row convention, with `images` indexed by
/// `holonomy::letter_index`.
pub fn fox_derivative(word: &[i32], j: usize, images: &[CMat]) -> CMat {
    let n = images[0].nrows();
    let mut acc = CMat::zeros(n, n);
    let mut pre = CMat::identity(n, n);
    for &a in word {
        let g = a.unsigned_abs() as usize;
        if g == j {
            if a > 0 {
                acc += &pre;
            } else {
                acc -= &pre * &images[holonomy::letter_index(a)];
            }
        }
        pre = &pre * &images[holonomy::letter_index(a)];
    }
    acc
}

/// Three-term complex C₂ → C₁ → C₀ of the presentation 2-complex twisted by
/// Sym^k of the (lifted) representation.
pub fn fox_complex(rep: &HolonomyRep, k: usize) -> Result<TwistedChainComplex> {
    let images = holonomy::sym_images(rep, k);
    let n = k + 1;
    let g = rep.pres.n_gens;
    let r = rep.pres.relators.len();
    let mut d2_row = CMat::zeros(r * n, g * n);
    for (i, rel) in rep.pres.relators.iter().enumerate() {
        for j in 1..=g {
            let f = fox_derivative(rel, j, &images);
            d2_row.view_mut((i * n, (j - 1) * n), (n, n)).copy_from(&f);
        }
    }
    let mut d1_row = CMat::zeros(g * n, n);
    for j in 0..g {
        let m = &images[2 * j] - CMat::identity(n, n);
        d1_row.view_mut((j * n, 0), (n, n)).copy_from(&m);
    }
    TwistedChainComplex::new(vec![d1_row.transpose(), d2_row.transpose()])
}

/// How the b_q are chosen inside Milnor's algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisChoice {
    /// Pivot columns of ∂ from a column-pivoted QR; lifts are unit vectors.
    PivotColumns,
    /// Orthonormal image basis from the SVD; lifts by least squares.
    Orthonormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsionValue {
    /// Defined up to sign.
    pub value: Complex64,
    pub modulus: f64,
    pub low_confidence: bool,
    pub max_condition: f64,
    /// Relative modulus gap to a recomputation with a different b_q choice.
    pub recheck_rel_gap: f64,
}

fn image_and_lift(d: &CMat, choice: BasisChoice) -> (CMat, CMat) {
    match choice {
        BasisChoice::PivotColumns => {
            let qr = linalg::pivoted_qr(d, RANK_TOL);
            let piv = &qr.pivots[..qr.rank];
            let mut b = CMat::zeros(d.nrows(), piv.len());
            let mut l = CMat::zeros(d.ncols(), piv.len());
            for (c, &j) in piv.iter().enumerate() {
                b.set_column(c, &d.column(j));
                l[(j, c)] = Complex64::new(1.0, 0.0);
            }
            (b, l)
        }
        BasisChoice::Orthonormal => {
            let b = linalg::column_space(d, RANK_TOL);
            let l = linalg::lstsq(d, &b, RANK_TOL);
            (b, l)
        }
    }
}

fn torsion_with(cx: &TwistedChainComplex, choice: BasisChoice) -> Result<(Complex64, f64)> {
    let top = cx.top();
    let mut images = Vec::with_capacity(top);
    for d in &cx.boundaries {
        images.push(image_and_lift(d, choice));
    }
    let mut value = Complex64::new(1.0, 0.0);
    let mut max_cond: f64 = 1.0;
    for q in 0..=top {
        let dim = cx.dims[q];
        let mut blocks: Vec<&CMat> = Vec::new();
        if q < top {
            blocks.push(&images[q].0);
        }
        let h = cx.homology_bases.get(&q);
        if let Some(h) = h {
            if h.nrows() != dim {
                return Err(Error::BadHomologyBasis(q));
            }
            if q >= 1 {
                let d = &cx.boundaries[q - 1];
                let scale = (linalg::max_abs(d) * linalg::max_abs(h)).max(1e-300);
                if linalg::max_abs(&(d * h)) > 1e-8 * scale {
                    return Err(Error::BadHomologyBasis(q));
                }
            }
            blocks.push(h);
        }
        if q >= 1 {
            blocks.push(&images[q - 1].1);
        }
        let ncols: usize = blocks.iter().map(|b| b.ncols()).sum();
        if ncols != dim {
            return Err(if ncols < dim && h.is_none() {
                Error::BasisRequired(q)
            } else {
                Error::BadHomologyBasis(q)
            });
        }
        if dim == 0 {
            continue;
        }
        let m = linalg::hstack(&blocks);
        let det = m.determinant();
        let cond = linalg::condition_number(&m);
        if !cond.is_finite() || det.norm() == 0.0 {
            return Err(Error::BadHomologyBasis(q));
        }
        if h.is_some() && cond > 1e12 {
            return Err(Error::BadHomologyBasis(q));
        }
        max_cond = max_cond.max(cond);
        value *= if q % 2 == 0 { det } else { det.inv() };
    }
    Ok((value, max_cond))
}

/// Milnor torsion. The result is recomputed with a second b_q choice and
/// flagged when the two disagree or a bracket is badly conditioned.
pub fn milnor_torsion(cx: &TwistedChainComplex) -> Result<TorsionValue> {
    let (value, max_condition) = torsion_with(cx, BasisChoice::PivotColumns)?;
    let (alt, _) = torsion_with(cx, BasisChoice::Orthonormal)?;
    let modulus = value.norm();
    let recheck_rel_gap = (alt.norm() - modulus).abs() / modulus;
    Ok(TorsionValue {
        value,
        modulus,
        low_confidence: max_condition > CONDITION_FLAG || recheck_rel_gap > 1e-8,
        max_condition,
        recheck_rel_gap,
    })
}

pub fn milnor_torsion_with(cx: &TwistedChainComplex, choice: BasisChoice) -> Result<Complex64> {
    Ok(torsion_with(cx, choice)?.0)
}

/// A peripheral curve: m, l, or p·m + q·l.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CuspCycle {
    M,
    L,
    Pq(i64, i64),
}

impl CuspCycle {
    pub fn coeffs(&self) -> (i64, i64) {
        match *self {
            CuspCycle::M => (1, 0),
            CuspCycle::L => (0, 1),
            CuspCycle::Pq(p, q) => (p, q),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(CuspCycle::M),
            "l" => Ok(CuspCycle::L),
            _ => {
                let body = s.strip_prefix("pl:").ok_or_else(|| Error::BadFixture(format!("basis {s}")))?;
                let (p, q) = body.split_once(',').ok_or_else(|| Error::BadFixture(format!("basis {s}")))?;
                let p = p.trim().parse().map_err(|_| Error::BadFixture(format!("basis {s}")))?;
                let q = q.trim().parse().map_err(|_| Error::BadFixture(format!("basis {s}")))?;
                Ok(CuspCycle::Pq(p, q))
            }
        }
    }
}

/// Row vector v, normalized with first significant coordinate 1, spanning
/// the common invariant line of χ(m) and χ(l).
pub fn peripheral_invariant_vector(rep: &HolonomyRep, cusp: usize, k: usize) -> Result<CMat> {
    let images = holonomy::sym_images(rep, k);
    let p = &rep.pres.peripheral[cusp];
    let n = k + 1;
    let id = CMat::identity(n, n);
    let am = holonomy::eval_sym(&images, &p.m) - &id;
    let al = holonomy::eval_sym(&images, &p.l) - &id;
    // v (A_m | A_l) = 0  ⇔  (A_m | A_l)ᵀ vᵀ = 0
    let stacked = linalg::hstack(&[&am, &al]).transpose();
    let ns = linalg::null_space(&stacked, 1e-9);
    if ns.ncols() != 1 {
        return Err(Error::NonparabolicPeripheral);
    }
    let col = ns.column(0);
    let big = col.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let lead = col.iter().find(|z| z.norm() > 1e-8 * big).copied().ok_or(Error::NonparabolicPeripheral)?;
    Ok(CMat::from_iterator(1, n, col.iter().map(|z| z / lead)))
}

fn identity_chain(terms: &[IdentityTerm], images: &[CMat], v: &CMat, r: usize) -> CMat {
    let n = v.ncols();
    let mut out = CMat::zeros(1, r * n);
    for t in terms {
        let g = holonomy::eval_sym(images, &t.conj);
        let contrib = v * g * Complex64::new(t.sign as f64, 0.0);
        let mut blk = out.view_mut((0, t.relator * n), (1, n));
        blk += contrib;
    }
    out
}

/// Homology bases induced by peripheral curves on the Fox complex: in degree
/// 1 the chain of the curve's word tensored with v, in degree 2 the cusp
/// torus class (from the presentation's torus identity) tensored with v.
/// Only degrees with nonzero homology receive a basis.
pub fn cusp_homology_basis(
    cx: &TwistedChainComplex,
    rep: &HolonomyRep,
    cycles: &[CuspCycle],
    k: usize,
) -> Result<BTreeMap<usize, CMat>> {
    let h = rep.pres.peripheral.len();
    if cycles.len() != h {
        return Err(Error::BadFixture(format!("{} cycles for {h} cusps", cycles.len())));
    }
    let betti = cx.betti();
    let images = holonomy::sym_images(rep, k);
    let n = k + 1;
    let g = rep.pres.n_gens;
    let r = rep.pres.relators.len();
    let mut h1 = CMat::zeros(g * n, 0);
    let mut h2 = CMat::zeros(r * n, 0);
    for (i, c) in cycles.iter().enumerate() {
        let v = peripheral_invariant_vector(rep, i, k)?;
        let p = &rep.pres.peripheral[i];
        let (a, b) = c.coeffs();
        let word = peripheral_word(&p.m, &p.l, a, b);
        let mut col = CMat::zeros(g * n, 1);
        for j in 1..=g {
            let f = &v * fox_derivative(&word, j, &images);
            col.view_mut(((j - 1) * n, 0), (n, 1)).copy_from(&f.transpose());
        }
        h1 = linalg::hstack(&[&h1, &col]);
        if betti.get(2).copied().unwrap_or(0) > 0 {
            let id = p.torus_identity.as_ref().ok_or(Error::BasisRequired(2))?;
            let chain = identity_chain(id, &images, &v, r).transpose();
            h2 = linalg::hstack(&[&h2, &chain]);
        }
    }
    let mut out = BTreeMap::new();
    if betti.get(1).copied().unwrap_or(0) > 0 {
        check_independent(cx, 1, &h1)?;
        out.insert(1, h1);
    }
    if betti.get(2).copied().unwrap_or(0) > 0 {
        check_independent(cx, 2, &h2)?;
        out.insert(2, h2);
    }
    if betti.first().copied().unwrap_or(0) > 0 || betti.iter().skip(3).any(|&b| b > 0) {
        return Err(Error::BasisRequired(0));
    }
    Ok(out)
}

fn check_independent(cx: &TwistedChainComplex, q: usize, h: &CMat) -> Result<()> {
    let betti = cx.betti()[q];
    if h.ncols() != betti {
        return Err(Error::BasisDegenerate);
    }
    let img = if q < cx.top() { linalg::column_space(&cx.boundaries[q], RANK_TOL) } else { CMat::zeros(cx.dims[q], 0) };
    let both = linalg::hstack(&[&img, h]);
    if linalg::numerical_rank(&both, RANK_TOL) != img.ncols() + h.ncols() {
        return Err(Error::BasisDegenerate);
    }
    Ok(())
}

/// Fox complex with the cusp-induced homology bases attached.
pub fn cusped_complex(rep: &HolonomyRep, k: usize, cycles: &[CuspCycle]) -> Result<TwistedChainComplex> {
    let mut cx = fox_complex(rep, k)?;
    if !cx.is_acyclic() {
        cx.homology_bases = cusp_homology_basis(&cx, rep, cycles, k)?;
    }
    Ok(cx)
}

/// Determinant A of the change from the bases induced by `old` to those
/// induced by `new`, with degreewise exponents (−1)^{q+1}, so that
/// torsion(new) = torsion(old)·A⁻¹.
pub fn basis_change_det(rep: &HolonomyRep, old: &[CuspCycle], new: &[CuspCycle], k: usize) -> Result<Complex64> {
    let cx = fox_complex(rep, k)?;
    if cx.is_acyclic() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let ho = cusp_homology_basis(&cx, rep, old, k)?;
    let hn = cusp_homology_basis(&cx, rep, new, k)?;
    let mut a = Complex64::new(1.0, 0.0);
    for (q, old_q) in &ho {
        let new_q = &hn[q];
        let img = if *q < cx.top() { linalg::column_space(&cx.boundaries[*q], RANK_TOL) } else { CMat::zeros(cx.dims[*q], 0) };
        let sys = linalg::hstack(&[old_q, &img]);
        let x = linalg::lstsq(&sys, new_q, 1e-12);
        let resid = &sys * &x - new_q;
        if linalg::max_abs(&resid) > 1e-7 * linalg::max_abs(new_q).max(1.0) {
            return Err(Error::BasisDegenerate);
        }
        let hq = old_q.ncols();
        let coeff = x.view((0, 0), (hq, hq)).into_owned();
        let d = coeff.determinant();
        a *= if q % 2 == 1 { d } else { d.inv() };
    }
    Ok(a)
}

/// ∏_i ∏_{j=1}^{n−1} (𝔮^j − 1)(𝔮^{−j} − 1).
pub fn surgery_factor_even(core_lengths: &[ComplexLength], n: usize) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::BelowThreshold);
    }
    let mut out = Complex64::new(1.0, 0.0);
    for cl in core_lengths {
        if !(cl.l > 0.0) {
            return Err(Error::BadLength);
        }
        let q = cl.q();
        for j in 1..n {
            let qj = q.powu(j as u32);
            out *= (qj - 1.0) * (qj.inv() - 1.0);
        }
    }
    Ok(out)
}

/// ∏_i ∏_{m=0}^{n−1} (𝔮^{m+1/2} − 1)(𝔮^{−(m+1/2)} − 1) with the supplied
/// square roots 𝔮_i^{1/2}.
pub fn surgery_factor_odd(core_lengths: &[ComplexLength], n: usize, half_powers: Option<&[Complex64]>) -> Result<Complex64> {
    let hp = half_powers.ok_or(Error::LiftRequired)?;
    if hp.len() != core_lengths.len() {
        return Err(Error::LiftRequired);
    }
    if n < 1 {
        return Err(Error::BelowThreshold);
    }
    let mut out = Complex64::new(1.0, 0.0);
    for (cl, s) in core_lengths.iter().zip(hp) {
        if !(cl.l > 0.0) {
            return Err(Error::BadLength);
        }
        if ((s * s) - cl.q()).norm() > 1e-9 * cl.q().norm().max(1e-300) {
            return Err(Error::LiftRequired);
        }
        let q = cl.q();
        for m in 0..n {
            let x = q.powu(m as u32) * s;
            out *= (x - 1.0) * (x.inv() - 1.0);
        }
    }
    Ok(out)
}

/// Principal square root of 𝔮 times a lift sign.
pub fn signed_half_power(cl: &ComplexLength, sign: i8) -> Complex64 {
    (-cl.lambda() / 2.0).exp() * sign as f64
}

/// One term `coeff · word` (or `coeff · ∂word/∂x_gen` when `fox` is set) in
/// the boundary of `of`, attached to the face `cell`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwTerm {
    pub of: String,
    pub cell: String,
    pub coeff: i64,
    #[serde(default)]
    pub word: Word,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fox: Option<FoxRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoxRef {
    pub word: Word,
    pub gen: usize,
}

/// A finite CW complex with π₁-equivariant boundary data. `boundary[q-1]`
/// lists the terms of ∂ on the q-cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwFixture {
    pub cells: Vec<Vec<String>>,
    pub boundary: Vec<Vec<CwTerm>>,
}

impl CwFixture {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::BadFixture(e.to_string()))
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cells.iter().enumerate().map(|(q, c)| if q % 2 == 0 { c.len() as i64 } else { -(c.len() as i64) }).sum()
    }
}

/// Twisted complex of a CW fixture under Sym^k of the representation.
pub fn cw_complex(fx: &CwFixture, rep: &HolonomyRep, k: usize) -> Result<TwistedChainComplex> {
    let images = holonomy::sym_images(rep, k);
    let n = k + 1;
    if fx.boundary.len() + 1 != fx.cells.len() {
        return Err(Error::BadFixture("boundary degrees do not match cells".into()));
    }
    let mut bds = Vec::new();
    for (i, terms) in fx.boundary.iter().enumerate() {
        let q = i + 1;
        let src = &fx.cells[q];
        let dst = &fx.cells[q - 1];
        let mut row = CMat::zeros(src.len() * n, dst.len() * n);
        for t in terms {
            let a = src.iter().position(|c| *c == t.of).ok_or_else(|| Error::BadFixture(format!("unknown {q}-cell {}", t.of)))?;
            let b = dst.iter().position(|c| *c == t.cell).ok_or_else(|| Error::BadFixture(format!("unknown {}-cell {}", q - 1, t.cell)))?;
            let m = match &t.fox {
                Some(f) => {
                    rep.pres.check_word(&f.word)?;
                    fox_derivative(&f.word, f.gen, &images)
                }
                None => {
                    rep.pres.check_word(&t.word)?;
                    holonomy::eval_sym(&images, &t.word)
                }
            };
            let mut blk = row.view_mut((a * n, b * n), (n, n));
            blk += m * Complex64::new(t.coeff as f64, 0.0);
        }
        bds.push(row.transpose());
    }
    TwistedChainComplex::new(bds)
}

// Free group on m (=1), l (=2): write a word with zero exponent sums as a
// product of conjugates of [m,l]^{±1} by moving m-letters past l-letters.
fn commutator_decomposition(w: &[i32]) -> Result<Vec<(i32, Word)>> {
    let mut w = holonomy::free_reduce(w);
    let mut out = Vec::new();
    let mut guard = 0;
    loop {
        w = holonomy::free_reduce(&w);
        let Some(i) = (0..w.len().saturating_sub(1)).find(|&i| w[i].abs() == 1 && w[i + 1].abs() == 2) else {
            break;
        };
        // x y = [x, y] y x with [x, y] a conjugate of [m, l]^{±1}
        let (s, cj): (i32, Word) = match (w[i], w[i + 1]) {
            (1, 2) => (1, vec![]),
            (1, -2) => (-1, vec![-2]),
            (-1, 2) => (-1, vec![-1]),
            _ => (1, vec![-1, -2]),
        };
        let mut conj = w[..i].to_vec();
        conj.extend(cj);
        out.push((s, holonomy::free_reduce(&conj)));
        let (x, y) = (w[i], w[i + 1]);
        w[i] = y;
        w[i + 1] = x;
        guard += 1;
        if guard > 100_000 {
            return Err(Error::InternalInconsistency("commutator decomposition".into()));
        }
    }
    if !w.is_empty() {
        return Err(Error::BadWord("peripheral word has nonzero exponent sum".into()));
    }
    Ok(out)
}

fn substitute(w: &[i32], m: &[i32], l: &[i32]) -> Word {
    let mut out = Vec::new();
    for &a in w {
        let base = if a.abs() == 1 { m } else { l };
        if a > 0 {
            out.extend_from_slice(base);
        } else {
            out.extend(inverse_word(base));
        }
    }
    holonomy::free_reduce(&out)
}

/// Relator-conjugate expression of [w_c, w_d] for c = m^p l^q, d = m^r l^s,
/// built from the cusp's torus identity.
pub fn filling_identity(rep: &HolonomyRep, cusp: usize, pq: (i64, i64), rs: (i64, i64)) -> Result<Vec<IdentityTerm>> {
    let p = &rep.pres.peripheral[cusp];
    let base = p.torus_identity.as_ref().ok_or(Error::BasisRequired(2))?;
    let cw = peripheral_word(&[1], &[2], pq.0, pq.1);
    let dw = peripheral_word(&[1], &[2], rs.0, rs.1);
    let dec = commutator_decomposition(&holonomy::commutator(&cw, &dw))?;
    let mut out = Vec::new();
    for (s, g) in dec {
        let gg = substitute(&g, &p.m, &p.l);
        let inner: Vec<IdentityTerm> = if s == 1 {
            base.clone()
        } else {
            base.iter().rev().map(|t| IdentityTerm { sign: -t.sign, relator: t.relator, conj: t.conj.clone() }).collect()
        };
        for t in inner {
            let mut conj = gg.clone();
            conj.extend(t.conj);
            out.push(IdentityTerm { sign: t.sign, relator: t.relator, conj: holonomy::free_reduce(&conj) });
        }
    }
    let wc = peripheral_word(&p.m, &p.l, pq.0, pq.1);
    let wd = peripheral_word(&p.m, &p.l, rs.0, rs.1);
    if holonomy::expand_identity(&out, &rep.pres.relators)? != holonomy::commutator(&wc, &wd) {
        return Err(Error::InternalInconsistency("filling identity does not reduce".into()));
    }
    Ok(out)
}

/// CW structure of the closed manifold obtained by (p,q) filling of a
/// one-cusped manifold given by its presentation 2-complex: the spine,
/// a mapping cylinder of the cusp torus onto it, and a solid torus whose
/// meridian disk D is glued along c = m^p l^q.
pub fn closed_filling_fixture(rep: &HolonomyRep, pq: (i64, i64), rs: (i64, i64)) -> Result<CwFixture> {
    if rep.pres.peripheral.len() != 1 {
        return Err(Error::BadFixture("closed filling fixture needs exactly one cusp".into()));
    }
    if pq.0 * rs.1 - pq.1 * rs.0 != 1 {
        return Err(Error::BadCompletion);
    }
    let per = &rep.pres.peripheral[0];
    let g = rep.pres.n_gens;
    let wc = peripheral_word(&per.m, &per.l, pq.0, pq.1);
    let wd = peripheral_word(&per.m, &per.l, rs.0, rs.1);
    let ident = filling_identity(rep, 0, pq, rs)?;
    let cdc = holonomy::free_reduce(&[wc.clone(), wd.clone(), inverse_word(&wc)].concat());
    let comm = holonomy::commutator(&wc, &wd);
    let xs: Vec<String> = (1..=g).map(|j| format!("x{j}")).collect();
    let rels: Vec<String> = (1..=rep.pres.relators.len()).map(|j| format!("R{j}")).collect();
    let cells = vec![
        vec!["P".to_string(), "Q".to_string()],
        xs.iter().cloned().chain(["c", "d", "e"].map(String::from)).collect(),
        rels.iter().cloned().chain(["t", "cI", "dI", "D"].map(String::from)).collect(),
        vec!["tI".to_string(), "B".to_string()],
    ];
    let term = |of: &str, cell: &str, coeff: i64, word: Word| CwTerm { of: of.into(), cell: cell.into(), coeff, word, fox: None };
    let fox = |of: &str, cell: &str, coeff: i64, word: &Word, gen: usize| CwTerm {
        of: of.into(),
        cell: cell.into(),
        coeff,
        word: vec![],
        fox: Some(FoxRef { word: word.clone(), gen }),
    };
    let mut b1 = Vec::new();
    for (j, x) in xs.iter().enumerate() {
        b1.push(term(x, "P", 1, vec![j as i32 + 1]));
        b1.push(term(x, "P", -1, vec![]));
    }
    b1.push(term("c", "Q", 1, wc.clone()));
    b1.push(term("c", "Q", -1, vec![]));
    b1.push(term("d", "Q", 1, wd.clone()));
    b1.push(term("d", "Q", -1, vec![]));
    b1.push(term("e", "Q", 1, vec![]));
    b1.push(term("e", "P", -1, vec![]));

    let mut b2 = Vec::new();
    for (i, r) in rels.iter().enumerate() {
        for (j, x) in xs.iter().enumerate() {
            b2.push(fox(r, x, 1, &rep.pres.relators[i], j + 1));
        }
    }
    // ∂t = (1 − c d c⁻¹)·c + (c − [c,d])·d
    b2.push(term("t", "c", 1, vec![]));
    b2.push(term("t", "c", -1, cdc.clone()));
    b2.push(term("t", "d", 1, wc.clone()));
    b2.push(term("t", "d", -1, comm.clone()));
    for (name, edge, w) in [("cI", "c", &wc), ("dI", "d", &wd)] {
        b2.push(term(name, "e", 1, vec![]));
        b2.push(term(name, "e", -1, w.clone()));
        b2.push(term(name, edge, 1, vec![]));
        for (j, x) in xs.iter().enumerate() {
            b2.push(fox(name, x, -1, w, j + 1));
        }
    }
    b2.push(term("D", "c", 1, vec![]));

    let mut b3 = vec![term("tI", "t", 1, vec![])];
    for t in &ident {
        b3.push(term("tI", &rels[t.relator], -(t.sign as i64), t.conj.clone()));
    }
    b3.push(term("tI", "cI", -1, vec![]));
    b3.push(term("tI", "cI", 1, cdc));
    b3.push(term("tI", "dI", -1, wc.clone()));
    b3.push(term("tI", "dI", 1, comm));
    b3.push(term("B", "t", 1, vec![]));
    b3.push(term("B", "D", -1, vec![]));
    b3.push(term("B", "D", 1, wd));
    Ok(CwFixture { cells, boundary: vec![b1, b2, b3] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_decomposition_reduces() {
        for (c, d) in [((5, 1), (-1, 0)), ((5, 4), (1, 1)), ((1, 0), (0, 1)), ((-3, 2), (1, -1))] {
            let cw = peripheral_word(&[1], &[2], c.0, c.1);
            let dw = peripheral_word(&[1], &[2], d.0, d.1);
            let target = holonomy::commutator(&cw, &dw);
            let dec = commutator_decomposition(&target).unwrap();
            let mut w = Vec::new();
            for (s, g) in &dec {
                w.extend(g.iter().copied());
                w.extend(if *s == 1 { vec![1, 2, -1, -2] } else { vec![2, 1, -2, -1] });
                w.extend(inverse_word(g));
            }
            assert_eq!(holonomy::free_reduce(&w), target);
        }
    }

    #[test]
    fn surgery_factor_examples() {
        let cl = ComplexLength { l: 2f64.ln(), theta: 0.0 };
        let v = surgery_factor_even(&[cl], 2).unwrap();
        assert!((v - (-0.5)).norm() < 1e-15);
        let two = surgery_factor_even(&[cl, cl], 2).unwrap();
        assert!((two - v * v).norm() < 1e-15);
        let cl4 = ComplexLength { l: 4f64.ln(), theta: 0.0 };
        let o = surgery_factor_odd(&[cl4], 2, Some(&[Complex64::new(0.5, 0.0)])).unwrap();
        assert!((o - 3.0625).norm() < 1e-12);
        assert_eq!(surgery_factor_odd(&[cl4], 2, None).unwrap_err().code(), "lift-required");
        let bad = ComplexLength { l: -1.0, theta: 0.0 };
        assert_eq!(surgery_factor_even(&[bad], 2).unwrap_err().code(), "bad-length");
    }
}
