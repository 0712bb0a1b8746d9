//! Primitive loxodromic conjugacy classes up to a word-length cutoff, and the
//! truncated products built from them: Ruelle factors, twisted Ruelle zeta,
//! and the Zograf products F_n, G_n, each with a tail estimate.

use itertools::Itertools;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::holonomy::{self, inverse_word, ComplexLength, HolonomyRep, Kind, Mat2, Word};

pub const DEFAULT_DEDUP_TOL: f64 = 1e-9;
pub const DEFAULT_M_MAX: usize = 60;
/// How far (in hyperbolic distance) above the closest axis a conjugate may
/// sit and still be kept by the conjugacy search.
const AXIS_SLACK: f64 = 1.0;
const STEP_WORDLEN: usize = 3;
const NODE_CAP: usize = 4000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicClass {
    pub word: Word,
    pub length: ComplexLength,
    pub primitive: bool,
    /// 𝔮 = e^{−(l+iθ)}.
    pub q: Complex64,
    /// 𝔮^{1/2} := λ⁻¹ for the large eigenvalue λ of the lifted matrix.
    pub half: Option<Complex64>,
}

impl GeodesicClass {
    fn new(word: Word, length: ComplexLength, half: Option<Complex64>) -> Self {
        GeodesicClass { word, length, primitive: true, q: length.q(), half }
    }
}

/// Counting model for classes beyond the cutoff: density C·e^{2l}/l for
/// l ≥ l_c, where l_c is the shortest length first reached by a word of the
/// maximal length (the table is treated as complete below l_c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub l_c: f64,
    pub prefactor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumerationStats {
    pub words_examined: usize,
    pub candidate_classes: usize,
    pub merged_conjugates: usize,
    pub powers_removed: usize,
    /// Classes whose length is a multiple of a shorter one without the power
    /// being found conjugate to them; kept as primitive.
    pub unconfirmed_multiples: usize,
    /// Classes sharing a complex length that the search kept apart.
    pub length_collisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTable {
    pub cutoff_wordlen: usize,
    pub classes: Vec<GeodesicClass>,
    pub dedup_tol: f64,
    pub lifted: bool,
    pub tail: TailModel,
    pub stats: EnumerationStats,
}

/// One JSON line of a table export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableLine {
    pub word: Word,
    pub l: f64,
    pub theta: f64,
    pub primitive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedProduct {
    pub value: Complex64,
    pub n_terms: usize,
    pub tail_bound: f64,
    /// Bound on |log(true/value)| under the tail model.
    pub log_tail: f64,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub s: Option<Complex64>,
    pub m_max: Option<usize>,
}

impl TruncatedProduct {
    fn finish(value: Complex64, n_terms: usize, log_tail: f64) -> Self {
        TruncatedProduct {
            value,
            n_terms,
            tail_bound: value.norm() * log_tail.exp_m1(),
            log_tail,
            n: None,
            k: None,
            s: None,
            m_max: None,
        }
    }

    /// Relative bound on |true − value|/|value|.
    pub fn rel_bound(&self) -> f64 {
        self.log_tail.exp_m1()
    }
}

fn letter_key(a: i32) -> usize {
    holonomy::letter_index(a)
}

fn word_less(a: &[i32], b: &[i32]) -> bool {
    a.iter().map(|&x| letter_key(x)).lt(b.iter().map(|&x| letter_key(x)))
}

fn min_rotation(w: &[i32]) -> Word {
    let n = w.len();
    let mut best: Word = w.to_vec();
    for r in 1..n {
        let rot: Word = w[r..].iter().chain(&w[..r]).copied().collect();
        if word_less(&rot, &best) {
            best = rot;
        }
    }
    best
}

/// Lexicographic minimum over cyclic rotations of w and of w⁻¹.
pub fn cyclic_normal_form(w: &[i32]) -> Word {
    let a = min_rotation(w);
    let b = min_rotation(&inverse_word(w));
    if word_less(&b, &a) {
        b
    } else {
        a
    }
}

/// Smallest d | n with w = u^{n/d}, |u| = d.
pub fn primitive_root_len(w: &[i32]) -> usize {
    let n = w.len();
    (1..=n).find(|&d| n % d == 0 && (d..n).all(|i| w[i] == w[i - d])).unwrap_or(n)
}

pub fn is_proper_power(w: &[i32]) -> bool {
    !w.is_empty() && primitive_root_len(w) < w.len()
}

fn cyclically_reduced(w: &[i32]) -> bool {
    w.len() <= 1 || w[0] != -w[w.len() - 1]
}

/// All freely reduced words of length 1..=max_len (no cyclic condition).
pub fn reduced_words(n_gens: usize, max_len: usize) -> Vec<Word> {
    let letters: Vec<i32> = (1..=n_gens as i32).flat_map(|g| [g, -g]).collect();
    let mut out = Vec::new();
    let mut layer: Vec<Word> = letters.iter().map(|&a| vec![a]).collect();
    for _ in 0..max_len {
        out.extend(layer.iter().cloned());
        let mut next = Vec::new();
        for w in &layer {
            let last = *w.last().expect("nonempty");
            for &a in &letters {
                if a != -last {
                    let mut v = w.clone();
                    v.push(a);
                    next.push(v);
                }
            }
        }
        layer = next;
    }
    out
}

fn extend_dfs(w: &mut Word, letters: &[i32], max_len: usize, out: &mut Vec<Word>) {
    if cyclically_reduced(w) && *w == cyclic_normal_form(w) {
        out.push(w.clone());
    }
    if w.len() == max_len {
        return;
    }
    let last = *w.last().expect("nonempty");
    for &a in letters {
        if a != -last {
            w.push(a);
            extend_dfs(w, letters, max_len, out);
            w.pop();
        }
    }
}

/// Canonical cyclic words up to max_len, sharded by first letter.
pub fn canonical_words(n_gens: usize, max_len: usize) -> Vec<Word> {
    let letters: Vec<i32> = (1..=n_gens as i32).flat_map(|g| [g, -g]).collect();
    let mut shards: Vec<Vec<Word>> = letters
        .par_iter()
        .map(|&a| {
            let mut out = Vec::new();
            let mut w = vec![a];
            extend_dfs(&mut w, &letters, max_len, &mut out);
            out
        })
        .collect();
    let mut all: Vec<Word> = shards.drain(..).flatten().collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().map(|&x| letter_key(x)).cmp(b.iter().map(|&x| letter_key(x)))));
    all
}

/// A fixed generic conjugator, so that the base point j is not fixed by
/// any symmetry of the fixture matrices (ties in the axis search are rare).
fn generic_conjugator() -> Mat2 {
    let p = Mat2::new(
        Complex64::new(1.1, 0.23),
        Complex64::new(0.31, -0.17),
        Complex64::new(0.07, 0.41),
        Complex64::new(1.0, 0.0),
    );
    p / p.determinant().sqrt()
}

fn sign_normalize(m: &Mat2) -> Mat2 {
    let lead = m.iter().find(|z| z.norm() > 1e-6).copied().unwrap_or(Complex64::new(1.0, 0.0));
    if lead.re < 0.0 || (lead.re == 0.0 && lead.im < 0.0) {
        -m
    } else {
        *m
    }
}

fn frob2(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Distance measure of the axis of m from the base point: sinh² of it.
fn axis_sinh2(m: &Mat2, len: &ComplexLength) -> f64 {
    let cosh_d = frob2(m) / 2.0;
    let num = cosh_d - len.l.cosh();
    let den = len.l.cosh() - len.theta.cos();
    (num / den).max(0.0)
}

fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    let scale = frob2(a).sqrt().max(1.0);
    (a - b).iter().all(|z| z.norm() <= tol * scale)
}

/// Set of conjugates g·m·g⁻¹ whose axes pass within AXIS_SLACK of the
/// closest one found, reached by repeated conjugation with short words.
#[derive(Debug, Clone)]
struct ConjugateCloud {
    nodes: Vec<Mat2>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

const BUCKET: f64 = 1e-4;

impl ConjugateCloud {
    fn key(m: &Mat2) -> (i64, i64) {
        let z = m[(0, 0)];
        ((z.re / BUCKET).floor() as i64, (z.im / BUCKET).floor() as i64)
    }

    fn find(&self, m: &Mat2) -> bool {
        let (a, b) = Self::key(m);
        for da in -1..=1 {
            for db in -1..=1 {
                if let Some(ix) = self.buckets.get(&(a + da, b + db)) {
                    if ix.iter().any(|&i| close(&self.nodes[i], m, 1e-7)) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn contains(&self, m: &Mat2) -> bool {
        self.find(&sign_normalize(m))
    }

    fn insert(&mut self, m: Mat2) -> bool {
        if self.find(&m) {
            return false;
        }
        self.buckets.entry(Self::key(&m)).or_default().push(self.nodes.len());
        self.nodes.push(m);
        true
    }

    fn explore(start: &Mat2, len: &ComplexLength, steps: &[(Mat2, Mat2)]) -> Self {
        let mut cloud = ConjugateCloud { nodes: Vec::new(), buckets: HashMap::new() };
        let s0 = sign_normalize(start);
        let mut best = axis_sinh2(&s0, len).sqrt().asinh();
        cloud.insert(s0);
        let mut frontier = vec![0usize];
        while !frontier.is_empty() && cloud.nodes.len() < NODE_CAP {
            let mut next = Vec::new();
            for &i in &frontier {
                let v = cloud.nodes[i];
                for (s, si) in steps {
                    let w = sign_normalize(&(s * v * si));
                    let d = axis_sinh2(&w, len).sqrt().asinh();
                    if d <= best + AXIS_SLACK && cloud.insert(w) {
                        best = best.min(d);
                        next.push(cloud.nodes.len() - 1);
                    }
                }
            }
            frontier = next;
        }
        let keep: Vec<Mat2> = cloud.nodes.iter().copied().filter(|m| axis_sinh2(m, len).sqrt().asinh() <= best + AXIS_SLACK).collect();
        let mut out = ConjugateCloud { nodes: Vec::new(), buckets: HashMap::new() };
        for m in keep {
            out.insert(m);
        }
        out
    }

    /// The node with the closest axis (ties broken by entries).
    fn best(&self, len: &ComplexLength) -> Mat2 {
        *self
            .nodes
            .iter()
            .min_by(|a, b| axis_sinh2(a, len).total_cmp(&axis_sinh2(b, len)))
            .expect("cloud has its start node")
    }
}

struct Candidate {
    word: Word,
    mat: Mat2,
    length: ComplexLength,
    half: Option<Complex64>,
}

fn same_length(a: &ComplexLength, b: &ComplexLength, tol: f64) -> bool {
    let scale = a.l.abs().max(1.0);
    (a.l - b.l).abs() <= tol * scale && (Complex64::from_polar(1.0, a.theta) - Complex64::from_polar(1.0, b.theta)).norm() <= tol * scale
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let nx = self.0[j];
            self.0[j] = r;
            j = nx;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }
}

fn step_pairs(rep: &HolonomyRep, p: &Mat2) -> Vec<(Mat2, Mat2)> {
    let pi = holonomy::inv2(p);
    reduced_words(rep.pres.n_gens, STEP_WORDLEN)
        .iter()
        .map(|w| {
            let m = pi * holonomy::eval_with(&rep.letter_images(), w) * p;
            (m, holonomy::inv2(&m))
        })
        .collect()
}

/// Enumerate primitive loxodromic classes represented by words of length at
/// most `max_wordlen`. Words are reduced to cyclic normal forms; classes
/// with equal complex length are then tested for conjugacy in the image
/// group by a search over conjugates whose axes are near the base point, so
/// relations of the group (and of a filled group) are respected. Each class
/// and its inverse are separate entries unless found conjugate.
pub fn enumerate(rep: &HolonomyRep, max_wordlen: usize, dedup_tol: f64) -> Result<GeodesicTable> {
    if !(dedup_tol > 0.0) {
        return Err(Error::BadTolerance);
    }
    let p = generic_conjugator();
    let pi = holonomy::inv2(&p);
    let images = rep.letter_images();
    let words = canonical_words(rep.pres.n_gens, max_wordlen);
    let words_examined = words.len();
    let mut cands: Vec<Candidate> = words
        .par_iter()
        .filter(|w| !is_proper_power(w))
        .filter_map(|w| {
            let raw = holonomy::eval_with(&images, w);
            if holonomy::classify(&raw) != Kind::Loxodromic {
                return None;
            }
            let length = holonomy::complex_length(&raw).ok()?;
            let half = rep.lift_declared.then(|| holonomy::large_eigenvalue(&raw).inv());
            Some(Candidate { word: w.clone(), mat: pi * raw * p, length, half })
        })
        .collect();
    cands.sort_by(|a, b| a.length.l.total_cmp(&b.length.l).then_with(|| a.word.len().cmp(&b.word.len())));
    let candidate_classes = cands.len();

    // clusters of equal complex length
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..cands.len() {
        let joined = clusters.last_mut().filter(|c| {
            let j = c[0];
            (cands[i].length.l - cands[j].length.l).abs() <= dedup_tol * cands[j].length.l.max(1.0)
        });
        match joined {
            Some(c) => c.push(i),
            None => clusters.push(vec![i]),
        }
    }
    // split clusters by θ
    let clusters: Vec<Vec<usize>> = clusters
        .into_iter()
        .flat_map(|c| {
            let mut parts: Vec<Vec<usize>> = Vec::new();
            for i in c {
                match parts.iter_mut().find(|p| same_length(&cands[p[0]].length, &cands[i].length, dedup_tol)) {
                    Some(p) => p.push(i),
                    None => parts.push(vec![i]),
                }
            }
            parts
        })
        .collect();

    let steps = step_pairs(rep, &p);
    // oriented classes: 2i is the word, 2i+1 its inverse
    let mut uf = UnionFind((0..2 * cands.len()).collect());
    let mut clouds: HashMap<usize, ConjugateCloud> = HashMap::new();
    let needs_cloud: Vec<usize> = cands
        .iter()
        .enumerate()
        .filter(|(i, _)| clusters.iter().any(|c| c.len() > 1 && c.contains(i)) || cands[*i].word.len() >= 2)
        .map(|(i, _)| i)
        .collect();
    let built: Vec<(usize, ConjugateCloud)> = needs_cloud
        .par_iter()
        .map(|&i| (i, ConjugateCloud::explore(&cands[i].mat, &cands[i].length, &steps)))
        .collect();
    clouds.extend(built);

    let mut merged_conjugates = 0;
    let mut length_collisions = 0;
    for c in &clusters {
        for (x, &i) in c.iter().enumerate() {
            // self-inverse classes
            if let Some(cl) = clouds.get(&i) {
                if cl.contains(&holonomy::inv2(&cands[i].mat)) && uf.union(2 * i, 2 * i + 1) {
                    merged_conjugates += 1;
                }
            }
            for &j in &c[..x] {
                let (Some(ci), Some(cj)) = (clouds.get(&i), clouds.get(&j)) else { continue };
                let bi = ci.best(&cands[i].length);
                if cj.contains(&bi) {
                    if uf.union(2 * i, 2 * j) | uf.union(2 * i + 1, 2 * j + 1) {
                        merged_conjugates += 1;
                    }
                } else if cj.contains(&holonomy::inv2(&bi)) {
                    if uf.union(2 * i, 2 * j + 1) | uf.union(2 * i + 1, 2 * j) {
                        merged_conjugates += 1;
                    }
                }
            }
        }
        let roots: std::collections::BTreeSet<usize> = c.iter().map(|&i| uf.find(2 * i)).collect();
        if roots.len() > 1 {
            length_collisions += roots.len() - 1;
        }
    }

    // primitivity by length divisibility, confirmed by conjugacy of powers
    let mut powers_removed = 0;
    let mut unconfirmed_multiples = 0;
    let mut nonprimitive = vec![false; cands.len()];
    for i in 0..cands.len() {
        let li = cands[i].length;
        let mut confirmed = false;
        let mut suspected = false;
        for j in 0..cands.len() {
            if cands[j].length.l * 1.5 > li.l {
                break;
            }
            let k = (li.l / cands[j].length.l).round();
            if k < 2.0 {
                continue;
            }
            let kl = ComplexLength { l: cands[j].length.l * k, theta: holonomy::wrap_angle(cands[j].length.theta * k) };
            if !same_length(&kl, &li, dedup_tol.max(1e-9) * k) {
                continue;
            }
            suspected = true;
            let pow = cands[j].mat.pow(k as u32);
            let hit = match clouds.get(&i) {
                Some(cl) => cl.contains(&pow) || cl.contains(&holonomy::inv2(&pow)),
                None => {
                    let cl = ConjugateCloud::explore(&cands[i].mat, &li, &steps);
                    cl.contains(&pow) || cl.contains(&holonomy::inv2(&pow))
                }
            };
            if hit {
                confirmed = true;
                break;
            }
        }
        if confirmed {
            nonprimitive[i] = true;
            powers_removed += 1;
        } else if suspected {
            unconfirmed_multiples += 1;
        }
    }

    // one entry per oriented class, represented by its shortest word; a
    // class merged with a removed power is itself a power
    let mut dead = std::collections::HashSet::new();
    for i in (0..cands.len()).filter(|&i| nonprimitive[i]) {
        dead.insert(uf.find(2 * i));
        dead.insert(uf.find(2 * i + 1));
    }
    let mut best: HashMap<usize, (Word, usize)> = HashMap::new();
    for (i, c) in cands.iter().enumerate() {
        for o in 0..2 {
            let r = uf.find(2 * i + o);
            if dead.contains(&r) {
                continue;
            }
            let word = if o == 0 { c.word.clone() } else { min_rotation(&inverse_word(&c.word)) };
            let better = match best.get(&r) {
                None => true,
                Some((w, _)) => word.len() < w.len() || (word.len() == w.len() && word_less(&word, w)),
            };
            if better {
                best.insert(r, (word, i));
            }
        }
    }
    let mut classes: Vec<GeodesicClass> =
        best.into_values().map(|(word, i)| GeodesicClass::new(word, cands[i].length, cands[i].half)).collect();
    classes.sort_by(|a, b| {
        a.length.l.total_cmp(&b.length.l).then_with(|| a.word.len().cmp(&b.word.len())).then_with(|| a.word.iter().map(|&x| letter_key(x)).cmp(b.word.iter().map(|&x| letter_key(x))))
    });

    let tail = fit_tail(&classes, max_wordlen);
    Ok(GeodesicTable {
        cutoff_wordlen: max_wordlen,
        classes,
        dedup_tol,
        lifted: rep.lift_declared,
        tail,
        stats: EnumerationStats {
            words_examined,
            candidate_classes,
            merged_conjugates,
            powers_removed,
            unconfirmed_multiples,
            length_collisions,
        },
    })
}

fn fit_tail(classes: &[GeodesicClass], max_wordlen: usize) -> TailModel {
    // representatives are shortest words, so this is "first reached at the cutoff"
    let l_c = classes.iter().filter(|c| c.word.len() == max_wordlen).map(|c| c.length.l).fold(f64::INFINITY, f64::min);
    if classes.is_empty() || !l_c.is_finite() {
        return TailModel { l_c: if l_c.is_finite() { l_c } else { 0.0 }, prefactor: 0.0 };
    }
    let count = classes.iter().filter(|c| c.length.l <= l_c).count() as f64;
    // N(l) ≈ C e^{2l}/(2l)
    TailModel { l_c, prefactor: count * 2.0 * l_c / (2.0 * l_c).exp() }
}

/// ∫_{l_c}^∞ C e^{2l}/l · bound(l) dl by Simpson's rule, stopped once the
/// integrand is negligible.
pub fn tail_integral(model: &TailModel, bound: impl Fn(f64) -> f64) -> f64 {
    if model.prefactor == 0.0 {
        return 0.0;
    }
    let f = |l: f64| model.prefactor * (2.0 * l).exp() / l * bound(l);
    let h = 0.01;
    let mut total = 0.0;
    let mut a = model.l_c;
    for _ in 0..20_000 {
        let (fa, fm, fb) = (f(a), f(a + h / 2.0), f(a + h));
        let piece = h / 6.0 * (fa + 4.0 * fm + fb);
        if !piece.is_finite() {
            return f64::INFINITY;
        }
        total += piece;
        a += h;
        if fb < 1e-18 * total.max(1e-300) && fb <= fa {
            break;
        }
    }
    total
}

fn inner_bound(abs_q: f64, start: f64, m_max: usize) -> f64 {
    // Σ_{m > m_max} −log(1 − |q|^{m + start − ⌊start⌋}) ≤ 2 Σ |q|^{...}
    let e = m_max as f64 + 1.0 + start.fract();
    2.0 * abs_q.powf(e) / (1.0 - abs_q)
}

fn log_bound_series(l: f64, exps: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    for e in exps {
        let x = (-e * l).exp();
        if x >= 1.0 {
            return f64::INFINITY;
        }
        s += -(1.0 - x).ln();
        if x < 1e-20 {
            break;
        }
    }
    s
}

/// Classes in a canonical order, so products do not depend on table order
/// even in the last bit.
fn canonical_order(table: &GeodesicTable) -> Vec<&GeodesicClass> {
    let mut v: Vec<&GeodesicClass> = table.classes.iter().collect();
    v.sort_by(|a, b| {
        a.length.l.total_cmp(&b.length.l).then(a.length.theta.total_cmp(&b.length.theta)).then_with(|| a.word.cmp(&b.word))
    });
    v
}

/// F_n = ∏_{[γ]} ∏_{m≥n} (1 − 𝔮_γ^m).
pub fn zograf_f(table: &GeodesicTable, n: usize, m_max: usize) -> Result<TruncatedProduct> {
    if n < 3 {
        return Err(Error::BelowConvergenceThreshold);
    }
    zograf_generic(table, n, m_max, false)
}

/// G_n = ∏_{[γ]} ∏_{m≥n} (1 − 𝔮_γ^{m+1/2}) with the lifted square roots.
pub fn zograf_g(table: &GeodesicTable, n: usize, m_max: usize) -> Result<TruncatedProduct> {
    if n < 2 {
        return Err(Error::BelowConvergenceThreshold);
    }
    if !table.lifted || table.classes.iter().any(|c| c.half.is_none()) {
        return Err(Error::LiftRequired);
    }
    zograf_generic(table, n, m_max, true)
}

fn zograf_generic(table: &GeodesicTable, n: usize, m_max: usize, half: bool) -> Result<TruncatedProduct> {
    let m_max = m_max.max(n);
    let shift = if half { 0.5 } else { 0.0 };
    let mut value = Complex64::new(1.0, 0.0);
    let mut inner = 0.0;
    for c in canonical_order(table) {
        let base = if half { c.half.expect("checked") } else { Complex64::new(1.0, 0.0) };
        let mut qm = c.q.powu(n as u32) * base;
        for _ in n..=m_max {
            value *= 1.0 - qm;
            qm *= c.q;
        }
        inner += inner_bound(c.q.norm(), shift, m_max);
    }
    let outer = tail_integral(&table.tail, |l| log_bound_series(l, (n..).map(|m| m as f64 + shift)));
    let mut out = TruncatedProduct::finish(value, table.classes.len(), outer + inner);
    out.n = Some(n);
    out.m_max = Some(m_max);
    Ok(out)
}

/// e^{(k/2)iθ} for a class; odd k uses the phase of the lifted eigenvalue.
fn half_phase_power(c: &GeodesicClass, k: i64) -> Result<Complex64> {
    if k % 2 == 0 {
        return Ok(Complex64::from_polar(1.0, c.length.theta * (k / 2) as f64));
    }
    let h = c.half.ok_or(Error::LiftRequired)?;
    let a = h.inv();
    let ph = a / a.norm();
    Ok(if k >= 0 { ph.powi(k as i32) } else { ph.inv().powi((-k) as i32) })
}

/// R(σ_k, s) = ∏ (1 − e^{(k/2)iθ} e^{−s l}).
pub fn ruelle_factor(table: &GeodesicTable, k: i64, s: Complex64, allow_outside: bool) -> Result<TruncatedProduct> {
    if s.re <= 2.0 && !allow_outside {
        return Err(Error::OutsideConvergence);
    }
    let mut value = Complex64::new(1.0, 0.0);
    for c in canonical_order(table) {
        value *= 1.0 - half_phase_power(c, k)? * (-s * c.length.l).exp();
    }
    let log_tail = if s.re > 2.0 { tail_integral(&table.tail, |l| log_bound_series(l, std::iter::once(s.re))) } else { f64::INFINITY };
    let mut out = TruncatedProduct::finish(value, table.classes.len(), log_tail);
    out.k = Some(k.unsigned_abs() as usize);
    out.s = Some(s);
    Ok(out)
}

/// det(I − Sym^k(D_γ) e^{−s l}) for one class, D_γ = diag(a, a⁻¹) with
/// a = 𝔮^{−1/2} (the lifted eigenvalue; any root when k is even).
pub fn ruelle_zeta_term(c: &GeodesicClass, k: usize, s: Complex64) -> Result<Complex64> {
    let a = match c.half {
        Some(h) => h.inv(),
        None if k % 2 == 0 => (c.length.lambda() / 2.0).exp(),
        None => return Err(Error::LiftRequired),
    };
    let x = (-s * c.length.l).exp();
    let mut v = Complex64::new(1.0, 0.0);
    for j in 0..=k {
        v *= 1.0 - a.powi(k as i32 - 2 * j as i32) * x;
    }
    Ok(v)
}

/// R_{ρ^k}(s) = ∏ det(I − Sym^k(D_γ) e^{−s l_γ}).
pub fn ruelle_zeta(table: &GeodesicTable, k: usize, s: Complex64) -> Result<TruncatedProduct> {
    if s.re <= 2.0 + k as f64 / 2.0 {
        return Err(Error::OutsideConvergence);
    }
    let mut value = Complex64::new(1.0, 0.0);
    for c in canonical_order(table) {
        value *= ruelle_zeta_term(c, k, s)?;
    }
    let exps: Vec<f64> = (0..=k).map(|j| s.re - (k as f64 / 2.0 - j as f64)).collect();
    let log_tail = tail_integral(&table.tail, |l| log_bound_series(l, exps.iter().copied()));
    let mut out = TruncatedProduct::finish(value, table.classes.len(), log_tail);
    out.k = Some(k);
    out.s = Some(s);
    Ok(out)
}

/// The shifted factors whose product is the twisted Ruelle zeta term of one
/// class: ∏_{j=0..k} (1 − e^{(k−2j)/2·iθ} e^{−(s − (k−2j)/2) l}).
pub fn decomposition_term(c: &GeodesicClass, k: usize, s: Complex64) -> Result<Complex64> {
    let mut v = Complex64::new(1.0, 0.0);
    for j in 0..=k {
        let kk = k as i64 - 2 * j as i64;
        let shift = kk as f64 / 2.0;
        v *= 1.0 - half_phase_power(c, kk)? * (-(s - shift) * c.length.l).exp();
    }
    Ok(v)
}

/// Largest per-class relative gap between ruelle_zeta_term and the shifted
/// Ruelle factors.
pub fn decomposition_residual(table: &GeodesicTable, k: usize, s: Complex64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for c in &table.classes {
        let a = ruelle_zeta_term(c, k, s)?;
        let b = decomposition_term(c, k, s)?;
        worst = worst.max((a - b).norm() / a.norm().max(1e-300));
    }
    Ok(worst)
}

impl GeodesicTable {
    /// Table from explicit complex lengths (used for synthetic checks).
    pub fn from_lengths(lengths: &[(ComplexLength, Option<Complex64>)], tail: TailModel) -> Self {
        let classes = lengths.iter().map(|(l, h)| GeodesicClass::new(vec![], *l, *h)).collect();
        GeodesicTable {
            cutoff_wordlen: 0,
            classes,
            dedup_tol: DEFAULT_DEDUP_TOL,
            lifted: lengths.iter().all(|(_, h)| h.is_some()),
            tail,
            stats: EnumerationStats {
                words_examined: 0,
                candidate_classes: lengths.len(),
                merged_conjugates: 0,
                powers_removed: 0,
                unconfirmed_multiples: 0,
                length_collisions: 0,
            },
        }
    }

    pub fn min_length(&self) -> Option<f64> {
        self.classes.iter().map(|c| c.length.l).reduce(f64::min)
    }

    /// Re-evaluate the same word list under another representation of the
    /// same presentation (deformed classes).
    pub fn reevaluate(&self, rep: &HolonomyRep) -> Result<GeodesicTable> {
        let mut out = self.clone();
        out.lifted = rep.lift_declared;
        out.classes.clear();
        for c in &self.classes {
            let m = holonomy::evaluate_word(rep, &c.word)?;
            let length = holonomy::complex_length(&m)?;
            let half = rep.lift_declared.then(|| holonomy::large_eigenvalue(&m).inv());
            out.classes.push(GeodesicClass { primitive: c.primitive, ..GeodesicClass::new(c.word.clone(), length, half) });
        }
        Ok(out)
    }

    /// Drop classes whose word is conjugate (as a cyclic word) to a power of
    /// one of the given words or their inverses.
    pub fn without_words(&self, words: &[Word]) -> GeodesicTable {
        let forms: Vec<Word> = words
            .iter()
            .flat_map(|w| (1..=self.cutoff_wordlen.max(1)).map(move |k| holonomy::word_power(w, k)))
            .map(|w| cyclic_normal_form(&holonomy::cyclic_reduce(&w)))
            .collect();
        let mut out = self.clone();
        out.classes.retain(|c| !forms.contains(&cyclic_normal_form(&c.word)));
        out
    }

    pub fn lines(&self) -> Vec<TableLine> {
        self.classes
            .iter()
            .map(|c| TableLine {
                word: c.word.clone(),
                l: c.length.l,
                theta: c.length.theta,
                primitive: c.primitive,
                half: c.half.map(|h| [h.re, h.im]),
            })
            .collect()
    }

    pub fn to_json_lines(&self) -> String {
        self.lines().iter().map(|t| serde_json::to_string(t).expect("serializable")).join("\n")
    }

    pub fn from_json_lines(s: &str, cutoff_wordlen: usize, tail: TailModel) -> Result<Self> {
        let mut lens = Vec::new();
        let mut words = Vec::new();
        let mut prim = Vec::new();
        for line in s.lines().filter(|l| !l.trim().is_empty()) {
            let t: TableLine = serde_json::from_str(line).map_err(|e| Error::BadFixture(e.to_string()))?;
            lens.push((ComplexLength { l: t.l, theta: t.theta }, t.half.map(|h| Complex64::new(h[0], h[1]))));
            words.push(t.word);
            prim.push(t.primitive);
        }
        let mut out = Self::from_lengths(&lens, tail);
        out.cutoff_wordlen = cutoff_wordlen;
        for ((c, w), p) in out.classes.iter_mut().zip(words).zip(prim) {
            c.word = w;
            c.primitive = p;
        }
        Ok(out)
    }
}
