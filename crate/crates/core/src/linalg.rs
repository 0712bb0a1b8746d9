//! Dense complex linear algebra used by the solvers and the torsion code.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

/// Ratio of extreme singular values of a square matrix.
pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Result of a Householder QR with column pivoting (largest remaining
/// column norm first).
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub rank: usize,
    /// Column indices in pivot order; the first `rank` span the column space.
    pub pivots: Vec<usize>,
    pub rdiag: Vec<f64>,
}

pub fn pivoted_qr(a: &CMat, rel_tol: f64) -> PivotedQr {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = m.min(n);
    let mut rdiag = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..n {
            let nrm: f64 = (k..m).map(|i| w[(i, j)].norm_sqr()).sum();
            if nrm > best_norm {
                best_norm = nrm;
                best = j;
            }
        }
        if best != k {
            w.swap_columns(k, best);
            perm.swap(k, best);
        }
        let alpha = best_norm.sqrt();
        rdiag.push(alpha);
        if alpha == 0.0 {
            continue;
        }
        let x0 = w[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        // v = x + phase·|x|·e_k, reflector H = I − 2vv*/(v*v)
        let mut v: Vec<Complex64> = (k..m).map(|i| w[(i, k)]).collect();
        v[0] += phase * alpha;
        let vnorm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: Complex64 = v.iter().enumerate().map(|(t, vi)| vi.conj() * w[(k + t, j)]).sum();
            let f = dot * (2.0 / vnorm);
            for (t, vi) in v.iter().enumerate() {
                w[(k + t, j)] -= vi * f;
            }
        }
    }
    let top = rdiag.first().copied().unwrap_or(0.0);
    let rank = if top > 0.0 { rdiag.iter().filter(|&&d| d > rel_tol * top).count() } else { 0 };
    PivotedQr { rank, pivots: perm, rdiag }
}

/// Orthonormal basis of the column space (first `rank` left singular vectors).
pub fn column_space(a: &CMat, rel_tol: f64) -> CMat {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let s = &svd.singular_values;
    let top = s.iter().fold(0.0f64, |acc, &x| acc.max(x));
    let idx: Vec<usize> = (0..s.len()).filter(|&i| top > 0.0 && s[i] > rel_tol * top).collect();
    let mut out = zeros(m, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &CMat, b: &CMat, rel_tol: f64) -> CMat {
    if a.ncols() == 0 {
        return zeros(0, b.ncols());
    }
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.iter().fold(0.0f64, |acc, &x| acc.max(x));
    svd.solve(b, rel_tol * top.max(f64::MIN_POSITIVE)).expect("U and V were computed")
}

/// Null space of `a` (right kernel) as columns, with the two smallest
/// singular values for diagnostics.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return zeros(0, 0);
    }
    // pad so the SVD returns a full V
    let mut padded = zeros(m.max(n), n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^H");
    let s = &svd.singular_values;
    let top = s.iter().fold(0.0f64, |acc, &x| acc.max(x));
    let idx: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= rel_tol * top.max(f64::MIN_POSITIVE)).collect();
    let mut out = zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &vt.row(i).adjoint());
    }
    out
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).max().unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        if b.ncols() > 0 {
            out.view_mut((0, c0), (b.nrows(), b.ncols())).copy_from(*b);
        }
        c0 += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        if b.nrows() > 0 {
            out.view_mut((r0, 0), (b.nrows(), b.ncols())).copy_from(*b);
        }
        r0 += b.nrows();
    }
    out
}
