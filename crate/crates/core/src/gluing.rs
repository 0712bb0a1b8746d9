//! Ideal triangulations in log form, Newton solves for the complete and
//! Dehn-filled structures, cusp moduli, volume and core geodesics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::holonomy::ComplexLength;
use crate::linalg::{self, CMat};
use crate::specfun::{self, UpperHalfPoint};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Σ r_j log z_j + Σ r'_j log(1 − z_j) − winding·πi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEquation {
    pub r: Vec<i64>,
    pub rp: Vec<i64>,
    pub winding: i64,
}

impl LogEquation {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let mut s = Complex64::new(-(self.winding as f64) * PI, 0.0) * I;
        for (j, zj) in z.iter().enumerate() {
            if self.r[j] != 0 {
                s += zj.ln() * self.r[j] as f64;
            }
            if self.rp[j] != 0 {
                s += (1.0 - zj).ln() * self.rp[j] as f64;
            }
        }
        s
    }

    pub fn gradient(&self, z: &[Complex64]) -> Vec<Complex64> {
        z.iter()
            .enumerate()
            .map(|(j, zj)| self.r[j] as f64 / zj - self.rp[j] as f64 / (1.0 - zj))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspEquations {
    pub m: LogEquation,
    pub l: LogEquation,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealTriangulation {
    pub n_tets: usize,
    pub edges: Vec<LogEquation>,
    pub cusps: Vec<CuspEquations>,
}

/// The manifold file: a triangulation plus starting shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldFile {
    pub n_tets: usize,
    pub edges: Vec<LogEquation>,
    pub cusps: Vec<CuspEquations>,
    pub initial_shapes: Vec<[f64; 2]>,
}

impl ManifoldFile {
    pub fn from_json(s: &str) -> Result<Self> {
        let f: ManifoldFile = serde_json::from_str(s).map_err(|e| Error::BadFixture(e.to_string()))?;
        f.validate()?;
        Ok(f)
    }

    /// Structural checks for a file that arrived already deserialized.
    pub fn validate(&self) -> Result<()> {
        self.triangulation()?;
        if self.initial_shapes.len() != self.n_tets {
            return Err(Error::BadFixture("initial_shapes length differs from n_tets".into()));
        }
        Ok(())
    }

    pub fn triangulation(&self) -> Result<IdealTriangulation> {
        let t = IdealTriangulation { n_tets: self.n_tets, edges: self.edges.clone(), cusps: self.cusps.clone() };
        t.validate()?;
        Ok(t)
    }

    pub fn shapes(&self) -> Vec<Complex64> {
        self.initial_shapes.iter().map(|p| Complex64::new(p[0], p[1])).collect()
    }
}

impl IdealTriangulation {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_cusps(&self) -> usize {
        self.cusps.len()
    }

    pub fn validate(&self) -> Result<()> {
        let rows = self.edges.iter().chain(self.cusps.iter().flat_map(|c| [&c.m, &c.l]));
        for e in rows {
            if e.r.len() != self.n_tets || e.rp.len() != self.n_tets {
                return Err(Error::BadFixture("exponent row length differs from n_tets".into()));
            }
        }
        Ok(())
    }
}

/// Per-cusp filling data: ∞ means the cusp stays complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Filling {
    Complete(Infinity),
    Coeffs(i64, i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Infinity {
    #[serde(rename = "inf")]
    Inf,
}

pub const COMPLETE: Filling = Filling::Complete(Infinity::Inf);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DehnCoefficients {
    pub pairs: Vec<Filling>,
}

impl DehnCoefficients {
    pub fn complete(h: usize) -> Self {
        Self { pairs: vec![COMPLETE; h] }
    }

    pub fn single(p: i64, q: i64) -> Self {
        Self { pairs: vec![Filling::Coeffs(p, q)] }
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// (r, s) with p·s − q·r = 1 for coprime (p, q).
pub fn completion(p: i64, q: i64) -> Result<(i64, i64)> {
    if gcd(p, q) != 1 {
        return Err(Error::BadCoefficients);
    }
    // extended Euclid: x·p + y·q = 1, then s = x, r = −y
    let (mut old_r, mut r) = (p, q);
    let (mut old_x, mut x) = (1i64, 0i64);
    let (mut old_y, mut y) = (0i64, 1i64);
    while r != 0 {
        let k = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - k * r);
        (old_x, x) = (x, old_x - k * x);
        (old_y, y) = (y, old_y - k * y);
    }
    let sgn = old_r.signum();
    let (s, rr) = (old_x * sgn, -old_y * sgn);
    debug_assert_eq!(p * s - q * rr, 1);
    Ok((rr, s))
}

/// A point of the deformation space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSolution {
    pub z: Vec<Complex64>,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub tau: Vec<Complex64>,
    pub residual: f64,
    pub is_complete: bool,
    pub iterations: usize,
    pub fillings: Vec<Filling>,
}

/// Target for one cusp equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CuspTarget {
    Complete,
    Filling(i64, i64),
    /// Prescribed meridian logarithm u.
    Holonomy(Complex64),
}

pub const COMPLETENESS_TOL: f64 = 1e-9;

fn cusp_row(tri: &IdealTriangulation, i: usize, t: CuspTarget, z: &[Complex64]) -> (Complex64, Vec<Complex64>) {
    let c = &tri.cusps[i];
    match t {
        CuspTarget::Complete => (c.m.eval(z), c.m.gradient(z)),
        CuspTarget::Holonomy(u0) => (c.m.eval(z) - u0, c.m.gradient(z)),
        CuspTarget::Filling(p, q) => {
            let val = c.m.eval(z) * p as f64 + c.l.eval(z) * q as f64 - 2.0 * PI * I;
            let gm = c.m.gradient(z);
            let gl = c.l.gradient(z);
            (val, gm.iter().zip(&gl).map(|(a, b)| a * p as f64 + b * q as f64).collect())
        }
    }
}

fn system(tri: &IdealTriangulation, targets: &[CuspTarget], z: &[Complex64]) -> (Vec<Complex64>, CMat) {
    let n = tri.n_tets;
    let rows = tri.n_edges() + targets.len();
    let mut f = Vec::with_capacity(rows);
    let mut jac = CMat::zeros(rows, n);
    for (i, e) in tri.edges.iter().enumerate() {
        f.push(e.eval(z));
        for (j, g) in e.gradient(z).into_iter().enumerate() {
            jac[(i, j)] = g;
        }
    }
    for (k, t) in targets.iter().enumerate() {
        let (val, grad) = cusp_row(tri, k, *t, z);
        f.push(val);
        for (j, g) in grad.into_iter().enumerate() {
            jac[(tri.n_edges() + k, j)] = g;
        }
    }
    (f, jac)
}

fn max_norm(f: &[Complex64]) -> f64 {
    f.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Newton iteration on the log-form system with the given cusp targets.
/// Least-squares steps absorb redundant edge equations; steps are halved to
/// keep every shape in the upper half plane and the residual decreasing.
pub fn solve_targets(
    tri: &IdealTriangulation,
    targets: &[CuspTarget],
    z0: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<ShapeSolution> {
    tri.validate()?;
    if z0.len() != tri.n_tets || targets.len() != tri.n_cusps() {
        return Err(Error::BadFixture("shape or cusp count mismatch".into()));
    }
    if z0.iter().any(|z| !(z.im > 0.0)) {
        return Err(Error::SolverFailed("initial shape not in the upper half plane".into()));
    }
    let mut z = z0.to_vec();
    let (mut f, mut jac) = system(tri, targets, &z);
    let mut res = max_norm(&f);
    let mut iterations = 0;
    while res > tol {
        if iterations >= max_iter {
            return Err(Error::SolverFailed(format!("no convergence after {max_iter} iterations, residual {res:e}")));
        }
        iterations += 1;
        let rhs = CMat::from_iterator(f.len(), 1, f.iter().map(|x| -x));
        let dz = linalg::lstsq(&jac, &rhs, 1e-13);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<Complex64> = z.iter().enumerate().map(|(j, zj)| zj + dz[(j, 0)] * step).collect();
            if trial.iter().all(|t| t.im > 0.0) {
                let (f2, j2) = system(tri, targets, &trial);
                let r2 = max_norm(&f2);
                if r2 < res || r2 <= tol {
                    z = trial;
                    f = f2;
                    jac = j2;
                    res = r2;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::SolverFailed(format!("line search failed at residual {res:e}")));
        }
    }
    if linalg::numerical_rank(&jac, 1e-10) < tri.n_tets {
        return Err(Error::DegenerateParametrization);
    }
    finish(tri, targets, z, res, iterations, &jac)
}

fn finish(
    tri: &IdealTriangulation,
    targets: &[CuspTarget],
    z: Vec<Complex64>,
    residual: f64,
    iterations: usize,
    _jac: &CMat,
) -> Result<ShapeSolution> {
    let u: Vec<Complex64> = tri.cusps.iter().map(|c| c.m.eval(&z)).collect();
    let v: Vec<Complex64> = tri.cusps.iter().map(|c| c.l.eval(&z)).collect();
    let is_complete = u.iter().all(|x| x.norm() < COMPLETENESS_TOL);
    let tau = if is_complete {
        jacobian_tau(tri, &z)?
    } else {
        u.iter()
            .zip(&v)
            .map(|(a, b)| if a.norm() < COMPLETENESS_TOL { Complex64::new(f64::NAN, f64::NAN) } else { b / a })
            .collect()
    };
    let fillings = targets
        .iter()
        .map(|t| match t {
            CuspTarget::Filling(p, q) => Filling::Coeffs(*p, *q),
            _ => COMPLETE,
        })
        .collect();
    Ok(ShapeSolution { z, u, v, tau, residual, is_complete, iterations, fillings })
}

/// τ_i = dv_i/du_i at a point, by the implicit function theorem: solve
/// [J_edges; J_u] dz = e_i and apply the gradient of v_i.
pub fn jacobian_tau(tri: &IdealTriangulation, z: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = tri.n_tets;
    let ne = tri.n_edges();
    let h = tri.n_cusps();
    let mut a = CMat::zeros(ne + h, n);
    for (i, e) in tri.edges.iter().enumerate() {
        for (j, g) in e.gradient(z).into_iter().enumerate() {
            a[(i, j)] = g;
        }
    }
    for (k, c) in tri.cusps.iter().enumerate() {
        for (j, g) in c.m.gradient(z).into_iter().enumerate() {
            a[(ne + k, j)] = g;
        }
    }
    if linalg::numerical_rank(&a, 1e-10) < n {
        return Err(Error::DegenerateParametrization);
    }
    let mut out = Vec::with_capacity(h);
    for (k, c) in tri.cusps.iter().enumerate() {
        let mut b = CMat::zeros(ne + h, 1);
        b[(ne + k, 0)] = Complex64::new(1.0, 0.0);
        let dz = linalg::lstsq(&a, &b, 1e-13);
        let check = &a * &dz - &b;
        if linalg::max_abs(&check) > 1e-8 {
            return Err(Error::DegenerateParametrization);
        }
        let gv = c.l.gradient(z);
        out.push((0..n).map(|j| gv[j] * dz[(j, 0)]).sum());
    }
    Ok(out)
}

pub fn solve_complete(tri: &IdealTriangulation, z0: &[Complex64], tol: f64, max_iter: usize) -> Result<ShapeSolution> {
    let targets = vec![CuspTarget::Complete; tri.n_cusps()];
    let sol = solve_targets(tri, &targets, z0, tol, max_iter)?;
    if sol.tau.iter().any(|t| !(t.im > 0.0)) {
        return Err(Error::DegenerateParametrization);
    }
    Ok(sol)
}

pub fn solve_filling(
    tri: &IdealTriangulation,
    coeffs: &DehnCoefficients,
    z0: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<ShapeSolution> {
    if coeffs.pairs.len() != tri.n_cusps() {
        return Err(Error::BadCoefficients);
    }
    let mut targets = Vec::new();
    for f in &coeffs.pairs {
        targets.push(match *f {
            Filling::Complete(_) => CuspTarget::Complete,
            Filling::Coeffs(p, q) => {
                if gcd(p, q) != 1 {
                    return Err(Error::BadCoefficients);
                }
                CuspTarget::Filling(p, q)
            }
        });
    }
    solve_targets(tri, &targets, z0, tol, max_iter)
}

/// Σ D(z_i).
pub fn volume(sol: &ShapeSolution) -> Result<f64> {
    let mut v = 0.0;
    for z in &sol.z {
        if z.im.abs() < 1e-14 {
            return Err(Error::DegenerateShape);
        }
        v += specfun::bloch_wigner(*z, 1e-16)?;
    }
    Ok(v)
}

/// λ_i = −(r_i u_i + s_i v_i) mod 2πi, normalized to l > 0, θ ∈ (−π, π].
pub fn core_geodesic_length(
    sol: &ShapeSolution,
    coeffs: &DehnCoefficients,
    completions: &[(i64, i64)],
) -> Result<Vec<ComplexLength>> {
    let mut out = Vec::new();
    for (i, f) in coeffs.pairs.iter().enumerate() {
        let (p, q) = match f {
            Filling::Coeffs(p, q) => (*p, *q),
            Filling::Complete(_) => return Err(Error::BadCoefficients),
        };
        if gcd(p, q) != 1 {
            return Err(Error::BadCoefficients);
        }
        let (r, s) = *completions.get(i).ok_or(Error::BadCompletion)?;
        if p * s - q * r != 1 {
            return Err(Error::BadCompletion);
        }
        let lam = -(sol.u[i] * r as f64 + sol.v[i] * s as f64);
        out.push(ComplexLength::from_lambda(lam).map_err(|_| Error::BadCompletion)?);
    }
    Ok(out)
}

/// τ̃ = (r + sτ)/(p + qτ).
pub fn tilde_tau(pq: (i64, i64), rs: (i64, i64), tau: UpperHalfPoint) -> Result<UpperHalfPoint> {
    let (p, q) = pq;
    let (r, s) = rs;
    if p * s - q * r != 1 {
        return Err(Error::BadCompletion);
    }
    let t = tau.value();
    let den = t * q as f64 + p as f64;
    if den.norm() == 0.0 {
        return Err(Error::Pole);
    }
    UpperHalfPoint::new((t * s as f64 + r as f64) / den)
}

/// ε_m^p ε_l^q = −1 at every cusp.
pub fn spin_filling_admissible(eps_m: &[i8], eps_l: &[i8], coeffs: &[(i64, i64)]) -> bool {
    eps_m.len() == coeffs.len()
        && eps_l.len() == coeffs.len()
        && coeffs.iter().zip(eps_m.iter().zip(eps_l)).all(|(&(p, q), (&em, &el))| {
            let a = if em < 0 && p.rem_euclid(2) == 1 { -1 } else { 1 };
            let b = if el < 0 && q.rem_euclid(2) == 1 { -1 } else { 1 };
            a * b == -1
        })
}
