//! Dilogarithm, Bloch–Wigner function, Dedekind eta and the theta constant
//! θ₀₁(0, τ), plus a numerical recovery of the eta multiplier.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Complex64", into = "Complex64")]
pub struct UpperHalfPoint(Complex64);

impl UpperHalfPoint {
    pub fn new(value: Complex64) -> Result<Self> {
        if value.im > 0.0 && value.re.is_finite() && value.im.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::NotUpperHalf)
        }
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

impl TryFrom<Complex64> for UpperHalfPoint {
    type Error = Error;
    fn try_from(z: Complex64) -> Result<Self> {
        Self::new(z)
    }
}

impl From<UpperHalfPoint> for Complex64 {
    fn from(t: UpperHalfPoint) -> Self {
        t.0
    }
}

/// The integer matrix written `(d c / b a)`, acting by
/// `τ ↦ (dτ + c)/(bτ + a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModularMatrix {
    pub d: i64,
    pub c: i64,
    pub b: i64,
    pub a: i64,
}

impl ModularMatrix {
    pub fn new(d: i64, c: i64, b: i64, a: i64) -> Result<Self> {
        let m = Self { d, c, b, a };
        if m.det() != 1 {
            return Err(Error::NotUnimodular);
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Self { d: 1, c: 0, b: 0, a: 1 }
    }

    pub fn det(&self) -> i64 {
        self.d * self.a - self.c * self.b
    }

    /// Matrix product, so that `(g * h).act(τ) == g.act(h.act(τ))`.
    pub fn compose(&self, h: &ModularMatrix) -> ModularMatrix {
        ModularMatrix {
            d: self.d * h.d + self.c * h.b,
            c: self.d * h.c + self.c * h.a,
            b: self.b * h.d + self.a * h.b,
            a: self.b * h.c + self.a * h.a,
        }
    }

    pub fn act(&self, tau: UpperHalfPoint) -> Result<UpperHalfPoint> {
        let t = tau.value();
        let den = t * self.b as f64 + self.a as f64;
        if den.norm() == 0.0 {
            return Err(Error::Pole);
        }
        UpperHalfPoint::new((t * self.d as f64 + self.c as f64) / den)
    }

    /// `bτ + a`, the automorphy factor.
    pub fn automorphy(&self, tau: UpperHalfPoint) -> Complex64 {
        tau.value() * self.b as f64 + self.a as f64
    }
}

/// A truncated series or product with its truncation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub terms: usize,
    pub tail_bound: f64,
}

// B_n for n = 0..=30 (odd n > 1 vanish).
const BERNOULLI: [f64; 31] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
    0.0,
    43867.0 / 798.0,
    0.0,
    -174611.0 / 330.0,
    0.0,
    854513.0 / 138.0,
    0.0,
    -236364091.0 / 2730.0,
    0.0,
    8553103.0 / 6.0,
    0.0,
    -23749461029.0 / 870.0,
    0.0,
    8615841276005.0 / 14322.0,
];

/// Li₂ on |z| ≤ 1, Re z ≤ 1/2 via the Bernoulli series in w = −log(1 − z).
fn dilog_core(z: Complex64, tol: f64) -> Complex64 {
    let w = -(Complex64::new(1.0, 0.0) - z).ln();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut wpow = w;
    let mut fact = 1.0;
    for (n, b) in BERNOULLI.iter().enumerate() {
        fact *= (n + 1) as f64;
        if *b != 0.0 {
            let term = wpow * (*b / fact);
            sum += term;
            if n > 2 && term.norm() < tol * 1e-2 {
                break;
            }
        }
        wpow *= w;
    }
    sum
}

fn dilog_unchecked(z: Complex64, tol: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    if z.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if z.norm() > 1.0 {
        let l = (-z).ln();
        return -PI * PI / 6.0 - 0.5 * l * l - dilog_unchecked(one / z, tol);
    }
    if z.re > 0.5 {
        return PI * PI / 6.0 - z.ln() * (one - z).ln() - dilog_core(one - z, tol);
    }
    dilog_core(z, tol)
}

/// Principal branch of the dilogarithm Li₂(z).
pub fn dilog(z: Complex64, tol: f64) -> Result<Complex64> {
    if !(tol > 0.0) {
        return Err(Error::BadTolerance);
    }
    if z.im == 0.0 && z.re >= 1.0 {
        return Err(Error::OnBranchCut);
    }
    Ok(dilog_unchecked(z, tol))
}

/// Bloch–Wigner function D(z) = Im Li₂(z) + arg(1 − z)·log|z|, the volume
/// of the ideal tetrahedron with shape z (signed by orientation).
pub fn bloch_wigner(z: Complex64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::BadTolerance);
    }
    if z.norm() == 0.0 || (z - 1.0).norm() == 0.0 {
        return Err(Error::DegenerateShape);
    }
    if z.im == 0.0 {
        return Ok(0.0);
    }
    // evaluate on the upper half plane so that D(z̄) = −D(z) holds exactly
    let (w, sign) = if z.im > 0.0 { (z, 1.0) } else { (z.conj(), -1.0) };
    let li = dilog_unchecked(w, tol);
    let d = li.im + (Complex64::new(1.0, 0.0) - w).arg() * w.norm().ln();
    Ok(sign * d)
}

/// ∏_{m≥1}(1 − q^m) with truncation record; requires |q| < 1.
fn euler_product(q: Complex64, tol: f64) -> SeriesValue {
    let mut p = Complex64::new(1.0, 0.0);
    let mut qm = q;
    let mut terms = 0;
    let aq = q.norm();
    loop {
        p *= Complex64::new(1.0, 0.0) - qm;
        terms += 1;
        qm *= q;
        if qm.norm() < tol * 1e-2 || terms > 1_000_000 {
            break;
        }
    }
    // log|tail| ≤ Σ_{m>M} |q|^m / (1 − |q|^m)
    let tail = qm.norm() / ((1.0 - aq) * (1.0 - qm.norm()));
    SeriesValue { value: p, terms, tail_bound: p.norm() * (tail.exp() - 1.0) }
}

const ETA_DIRECT_MIN_IM: f64 = 0.25;

fn eta_direct(t: Complex64, tol: f64) -> SeriesValue {
    let q = (2.0 * PI * I * t).exp();
    let pre = (2.0 * PI * I * t / 24.0).exp();
    let e = euler_product(q, tol);
    SeriesValue { value: pre * e.value, terms: e.terms, tail_bound: pre.norm() * e.tail_bound }
}

/// Dedekind eta η(τ) = e^{2πiτ/24} ∏(1 − e^{2πimτ}).
///
/// Points with small imaginary part are first moved into the standard
/// fundamental domain with η(τ+1) = e^{iπ/12}η(τ) and η(−1/τ) = √(−iτ)η(τ).
pub fn dedekind_eta_series(tau: UpperHalfPoint, tol: f64) -> Result<SeriesValue> {
    if !(tol > 0.0) {
        return Err(Error::BadTolerance);
    }
    let mut t = tau.value();
    let mut mult = Complex64::new(1.0, 0.0);
    let mut guard = 0;
    while t.im < ETA_DIRECT_MIN_IM {
        let n = t.re.round();
        t -= n;
        mult *= (I * PI * n / 12.0).exp();
        if t.norm() < 1.0 {
            let s = -Complex64::new(1.0, 0.0) / t;
            mult *= (-I * s).sqrt();
            t = s;
        }
        guard += 1;
        if guard > 10_000 {
            return Err(Error::InternalInconsistency("eta reduction did not terminate".into()));
        }
    }
    let e = eta_direct(t, tol);
    Ok(SeriesValue { value: mult * e.value, terms: e.terms, tail_bound: mult.norm() * e.tail_bound })
}

pub fn dedekind_eta(tau: UpperHalfPoint, tol: f64) -> Result<Complex64> {
    Ok(dedekind_eta_series(tau, tol)?.value)
}

/// Series and product evaluations of θ₀₁(0, τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEval {
    pub series: SeriesValue,
    pub product: SeriesValue,
}

pub fn theta01_both(tau: UpperHalfPoint, tol: f64) -> Result<ThetaEval> {
    if !(tol > 0.0) {
        return Err(Error::BadTolerance);
    }
    let t = tau.value();
    let h = (PI * I * t).exp();
    // Σ_n (−1)^n h^{n²} = 1 + 2Σ_{n≥1} (−1)^n h^{n²}
    let mut s = Complex64::new(0.0, 0.0);
    let mut n = 1u64;
    let tail;
    loop {
        let term = (PI * I * t * (n * n) as f64).exp();
        let signed = if n % 2 == 0 { term } else { -term };
        s += signed;
        let next = (-(PI * t.im * ((n + 1) * (n + 1)) as f64)).exp();
        if next < tol * 1e-2 || n > 1_000_000 {
            tail = 2.0 * next / (1.0 - (-(PI * t.im)).exp()).max(1e-300);
            break;
        }
        n += 1;
    }
    let series = SeriesValue { value: 1.0 + 2.0 * s, terms: n as usize, tail_bound: tail };

    // ∏(1 − h^{2m})(1 − h^{2m−1})²
    let one = Complex64::new(1.0, 0.0);
    let mut p = one;
    let mut m = 1usize;
    let ah = h.norm();
    loop {
        let odd = h.powu((2 * m - 1) as u32);
        let even = odd * h;
        p *= (one - even) * (one - odd) * (one - odd);
        if even.norm() * ah < tol * 1e-2 || m > 1_000_000 {
            break;
        }
        m += 1;
    }
    let rest = ah.powi(2 * m as i32 + 1);
    let log_tail = 3.0 * rest / ((1.0 - ah) * (1.0 - rest)).max(1e-300);
    let product = SeriesValue { value: p, terms: m, tail_bound: p.norm() * (log_tail.exp() - 1.0) };
    Ok(ThetaEval { series, product })
}

/// θ₀₁(0, τ) = Σ_n exp(πin²τ + πin), cross-checked against its product form.
pub fn theta01(tau: UpperHalfPoint, tol: f64) -> Result<Complex64> {
    let ev = theta01_both(tau, tol)?;
    let gap = (ev.series.value - ev.product.value).norm();
    if gap > 10.0 * tol.max(4.0 * f64::EPSILON * ev.product.terms as f64) {
        return Err(Error::InternalInconsistency(format!(
            "theta series/product disagree by {gap:e}"
        )));
    }
    Ok(ev.series.value)
}

/// Logarithm with argument in (−π, π]; a negative zero imaginary part is
/// treated as +0 so that log(−1) = iπ.
pub fn principal_ln(z: Complex64) -> Complex64 {
    let w = if z.im == 0.0 { Complex64::new(z.re, 0.0) } else { z };
    w.ln()
}

/// Integer I with log η(γτ) = log η(τ) + ¼ log(−(a+bτ)²) + (πi/12)·I,
/// all logarithms principal.
pub fn eta_transform_defect(gamma: ModularMatrix, tau: UpperHalfPoint) -> Result<i64> {
    if gamma.det() != 1 {
        return Err(Error::NotUnimodular);
    }
    let tol = 1e-15;
    let gt = gamma.act(tau)?;
    let lhs = dedekind_eta(gt, tol)?.ln();
    let base = dedekind_eta(tau, tol)?.ln();
    let j = gamma.automorphy(tau);
    let quarter = 0.25 * principal_ln(-(j * j));
    let rest = lhs - base - quarter;
    let x = rest / (I * PI / 12.0);
    let n = x.re.round();
    let resid = (x - n).norm();
    if resid > 1e-6 {
        return Err(Error::TransformLawViolation(resid));
    }
    Ok(n as i64)
}
