//! Request and response bodies for the HTTP/JSON service. Each operation is
//! a POST of one request object answered by one report object; failures come
//! back as [`ApiError`] with the toolkit's stable error code.

use m3v_core::gluing::{Filling, ManifoldFile, ShapeSolution};
use m3v_core::holonomy::{ComplexLength, RepFile};
use m3v_core::spectrum::{EnumerationStats, TableLine, TailModel, TruncatedProduct};
use m3v_core::torsion::{CwFixture, TorsionValue};
use m3v_core::verify::{EqualityReport, Parity, SweepReport, VolumeLedger};
use serde::{Deserialize, Serialize};

pub const SOLVE: &str = "/v1/solve";
pub const VOLUME: &str = "/v1/volume";
pub const SPECTRUM: &str = "/v1/spectrum";
pub const ZOGRAF: &str = "/v1/zograf";
pub const TORSION: &str = "/v1/torsion";
pub const VERIFY: &str = "/v1/verify";
pub const HEALTH: &str = "/v1/health";

/// Enumeration and product knobs; unset fields take the toolkit defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tuning {
    pub max_wordlen: Option<usize>,
    pub m_max: Option<usize>,
    pub dedup_tol: Option<f64>,
    /// Cap on worker threads for this request.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub manifold: ManifoldFile,
    /// One entry per cusp; omitted means the complete structure.
    #[serde(default)]
    pub fillings: Option<Vec<Filling>>,
    #[serde(default)]
    pub solver_tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResponse {
    pub solution: ShapeSolution,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeResponse {
    pub volume: f64,
    pub is_complete: bool,
    pub fillings: Vec<Filling>,
    /// Core geodesics of the filled cusps, from the standard completions.
    pub core_lengths: Vec<ComplexLength>,
    /// Present when at least one cusp is filled.
    pub ledger: Option<VolumeLedger>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRequest {
    pub rep: RepFile,
    #[serde(default)]
    pub tuning: Tuning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResponse {
    pub cutoff_wordlen: usize,
    pub dedup_tol: f64,
    pub lifted: bool,
    pub n_classes: usize,
    pub systole: Option<f64>,
    pub tail: TailModel,
    pub stats: EnumerationStats,
    pub classes: Vec<TableLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZografRequest {
    pub n: usize,
    pub parity: Parity,
    /// Defaults to the bundled figure-eight holonomy (even) or its acyclic
    /// spin lift (odd).
    #[serde(default)]
    pub rep: Option<RepFile>,
    #[serde(default)]
    pub tuning: Tuning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZografResponse {
    pub n: usize,
    pub parity: Parity,
    pub modulus: f64,
    pub rel_bound: f64,
    pub product: TruncatedProduct,
    pub cutoff_wordlen: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionRequest {
    pub rep: RepFile,
    pub k: usize,
    /// `m`, `l` or `pl:P,Q`, applied to every cusp.
    #[serde(default = "default_basis")]
    pub basis: String,
    /// A closed CW structure to use instead of the presentation complex.
    #[serde(default)]
    pub cw: Option<CwFixture>,
}

fn default_basis() -> String {
    "m".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionResponse {
    pub k: usize,
    pub basis: String,
    pub dims: Vec<usize>,
    pub betti: Vec<usize>,
    pub acyclic: bool,
    pub torsion: TorsionValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Check {
    #[serde(rename = "thm1.1")]
    Thm11,
    #[serde(rename = "thm5.1")]
    Thm51,
    #[serde(rename = "closed")]
    Closed,
    #[serde(rename = "surgery")]
    Surgery,
    #[serde(rename = "sweep")]
    Sweep,
    #[serde(rename = "basis")]
    Basis,
}

impl Check {
    pub const ALL: [Check; 6] = [Check::Thm11, Check::Thm51, Check::Closed, Check::Surgery, Check::Sweep, Check::Basis];

    pub fn name(self) -> &'static str {
        match self {
            Check::Thm11 => "thm1.1",
            Check::Thm51 => "thm5.1",
            Check::Closed => "closed",
            Check::Surgery => "surgery",
            Check::Sweep => "sweep",
            Check::Basis => "basis",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Inputs default to the bundled figure-eight fixtures and the (5,1) filling.
/// `rep` is the cusped holonomy; for `thm5.1` it must be an acyclic spin lift
/// and defaults to the bundled one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRequest {
    pub check: Check,
    #[serde(default)]
    pub n: Option<usize>,
    /// Only read by `closed`.
    #[serde(default)]
    pub parity: Option<Parity>,
    #[serde(default)]
    pub tuning: Tuning,
    #[serde(default)]
    pub manifold: Option<ManifoldFile>,
    #[serde(default)]
    pub rep: Option<RepFile>,
    #[serde(default)]
    pub filled_rep: Option<RepFile>,
    #[serde(default)]
    pub cw: Option<CwFixture>,
    /// The filling for `closed` and `surgery`, or the new basis for `basis`.
    #[serde(default)]
    pub filling: Option<(i64, i64)>,
    #[serde(default)]
    pub fillings: Option<Vec<(i64, i64)>>,
    /// Sweep only: insist on p ≡ 1, q ≡ 0 (mod 4). Defaults to true.
    #[serde(default)]
    pub spin_check: Option<bool>,
}

impl VerifyRequest {
    pub fn new(check: Check) -> Self {
        VerifyRequest {
            check,
            n: None,
            parity: None,
            tuning: Tuning::default(),
            manifold: None,
            rep: None,
            filled_rep: None,
            cw: None,
            filling: None,
            fillings: None,
            spin_check: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VerifyResponse {
    Sweep(SweepReport),
    Report(EqualityReport),
}

impl VerifyResponse {
    pub fn pass(&self) -> bool {
        match self {
            VerifyResponse::Sweep(s) => s.pass,
            VerifyResponse::Report(r) => r.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.message.starts_with(&self.code) {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.code, self.message)
        }
    }
}

impl std::error::Error for ApiError {}

impl From<m3v_core::Error> for ApiError {
    fn from(e: m3v_core::Error) -> Self {
        ApiError { code: e.code().to_string(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ApiError,
}
