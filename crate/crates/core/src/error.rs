use thiserror::Error;

/// Every failure the toolkit reports. The `Display` form starts with the
/// stable error code; `code()` returns it alone.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("on-branch-cut")]
    OnBranchCut,
    #[error("bad-tolerance")]
    BadTolerance,
    #[error("degenerate-shape")]
    DegenerateShape,
    #[error("not-upper-half")]
    NotUpperHalf,
    #[error("internal-inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("transform-law-violation: residual {0:e}")]
    TransformLawViolation(f64),
    #[error("not-unimodular")]
    NotUnimodular,
    #[error("solver-failed: {0}")]
    SolverFailed(String),
    #[error("degenerate-parametrization")]
    DegenerateParametrization,
    #[error("bad-coefficients")]
    BadCoefficients,
    #[error("bad-completion")]
    BadCompletion,
    #[error("pole")]
    Pole,
    #[error("bad-word: {0}")]
    BadWord(String),
    #[error("not-loxodromic")]
    NotLoxodromic,
    #[error("not-parabolic")]
    NotParabolic,
    #[error("outside-convergence")]
    OutsideConvergence,
    #[error("below-convergence-threshold")]
    BelowConvergenceThreshold,
    #[error("lift-required")]
    LiftRequired,
    #[error("not-a-complex: |dd| = {0:e}")]
    NotAComplex(f64),
    #[error("basis-required: degree {0}")]
    BasisRequired(usize),
    #[error("bad-homology-basis: degree {0}")]
    BadHomologyBasis(usize),
    #[error("nonparabolic-peripheral")]
    NonparabolicPeripheral,
    #[error("basis-degenerate")]
    BasisDegenerate,
    #[error("bad-length")]
    BadLength,
    #[error("below-threshold")]
    BelowThreshold,
    #[error("homology-nonzero")]
    HomologyNonzero,
    #[error("not-acyclic")]
    NotAcyclic,
    #[error("bad-fixture: {0}")]
    BadFixture(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::OnBranchCut => "on-branch-cut",
            Error::BadTolerance => "bad-tolerance",
            Error::DegenerateShape => "degenerate-shape",
            Error::NotUpperHalf => "not-upper-half",
            Error::InternalInconsistency(_) => "internal-inconsistency",
            Error::TransformLawViolation(_) => "transform-law-violation",
            Error::NotUnimodular => "not-unimodular",
            Error::SolverFailed(_) => "solver-failed",
            Error::DegenerateParametrization => "degenerate-parametrization",
            Error::BadCoefficients => "bad-coefficients",
            Error::BadCompletion => "bad-completion",
            Error::Pole => "pole",
            Error::BadWord(_) => "bad-word",
            Error::NotLoxodromic => "not-loxodromic",
            Error::NotParabolic => "not-parabolic",
            Error::OutsideConvergence => "outside-convergence",
            Error::BelowConvergenceThreshold => "below-convergence-threshold",
            Error::LiftRequired => "lift-required",
            Error::NotAComplex(_) => "not-a-complex",
            Error::BasisRequired(_) => "basis-required",
            Error::BadHomologyBasis(_) => "bad-homology-basis",
            Error::NonparabolicPeripheral => "nonparabolic-peripheral",
            Error::BasisDegenerate => "basis-degenerate",
            Error::BadLength => "bad-length",
            Error::BelowThreshold => "below-threshold",
            Error::HomologyNonzero => "homology-nonzero",
            Error::NotAcyclic => "not-acyclic",
            Error::BadFixture(_) => "bad-fixture",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
