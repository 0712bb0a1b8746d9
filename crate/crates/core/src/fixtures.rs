//! Fixtures compiled into the binary, with content hashes for provenance.

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::gluing::ManifoldFile;
use crate::holonomy::HolonomyRep;
use crate::torsion::CwFixture;

pub const FIGURE8_MANIFOLD: &str = include_str!("../fixtures/figure8.manifold.json");
pub const SINGLE_TET_MANIFOLD: &str = include_str!("../fixtures/single_tetrahedron.manifold.json");
/// Lift with ε_m = +1, ε_l = −1.
pub const FIGURE8_REP: &str = include_str!("../fixtures/figure8.rep.json");
/// Lift with ε_m = ε_l = −1; acyclic for odd symmetric powers.
pub const FIGURE8_SPIN_REP: &str = include_str!("../fixtures/figure8_spin.rep.json");
/// Holonomy of the (5,1) filling, lifted so that m⁵l ↦ +I.
pub const FIGURE8_5_1_REP: &str = include_str!("../fixtures/figure8_5_1.rep.json");
/// CW structure of the (5,1) filling with completion (−1,0).
pub const FIGURE8_5_1_CW: &str = include_str!("../fixtures/figure8_5_1.cw.json");

pub const FILLING_5_1: (i64, i64) = (5, 1);
pub const COMPLETION_5_1: (i64, i64) = (-1, 0);

pub fn sha256_hex(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

pub fn figure8_manifold() -> Result<ManifoldFile> {
    ManifoldFile::from_json(FIGURE8_MANIFOLD)
}

pub fn figure8_rep() -> Result<HolonomyRep> {
    HolonomyRep::from_json(FIGURE8_REP)
}

pub fn figure8_spin_rep() -> Result<HolonomyRep> {
    HolonomyRep::from_json(FIGURE8_SPIN_REP)
}

pub fn figure8_5_1_rep() -> Result<HolonomyRep> {
    HolonomyRep::from_json(FIGURE8_5_1_REP)
}

pub fn figure8_5_1_cw() -> Result<CwFixture> {
    CwFixture::from_json(FIGURE8_5_1_CW)
}
