//! Synchronous request → report functions; the HTTP layer only moves JSON.

use m3v_api::*;
use m3v_core::gluing::{self, DehnCoefficients, Filling, ManifoldFile, ShapeSolution};
use m3v_core::holonomy::{self, HolonomyRep, RepFile};
use m3v_core::spectrum;
use m3v_core::torsion::{self, CuspCycle};
use m3v_core::verify::{self, Parity, Provenance, Settings, SurgeryInputs};
use m3v_core::{fixtures, Error};
use serde::Serialize;

type Res<T> = Result<T, ApiError>;

const DEFAULT_SWEEP: [(i64, i64); 3] = [(5, 4), (9, 4), (13, 4)];
const DEFAULT_BASIS: (i64, i64) = (1, 2);

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError { code: "bad-request".into(), message: message.into() }
}

/// Run `f` on a pool of at most `threads` workers, or on the global pool.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Res<T> + Send) -> Res<T> {
    match threads {
        None => f(),
        Some(0) => Err(bad_request("threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ApiError { code: "internal".into(), message: e.to_string() })?
            .install(f),
    }
}

fn settings(t: &Tuning) -> Res<Settings> {
    let mut s = Settings::default();
    if let Some(l) = t.max_wordlen {
        if l == 0 {
            return Err(bad_request("max_wordlen must be positive"));
        }
        s.max_wordlen = l;
    }
    if let Some(m) = t.m_max {
        s.m_max = m;
    }
    if let Some(d) = t.dedup_tol {
        if !(d > 0.0) {
            return Err(Error::BadTolerance.into());
        }
        s.dedup_tol = d;
    }
    Ok(s)
}

fn solution(req: &SolveRequest) -> Res<(DehnCoefficients, ShapeSolution)> {
    let mf = &req.manifold;
    mf.validate()?;
    let tri = mf.triangulation()?;
    let coeffs = match &req.fillings {
        Some(f) => DehnCoefficients { pairs: f.clone() },
        None => DehnCoefficients::complete(tri.n_cusps()),
    };
    let s = Settings::default();
    let tol = req.solver_tol.unwrap_or(s.solver_tol);
    let sol = gluing::solve_filling(&tri, &coeffs, &mf.shapes(), tol, req.max_iter.unwrap_or(s.max_iter))?;
    Ok((coeffs, sol))
}

pub fn solve(req: SolveRequest) -> Res<SolveResponse> {
    let (_, solution) = solution(&req)?;
    let volume = gluing::volume(&solution)?;
    Ok(SolveResponse { solution, volume })
}

pub fn volume(req: SolveRequest) -> Res<VolumeResponse> {
    let (coeffs, sol) = solution(&req)?;
    let volume = gluing::volume(&sol)?;
    let all_filled = !coeffs.pairs.is_empty() && coeffs.pairs.iter().all(|f| matches!(f, Filling::Coeffs(..)));
    let core_lengths = if all_filled {
        let mut rs = Vec::new();
        for f in &coeffs.pairs {
            if let Filling::Coeffs(p, q) = *f {
                rs.push(gluing::completion(p, q)?);
            }
        }
        gluing::core_geodesic_length(&sol, &coeffs, &rs)?
    } else {
        vec![]
    };
    let ledger = (!sol.is_complete && all_filled).then(|| verify::VolumeLedger::new(volume, &core_lengths));
    Ok(VolumeResponse { volume, is_complete: sol.is_complete, fillings: coeffs.pairs, core_lengths, ledger })
}

pub fn spectrum(req: SpectrumRequest) -> Res<SpectrumResponse> {
    let rep = HolonomyRep::from_file(&req.rep)?;
    let s = settings(&req.tuning)?;
    let table = with_threads(req.tuning.threads, || Ok(spectrum::enumerate(&rep, s.max_wordlen, s.dedup_tol)?))?;
    Ok(SpectrumResponse {
        cutoff_wordlen: table.cutoff_wordlen,
        dedup_tol: table.dedup_tol,
        lifted: table.lifted,
        n_classes: table.classes.len(),
        systole: table.min_length(),
        tail: table.tail,
        classes: table.lines(),
        stats: table.stats,
    })
}

pub fn zograf(req: ZografRequest) -> Res<ZografResponse> {
    let rep = match (&req.rep, req.parity) {
        (Some(r), _) => HolonomyRep::from_file(r)?,
        (None, Parity::Even) => fixtures::figure8_rep()?,
        (None, Parity::Odd) => fixtures::figure8_spin_rep()?,
    };
    let s = settings(&req.tuning)?;
    let table = with_threads(req.tuning.threads, || Ok(spectrum::enumerate(&rep, s.max_wordlen, s.dedup_tol)?))?;
    let product = match req.parity {
        Parity::Even => spectrum::zograf_f(&table, req.n, s.m_max)?,
        Parity::Odd => spectrum::zograf_g(&table, req.n, s.m_max)?,
    };
    Ok(ZografResponse {
        n: req.n,
        parity: req.parity,
        modulus: product.value.norm(),
        rel_bound: product.rel_bound(),
        product,
        cutoff_wordlen: s.max_wordlen,
    })
}

pub fn torsion(req: TorsionRequest) -> Res<TorsionResponse> {
    let rep = HolonomyRep::from_file(&req.rep)?;
    let cx = match &req.cw {
        Some(cw) => torsion::cw_complex(cw, &rep, req.k)?,
        None => {
            let cycle = CuspCycle::parse(&req.basis)?;
            torsion::cusped_complex(&rep, req.k, &vec![cycle; rep.pres.peripheral.len()])?
        }
    };
    let betti = cx.betti();
    Ok(TorsionResponse {
        k: req.k,
        basis: req.basis,
        dims: cx.dims.clone(),
        acyclic: betti.iter().all(|&b| b == 0),
        betti,
        torsion: torsion::milnor_torsion(&cx)?,
    })
}

/// Canonical JSON of an input, hashed into the report's provenance.
fn canonical<T: Serialize>(x: &T) -> String {
    serde_json::to_string(x).expect("serializable")
}

struct Closed {
    filled: HolonomyRep,
    cw: torsion::CwFixture,
    pq: (i64, i64),
    rs: (i64, i64),
}

/// The filled holonomy and CW structure: supplied, bundled (5,1), or
/// derived from the cusped holonomy at the solved filling.
fn closed_inputs(req: &VerifyRequest, mf: &ManifoldFile, rep: &HolonomyRep, s: &Settings, prov: &mut Provenance) -> Res<Closed> {
    let pq = req.filling.unwrap_or(fixtures::FILLING_5_1);
    let bundled = pq == fixtures::FILLING_5_1 && req.manifold.is_none() && req.rep.is_none();
    let rs = if pq == fixtures::FILLING_5_1 { fixtures::COMPLETION_5_1 } else { gluing::completion(pq.0, pq.1)? };
    let filled = match &req.filled_rep {
        Some(f) => HolonomyRep::from_file(f)?,
        None if bundled => fixtures::figure8_5_1_rep()?,
        None => {
            let (sol, _, _) = verify::filled_ledger(mf, pq, rs, s)?;
            holonomy::filled_rep(rep, sol.u[0], pq)?
        }
    };
    let cw = match &req.cw {
        Some(c) => c.clone(),
        None if bundled => fixtures::figure8_5_1_cw()?,
        None => torsion::closed_filling_fixture(rep, pq, rs)?,
    };
    *prov = std::mem::take(prov).with_fixture("filled_rep", &canonical(&filled.to_file())).with_fixture("cw", &canonical(&cw));
    prov.extra.insert("filling".into(), serde_json::json!([pq.0, pq.1]));
    prov.extra.insert("completion".into(), serde_json::json!([rs.0, rs.1]));
    Ok(Closed { filled, cw, pq, rs })
}

fn load_rep(given: &Option<RepFile>, fallback: fn() -> m3v_core::Result<HolonomyRep>) -> Res<HolonomyRep> {
    Ok(match given {
        Some(r) => HolonomyRep::from_file(r)?,
        None => fallback()?,
    })
}

pub fn verify(req: VerifyRequest) -> Res<VerifyResponse> {
    let s = settings(&req.tuning)?;
    with_threads(req.tuning.threads, || run_verify(&req, &s))
}

fn run_verify(req: &VerifyRequest, s: &Settings) -> Res<VerifyResponse> {
    let mf = match &req.manifold {
        Some(m) => {
            m.validate()?;
            m.clone()
        }
        None => fixtures::figure8_manifold()?,
    };
    let rep_default = if req.check == Check::Thm51 { fixtures::figure8_spin_rep } else { fixtures::figure8_rep };
    let rep = load_rep(&req.rep, rep_default)?;
    let mut prov = Provenance::default().with_fixture("manifold", &canonical(&mf)).with_fixture("rep", &canonical(&rep.to_file()));
    let report = match req.check {
        Check::Thm11 => verify::check_cusped_even(&mf, &rep, req.n.unwrap_or(3), s, None, prov)?,
        Check::Thm51 => verify::check_cusped_odd(&mf, &rep, req.n.unwrap_or(2), s, None, prov)?,
        Check::Closed => {
            let parity = req.parity.unwrap_or(Parity::Even);
            let n = req.n.unwrap_or(parity.min_n());
            let c = closed_inputs(req, &mf, &rep, s, &mut prov)?;
            let (_, _, ledger) = verify::filled_ledger(&mf, c.pq, c.rs, s)?;
            let table = spectrum::enumerate(&c.filled, s.max_wordlen, s.dedup_tol)?;
            verify::check_closed(&c.cw, &c.filled, ledger.vol_filled, &table, n, parity, s, prov)?
        }
        Check::Surgery => {
            let c = closed_inputs(req, &mf, &rep, s, &mut prov)?;
            let inp = SurgeryInputs { manifold: &mf, rep: &rep, filled_rep: &c.filled, cw: &c.cw, pq: c.pq, rs: c.rs };
            verify::surgery_chain(&inp, req.n.unwrap_or(3), s, prov)?
        }
        Check::Sweep => {
            let fillings = req.fillings.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
            if fillings.is_empty() {
                return Err(bad_request("sweep needs at least one filling"));
            }
            let sw = verify::convergence_sweep(&mf, &rep, &fillings, req.n.unwrap_or(3), req.spin_check.unwrap_or(true), s, prov)?;
            return Ok(VerifyResponse::Sweep(sw));
        }
        Check::Basis => verify::basis_independence(&mf, &rep, req.n.unwrap_or(3), req.filling.unwrap_or(DEFAULT_BASIS), s, prov)?,
    };
    Ok(VerifyResponse::Report(report))
}
