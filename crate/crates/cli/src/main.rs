//! `m3v`: each subcommand builds one request, sends it to the service and
//! prints the JSON report. Without `--server` an in-process service is used.
//!
//! Exit codes: 0 within budget, 2 budget exceeded, 1 error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use m3v_api::*;
use m3v_client::{Client, ClientError};
use m3v_core::gluing::{Filling, ManifoldFile, COMPLETE};
use m3v_core::holonomy::RepFile;
use m3v_core::torsion::CwFixture;
use m3v_core::verify::Parity;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "m3v", version, about = "Zograf products, Ruelle zeta values and twisted torsion of hyperbolic 3-manifolds")]
struct Cli {
    /// Service root URL; an in-process service is started when absent.
    #[arg(long, global = true, env = "M3V_SERVER")]
    server: Option<String>,
    /// Cap on enumeration worker threads.
    #[arg(long, global = true, env = "M3V_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the gluing equations (complete structure unless fillings are given).
    Solve(SolveArgs),
    /// Volume, and for filled cusps the core geodesics and volume ledger.
    Volume(SolveArgs),
    /// Enumerate primitive closed geodesics of a holonomy representation.
    Spectrum {
        rep: PathBuf,
        #[command(flatten)]
        tuning: TuningArgs,
        /// Also write the table as JSON lines {word, l, theta, primitive}.
        #[arg(long)]
        jsonl: Option<PathBuf>,
    },
    /// Truncated F_n (even) or G_n (odd) product.
    Zograf {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_parity)]
        parity: Parity,
        /// Holonomy to enumerate; defaults to the bundled figure-eight lift.
        #[arg(long)]
        rep: Option<PathBuf>,
        #[command(flatten)]
        tuning: TuningArgs,
    },
    /// Milnor torsion of the Sym^k-twisted chain complex.
    Torsion {
        rep: PathBuf,
        #[arg(long)]
        k: usize,
        /// Peripheral cycle per cusp: m, l or pl:P,Q.
        #[arg(long, default_value = "m")]
        basis: String,
        /// CW structure of a closed manifold (replaces the cusped complex).
        #[arg(long)]
        cw: Option<PathBuf>,
    },
    /// Assemble both sides of an equality and report the gap against its budget.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SolveArgs {
    manifold: PathBuf,
    /// One per cusp, in order: P,Q or inf.
    #[arg(long = "filling", value_parser = parse_filling)]
    fillings: Vec<Filling>,
    #[arg(long)]
    solver_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct TuningArgs {
    #[arg(long)]
    max_wordlen: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    dedup_tol: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// thm1.1, thm5.1, closed, surgery, sweep or basis.
    #[arg(value_parser = parse_check)]
    check: Check,
    #[arg(long)]
    n: Option<usize>,
    /// For `closed`; defaults to even.
    #[arg(long, value_parser = parse_parity)]
    parity: Option<Parity>,
    #[arg(long)]
    manifold: Option<PathBuf>,
    #[arg(long)]
    rep: Option<PathBuf>,
    #[arg(long)]
    filled_rep: Option<PathBuf>,
    #[arg(long)]
    cw: Option<PathBuf>,
    /// Filling for closed/surgery, or the homology basis curve for `basis`.
    #[arg(long, value_parser = parse_pair)]
    filling: Option<(i64, i64)>,
    /// Sweep sequence, e.g. --fillings 5,4 --fillings 9,4.
    #[arg(long, value_parser = parse_pair)]
    fillings: Vec<(i64, i64)>,
    /// Skip the spin-compatibility check on sweep fillings.
    #[arg(long)]
    no_spin_check: bool,
    #[command(flatten)]
    tuning: TuningArgs,
}

fn parse_pair(s: &str) -> Result<(i64, i64), String> {
    let (p, q) = s.split_once(',').ok_or_else(|| format!("expected P,Q, got {s:?}"))?;
    let p = p.trim().parse().map_err(|e| format!("{p:?}: {e}"))?;
    let q = q.trim().parse().map_err(|e| format!("{q:?}: {e}"))?;
    Ok((p, q))
}

fn parse_filling(s: &str) -> Result<Filling, String> {
    if s == "inf" {
        return Ok(COMPLETE);
    }
    parse_pair(s).map(|(p, q)| Filling::Coeffs(p, q))
}

fn parse_parity(s: &str) -> Result<Parity, String> {
    match s {
        "even" => Ok(Parity::Even),
        "odd" => Ok(Parity::Odd),
        _ => Err(format!("expected even or odd, got {s:?}")),
    }
}

fn parse_check(s: &str) -> Result<Check, String> {
    Check::parse(s).ok_or_else(|| {
        let names: Vec<_> = Check::ALL.iter().map(|c| c.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn manifold(path: &Path) -> anyhow::Result<ManifoldFile> {
    Ok(ManifoldFile::from_json(&read(path)?)?)
}

fn rep(path: &Path) -> anyhow::Result<RepFile> {
    Ok(RepFile::from_json(&read(path)?)?)
}

fn cw(path: &Path) -> anyhow::Result<CwFixture> {
    Ok(CwFixture::from_json(&read(path)?)?)
}

fn opt<T>(path: &Option<PathBuf>, load: fn(&Path) -> anyhow::Result<T>) -> anyhow::Result<Option<T>> {
    path.as_deref().map(load).transpose()
}

impl TuningArgs {
    fn wire(&self, threads: Option<usize>) -> Tuning {
        Tuning { max_wordlen: self.max_wordlen, m_max: self.m_max, dedup_tol: self.dedup_tol, threads }
    }
}

impl SolveArgs {
    fn wire(&self) -> anyhow::Result<SolveRequest> {
        Ok(SolveRequest {
            manifold: manifold(&self.manifold)?,
            fillings: (!self.fillings.is_empty()).then(|| self.fillings.clone()),
            solver_tol: self.solver_tol,
            max_iter: self.max_iter,
        })
    }
}

fn print<T: Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

async fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let client = match &cli.server {
        Some(url) => Client::new(url.clone()),
        None => {
            let addr = m3v_server::spawn("127.0.0.1:0").await.context("starting in-process service")?;
            Client::new(format!("http://{addr}"))
        }
    };
    let threads = cli.threads;
    match cli.cmd {
        Cmd::Solve(a) => print(&client.solve(&a.wire()?).await?)?,
        Cmd::Volume(a) => print(&client.volume(&a.wire()?).await?)?,
        Cmd::Spectrum { rep: path, tuning, jsonl } => {
            let r = client.spectrum(&SpectrumRequest { rep: rep(&path)?, tuning: tuning.wire(threads) }).await?;
            if let Some(out) = jsonl {
                let mut text = String::new();
                for line in &r.classes {
                    text.push_str(&serde_json::to_string(line)?);
                    text.push('\n');
                }
                std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            }
            print(&r)?;
        }
        Cmd::Zograf { n, parity, rep: path, tuning } => {
            let req = ZografRequest { n, parity, rep: opt(&path, rep)?, tuning: tuning.wire(threads) };
            print(&client.zograf(&req).await?)?;
        }
        Cmd::Torsion { rep: path, k, basis, cw: cw_path } => {
            let req = TorsionRequest { rep: rep(&path)?, k, basis, cw: opt(&cw_path, cw)? };
            print(&client.torsion(&req).await?)?;
        }
        Cmd::Verify(a) => {
            let mut req = VerifyRequest::new(a.check);
            req.n = a.n;
            req.parity = a.parity;
            req.tuning = a.tuning.wire(threads);
            req.manifold = opt(&a.manifold, manifold)?;
            req.rep = opt(&a.rep, rep)?;
            req.filled_rep = opt(&a.filled_rep, rep)?;
            req.cw = opt(&a.cw, cw)?;
            req.filling = a.filling;
            req.fillings = (!a.fillings.is_empty()).then_some(a.fillings);
            req.spin_check = a.no_spin_check.then_some(false);
            let r = client.verify(&req).await?;
            print(&r)?;
            if !r.pass() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Coded error for the JSON error body.
fn api_error(e: &anyhow::Error) -> ApiError {
    if let Some(c) = e.downcast_ref::<ClientError>() {
        if let ClientError::Api(a) = c {
            return a.clone();
        }
        return ApiError { code: c.code().into(), message: c.to_string() };
    }
    if let Some(c) = e.downcast_ref::<m3v_core::Error>() {
        return ApiError::from(c.clone());
    }
    ApiError { code: "io".into(), message: format!("{e:#}") }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli).await {
        Ok(code) => code,
        Err(e) => {
            let error = api_error(&e);
            eprintln!("m3v: {error}");
            if let Ok(s) = serde_json::to_string(&ErrorBody { error }) {
                println!("{s}");
            }
            ExitCode::from(1)
        }
    }
}
