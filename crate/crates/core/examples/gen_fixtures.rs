//! Regenerates the derived (5,1) filling fixtures from the figure-eight data.
//! Usage: cargo run -p m3v-core --example gen_fixtures -- <fixtures dir>

use m3v_core::{fixtures, gluing, holonomy, torsion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "crates/core/fixtures".into());
    let mf = fixtures::figure8_manifold()?;
    let tri = mf.triangulation()?;
    let (p, q) = fixtures::FILLING_5_1;
    let sol = gluing::solve_filling(&tri, &gluing::DehnCoefficients::single(p, q), &mf.shapes(), 1e-14, 100)?;
    let rep = fixtures::figure8_rep()?;
    let filled = holonomy::filled_rep(&rep, sol.u[0], (p, q))?;
    let cw = torsion::closed_filling_fixture(&rep, (p, q), fixtures::COMPLETION_5_1)?;
    std::fs::write(format!("{dir}/figure8_5_1.rep.json"), serde_json::to_string_pretty(&filled.to_file())? + "\n")?;
    std::fs::write(format!("{dir}/figure8_5_1.cw.json"), serde_json::to_string_pretty(&cw)? + "\n")?;
    eprintln!("u = {}", sol.u[0]);
    Ok(())
}
