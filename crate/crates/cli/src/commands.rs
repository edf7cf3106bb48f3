//! One function per subcommand. Each reads resolved [`Settings`] and writes
//! its CSV and JSON files into the output directory.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dualmix_core::equilibration::{discrete_poisson, reconstruct};
use dualmix_core::experiments::{
    convergence_study, spurious_solution_demo, write_convergence_csv, write_nodal_csv, ConvergenceCase,
    ConvergenceConfig, DemoLoad,
};
use dualmix_core::fespace::l2_project_p0;
use dualmix_core::infsup::{
    infsup_decay_rate, infsup_spectrum, infsup_table, p1p0_infsup, representation, split, write_alpha_csv,
    write_infsup_csv, EigCount, DEFAULT_THRESHOLD,
};
use dualmix_core::mesh::export_json;
use dualmix_core::solvers::DualMixedProblem;
use dualmix_core::{Mesh, MeshFamily, Source};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{Command, Settings};

pub const LOADS: &str = "smooth, eigen, one, dirac, dirac-center, dirac-off-center or random";

/// Right-hand side named on the command line. `random` draws one value per
/// triangle in `[-1, 1)` from the seeded generator.
fn source(name: &str, mesh: &Mesh, seed: u64) -> Result<Source> {
    Ok(match name {
        "smooth" => Source::analytic(|p| p[0] - 3.0 * p[1] + p[0].sin()),
        "eigen" => Source::analytic(|p| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin()),
        "one" => Source::analytic(|_| 1.0),
        "dirac" | "dirac-center" => Source::DiracApprox([0.5, 0.5]),
        "dirac-off-center" => Source::DiracApprox([1.0 / 3.0, 1.0 / 5.0]),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Source::P0((0..mesh.n_triangles()).map(|_| rng.random_range(-1.0..1.0)).collect())
        }
        other => bail!("unknown load '{other}' (expected {LOADS})"),
    })
}

fn create(s: &Settings, name: &str) -> Result<BufWriter<File>> {
    let path = s.output(name);
    let f = File::create(&path).with_context(|| format!("cannot create '{}'", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(s: &Settings, name: &str, value: &T) -> Result<()> {
    let mut w = create(s, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn meshes(s: &Settings) -> Result<Vec<(usize, Mesh)>> {
    s.levels.iter().map(|&n| level(s, n).map(|m| (n, m))).collect()
}

fn level(s: &Settings, n: usize) -> Result<Mesh> {
    if let MeshFamily::Files(pattern) = &s.family {
        let path = pattern.replace("{n}", &n.to_string());
        if !Path::new(&path).is_file() {
            bail!("mesh file '{path}' not found (check the file: pattern, where {{n}} stands for the level)");
        }
    }
    s.family.level(n).with_context(|| format!("cannot build mesh level {n}"))
}

pub fn run(s: &Settings) -> Result<()> {
    fs::create_dir_all(&s.out).with_context(|| format!("cannot create output directory '{}'", s.out.display()))?;
    match s.command {
        Command::Mesh => mesh(s),
        Command::Solve => solve(s),
        Command::Infsup => infsup(s),
        Command::Split => split_cmd(s),
        Command::Alpha => alpha(s),
        Command::P1p0 => p1p0(s),
        Command::Equilibrate => equilibrate(s),
        Command::Convergence => convergence(s),
        Command::Demo => demo(s),
    }
}

fn mesh(s: &Settings) -> Result<()> {
    let mut w = create(s, "mesh.csv")?;
    writeln!(w, "level,vertices,triangles,edges,h")?;
    for (n, m) in meshes(s)? {
        export_json(&m, &s.output(&format!("mesh_{n}.json")))?;
        writeln!(w, "{n},{},{},{},{:.12e}", m.n_vertices(), m.n_triangles(), m.n_edges(), m.h_max())?;
    }
    w.flush()?;
    Ok(())
}

fn solve(s: &Settings) -> Result<()> {
    let load = s.load.as_deref().unwrap_or("smooth");
    let mut summary = Vec::new();
    for (n, m) in meshes(s)? {
        let problem = DualMixedProblem::new(&m, s.element)?;
        let sol = problem.solve(&source(load, &m, s.seed)?)?;
        let mut w = create(s, &format!("solution_{n}.csv"))?;
        writeln!(w, "x,y,u_h")?;
        for (p, u) in m.vertices().iter().zip(&sol.nodal) {
            writeln!(w, "{:.12e},{:.12e},{:.12e}", p[0], p[1], u)?;
        }
        w.flush()?;
        let mut w = create(s, &format!("flux_{n}.csv"))?;
        writeln!(w, "edge,coefficient")?;
        for (e, c) in sol.sigma.iter().enumerate() {
            writeln!(w, "{e},{c:.15e}")?;
        }
        w.flush()?;
        summary.push(json!({
            "level": n,
            "flux_dofs": sol.sigma.len(),
            "potential_dofs": sol.u.len(),
            "residual": sol.residual,
        }));
    }
    write_json(s, "solve.json", &json!({ "element": s.element.to_string(), "load": load, "levels": summary }))
}

fn infsup(s: &Settings) -> Result<()> {
    let rows = infsup_table(&s.family, &s.levels, s.element)?;
    let mut w = create(s, "infsup.csv")?;
    write_infsup_csv(&rows, &mut w)?;
    w.flush()?;
    let slope = if s.levels.len() >= 3 {
        let ms: Vec<Mesh> = meshes(s)?.into_iter().map(|(_, m)| m).collect();
        Some(infsup_decay_rate(&ms, s.element)?.slope)
    } else {
        None
    };
    write_json(s, "infsup.json", &json!({ "element": s.element.to_string(), "rows": rows, "slope": slope }))
}

fn split_cmd(s: &Settings) -> Result<()> {
    let load = s.load.as_deref().unwrap_or("smooth");
    let threshold = s.threshold.unwrap_or(DEFAULT_THRESHOLD);
    for (n, m) in meshes(s)? {
        let spectrum = infsup_spectrum(&m, s.element, EigCount::All)?;
        let sp = split(&spectrum, threshold)?;
        let f = DualMixedProblem::new(&m, s.element)?.load(&source(load, &m, s.seed)?)?;
        let parts = sp.solve(&f);
        let mut w = create(s, &format!("split_{n}.csv"))?;
        writeln!(w, "dof,u1,u2")?;
        for (i, (a, b)) in parts.u1.iter().zip(&parts.u2).enumerate() {
            writeln!(w, "{i},{a:.12e},{b:.12e}")?;
        }
        w.flush()?;
        write_json(
            s,
            &format!("split_{n}.json"),
            &json!({
                "level": n,
                "threshold": threshold,
                "n": spectrum.len(),
                "n_tilde": sp.n_tilde,
                "cross_coupling": sp.cross_coupling(),
            }),
        )?;
    }
    Ok(())
}

fn alpha(s: &Settings) -> Result<()> {
    let load = s.load.as_deref().unwrap_or("dirac");
    for (n, m) in meshes(s)? {
        let spectrum = infsup_spectrum(&m, s.element, EigCount::All)?;
        let f = DualMixedProblem::new(&m, s.element)?.load(&source(load, &m, s.seed)?)?;
        let rep = representation(&spectrum, &f)?;
        let mut w = create(s, &format!("alpha_{n}.csv"))?;
        write_alpha_csv(&spectrum, &rep.alpha, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn p1p0(s: &Settings) -> Result<()> {
    let mut w = create(s, "p1p0.csv")?;
    writeln!(w, "level,h,nu_min,zeta")?;
    let mut h = Vec::new();
    let mut nu = Vec::new();
    for (n, m) in meshes(s)? {
        let r = p1p0_infsup(&m)?;
        writeln!(w, "{n},{:.12e},{:.12e},{:.12e}", r.h, r.nu_min, r.zeta)?;
        let mut wn = create(s, &format!("w_{n}.csv"))?;
        writeln!(wn, "x,y,w")?;
        for (p, v) in m.vertices().iter().zip(&r.w_nodal) {
            writeln!(wn, "{:.12e},{:.12e},{:.12e}", p[0], p[1], v)?;
        }
        wn.flush()?;
        h.push(r.h);
        nu.push(r.nu_min);
    }
    w.flush()?;
    let slope = if h.len() >= 2 { Some(dualmix_core::infsup::loglog_slope(&h, &nu)?) } else { None };
    write_json(s, "p1p0.json", &json!({ "h": h, "nu_min": nu, "slope": slope }))
}

fn equilibrate(s: &Settings) -> Result<()> {
    let load = s.load.as_deref().unwrap_or("random");
    for (n, m) in meshes(s)? {
        let f = source(load, &m, s.seed)?;
        let g0 = match f.to_p0(&m)? {
            Some(v) => v,
            None => match &f {
                Source::Analytic(func) => l2_project_p0(&m, |p| func(p)),
                _ => return Err(anyhow!("load '{load}' has no piecewise constant projection")),
            },
        };
        let u = discrete_poisson(&m, &g0)?;
        let flux = reconstruct(&m, &u, &g0)?;
        let mut w = create(s, &format!("flux_{n}.csv"))?;
        flux.write_csv(&mut w)?;
        w.flush()?;
        write_json(s, &format!("residuals_{n}.json"), &flux.report(&m, &u)?)?;
    }
    Ok(())
}

fn convergence(s: &Settings) -> Result<()> {
    let case: ConvergenceCase = s.case.as_deref().unwrap_or("smooth-square").parse()?;
    let cfg = ConvergenceConfig { case, family: s.family.clone(), levels: s.levels.clone(), element: s.element };
    let study = convergence_study(&cfg)?;
    let mut w = create(s, "convergence.csv")?;
    write_convergence_csv(&study.rows, &mut w)?;
    w.flush()?;
    write_json(s, "convergence.json", &study)
}

fn demo(s: &Settings) -> Result<()> {
    let load: DemoLoad = s.load.as_deref().unwrap_or("dirac").parse()?;
    let levels = spurious_solution_demo(&s.family, &s.levels, load, s.element)?;
    let mut w = create(s, "demo.csv")?;
    writeln!(w, "n,h,oscillation_index")?;
    for l in &levels {
        writeln!(w, "{},{:.12e},{:.12e}", l.n, l.h, l.oscillation_index)?;
        let m = level(s, l.n)?;
        let mut wn = create(s, &format!("nodal_{}.csv", l.n))?;
        write_nodal_csv(&m, l, &mut wn)?;
        wn.flush()?;
    }
    w.flush()?;
    Ok(())
}
