//! Patch-wise flux equilibration and the Darcy (RT0-P0) solve.
//!
//! Given `u_h` in `Q_h` with `(grad u_h, grad v) = (g0, v)` for all `v` and
//! `g0` piecewise constant, the reconstruction returns an RT0 field
//! `sigma_h = grad u_h + sum_z sigma_z` with continuous normal components
//! and `div sigma_h = -g0`. Each `sigma_z` is a discontinuous RT0 field on
//! the patch of vertex `z`, obtained by walking around the patch.
//!
//! Along a patch `T_1, ..., T_n` with connecting edges `E_i = T_i ∩ T_{i+1}`
//! write `p_i` and `q_i` for the outward fluxes of `sigma_z|T_i` across
//! `E_{i-1}` and `E_i`. The divergence and jump conditions become
//! `p_i + q_i = -(g0, phi_z)_{T_i}` and `q_i + p_{i+1} = -|E_i| J_i / 2`,
//! where `J_i` sums the outward normal derivatives of `u_h` from both sides
//! of `E_i`. Interior patches are closed fans and the walk must return to
//! its seed `p_1 = 0`; boundary patches are open chains whose end edges lie
//! on the boundary and stay unconstrained.

use std::io::Write;

use serde::Serialize;

use crate::assembly::{coupling_b, coupling_p1_p0, div_rt0_p0, mass_p0, mass_rt0, stiffness_p1, Source};
use crate::error::{Error, Result};
use crate::fespace::{l2_project_p0, FeSpace, SpaceKind};
use crate::infsup::{inverse_inequality_constant, p1p0_infsup};
use crate::mesh::Mesh;
use crate::solvers::{solve_saddle_with, Cholesky, SaddleMethod, SaddleSystem};
use crate::sparse::{norm_inf, CsrMatrix};

/// Absolute tolerance on patch closure, divergence and jump residuals.
pub const EQUILIBRATION_TOL: f64 = 1e-10;
/// Relative tolerance on the discrete Poisson precondition.
pub const POISSON_TOL: f64 = 1e-9;

/// Triangles around a vertex ordered so that consecutive ones share an edge
/// through the vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub vertex: usize,
    pub triangles: Vec<usize>,
    /// `edges[i]` joins `triangles[i]` and `triangles[i + 1]` (cyclically for
    /// interior patches); an open chain has `n - 1` of them.
    pub edges: Vec<usize>,
    /// Boundary edges through the vertex at the two ends of an open chain.
    pub end_edges: Option<[usize; 2]>,
    pub interior: bool,
}

impl Patch {
    pub fn build(mesh: &Mesh, vertex: usize, vertex_tris: &[usize]) -> Result<Self> {
        // the two edges through `vertex` of each triangle
        let spokes = |t: usize| -> [usize; 2] {
            let tri = mesh.triangles()[t];
            let k = tri.iter().position(|&v| v == vertex).expect("triangle not in patch");
            let e = mesh.tri_edges(t);
            [e[(k + 1) % 3], e[(k + 2) % 3]]
        };
        let other = |e: usize, t: usize| -> Option<usize> {
            match mesh.edge_triangles(e) {
                [Some(a), Some(b)] => Some(if a == t { b } else { a }),
                _ => None,
            }
        };
        let start = vertex_tris
            .iter()
            .copied()
            .find(|&t| spokes(t).iter().any(|&e| mesh.is_boundary_edge(e)))
            .or_else(|| vertex_tris.first().copied())
            .ok_or_else(|| Error::InvalidArgument(format!("vertex {vertex} belongs to no triangle")))?;
        let first_spokes = spokes(start);
        let open = first_spokes.iter().any(|&e| mesh.is_boundary_edge(e));
        // leave the first triangle through a non-boundary spoke
        let (start_edge, mut exit) = if mesh.is_boundary_edge(first_spokes[0]) {
            (first_spokes[0], first_spokes[1])
        } else {
            (first_spokes[1], first_spokes[0])
        };
        let mut triangles = vec![start];
        let mut edges = Vec::new();
        let mut current = start;
        loop {
            if mesh.is_boundary_edge(exit) {
                break;
            }
            let next = other(exit, current).expect("interior edge has two triangles");
            if next == start {
                edges.push(exit);
                break;
            }
            edges.push(exit);
            triangles.push(next);
            let s = spokes(next);
            exit = if s[0] == exit { s[1] } else { s[0] };
            current = next;
            if triangles.len() > vertex_tris.len() {
                return Err(Error::InvalidArgument(format!("patch of vertex {vertex} is not a fan")));
            }
        }
        if triangles.len() != vertex_tris.len() {
            return Err(Error::InvalidArgument(format!(
                "patch of vertex {vertex} is not a single fan ({} of {} triangles reached)",
                triangles.len(),
                vertex_tris.len()
            )));
        }
        let end_edges = open.then_some([start_edge, exit]);
        Ok(Patch { vertex, triangles, edges, end_edges, interior: !open })
    }
}

/// Result of [`reconstruct`].
#[derive(Debug, Clone)]
pub struct EquilibratedFlux {
    /// RT0C coefficients (fluxes along the global edge normals).
    pub sigma: Vec<f64>,
    /// `div sigma_h` per triangle, computed from the one-sided fluxes.
    pub divergence: Vec<f64>,
    /// `|F_T + F_T'|` for interior edges (zero on boundary edges), where
    /// `F` are the outward fluxes from the two sides.
    pub jumps: Vec<f64>,
    pub g0: Vec<f64>,
    /// Largest closure residual of an interior patch and its vertex.
    pub worst_closure: (usize, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max_divergence_error: f64,
    pub mean_divergence_error: f64,
    pub max_jump: f64,
    pub fortin_residual: f64,
    pub worst_closure_vertex: usize,
    pub worst_closure: f64,
}

impl EquilibratedFlux {
    pub fn report(&self, mesh: &Mesh, u: &[f64]) -> Result<ResidualReport> {
        let div_err: Vec<f64> = self.divergence.iter().zip(&self.g0).map(|(d, g)| (d + g).abs()).collect();
        Ok(ResidualReport {
            max_divergence_error: norm_inf(&div_err),
            mean_divergence_error: div_err.iter().sum::<f64>() / div_err.len().max(1) as f64,
            max_jump: norm_inf(&self.jumps),
            fortin_residual: fortin_residual(mesh, u, &self.sigma)?,
            worst_closure_vertex: self.worst_closure.0,
            worst_closure: self.worst_closure.1,
        })
    }

    /// `(edge, coefficient)` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["edge", "coefficient"])?;
        for (e, c) in self.sigma.iter().enumerate() {
            out.write_record([e.to_string(), format!("{c:.15e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `max_i |(grad u_h - sigma_h, grad phi_i)|` over `Q_h`.
pub fn fortin_residual(mesh: &Mesh, u: &[f64], sigma: &[f64]) -> Result<f64> {
    let q = FeSpace::new(mesh, SpaceKind::P1C0);
    let v = FeSpace::new(mesh, SpaceKind::RT0C);
    let ku = stiffness_p1(&q)?.matvec(u);
    let bs = coupling_b(&v, &q)?.matvec(sigma);
    Ok(ku.iter().zip(&bs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `u_h` solving `(grad u_h, grad v) = (g0, v)` on `Q_h`.
pub fn discrete_poisson(mesh: &Mesh, g0: &[f64]) -> Result<Vec<f64>> {
    let q = FeSpace::new(mesh, SpaceKind::P1C0);
    let p = FeSpace::new(mesh, SpaceKind::P0);
    let rhs = coupling_p1_p0(&q, &p)?.matvec(g0);
    Ok(Cholesky::new(&stiffness_p1(&q)?)?.solve(&rhs))
}

pub fn reconstruct(mesh: &Mesh, u: &[f64], g0: &[f64]) -> Result<EquilibratedFlux> {
    let q = FeSpace::new(mesh, SpaceKind::P1C0);
    let p0 = FeSpace::new(mesh, SpaceKind::P0);
    if u.len() != q.dof_count() || g0.len() != mesh.n_triangles() {
        return Err(Error::DimensionMismatch(format!(
            "u has {} entries for dim Q_h = {}, g0 has {} for {} triangles",
            u.len(),
            q.dof_count(),
            g0.len(),
            mesh.n_triangles()
        )));
    }
    let k = stiffness_p1(&q)?;
    let c = coupling_p1_p0(&q, &p0)?;
    let ku = k.matvec(u);
    let cg = c.matvec(g0);
    let mismatch = ku.iter().zip(&cg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = norm_inf(&ku).max(norm_inf(&cg)).max(f64::MIN_POSITIVE);
    if mismatch > POISSON_TOL * scale && mismatch > 1e-14 {
        return Err(Error::NotDiscretePoisson { residual: mismatch / scale });
    }

    let nt = mesh.n_triangles();
    let grads: Vec<[f64; 2]> = (0..nt).map(|t| q.gradient(u, t)).collect();
    // outward normal derivative of u_h times the edge length, per (T, k)
    let mut flux = vec![[0.0f64; 3]; nt];
    for t in 0..nt {
        let el = mesh.element(t);
        for k in 0..3 {
            let n = el.outward_normal(k);
            flux[t][k] = (grads[t][0] * n[0] + grads[t][1] * n[1]) * el.edge_length(k);
        }
    }
    let edge_jump = |e: usize| -> f64 {
        // |E| J_E: sum of the two outward fluxes
        let [a, b] = mesh.edge_triangles(e);
        let side = |t: usize| flux[t][mesh.local_edge(t, e).unwrap()];
        side(a.unwrap()) + b.map_or(0.0, side)
    };
    // (g0, phi_z)_T = g0 |T| / 3
    let load = |t: usize| g0[t] * mesh.area(t) / 3.0;

    let mut total = flux.clone();
    let vertex_tris = mesh.vertex_triangles();
    let mut worst_closure = (0usize, 0.0f64);
    for z in 0..mesh.n_vertices() {
        let patch = Patch::build(mesh, z, &vertex_tris[z])?;
        let n = patch.triangles.len();
        let mut p = 0.0;
        for i in 0..n {
            let t = patch.triangles[i];
            let qi = -load(t) - p;
            let e_in = if i == 0 {
                if patch.interior {
                    patch.edges[n - 1]
                } else {
                    patch.end_edges.unwrap()[0]
                }
            } else {
                patch.edges[i - 1]
            };
            let e_out = if i < patch.edges.len() { patch.edges[i] } else { patch.end_edges.unwrap()[1] };
            total[t][mesh.local_edge(t, e_in).unwrap()] += p;
            total[t][mesh.local_edge(t, e_out).unwrap()] += qi;
            if i < patch.edges.len() {
                p = -0.5 * edge_jump(e_out) - qi;
            } else {
                p = 0.0;
            }
        }
        if patch.interior {
            // p now holds the value forced back onto the seed edge
            let closure = p.abs();
            if closure > worst_closure.1 {
                worst_closure = (z, closure);
            }
        }
    }
    if worst_closure.1 > EQUILIBRATION_TOL {
        return Err(Error::PatchCompatibility { vertex: worst_closure.0, residual: worst_closure.1 });
    }

    let mut sigma = vec![0.0; mesh.n_edges()];
    let mut jumps = vec![0.0; mesh.n_edges()];
    for e in 0..mesh.n_edges() {
        let [a, b] = mesh.edge_triangles(e);
        let a = a.unwrap();
        let ka = mesh.local_edge(a, e).unwrap();
        let sa = mesh.tri_signs(a)[ka];
        match b {
            None => sigma[e] = sa * total[a][ka],
            Some(b) => {
                let kb = mesh.local_edge(b, e).unwrap();
                let sb = mesh.tri_signs(b)[kb];
                sigma[e] = 0.5 * (sa * total[a][ka] + sb * total[b][kb]);
                jumps[e] = (total[a][ka] + total[b][kb]).abs();
            }
        }
    }
    let divergence = (0..nt).map(|t| total[t].iter().sum::<f64>() / mesh.area(t)).collect();
    Ok(EquilibratedFlux { sigma, divergence, jumps, g0: g0.to_vec(), worst_closure })
}

/// Boundary condition of the Darcy solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DarcyBoundary {
    /// Normal flux free on the boundary (pressure implicitly zero there).
    Natural,
    /// `sigma . n = 0` on the boundary; the pressure is fixed by a zero-mean
    /// gauge and `g` must have zero mean.
    ZeroFlux,
}

#[derive(Debug, Clone)]
pub struct DarcySolution {
    /// RT0C coefficients.
    pub sigma: Vec<f64>,
    pub p: Vec<f64>,
    pub residual: f64,
}

/// RT0-P0 mixed problem `(sigma, tau) + (div tau, p) = 0`,
/// `(div sigma, q) = -(g, q)`, so that `div sigma = -g` for `g` in P0.
pub fn darcy_solve(mesh: &Mesh, g: &[f64], boundary: DarcyBoundary) -> Result<DarcySolution> {
    if g.len() != mesh.n_triangles() {
        return Err(Error::DimensionMismatch(format!("{} values of g for {} triangles", g.len(), mesh.n_triangles())));
    }
    let v = FeSpace::new(mesh, SpaceKind::RT0C);
    let p = FeSpace::new(mesh, SpaceKind::P0);
    let a = mass_rt0(&v)?;
    let d = div_rt0_p0(&v, &p)?;
    let m0 = mass_p0(&p)?;
    let rhs: Vec<f64> = m0.matvec(g).into_iter().map(|x| -x).collect();
    match boundary {
        DarcyBoundary::Natural => {
            let sys = SaddleSystem::new(a, d, vec![0.0; v.dof_count()], rhs)?;
            let sol = solve_saddle_with(&sys, SaddleMethod::Kkt)?;
            Ok(DarcySolution { sigma: sol.y, p: sol.x, residual: sol.residual })
        }
        DarcyBoundary::ZeroFlux => {
            let total: f64 = rhs.iter().sum();
            let scale: f64 = rhs.iter().map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
            if total.abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "zero-flux Darcy problem needs a zero-mean load, mean is {total:.3e}"
                )));
            }
            let interior: Vec<usize> = (0..mesh.n_edges()).filter(|&e| !mesh.is_boundary_edge(e)).collect();
            // drop the first pressure row; it is implied by the others
            let rows: Vec<usize> = (1..mesh.n_triangles()).collect();
            let a_i = a.submatrix(&interior, &interior);
            let d_i: CsrMatrix = d.submatrix(&rows, &interior);
            let rhs_i: Vec<f64> = rows.iter().map(|&t| rhs[t]).collect();
            let sys = SaddleSystem::new(a_i, d_i, vec![0.0; interior.len()], rhs_i)?;
            let sol = solve_saddle_with(&sys, SaddleMethod::Kkt)?;
            let mut sigma = vec![0.0; mesh.n_edges()];
            for (k, &e) in interior.iter().enumerate() {
                sigma[e] = sol.y[k];
            }
            let mut pres = vec![0.0; mesh.n_triangles()];
            for (k, &t) in rows.iter().enumerate() {
                pres[t] = sol.x[k];
            }
            let area = mesh.total_area();
            let mean: f64 = (0..mesh.n_triangles()).map(|t| pres[t] * mesh.area(t)).sum::<f64>() / area;
            pres.iter_mut().for_each(|x| *x -= mean);
            Ok(DarcySolution { sigma, p: pres, residual: sol.residual })
        }
    }
}

/// Load used to probe the Fortin constant.
#[derive(Debug, Clone)]
pub enum FortinLoad {
    /// `g0` is the P0 projection of the source.
    Source(Source),
    /// `g0 = M0^{-1} C^T w` for the worst P1-P0 function `w`.
    WorstP1P0,
}

#[derive(Debug, Clone, Serialize)]
pub struct FortinRow {
    pub h: f64,
    /// `max over loads of |sigma_h| / |grad u_h|`
    pub c_pi: f64,
    /// `sqrt(lambda_max)` of stiffness against mass on `Q_h`.
    pub rho: f64,
    pub zeta: f64,
    /// `h rho / zeta`
    pub bound: f64,
    /// `|sigma_h| / (|grad u_h| + h |g0|)`, maximized over loads.
    pub energy_ratio: f64,
}

fn p0_load(mesh: &Mesh, load: &FortinLoad) -> Result<Vec<f64>> {
    match load {
        FortinLoad::Source(Source::Analytic(f)) => Ok(l2_project_p0(mesh, |x| f(x))),
        FortinLoad::Source(s) => Ok(s.to_p0(mesh)?.expect("non-analytic source has P0 data")),
        FortinLoad::WorstP1P0 => {
            let w = p1p0_infsup(mesh)?.w;
            let q = FeSpace::new(mesh, SpaceKind::P1C0);
            let p = FeSpace::new(mesh, SpaceKind::P0);
            let ctw = coupling_p1_p0(&q, &p)?.matvec_transpose(&w);
            Ok((0..mesh.n_triangles()).map(|t| ctw[t] / mesh.area(t)).collect())
        }
    }
}

pub fn fortin_constant(meshes: &[Mesh], loads: &[FortinLoad]) -> Result<Vec<FortinRow>> {
    if meshes.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "Fortin constant study needs at least 3 levels, got {}",
            meshes.len()
        )));
    }
    if loads.is_empty() {
        return Err(Error::InvalidArgument("Fortin constant study needs at least one load".into()));
    }
    meshes
        .iter()
        .map(|mesh| {
            let q = FeSpace::new(mesh, SpaceKind::P1C0);
            let v = FeSpace::new(mesh, SpaceKind::RT0C);
            let k = stiffness_p1(&q)?;
            let a = mass_rt0(&v)?;
            let h = mesh.h_max();
            let mut c_pi = 0.0f64;
            let mut energy_ratio = 0.0f64;
            for load in loads {
                let g0 = p0_load(mesh, load)?;
                let u = discrete_poisson(mesh, &g0)?;
                let flux = reconstruct(mesh, &u, &g0)?;
                let grad = k.bilinear(&u, &u).sqrt();
                let sig = a.bilinear(&flux.sigma, &flux.sigma).sqrt();
                let g_norm = (0..mesh.n_triangles()).map(|t| g0[t] * g0[t] * mesh.area(t)).sum::<f64>().sqrt();
                if grad > 0.0 {
                    c_pi = c_pi.max(sig / grad);
                    energy_ratio = energy_ratio.max(sig / (grad + h * g_norm));
                }
            }
            let rho = inverse_inequality_constant(mesh)?;
            let zeta = p1p0_infsup(mesh)?.zeta;
            Ok(FortinRow { h, c_pi, rho, zeta, bound: h * rho / zeta, energy_ratio })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_crossed, gen_lshape, gen_right};

    #[test]
    fn patches_are_fans() {
        let m = gen_crossed(3).unwrap();
        let vt = m.vertex_triangles();
        for z in 0..m.n_vertices() {
            let p = Patch::build(&m, z, &vt[z]).unwrap();
            assert_eq!(p.interior, !m.is_boundary_vertex(z));
            let expected_edges = if p.interior { p.triangles.len() } else { p.triangles.len() - 1 };
            assert_eq!(p.edges.len(), expected_edges);
            for (i, &e) in p.edges.iter().enumerate() {
                let t0 = p.triangles[i];
                let t1 = p.triangles[(i + 1) % p.triangles.len()];
                let [a, b] = m.edge_triangles(e);
                let pair = [a.unwrap(), b.unwrap()];
                assert!(pair.contains(&t0) && pair.contains(&t1));
            }
        }
    }

    #[test]
    fn constant_load_on_right_mesh() {
        let m = gen_right(4).unwrap();
        let g0 = vec![1.0; m.n_triangles()];
        let u = discrete_poisson(&m, &g0).unwrap();
        let flux = reconstruct(&m, &u, &g0).unwrap();
        for (d, g) in flux.divergence.iter().zip(&g0) {
            assert!((d + g).abs() < 1e-10);
        }
        let r = flux.report(&m, &u).unwrap();
        assert!(r.max_jump < 1e-10 && r.fortin_residual < 1e-9, "{r:?}");
    }

    #[test]
    fn zero_data_gives_zero_flux() {
        let m = gen_lshape(2).unwrap();
        let g0 = vec![0.0; m.n_triangles()];
        let u = vec![0.0; m.n_interior_vertices()];
        let flux = reconstruct(&m, &u, &g0).unwrap();
        assert!(flux.sigma.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn non_poisson_input_is_rejected() {
        let m = gen_right(3).unwrap();
        let g0 = vec![1.0; m.n_triangles()];
        let u = vec![1.0; m.n_interior_vertices()];
        assert!(matches!(reconstruct(&m, &u, &g0), Err(Error::NotDiscretePoisson { .. })));
    }

    #[test]
    fn darcy_divergence_and_gauge() {
        let m = gen_crossed(3).unwrap();
        let g: Vec<f64> = (0..m.n_triangles()).map(|t| (t as f64 * 0.37).sin()).collect();
        let sol = darcy_solve(&m, &g, DarcyBoundary::Natural).unwrap();
        let v = FeSpace::new(&m, SpaceKind::RT0C);
        let p = FeSpace::new(&m, SpaceKind::P0);
        let d = div_rt0_p0(&v, &p).unwrap().matvec(&sol.sigma);
        for t in 0..m.n_triangles() {
            assert!((d[t] / m.area(t) + g[t]).abs() < 1e-11);
        }
        let mean = g.iter().enumerate().map(|(t, x)| x * m.area(t)).sum::<f64>() / m.total_area();
        let g0: Vec<f64> = g.iter().map(|x| x - mean).collect();
        let sol = darcy_solve(&m, &g0, DarcyBoundary::ZeroFlux).unwrap();
        let pm: f64 = sol.p.iter().enumerate().map(|(t, x)| x * m.area(t)).sum();
        assert!(pm.abs() < 1e-12);
        let d = div_rt0_p0(&v, &p).unwrap().matvec(&sol.sigma);
        for t in 0..m.n_triangles() {
            assert!((d[t] / m.area(t) + g0[t]).abs() < 1e-11);
        }
        assert!(darcy_solve(&m, &g, DarcyBoundary::ZeroFlux).is_err());
    }
}
