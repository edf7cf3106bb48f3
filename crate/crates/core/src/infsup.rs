//! The discrete inf-sup constant of the RT0-P1 pairing and everything built
//! on its eigenpairs.
//!
//! With `M` the stiffness matrix on `Q_h` and `S = B A^{-1} B^T`, the
//! eigenproblem `S x = mu M x` gives `beta_h = sqrt(mu_min)`. Each
//! eigenvector `u_i` (normalized so that `|grad u_i| = 1`) has a flux
//! companion `sigma_i = -A^{-1} B^T u_i` with `(sigma_i, sigma_j) = mu_i
//! delta_ij`.

use std::io::Write;

use faer::Mat;
use serde::Serialize;

use crate::assembly::{coupling_p1_p0, mass_p0, mass_p1, stiffness_p1};
use crate::equilibration::{darcy_solve, DarcyBoundary};
use crate::error::{Error, Result};
use crate::fespace::{FeSpace, SpaceKind};
use crate::mesh::{Mesh, MeshFamily};
use crate::quadrature::QuadratureRule;
use crate::solvers::{gen_eig, Cholesky, DualMixedProblem, SchurOperator, SymOperator, Which, EIGEN_TOL};
use crate::sparse::{dot, CsrMatrix};

/// Smallest eigenvalue accepted as evidence of `beta_h > 0`.
pub const MU_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigCount {
    Smallest(usize),
    All,
}

/// Scales `v` so that its largest-magnitude entry is positive.
fn normalize_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    for &x in v.iter() {
        if x.abs() > best.abs() + 1e-12 * best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn column(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

#[derive(Debug, Clone)]
pub struct InfSupSpectrum {
    pub v_kind: SpaceKind,
    /// Descending.
    pub mu: Vec<f64>,
    /// Columns are `u_i` on `Q_h`, `(grad u_i, grad u_j) = delta_ij`.
    pub u: Mat<f64>,
    /// Columns are `sigma_i` in the flux space.
    pub sigma: Mat<f64>,
    pub residuals: Vec<f64>,
    /// Total vertex count of the mesh, the label used in the reference eigenvalue tables.
    pub n_label: usize,
    /// `dim Q_h`.
    pub n_q: usize,
    pub h: f64,
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub m: CsrMatrix,
}

impl InfSupSpectrum {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.mu.len() == self.n_q
    }

    pub fn mu_min(&self) -> f64 {
        *self.mu.last().expect("empty spectrum")
    }

    pub fn beta_h(&self) -> f64 {
        self.mu_min().sqrt()
    }

    pub fn u_vec(&self, i: usize) -> Vec<f64> {
        column(&self.u, i)
    }

    pub fn sigma_vec(&self, i: usize) -> Vec<f64> {
        column(&self.sigma, i)
    }

    /// Largest deviations of `(grad u_i, grad u_j)` from `delta_ij` and of
    /// `(sigma_i, sigma_j)` from `mu_i delta_ij`.
    pub fn orthogonality_defects(&self) -> (f64, f64) {
        let gu = self.u.transpose() * self.m.mul_dense(self.u.as_ref());
        let gs = self.sigma.transpose() * self.a.mul_dense(self.sigma.as_ref());
        let k = self.len();
        let mut du = 0.0f64;
        let mut ds = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let d = if i == j { 1.0 } else { 0.0 };
                du = du.max((gu[(i, j)] - d).abs());
                ds = ds.max((gs[(i, j)] - d * self.mu[i]).abs());
            }
        }
        (du, ds)
    }

    /// Block residuals of `A y_i + B^T x_i = 0`, `B y_i + mu_i M x_i = 0`.
    pub fn pair_residuals(&self) -> Vec<f64> {
        let ay = self.a.mul_dense(self.sigma.as_ref());
        let btx = self.b.transpose().mul_dense(self.u.as_ref());
        let by = self.b.mul_dense(self.sigma.as_ref());
        let mx = self.m.mul_dense(self.u.as_ref());
        (0..self.len())
            .map(|j| {
                let r1: f64 = (0..ay.nrows()).map(|i| (ay[(i, j)] + btx[(i, j)]).powi(2)).sum();
                let r2: f64 = (0..by.nrows()).map(|i| (by[(i, j)] + self.mu[j] * mx[(i, j)]).powi(2)).sum();
                (r1 + r2).sqrt()
            })
            .collect()
    }
}

pub fn infsup_spectrum(mesh: &Mesh, v_kind: SpaceKind, count: EigCount) -> Result<InfSupSpectrum> {
    let problem = DualMixedProblem::new(mesh, v_kind)?;
    let m = stiffness_p1(problem.q_space())?;
    let n_q = m.nrows();
    if n_q == 0 {
        return Err(Error::InvalidArgument("mesh has no interior vertices".into()));
    }
    let which = match count {
        EigCount::Smallest(k) if k > n_q => {
            return Err(Error::InvalidArgument(format!("requested {k} eigenpairs but dim Q_h = {n_q}")))
        }
        EigCount::Smallest(k) => Which::Smallest(k),
        EigCount::All => Which::All,
    };
    let schur = SchurOperator::new(problem.a(), problem.b())?;
    let eig = gen_eig(&schur, &m, which)?;
    if eig.max_relative_residual() > EIGEN_TOL {
        return Err(Error::NoConvergence { iterations: 0, residual: eig.max_relative_residual() });
    }
    if let Some(&mu_min) = eig.values.last() {
        if mu_min <= MU_FLOOR {
            return Err(Error::InfSupFailure(format!("smallest eigenvalue {mu_min:.3e}")));
        }
    }
    let mut u = eig.vectors;
    for j in 0..u.ncols() {
        let mut v = column(&u, j);
        normalize_sign(&mut v);
        for (i, x) in v.into_iter().enumerate() {
            u[(i, j)] = x;
        }
    }
    let sigma = schur.lift(u.as_ref());
    Ok(InfSupSpectrum {
        v_kind,
        mu: eig.values,
        u,
        sigma,
        residuals: eig.residuals,
        n_label: mesh.n_vertices(),
        n_q,
        h: mesh.h_max(),
        a: problem.a().clone(),
        b: problem.b().clone(),
        m,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae for {} values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InvalidArgument(format!("a rate fit needs at least 3 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| *v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("a log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub h: Vec<f64>,
    pub beta: Vec<f64>,
    /// Slope of `log beta_h` against `log h`.
    pub slope: f64,
}

pub fn infsup_decay_rate(meshes: &[Mesh], v_kind: SpaceKind) -> Result<DecayFit> {
    if meshes.len() < 3 {
        return Err(Error::InvalidArgument(format!("decay fit needs at least 3 levels, got {}", meshes.len())));
    }
    let mut h = Vec::new();
    let mut beta = Vec::new();
    for mesh in meshes {
        let s = infsup_spectrum(mesh, v_kind, EigCount::Smallest(1))?;
        h.push(s.h);
        beta.push(s.beta_h());
    }
    let slope = loglog_slope(&h, &beta)?;
    Ok(DecayFit { h, beta, slope })
}

/// One row of the inf-sup table: the four smallest eigenvalues.
#[derive(Debug, Clone, Serialize)]
pub struct InfSupRow {
    pub level: usize,
    pub h: f64,
    pub n_label: usize,
    /// `mu_{N-3}, mu_{N-2}, mu_{N-1}, mu_N`; missing entries when
    /// `dim Q_h < 4`.
    pub mu: [Option<f64>; 4],
    pub beta_h: f64,
}

pub fn infsup_table(family: &MeshFamily, levels: &[usize], v_kind: SpaceKind) -> Result<Vec<InfSupRow>> {
    levels
        .iter()
        .enumerate()
        .map(|(level, &n)| {
            let mesh = family.level(n)?;
            let nq = mesh.n_interior_vertices();
            let s = infsup_spectrum(&mesh, v_kind, EigCount::Smallest(nq.min(4)))?;
            let mut mu = [None; 4];
            let k = s.len();
            for (j, v) in s.mu.iter().enumerate() {
                mu[4 - k + j] = Some(*v);
            }
            Ok(InfSupRow { level, h: s.h, n_label: s.n_label, mu, beta_h: s.beta_h() })
        })
        .collect()
}

pub const INFSUP_CSV_HEADER: [&str; 8] = ["level", "h", "n_label", "mu_m3", "mu_m2", "mu_m1", "mu_min", "beta_h"];

pub fn write_infsup_csv<W: Write>(rows: &[InfSupRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(INFSUP_CSV_HEADER)?;
    for r in rows {
        let mut rec = vec![r.level.to_string(), format!("{:.10e}", r.h), r.n_label.to_string()];
        rec.extend(r.mu.iter().map(|m| m.map(|v| format!("{v:.10e}")).unwrap_or_default()));
        rec.push(format!("{:.10e}", r.beta_h));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn require_complete(spectrum: &InfSupSpectrum) -> Result<()> {
    if spectrum.is_complete() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "missing eigenpairs: {} of {} computed, the full spectrum is required",
            spectrum.len(),
            spectrum.n_q
        )))
    }
}

/// Stable block `i < n_tilde` (`mu_i >= threshold`) and unstable block.
#[derive(Debug, Clone, Copy)]
pub struct Splitting<'s> {
    pub spectrum: &'s InfSupSpectrum,
    pub threshold: f64,
    pub n_tilde: usize,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

pub fn split(spectrum: &InfSupSpectrum, threshold: f64) -> Result<Splitting<'_>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    require_complete(spectrum)?;
    let n_tilde = spectrum.mu.iter().take_while(|&&m| m >= threshold).count();
    Ok(Splitting { spectrum, threshold, n_tilde })
}

#[derive(Debug, Clone)]
pub struct SplitSolution {
    pub sigma1: Vec<f64>,
    pub u1: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub u2: Vec<f64>,
}

impl Splitting<'_> {
    /// Galerkin blocks of the stable subproblem in the spectral basis:
    /// `A11 = (sigma_j, sigma_i)` and `B11 = (sigma_j, grad u_i)`.
    pub fn stable_blocks(&self) -> (Mat<f64>, Mat<f64>) {
        let s = self.spectrum;
        let k = self.n_tilde;
        let sig = s.sigma.subcols(0, k);
        let u = s.u.subcols(0, k);
        let a11 = sig.transpose() * s.a.mul_dense(sig);
        let b11 = u.transpose() * s.b.mul_dense(sig);
        (a11, b11)
    }

    /// Largest `|(sigma_i, grad u_j)|` across the two blocks.
    pub fn cross_coupling(&self) -> f64 {
        let s = self.spectrum;
        let bs = s.u.transpose() * s.b.mul_dense(s.sigma.as_ref());
        let n = s.len();
        let k = self.n_tilde;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if (i < k) != (j < k) {
                    worst = worst.max(bs[(i, j)].abs());
                }
            }
        }
        worst
    }

    /// Decoupled solves for a load vector `F_i = <f, phi_i>`.
    pub fn solve(&self, load: &[f64]) -> SplitSolution {
        let s = self.spectrum;
        let mut out = SplitSolution {
            sigma1: vec![0.0; s.sigma.nrows()],
            u1: vec![0.0; s.n_q],
            sigma2: vec![0.0; s.sigma.nrows()],
            u2: vec![0.0; s.n_q],
        };
        for i in 0..s.len() {
            let c = dot(&s.u_vec(i), load) / s.mu[i];
            let (sig, u) =
                if i < self.n_tilde { (&mut out.sigma1, &mut out.u1) } else { (&mut out.sigma2, &mut out.u2) };
            for (r, x) in sig.iter_mut().enumerate() {
                *x += c * s.sigma[(r, i)];
            }
            for (r, x) in u.iter_mut().enumerate() {
                *x += c * s.u[(r, i)];
            }
        }
        out
    }
}

pub fn solve_split(splitting: &Splitting<'_>, load: &[f64]) -> SplitSolution {
    splitting.solve(load)
}

#[derive(Debug, Clone)]
pub struct Representation {
    /// `alpha_i = <f, u_i>`, aligned with the descending spectrum.
    pub alpha: Vec<f64>,
    /// `sum alpha_i / mu_i u_i`
    pub u_h: Vec<f64>,
    /// `sum alpha_i / mu_i sigma_i`
    pub sigma_h: Vec<f64>,
    /// `sum alpha_i u_i`
    pub u_g: Vec<f64>,
}

pub fn representation(spectrum: &InfSupSpectrum, load: &[f64]) -> Result<Representation> {
    require_complete(spectrum)?;
    if load.len() != spectrum.n_q {
        return Err(Error::DimensionMismatch(format!("load of length {} for dim Q_h = {}", load.len(), spectrum.n_q)));
    }
    let n = spectrum.len();
    let alpha: Vec<f64> = (0..n).map(|i| dot(&spectrum.u_vec(i), load)).collect();
    let mut u_h = vec![0.0; spectrum.n_q];
    let mut u_g = vec![0.0; spectrum.n_q];
    let mut sigma_h = vec![0.0; spectrum.sigma.nrows()];
    for i in 0..n {
        let c = alpha[i] / spectrum.mu[i];
        for r in 0..spectrum.n_q {
            u_h[r] += c * spectrum.u[(r, i)];
            u_g[r] += alpha[i] * spectrum.u[(r, i)];
        }
        for (r, x) in sigma_h.iter_mut().enumerate() {
            *x += c * spectrum.sigma[(r, i)];
        }
    }
    Ok(Representation { alpha, u_h, sigma_h, u_g })
}

/// `(i, mu_i, alpha_i)` rows with 1-based `i`.
pub fn write_alpha_csv<W: Write>(spectrum: &InfSupSpectrum, alpha: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["i", "mu", "alpha"])?;
    for (i, (m, a)) in spectrum.mu.iter().zip(alpha).enumerate() {
        out.write_record([(i + 1).to_string(), format!("{m:.12e}"), format!("{a:.12e}")])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct P1P0InfSup {
    pub nu_min: f64,
    pub zeta: f64,
    /// Worst function on `Q_h`, `L^2`-normalized.
    pub w: Vec<f64>,
    /// `w` at every mesh vertex.
    pub w_nodal: Vec<f64>,
    pub h: f64,
}

/// `C M0^{-1} C^T`, sparse because `M0` is diagonal.
fn p1p0_operator(mesh: &Mesh) -> Result<(CsrMatrix, CsrMatrix, FeSpace<'_>)> {
    let q = FeSpace::new(mesh, SpaceKind::P1C0);
    let p = FeSpace::new(mesh, SpaceKind::P0);
    let c = coupling_p1_p0(&q, &p)?;
    let m0 = mass_p0(&p)?;
    let ct = c.transpose();
    let mut trip = Vec::new();
    for t in 0..ct.nrows() {
        let d = m0.get(t, t);
        let entries: Vec<(usize, f64)> = ct.row(t).collect();
        for &(i, a) in &entries {
            for &(j, b) in &entries {
                trip.push((i, j, a * b / d));
            }
        }
    }
    let s = CsrMatrix::from_triplets(q.dof_count(), q.dof_count(), &trip);
    let m1 = mass_p1(&q)?;
    Ok((s, m1, q))
}

/// Smallest eigenvalue of `C M0^{-1} C^T w = nu M1 w`, `zeta = sqrt(nu_min)`.
pub fn p1p0_infsup(mesh: &Mesh) -> Result<P1P0InfSup> {
    let (s, m1, q) = p1p0_operator(mesh)?;
    if q.dof_count() == 0 {
        return Err(Error::InvalidArgument("mesh has no interior vertices".into()));
    }
    let eig = gen_eig(&s, &m1, Which::Smallest(1))?;
    let mut w = eig.vector(0);
    normalize_sign(&mut w);
    let w_nodal = q.to_nodal(&w);
    Ok(P1P0InfSup { nu_min: eig.values[0], zeta: eig.values[0].max(0.0).sqrt(), w, w_nodal, h: mesh.h_max() })
}

/// Largest eigenvalue of the stiffness against the mass matrix on `Q_h`
/// (the inverse-inequality constant squared).
pub fn inverse_inequality_constant(mesh: &Mesh) -> Result<f64> {
    let q = FeSpace::new(mesh, SpaceKind::P1C0);
    let k = stiffness_p1(&q)?;
    let m = mass_p1(&q)?;
    let eig = gen_eig(&k, &m, Which::Largest(1))?;
    Ok(eig.values[0].sqrt())
}

#[derive(Debug, Clone)]
pub struct LaplaceEigen {
    /// Ascending.
    pub lambda: Vec<f64>,
    /// `L^2`-orthonormal columns on `Q_h`.
    pub w: Mat<f64>,
}

impl LaplaceEigen {
    pub fn w_vec(&self, k: usize) -> Vec<f64> {
        column(&self.w, k)
    }
}

/// Discrete Dirichlet eigenpairs `(grad w_k, grad v) = lambda_k (w_k, v)`.
pub fn laplace_eigenpairs(mesh: &Mesh, count: usize) -> Result<LaplaceEigen> {
    let q = FeSpace::new(mesh, SpaceKind::P1C0);
    if count > q.dof_count() {
        return Err(Error::InvalidArgument(format!("requested {count} eigenpairs but dim Q_h = {}", q.dof_count())));
    }
    let k = stiffness_p1(&q)?;
    let m = mass_p1(&q)?;
    let eig = gen_eig(&k, &m, Which::Smallest(count))?;
    let n = q.dof_count();
    let mut w = Mat::<f64>::zeros(n, count);
    let mut lambda = Vec::with_capacity(count);
    for j in 0..count {
        let src = count - 1 - j;
        lambda.push(eig.values[src]);
        let mut v = eig.vector(src);
        normalize_sign(&mut v);
        for (i, x) in v.into_iter().enumerate() {
            w[(i, j)] = x;
        }
    }
    Ok(LaplaceEigen { lambda, w })
}

/// Which discrete function the stable-subspace witness is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessTarget {
    /// `w_k`, 1-based.
    Laplace(usize),
    /// `w_i + w_j`, 1-based.
    LaplacePair(usize, usize),
    /// The inf-sup eigenfunction of the smallest eigenvalue.
    WorstInfSup,
}

#[derive(Debug, Clone, Serialize)]
pub struct StableRow {
    pub h: f64,
    /// Rayleigh quotient `|grad w|^2 / |w|^2`.
    pub lambda: f64,
    /// `(s, grad w) / (|s| |grad w|)` for the Darcy witness `s`.
    pub ratio: f64,
    /// `sup_tau (tau, grad w) / (|tau| |grad w|)`.
    pub optimal: f64,
    /// `|w - P0 w| / (h |grad w|)` on this level.
    pub c_pi: f64,
    /// `|s| / |g|` with `g = -Delta_h w`.
    pub c_sigma: f64,
    /// `(1 - C_Pi^2 h^2 lambda) / (C_sigma lambda^{1/2})` with the constants
    /// fitted over all levels.
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StableSubspaceReport {
    pub rows: Vec<StableRow>,
    pub c_pi: f64,
    pub c_sigma: f64,
}

/// `|w - P0 w|_{L^2}` for a P1 function given by nodal values.
fn p0_projection_error(mesh: &Mesh, nodal: &[f64]) -> f64 {
    let rule = QuadratureRule::degree2();
    let mut s = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let vals = tri.map(|v| nodal[v]);
        let mean = (vals[0] + vals[1] + vals[2]) / 3.0;
        for (lam, w) in rule.iter() {
            let x = lam[0] * vals[0] + lam[1] * vals[1] + lam[2] * vals[2];
            s += w * mesh.area(t) * (x - mean).powi(2);
        }
    }
    s.sqrt()
}

pub fn stable_subspace_check(meshes: &[Mesh], target: WitnessTarget) -> Result<StableSubspaceReport> {
    if meshes.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "stable subspace check needs at least 3 levels, got {}",
            meshes.len()
        )));
    }
    struct Level {
        h: f64,
        lambda: f64,
        ratio: f64,
        optimal: f64,
        c_pi: f64,
        c_sigma: f64,
    }
    let mut levels = Vec::new();
    for mesh in meshes {
        let problem = DualMixedProblem::new(mesh, SpaceKind::RT0C)?;
        let q = problem.q_space();
        let k = stiffness_p1(q)?;
        let m1 = mass_p1(q)?;
        let w = match target {
            WitnessTarget::Laplace(i) => laplace_eigenpairs(mesh, i)?.w_vec(i - 1),
            WitnessTarget::LaplacePair(i, j) => {
                let e = laplace_eigenpairs(mesh, i.max(j))?;
                e.w_vec(i - 1).iter().zip(e.w_vec(j - 1)).map(|(a, b)| a + b).collect()
            }
            WitnessTarget::WorstInfSup => infsup_spectrum(mesh, SpaceKind::RT0C, EigCount::Smallest(1))?.u_vec(0),
        };
        // g = -Delta_h w as a P1 function, then its P0 projection
        let g = Cholesky::new(&m1)?.solve(&k.matvec(&w));
        let g_nodal = q.to_nodal(&g);
        let g0: Vec<f64> =
            mesh.triangles().iter().map(|t| (g_nodal[t[0]] + g_nodal[t[1]] + g_nodal[t[2]]) / 3.0).collect();
        let darcy = darcy_solve(mesh, &g0, DarcyBoundary::Natural)?;
        let grad2 = k.bilinear(&w, &w);
        let l2 = m1.bilinear(&w, &w);
        let s_norm = problem.a().bilinear(&darcy.sigma, &darcy.sigma).sqrt();
        let pairing = dot(&w, &problem.b().matvec(&darcy.sigma));
        let schur = SchurOperator::new(problem.a(), problem.b())?;
        let sw = schur.apply(Mat::from_fn(w.len(), 1, |i, _| w[i]).as_ref());
        let wsw: f64 = (0..w.len()).map(|i| w[i] * sw[(i, 0)]).sum();
        let h = mesh.h_max();
        levels.push(Level {
            h,
            lambda: grad2 / l2,
            ratio: pairing / (s_norm * grad2.sqrt()),
            optimal: (wsw / grad2).sqrt(),
            c_pi: p0_projection_error(mesh, &q.to_nodal(&w)) / (h * grad2.sqrt()),
            c_sigma: s_norm / m1.bilinear(&g, &g).sqrt(),
        });
    }
    let c_pi = levels.iter().map(|l| l.c_pi).fold(0.0, f64::max);
    let c_sigma = levels.iter().map(|l| l.c_sigma).fold(0.0, f64::max);
    let rows = levels
        .into_iter()
        .map(|l| StableRow {
            h: l.h,
            lambda: l.lambda,
            ratio: l.ratio,
            optimal: l.optimal,
            c_pi: l.c_pi,
            c_sigma: l.c_sigma,
            bound: (1.0 - c_pi * c_pi * l.h * l.h * l.lambda) / (c_sigma * l.lambda.sqrt()),
        })
        .collect();
    Ok(StableSubspaceReport { rows, c_pi, c_sigma })
}
