//! The dual mixed RT0-P1 problem and the standard P1 Galerkin method.
//!
//! Dual mixed: find `sigma_h` in `V_h`, `u_h` in `Q_h` with
//! `(sigma_h, tau) + (tau, grad u_h) = 0` and `(sigma_h, grad v) = -<f, v>`,
//! i.e. `A y + B^T x = 0`, `B y = -F`. Hence `sigma_h = -grad u_h` in the
//! `L^2` sense on `V_h`.

use crate::assembly::{coupling_b, load_vector, mass_rt0, stiffness_p1, Source};
use crate::error::Result;
use crate::fespace::{FeSpace, SpaceKind};
use crate::mesh::{Mesh, Point};
use crate::sparse::CsrMatrix;

use super::{solve_saddle, Cholesky, SaddleSystem};

#[derive(Debug, Clone)]
pub struct MixedSolution {
    /// Coefficients in the flux space.
    pub sigma: Vec<f64>,
    /// Coefficients in `Q_h` (interior vertices).
    pub u: Vec<f64>,
    /// `u_h` at every mesh vertex, boundary values included.
    pub nodal: Vec<f64>,
    pub residual: f64,
}

pub struct DualMixedProblem<'m> {
    v: FeSpace<'m>,
    q: FeSpace<'m>,
    a: CsrMatrix,
    b: CsrMatrix,
}

impl<'m> DualMixedProblem<'m> {
    pub fn new(mesh: &'m Mesh, v_kind: SpaceKind) -> Result<Self> {
        let v = FeSpace::new(mesh, v_kind);
        v.check_kind(&[SpaceKind::RT0C, SpaceKind::DRT0], "dual mixed flux space")?;
        let q = FeSpace::new(mesh, SpaceKind::P1C0);
        let a = mass_rt0(&v)?;
        let b = coupling_b(&v, &q)?;
        Ok(DualMixedProblem { v, q, a, b })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.v.mesh()
    }

    pub fn v_space(&self) -> &FeSpace<'m> {
        &self.v
    }

    pub fn q_space(&self) -> &FeSpace<'m> {
        &self.q
    }

    pub fn a(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn b(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn load(&self, f: &Source) -> Result<Vec<f64>> {
        load_vector(&self.q, f)
    }

    pub fn solve(&self, f: &Source) -> Result<MixedSolution> {
        self.solve_load(&self.load(f)?)
    }

    /// Solves with a precomputed load vector `F_i = <f, phi_i>`.
    pub fn solve_load(&self, load: &[f64]) -> Result<MixedSolution> {
        let sys = SaddleSystem::new(
            self.a.clone(),
            self.b.clone(),
            vec![0.0; self.v.dof_count()],
            load.iter().map(|v| -v).collect(),
        )?;
        let sol = solve_saddle(&sys)?;
        let nodal = self.q.to_nodal(&sol.x);
        Ok(MixedSolution { sigma: sol.y, u: sol.x, nodal, residual: sol.residual })
    }

    /// Nonhomogeneous Dirichlet data `u = g` on the boundary, imposed by
    /// nodal interpolation and moved to the right-hand side.
    pub fn solve_dirichlet(&self, f: &Source, g: impl Fn(Point) -> f64) -> Result<MixedSolution> {
        let mesh = self.mesh();
        let full = FeSpace::new(mesh, SpaceKind::P1C);
        let b_full = coupling_b(&self.v, &full)?;
        let boundary: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| mesh.is_boundary_vertex(v)).collect();
        let all_cols: Vec<usize> = (0..self.v.dof_count()).collect();
        let b_d = b_full.submatrix(&boundary, &all_cols);
        let x_d: Vec<f64> = boundary.iter().map(|&v| g(mesh.vertices()[v])).collect();
        let rhs_f: Vec<f64> = b_d.matvec_transpose(&x_d).into_iter().map(|v| -v).collect();
        let load = self.load(f)?;
        let sys = SaddleSystem::new(self.a.clone(), self.b.clone(), rhs_f, load.iter().map(|v| -v).collect())?;
        let sol = solve_saddle(&sys)?;
        let mut nodal = self.q.to_nodal(&sol.x);
        for (k, &v) in boundary.iter().enumerate() {
            nodal[v] = x_d[k];
        }
        Ok(MixedSolution { sigma: sol.y, u: sol.x, nodal, residual: sol.residual })
    }
}

/// Standard Galerkin P1 method on `Q_h`.
pub struct GalerkinProblem<'m> {
    q: FeSpace<'m>,
    k: CsrMatrix,
    chol: Cholesky,
}

impl<'m> GalerkinProblem<'m> {
    pub fn new(mesh: &'m Mesh) -> Result<Self> {
        let q = FeSpace::new(mesh, SpaceKind::P1C0);
        let k = stiffness_p1(&q)?;
        let chol = Cholesky::new(&k)?;
        Ok(GalerkinProblem { q, k, chol })
    }

    pub fn q_space(&self) -> &FeSpace<'m> {
        &self.q
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.k
    }

    pub fn solve(&self, f: &Source) -> Result<Vec<f64>> {
        Ok(self.solve_load(&load_vector(&self.q, f)?))
    }

    pub fn solve_load(&self, load: &[f64]) -> Vec<f64> {
        self.chol.solve(load)
    }
}

/// Convenience wrapper: `K u = F` on `Q_h`.
pub fn galerkin_solve(mesh: &Mesh, f: &Source) -> Result<Vec<f64>> {
    GalerkinProblem::new(mesh)?.solve(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_crossed, gen_right};

    #[test]
    fn zero_load_gives_zero_solution() {
        let m = gen_crossed(3).unwrap();
        for kind in [SpaceKind::RT0C, SpaceKind::DRT0] {
            let sol = DualMixedProblem::new(&m, kind).unwrap().solve(&Source::Zero).unwrap();
            assert!(sol.sigma.iter().chain(&sol.u).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn drt0_reproduces_galerkin() {
        let m = gen_right(5).unwrap();
        let f = Source::analytic(|p| p[0] - 3.0 * p[1] + p[0].sin());
        let mixed = DualMixedProblem::new(&m, SpaceKind::DRT0).unwrap().solve(&f).unwrap();
        let ug = galerkin_solve(&m, &f).unwrap();
        for (a, b) in mixed.u.iter().zip(&ug) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_data_reproduces_linear_solution() {
        // u = 1 + 2x - y is harmonic and lies in P1
        let m = gen_crossed(4).unwrap();
        let p = DualMixedProblem::new(&m, SpaceKind::RT0C).unwrap();
        let sol = p.solve_dirichlet(&Source::Zero, |x| 1.0 + 2.0 * x[0] - x[1]).unwrap();
        for (v, x) in m.vertices().iter().enumerate() {
            assert!((sol.nodal[v] - (1.0 + 2.0 * x[0] - x[1])).abs() < 1e-11);
        }
        // sigma = -grad u = (-2, 1)
        for e in 0..m.n_edges() {
            let n = m.edge_normal(e);
            let flux = (-2.0 * n[0] + n[1]) * m.edge_length(e);
            assert!((sol.sigma[e] - flux).abs() < 1e-11);
        }
    }
}
