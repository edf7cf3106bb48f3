//! Lowest-order finite element spaces on a [`Mesh`].
//!
//! RT0 local shape functions are `psi_k(x) = s_k (x - P_k) / (2|T|)` where
//! `P_k` is the vertex opposite local edge `k`. Their normal flux across
//! edge `k` is `s_k` and zero across the other two edges, and
//! `div psi_k = s_k / |T|`. For the conforming space `s_k` is the mesh
//! orientation sign, so a degree of freedom is the flux through the edge
//! along the global normal. For the discontinuous space `s_k = 1` and the
//! degree of freedom is the outward flux.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{gauss_interval, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// Continuous piecewise linears, all vertices.
    P1C,
    /// Continuous piecewise linears vanishing on the boundary.
    P1C0,
    P0,
    /// H(div)-conforming RT0, one flux per edge.
    RT0C,
    /// Discontinuous RT0, three fluxes per triangle.
    DRT0,
}

impl SpaceKind {
    pub fn is_vector(self) -> bool {
        matches!(self, SpaceKind::RT0C | SpaceKind::DRT0)
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SpaceKind::P1C => "p1c",
            SpaceKind::P1C0 => "p1c0",
            SpaceKind::P0 => "p0",
            SpaceKind::RT0C => "rt0c",
            SpaceKind::DRT0 => "drt0",
        };
        f.write_str(s)
    }
}

impl FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1c" => Ok(SpaceKind::P1C),
            "p1c0" => Ok(SpaceKind::P1C0),
            "p0" => Ok(SpaceKind::P0),
            "rt0c" | "rt0" => Ok(SpaceKind::RT0C),
            "drt0" => Ok(SpaceKind::DRT0),
            _ => Err(Error::InvalidArgument(format!("unknown element '{s}' (expected rt0c or drt0)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisValues {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 2]>),
}

#[derive(Debug, Clone)]
pub struct FeSpace<'m> {
    kind: SpaceKind,
    mesh: &'m Mesh,
    dof_count: usize,
    /// P1 spaces: global dof of each vertex (None when eliminated).
    vertex_dof: Vec<Option<usize>>,
}

impl<'m> FeSpace<'m> {
    pub fn new(mesh: &'m Mesh, kind: SpaceKind) -> Self {
        let mut vertex_dof = Vec::new();
        let dof_count = match kind {
            SpaceKind::P1C => {
                vertex_dof = (0..mesh.n_vertices()).map(Some).collect();
                mesh.n_vertices()
            }
            SpaceKind::P1C0 => {
                let mut next = 0;
                vertex_dof = (0..mesh.n_vertices())
                    .map(|v| {
                        (!mesh.is_boundary_vertex(v)).then(|| {
                            next += 1;
                            next - 1
                        })
                    })
                    .collect();
                next
            }
            SpaceKind::P0 => mesh.n_triangles(),
            SpaceKind::RT0C => mesh.n_edges(),
            SpaceKind::DRT0 => 3 * mesh.n_triangles(),
        };
        FeSpace { kind, mesh, dof_count, vertex_dof }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    /// Number of local shape functions per triangle.
    pub fn local_dim(&self) -> usize {
        if self.kind == SpaceKind::P0 {
            1
        } else {
            3
        }
    }

    /// Global dofs of the local shape functions on triangle `t`; entries
    /// beyond [`FeSpace::local_dim`] are `None`, as are eliminated vertices.
    pub fn local_dofs(&self, t: usize) -> [Option<usize>; 3] {
        match self.kind {
            SpaceKind::P1C | SpaceKind::P1C0 => self.mesh.triangles()[t].map(|v| self.vertex_dof[v]),
            SpaceKind::P0 => [Some(t), None, None],
            SpaceKind::RT0C => self.mesh.tri_edges(t).map(Some),
            SpaceKind::DRT0 => [Some(3 * t), Some(3 * t + 1), Some(3 * t + 2)],
        }
    }

    /// Dof of a mesh vertex in a P1 space.
    pub fn vertex_dof(&self, v: usize) -> Option<usize> {
        self.vertex_dof.get(v).copied().flatten()
    }

    /// Mesh vertex of each dof in a P1 space.
    pub fn dof_vertices(&self) -> Vec<usize> {
        let mut out = vec![0; self.dof_count];
        for (v, d) in self.vertex_dof.iter().enumerate() {
            if let Some(d) = d {
                out[*d] = v;
            }
        }
        out
    }

    /// Nodal values of a P1 function over all mesh vertices (zero at
    /// eliminated vertices).
    pub fn to_nodal(&self, coef: &[f64]) -> Vec<f64> {
        assert_eq!(coef.len(), self.dof_count, "to_nodal dimension mismatch");
        self.vertex_dof.iter().map(|d| d.map_or(0.0, |d| coef[d])).collect()
    }

    /// Restriction of nodal values to the dofs of a P1 space.
    pub fn from_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        self.dof_vertices().into_iter().map(|v| nodal[v]).collect()
    }

    /// Signs multiplying the RT0 local shape functions on `t`.
    pub fn rt_signs(&self, t: usize) -> [f64; 3] {
        match self.kind {
            SpaceKind::RT0C => self.mesh.tri_signs(t),
            _ => [1.0; 3],
        }
    }

    pub fn check_kind(&self, allowed: &[SpaceKind], what: &str) -> Result<()> {
        if allowed.contains(&self.kind) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{what} is not defined for {} spaces", self.kind)))
        }
    }

    /// Values of all local shape functions of triangle `t` at `x`.
    pub fn eval_basis(&self, t: usize, x: Point) -> Result<BasisValues> {
        let el = self.mesh.element(t);
        if !el.contains(x, 1e-10) {
            return Err(Error::PointOutside { x: x[0], y: x[1], what: format!("triangle {t}") });
        }
        Ok(match self.kind {
            SpaceKind::P1C | SpaceKind::P1C0 => BasisValues::Scalar(el.barycentric(x).to_vec()),
            SpaceKind::P0 => BasisValues::Scalar(vec![1.0]),
            SpaceKind::RT0C | SpaceKind::DRT0 => {
                let s = self.rt_signs(t);
                BasisValues::Vector((0..3).map(|k| rt0_local(&el.p, el.area, s[k], k, x)).collect())
            }
        })
    }

    /// Divergence of the RT0 local shape functions on `t` (constants).
    pub fn rt_divergence(&self, t: usize) -> [f64; 3] {
        let area = self.mesh.area(t);
        self.rt_signs(t).map(|s| s / area)
    }

    /// Evaluates a discrete function with coefficients `coef` on triangle
    /// `t` at barycentric point `lam`. Vector spaces return both components,
    /// scalar spaces put the value in slot 0.
    pub fn eval_at(&self, coef: &[f64], t: usize, lam: [f64; 3]) -> [f64; 2] {
        let dofs = self.local_dofs(t);
        match self.kind {
            SpaceKind::P1C | SpaceKind::P1C0 => {
                let v = (0..3).map(|k| dofs[k].map_or(0.0, |d| coef[d]) * lam[k]).sum();
                [v, 0.0]
            }
            SpaceKind::P0 => [coef[t], 0.0],
            SpaceKind::RT0C | SpaceKind::DRT0 => {
                let el = self.mesh.element(t);
                let x = el.from_barycentric(lam);
                let s = self.rt_signs(t);
                let mut out = [0.0; 2];
                for k in 0..3 {
                    let c = coef[dofs[k].unwrap()];
                    let psi = rt0_local(&el.p, el.area, s[k], k, x);
                    out[0] += c * psi[0];
                    out[1] += c * psi[1];
                }
                out
            }
        }
    }

    /// Constant gradient of a P1 function on triangle `t`.
    pub fn gradient(&self, coef: &[f64], t: usize) -> [f64; 2] {
        let el = self.mesh.element(t);
        let dofs = self.local_dofs(t);
        let mut g = [0.0; 2];
        for k in 0..3 {
            if let Some(d) = dofs[k] {
                g[0] += coef[d] * el.grads[k][0];
                g[1] += coef[d] * el.grads[k][1];
            }
        }
        g
    }

    /// RT0 interpolant: coefficients are normal fluxes through the edges,
    /// computed with 3-point Gauss quadrature.
    pub fn interpolate_rt0(&self, field: impl Fn(Point) -> [f64; 2]) -> Result<Vec<f64>> {
        self.check_kind(&[SpaceKind::RT0C, SpaceKind::DRT0], "RT0 interpolation")?;
        let mesh = self.mesh;
        let edge_flux = |a: Point, b: Point, n: [f64; 2], len: f64| -> f64 {
            let (xs, ws) = gauss_interval(3);
            xs.iter()
                .zip(&ws)
                .map(|(&s, &w)| {
                    let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                    let v = field(x);
                    w * (v[0] * n[0] + v[1] * n[1])
                })
                .sum::<f64>()
                * len
        };
        let mut out = vec![0.0; self.dof_count];
        match self.kind {
            SpaceKind::RT0C => {
                for (e, &[a, b]) in mesh.edges().iter().enumerate() {
                    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                    out[e] = edge_flux(pa, pb, mesh.edge_normal(e), mesh.edge_length(e));
                }
            }
            _ => {
                for t in 0..mesh.n_triangles() {
                    let el = mesh.element(t);
                    for k in 0..3 {
                        let (pa, pb) = (el.p[(k + 1) % 3], el.p[(k + 2) % 3]);
                        out[3 * t + k] = edge_flux(pa, pb, el.outward_normal(k), el.edge_length(k));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Nodal interpolation into a P1 space.
    pub fn interpolate_p1(&self, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
        self.check_kind(&[SpaceKind::P1C, SpaceKind::P1C0], "nodal interpolation")?;
        Ok(self.dof_vertices().into_iter().map(|v| f(self.mesh.vertices()[v])).collect())
    }

    /// `L^2` projection onto piecewise constants (element means, degree-5
    /// quadrature).
    pub fn l2_project_p0(&self, f: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
        self.check_kind(&[SpaceKind::P0], "P0 projection")?;
        Ok(l2_project_p0(self.mesh, f))
    }
}

/// Element means of `f`.
pub fn l2_project_p0(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let rule = QuadratureRule::degree5();
    (0..mesh.n_triangles())
        .map(|t| {
            let el = mesh.element(t);
            rule.iter().map(|(l, w)| w * f(el.from_barycentric(l))).sum()
        })
        .collect()
}

/// `s (x - P_k) / (2|T|)`
pub(crate) fn rt0_local(p: &[Point; 3], area: f64, s: f64, k: usize, x: Point) -> [f64; 2] {
    let c = s / (2.0 * area);
    [c * (x[0] - p[k][0]), c * (x[1] - p[k][1])]
}
