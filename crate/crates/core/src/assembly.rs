//! Sparse matrices and load vectors of the discrete problems.
//!
//! Row/column conventions follow the block system
//! `[A B^T; B 0] [y; x] = [0; -f]`: `A` is the `L^2` mass on the flux space,
//! `B_ij = (psi_j, grad phi_i)` has one row per scalar dof and one column per
//! flux dof.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fespace::{rt0_local, FeSpace, SpaceKind};
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;
use crate::sparse::CsrMatrix;

fn same_mesh(a: &FeSpace<'_>, b: &FeSpace<'_>) -> Result<()> {
    if std::ptr::eq(a.mesh(), b.mesh()) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("{} and {} spaces live on different meshes", a.kind(), b.kind())))
    }
}

/// `(psi_i, psi_j)` on an RT0 space.
pub fn mass_rt0(v: &FeSpace<'_>) -> Result<CsrMatrix> {
    v.check_kind(&[SpaceKind::RT0C, SpaceKind::DRT0], "RT0 mass")?;
    let mesh = v.mesh();
    let rule = QuadratureRule::degree2();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let el = mesh.element(t);
        let s = v.rt_signs(t);
        let dofs = v.local_dofs(t);
        let mut local = [[0.0; 3]; 3];
        for (lam, w) in rule.iter() {
            let x = el.from_barycentric(lam);
            let psi: [[f64; 2]; 3] = std::array::from_fn(|k| rt0_local(&el.p, el.area, s[k], k, x));
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * el.area * (psi[i][0] * psi[j][0] + psi[i][1] * psi[j][1]);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                trip.push((dofs[i].unwrap(), dofs[j].unwrap(), local[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(v.dof_count(), v.dof_count(), &trip))
}

/// `B_ij = (psi_j, grad phi_i)` by quadrature.
pub fn coupling_b(v: &FeSpace<'_>, q: &FeSpace<'_>) -> Result<CsrMatrix> {
    v.check_kind(&[SpaceKind::RT0C, SpaceKind::DRT0], "coupling B (flux side)")?;
    q.check_kind(&[SpaceKind::P1C, SpaceKind::P1C0], "coupling B (scalar side)")?;
    same_mesh(v, q)?;
    let mesh = v.mesh();
    let rule = QuadratureRule::degree2();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let el = mesh.element(t);
        let s = v.rt_signs(t);
        let vd = v.local_dofs(t);
        let qd = q.local_dofs(t);
        for (lam, w) in rule.iter() {
            let x = el.from_barycentric(lam);
            for j in 0..3 {
                let psi = rt0_local(&el.p, el.area, s[j], j, x);
                for i in 0..3 {
                    if let Some(row) = qd[i] {
                        let g = el.grads[i];
                        trip.push((row, vd[j].unwrap(), w * el.area * (psi[0] * g[0] + psi[1] * g[1])));
                    }
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(q.dof_count(), v.dof_count(), &trip))
}

/// `B_ij = -(div psi_j, phi_i)`, which equals [`coupling_b`] for conforming
/// RT0 against P1 functions vanishing on the boundary.
pub fn coupling_b_by_parts(v: &FeSpace<'_>, q: &FeSpace<'_>) -> Result<CsrMatrix> {
    v.check_kind(&[SpaceKind::RT0C], "integration-by-parts coupling")?;
    q.check_kind(&[SpaceKind::P1C0], "integration-by-parts coupling")?;
    same_mesh(v, q)?;
    let mesh = v.mesh();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let div = v.rt_divergence(t);
        let vd = v.local_dofs(t);
        for row in q.local_dofs(t).into_iter().flatten() {
            for j in 0..3 {
                // int_T phi_i = |T| / 3
                trip.push((row, vd[j].unwrap(), -div[j] * area / 3.0));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(q.dof_count(), v.dof_count(), &trip))
}

/// `(grad phi_i, grad phi_j)`
pub fn stiffness_p1(q: &FeSpace<'_>) -> Result<CsrMatrix> {
    q.check_kind(&[SpaceKind::P1C, SpaceKind::P1C0], "P1 stiffness")?;
    let mesh = q.mesh();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let el = mesh.element(t);
        let d = q.local_dofs(t);
        for i in 0..3 {
            for j in 0..3 {
                if let (Some(a), Some(b)) = (d[i], d[j]) {
                    let g = (el.grads[i][0] * el.grads[j][0] + el.grads[i][1] * el.grads[j][1]) * el.area;
                    trip.push((a, b, g));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(q.dof_count(), q.dof_count(), &trip))
}

/// `(phi_i, phi_j)`
pub fn mass_p1(q: &FeSpace<'_>) -> Result<CsrMatrix> {
    q.check_kind(&[SpaceKind::P1C, SpaceKind::P1C0], "P1 mass")?;
    let mesh = q.mesh();
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let d = q.local_dofs(t);
        for i in 0..3 {
            for j in 0..3 {
                if let (Some(a), Some(b)) = (d[i], d[j]) {
                    let f = if i == j { 2.0 } else { 1.0 };
                    trip.push((a, b, f * area / 12.0));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(q.dof_count(), q.dof_count(), &trip))
}

/// Diagonal of triangle areas.
pub fn mass_p0(p: &FeSpace<'_>) -> Result<CsrMatrix> {
    p.check_kind(&[SpaceKind::P0], "P0 mass")?;
    let areas: Vec<f64> = (0..p.mesh().n_triangles()).map(|t| p.mesh().area(t)).collect();
    Ok(CsrMatrix::from_diagonal(&areas))
}

/// `D_Tj = (div psi_j, 1)_T`, one row per triangle.
pub fn div_rt0_p0(v: &FeSpace<'_>, p: &FeSpace<'_>) -> Result<CsrMatrix> {
    v.check_kind(&[SpaceKind::RT0C, SpaceKind::DRT0], "divergence coupling")?;
    p.check_kind(&[SpaceKind::P0], "divergence coupling")?;
    same_mesh(v, p)?;
    let mesh = v.mesh();
    let mut trip = Vec::with_capacity(3 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let s = v.rt_signs(t);
        for (k, d) in v.local_dofs(t).iter().enumerate() {
            trip.push((t, d.unwrap(), s[k]));
        }
    }
    Ok(CsrMatrix::from_triplets(p.dof_count(), v.dof_count(), &trip))
}

/// `C_iT = (chi_T, phi_i)`, the P1-P0 `L^2` pairing.
pub fn coupling_p1_p0(q: &FeSpace<'_>, p: &FeSpace<'_>) -> Result<CsrMatrix> {
    q.check_kind(&[SpaceKind::P1C, SpaceKind::P1C0], "P1-P0 coupling")?;
    p.check_kind(&[SpaceKind::P0], "P1-P0 coupling")?;
    same_mesh(q, p)?;
    let mesh = q.mesh();
    let mut trip = Vec::with_capacity(3 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        for d in q.local_dofs(t).into_iter().flatten() {
            trip.push((d, t, area / 3.0));
        }
    }
    Ok(CsrMatrix::from_triplets(q.dof_count(), p.dof_count(), &trip))
}

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Right-hand side data.
#[derive(Clone)]
pub enum Source {
    Zero,
    Analytic(ScalarFn),
    /// Piecewise constant values, one per triangle.
    P0(Vec<f64>),
    /// Unit-mass indicator of the (lowest-indexed) triangle containing the
    /// point.
    DiracApprox(Point),
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Zero => write!(f, "Zero"),
            Source::Analytic(_) => write!(f, "Analytic(..)"),
            Source::P0(v) => write!(f, "P0({} values)", v.len()),
            Source::DiracApprox(p) => write!(f, "DiracApprox({p:?})"),
        }
    }
}

impl Source {
    pub fn analytic(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Source::Analytic(Arc::new(f))
    }

    /// P0 coefficients for the sources that have them.
    pub fn to_p0(&self, mesh: &Mesh) -> Result<Option<Vec<f64>>> {
        Ok(match self {
            Source::Zero => Some(vec![0.0; mesh.n_triangles()]),
            Source::P0(v) => {
                if v.len() != mesh.n_triangles() {
                    return Err(Error::DimensionMismatch(format!(
                        "P0 source has {} values for {} triangles",
                        v.len(),
                        mesh.n_triangles()
                    )));
                }
                Some(v.clone())
            }
            Source::DiracApprox(p) => {
                let t = mesh.locate(*p).ok_or_else(|| Error::PointOutside {
                    x: p[0],
                    y: p[1],
                    what: "the domain".into(),
                })?;
                let mut v = vec![0.0; mesh.n_triangles()];
                v[t] = 1.0 / mesh.area(t);
                Some(v)
            }
            Source::Analytic(_) => None,
        })
    }

    /// Pointwise evaluation on triangle `t` (P0 data is constant per triangle).
    pub fn eval(&self, t: usize, x: Point, p0: Option<&[f64]>) -> f64 {
        match (self, p0) {
            (Source::Analytic(f), _) => f(x),
            (_, Some(v)) => v[t],
            _ => 0.0,
        }
    }
}

/// `F_i = <f, phi_i>` on a P1 space, or `F_T = (f, 1)_T` on P0.
pub fn load_vector(space: &FeSpace<'_>, f: &Source) -> Result<Vec<f64>> {
    space.check_kind(&[SpaceKind::P1C, SpaceKind::P1C0, SpaceKind::P0], "load vector")?;
    let mesh = space.mesh();
    let p0 = f.to_p0(mesh)?;
    let rule = QuadratureRule::degree2();
    let mut out = vec![0.0; space.dof_count()];
    for t in 0..mesh.n_triangles() {
        let el = mesh.element(t);
        let dofs = space.local_dofs(t);
        match (&p0, space.kind()) {
            (Some(v), SpaceKind::P0) => out[t] += v[t] * el.area,
            (Some(v), _) => {
                for d in dofs.into_iter().flatten() {
                    out[d] += v[t] * el.area / 3.0;
                }
            }
            (None, kind) => {
                for (lam, w) in rule.iter() {
                    let fx = f.eval(t, el.from_barycentric(lam), None);
                    if kind == SpaceKind::P0 {
                        out[t] += w * el.area * fx;
                    } else {
                        for k in 0..3 {
                            if let Some(d) = dofs[k] {
                                out[d] += w * el.area * fx * lam[k];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
