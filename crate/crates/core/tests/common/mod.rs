//! Independent dense reference implementations used as test oracles.
//!
//! Nothing here reuses the library's basis functions, quadrature or dof
//! maps: everything is rebuilt from vertex coordinates and the edge list.

#![allow(dead_code)]

use std::collections::HashMap;

use dualmix_core::mesh::{gen_crossed, gen_right};
use dualmix_core::{Mesh, Point};
use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Four-point Gauss-Legendre on [-1, 1].
const GL_X: [f64; 4] = [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526];
const GL_W: [f64; 4] = [0.3478548451374638, 0.6521451548625461, 0.6521451548625461, 0.3478548451374638];

/// Collapsed-square (Duffy) rule on a physical triangle: exact for
/// polynomials of total degree 6.
pub fn triangle_rule(p: [Point; 3]) -> Vec<(Point, f64)> {
    let area2 = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
    let mut out = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let s = 0.5 * (GL_X[i] + 1.0);
            let t = 0.5 * (GL_X[j] + 1.0);
            // (s, t) in the unit square -> (a, b) in the reference triangle
            let a = s;
            let b = t * (1.0 - s);
            let w = 0.25 * GL_W[i] * GL_W[j] * (1.0 - s) * area2;
            let x = [
                p[0][0] + a * (p[1][0] - p[0][0]) + b * (p[2][0] - p[0][0]),
                p[0][1] + a * (p[1][1] - p[0][1]) + b * (p[2][1] - p[0][1]),
            ];
            out.push((x, w));
        }
    }
    out
}

pub struct Tri {
    pub v: [usize; 3],
    pub p: [Point; 3],
    pub area: f64,
    /// Rows are gradients of the barycentric coordinates.
    pub grads: [[f64; 2]; 3],
}

pub fn tri(mesh: &Mesh, t: usize) -> Tri {
    let v = mesh.triangles()[t];
    let p = v.map(|i| mesh.vertices()[i]);
    let m = Matrix3::new(1.0, 1.0, 1.0, p[0][0], p[1][0], p[2][0], p[0][1], p[1][1], p[2][1]);
    let inv = m.try_inverse().expect("degenerate triangle");
    let grads = [0, 1, 2].map(|k| [inv[(k, 1)], inv[(k, 2)]]);
    let area = 0.5 * m.determinant().abs();
    Tri { v, p, area, grads }
}

pub fn hat(tr: &Tri, k: usize, x: Point) -> f64 {
    let m = Matrix3::new(1.0, 1.0, 1.0, tr.p[0][0], tr.p[1][0], tr.p[2][0], tr.p[0][1], tr.p[1][1], tr.p[2][1]);
    let lam = m.try_inverse().unwrap() * Vector3::new(1.0, x[0], x[1]);
    lam[k]
}

/// Outward unit normal of the edge opposite local vertex `k`.
pub fn outward(tr: &Tri, k: usize) -> [f64; 2] {
    let a = tr.p[(k + 1) % 3];
    let b = tr.p[(k + 2) % 3];
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = d[0].hypot(d[1]);
    let mut n = [d[1] / len, -d[0] / len];
    let mid = [0.5 * (a[0] + b[0]) - tr.p[k][0], 0.5 * (a[1] + b[1]) - tr.p[k][1]];
    if n[0] * mid[0] + n[1] * mid[1] < 0.0 {
        n = [-n[0], -n[1]];
    }
    n
}

/// Reference edge normal: rotate the vector from the lower to the higher
/// vertex index clockwise.
pub fn edge_normal(mesh: &Mesh, a: usize, b: usize) -> [f64; 2] {
    let (lo, hi) = (a.min(b), a.max(b));
    let (p, q) = (mesh.vertices()[lo], mesh.vertices()[hi]);
    let d = [q[0] - p[0], q[1] - p[1]];
    let len = d[0].hypot(d[1]);
    [d[1] / len, -d[0] / len]
}

/// RT0 field with unit flux out of `tr` through the edge opposite `k`.
pub fn rt_outward(tr: &Tri, k: usize, x: Point) -> [f64; 2] {
    let c = 1.0 / (2.0 * tr.area);
    [c * (x[0] - tr.p[k][0]), c * (x[1] - tr.p[k][1])]
}

pub fn edge_map(mesh: &Mesh) -> HashMap<[usize; 2], usize> {
    mesh.edges().iter().enumerate().map(|(e, &[a, b])| ([a.min(b), a.max(b)], e)).collect()
}

pub fn boundary_vertices(mesh: &Mesh) -> Vec<bool> {
    let mut count: HashMap<[usize; 2], usize> = HashMap::new();
    for t in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            *count.entry([a.min(b), a.max(b)]).or_default() += 1;
        }
    }
    let mut out = vec![false; mesh.n_vertices()];
    for (e, c) in count {
        if c == 1 {
            out[e[0]] = true;
            out[e[1]] = true;
        }
    }
    out
}

/// Global index of each vertex in `P1C0` (ascending interior vertices).
pub fn interior_numbering(mesh: &Mesh) -> Vec<Option<usize>> {
    let bnd = boundary_vertices(mesh);
    let mut next = 0;
    bnd.iter()
        .map(|&b| {
            (!b).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Flux {
    Conforming,
    Discontinuous,
}

/// Local flux shape functions of triangle `t`: `(global dof, sign)` per
/// local edge.
pub fn flux_dofs(mesh: &Mesh, t: usize, kind: Flux) -> [(usize, f64); 3] {
    let tr = tri(mesh, t);
    let em = edge_map(mesh);
    [0, 1, 2].map(|k| match kind {
        Flux::Discontinuous => (3 * t + k, 1.0),
        Flux::Conforming => {
            let (a, b) = (tr.v[(k + 1) % 3], tr.v[(k + 2) % 3]);
            let n = edge_normal(mesh, a, b);
            let o = outward(&tr, k);
            let s = if n[0] * o[0] + n[1] * o[1] > 0.0 { 1.0 } else { -1.0 };
            (em[&[a.min(b), a.max(b)]], s)
        }
    })
}

pub fn flux_dim(mesh: &Mesh, kind: Flux) -> usize {
    match kind {
        Flux::Conforming => mesh.n_edges(),
        Flux::Discontinuous => 3 * mesh.n_triangles(),
    }
}

pub fn oracle_mass_rt0(mesh: &Mesh, kind: Flux) -> DMatrix<f64> {
    let n = flux_dim(mesh, kind);
    let mut m = DMatrix::zeros(n, n);
    for t in 0..mesh.n_triangles() {
        let tr = tri(mesh, t);
        let dofs = flux_dofs(mesh, t, kind);
        for (x, w) in triangle_rule(tr.p) {
            for i in 0..3 {
                for j in 0..3 {
                    let (a, b) = (rt_outward(&tr, i, x), rt_outward(&tr, j, x));
                    m[(dofs[i].0, dofs[j].0)] += w * dofs[i].1 * dofs[j].1 * (a[0] * b[0] + a[1] * b[1]);
                }
            }
        }
    }
    m
}

/// `B_ij = (psi_j, grad phi_i)`; rows over interior vertices when
/// `interior_only`, otherwise all vertices.
pub fn oracle_coupling(mesh: &Mesh, kind: Flux, interior_only: bool) -> DMatrix<f64> {
    let rows = row_map(mesh, interior_only);
    let nr = rows.iter().flatten().count();
    let mut m = DMatrix::zeros(nr, flux_dim(mesh, kind));
    for t in 0..mesh.n_triangles() {
        let tr = tri(mesh, t);
        let dofs = flux_dofs(mesh, t, kind);
        for (x, w) in triangle_rule(tr.p) {
            for i in 0..3 {
                let Some(r) = rows[tr.v[i]] else { continue };
                for j in 0..3 {
                    let psi = rt_outward(&tr, j, x);
                    let g = tr.grads[i];
                    m[(r, dofs[j].0)] += w * dofs[j].1 * (psi[0] * g[0] + psi[1] * g[1]);
                }
            }
        }
    }
    m
}

/// `-(div psi_j, phi_i)` for the conforming space and interior rows.
pub fn oracle_coupling_by_parts(mesh: &Mesh) -> DMatrix<f64> {
    let rows = row_map(mesh, true);
    let nr = rows.iter().flatten().count();
    let mut m = DMatrix::zeros(nr, mesh.n_edges());
    for t in 0..mesh.n_triangles() {
        let tr = tri(mesh, t);
        let dofs = flux_dofs(mesh, t, Flux::Conforming);
        for (x, w) in triangle_rule(tr.p) {
            for i in 0..3 {
                let Some(r) = rows[tr.v[i]] else { continue };
                for j in 0..3 {
                    m[(r, dofs[j].0)] -= w * dofs[j].1 / tr.area * hat(&tr, i, x);
                }
            }
        }
    }
    m
}

fn row_map(mesh: &Mesh, interior_only: bool) -> Vec<Option<usize>> {
    if interior_only {
        interior_numbering(mesh)
    } else {
        (0..mesh.n_vertices()).map(Some).collect()
    }
}

pub fn oracle_stiffness(mesh: &Mesh) -> DMatrix<f64> {
    let rows = interior_numbering(mesh);
    let n = rows.iter().flatten().count();
    let mut m = DMatrix::zeros(n, n);
    for t in 0..mesh.n_triangles() {
        let tr = tri(mesh, t);
        for (_, w) in triangle_rule(tr.p) {
            for i in 0..3 {
                for j in 0..3 {
                    if let (Some(r), Some(c)) = (rows[tr.v[i]], rows[tr.v[j]]) {
                        let (a, b) = (tr.grads[i], tr.grads[j]);
                        m[(r, c)] += w * (a[0] * b[0] + a[1] * b[1]);
                    }
                }
            }
        }
    }
    m
}

pub fn oracle_mass_p1(mesh: &Mesh, interior_only: bool) -> DMatrix<f64> {
    let rows = row_map(mesh, interior_only);
    let n = rows.iter().flatten().count();
    let mut m = DMatrix::zeros(n, n);
    for t in 0..mesh.n_triangles() {
        let tr = tri(mesh, t);
        for (x, w) in triangle_rule(tr.p) {
            for i in 0..3 {
                for j in 0..3 {
                    if let (Some(r), Some(c)) = (rows[tr.v[i]], rows[tr.v[j]]) {
                        m[(r, c)] += w * hat(&tr, i, x) * hat(&tr, j, x);
                    }
                }
            }
        }
    }
    m
}

pub fn oracle_mass_p0(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.n_triangles();
    let mut m = DMatrix::zeros(n, n);
    for t in 0..n {
        let tr = tri(mesh, t);
        m[(t, t)] = triangle_rule(tr.p).iter().map(|(_, w)| w).sum();
    }
    m
}

/// `(div psi_E, chi_T)`, rows over triangles.
pub fn oracle_div(mesh: &Mesh) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(mesh.n_triangles(), mesh.n_edges());
    for t in 0..mesh.n_triangles() {
        let tr = tri(mesh, t);
        let dofs = flux_dofs(mesh, t, Flux::Conforming);
        let area: f64 = triangle_rule(tr.p).iter().map(|(_, w)| w).sum();
        for (e, s) in dofs {
            m[(t, e)] += s / tr.area * area;
        }
    }
    m
}

/// `C_ij = (chi_j, phi_i)`, rows over interior vertices.
pub fn oracle_p1_p0(mesh: &Mesh) -> DMatrix<f64> {
    let rows = interior_numbering(mesh);
    let n = rows.iter().flatten().count();
    let mut m = DMatrix::zeros(n, mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let tr = tri(mesh, t);
        for (x, w) in triangle_rule(tr.p) {
            for i in 0..3 {
                if let Some(r) = rows[tr.v[i]] {
                    m[(r, t)] += w * hat(&tr, i, x);
                }
            }
        }
    }
    m
}

pub fn dense(m: &dualmix_core::CsrMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.triplets() {
        out[(i, j)] += v;
    }
    out
}

pub fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    (a - b).abs().max()
}

/// Moves every interior vertex of `mesh` by up to `amplitude` times the
/// local spacing `h` in each coordinate. The domain tag is kept.
pub fn perturb(mesh: &Mesh, h: f64, amplitude: f64, rng: &mut ChaCha8Rng) -> Mesh {
    let bnd = boundary_vertices(mesh);
    let vertices: Vec<Point> = mesh
        .vertices()
        .iter()
        .zip(&bnd)
        .map(|(p, &b)| {
            if b {
                *p
            } else {
                [p[0] + amplitude * h * rng.random_range(-1.0..1.0), p[1] + amplitude * h * rng.random_range(-1.0..1.0)]
            }
        })
        .collect();
    Mesh::new(vertices, mesh.triangles().to_vec(), mesh.domain()).expect("perturbed mesh is valid")
}

/// Small meshes (at most 32 triangles) used by the oracle comparisons.
pub fn small_meshes(seed: u64) -> Vec<Mesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![gen_crossed(2).unwrap(), gen_right(4).unwrap(), gen_right(3).unwrap()];
    out.push(perturb(&gen_crossed(2).unwrap(), 0.5, 0.2, &mut rng));
    out.push(perturb(&gen_right(4).unwrap(), 0.25, 0.2, &mut rng));
    out.push(perturb(&gen_right(2).unwrap(), 0.5, 0.2, &mut rng));
    for m in &out {
        assert!(m.n_triangles() <= 32);
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
