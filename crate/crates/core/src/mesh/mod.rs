//! Triangular meshes with a global edge orientation.
//!
//! Local edge `k` of a triangle is the edge opposite its local vertex `k`,
//! i.e. the edge joining local vertices `k + 1` and `k + 2` (mod 3). Every
//! global edge `(a, b)` is stored with `a < b`; its unit normal is the
//! 90-degree clockwise rotation of the unit vector from `a` to `b`. The sign
//! stored for a (triangle, local edge) pair is `+1` when the triangle's
//! outward normal agrees with the global normal, `-1` otherwise.

mod generate;
mod io;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{gen_crossed, gen_lshape, gen_right, uniform_refine};
pub use io::{export_json, import_mesh, MeshFormat};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    UnitSquare,
    LShape,
    Imported,
}

impl DomainTag {
    /// Exact area of the domain, when it is known a priori.
    pub fn area(self) -> Option<f64> {
        match self {
            DomainTag::UnitSquare => Some(1.0),
            DomainTag::LShape => Some(3.0),
            DomainTag::Imported => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    tri_edges: Vec<[usize; 3]>,
    tri_signs: Vec<[f64; 3]>,
    edge_tris: Vec<[Option<usize>; 2]>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
    domain: DomainTag,
}

/// Geometry of one triangle: vertex coordinates, area and the (constant)
/// gradients of the three barycentric coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub p: [Point; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl Element {
    pub fn new(p: [Point; 3]) -> Self {
        let area = signed_area(&p);
        let mut grads = [[0.0; 2]; 3];
        for (k, g) in grads.iter_mut().enumerate() {
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            *g = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
        }
        Element { p, area, grads }
    }

    pub fn centroid(&self) -> Point {
        [(self.p[0][0] + self.p[1][0] + self.p[2][0]) / 3.0, (self.p[0][1] + self.p[1][1] + self.p[2][1]) / 3.0]
    }

    pub fn barycentric(&self, x: Point) -> [f64; 3] {
        let mut lam = [0.0; 3];
        for (k, l) in lam.iter_mut().enumerate() {
            let a = self.p[(k + 1) % 3];
            let b = self.p[(k + 2) % 3];
            *l = signed_area(&[x, a, b]) / self.area;
        }
        lam
    }

    pub fn from_barycentric(&self, lam: [f64; 3]) -> Point {
        let mut x = [0.0; 2];
        for k in 0..3 {
            x[0] += lam[k] * self.p[k][0];
            x[1] += lam[k] * self.p[k][1];
        }
        x
    }

    pub fn contains(&self, x: Point, tol: f64) -> bool {
        self.barycentric(x).iter().all(|&l| l >= -tol)
    }

    /// Length of local edge `k`.
    pub fn edge_length(&self, k: usize) -> f64 {
        let a = self.p[(k + 1) % 3];
        let b = self.p[(k + 2) % 3];
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Outward unit normal on local edge `k`.
    pub fn outward_normal(&self, k: usize) -> [f64; 2] {
        let a = self.p[(k + 1) % 3];
        let b = self.p[(k + 2) % 3];
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        [(b[1] - a[1]) / len, -(b[0] - a[0]) / len]
    }

    pub fn diameter(&self) -> f64 {
        (0..3).map(|k| self.edge_length(k)).fold(0.0, f64::max)
    }
}

pub(crate) fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

/// A sequence of meshes indexed by a resolution parameter.
#[derive(Debug, Clone)]
pub enum MeshFamily {
    Crossed,
    Right,
    LShape,
    /// Red refinements of a base mesh; level `n` means `n` refinements.
    Refined(Box<Mesh>),
    /// Mesh files; `{n}` in the path is replaced by the level. The format
    /// follows the file extension.
    Files(String),
}

impl MeshFamily {
    /// Structured families use `n` subdivisions per unit length.
    pub fn level(&self, n: usize) -> Result<Mesh> {
        match self {
            MeshFamily::Crossed => gen_crossed(n),
            MeshFamily::Right => gen_right(n),
            MeshFamily::LShape => gen_lshape(n),
            MeshFamily::Refined(base) => {
                let mut m = (**base).clone();
                for _ in 0..n {
                    m = uniform_refine(&m)?;
                }
                Ok(m)
            }
            MeshFamily::Files(pattern) => {
                let path = PathBuf::from(pattern.replace("{n}", &n.to_string()));
                let format = MeshFormat::from_path(&path).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "cannot infer the mesh format of '{}' (expected .json, .node or .ele)",
                        path.display()
                    ))
                })?;
                import_mesh(&path, format)
            }
        }
    }

    /// `n0, 2 n0, 4 n0, ...` for structured families and file patterns,
    /// `0, 1, 2, ...` refinements otherwise.
    pub fn dyadic_levels(&self, n0: usize, count: usize) -> Vec<usize> {
        match self {
            MeshFamily::Refined(_) => (0..count).collect(),
            _ => (0..count).map(|l| n0 << l).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Crossed => "crossed",
            MeshFamily::Right => "right",
            MeshFamily::LShape => "lshape",
            MeshFamily::Refined(_) => "refined",
            MeshFamily::Files(_) => "files",
        }
    }
}

impl std::str::FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crossed" => Ok(MeshFamily::Crossed),
            "right" => Ok(MeshFamily::Right),
            "lshape" => Ok(MeshFamily::LShape),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(MeshFamily::Files(path.to_string())),
                _ => Err(Error::InvalidArgument(format!(
                    "unknown mesh family '{s}' (expected crossed, right, lshape or file:<path>)"
                ))),
            },
        }
    }
}

impl Mesh {
    /// Builds the edge topology of a triangulation. Clockwise triangles are
    /// reoriented; degenerate ones and dangling indices are rejected.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, domain: DomainTag) -> Result<Self> {
        Self::with_boundary(vertices, triangles, domain, &[])
    }

    /// Like [`Mesh::new`], additionally flagging `extra_boundary` vertices as
    /// boundary vertices (on top of those lying on boundary edges).
    pub fn with_boundary(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        domain: DomainTag,
        extra_boundary: &[usize],
    ) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh has no triangles".into()));
        }
        let scale = bounding_box_diameter(&vertices).max(f64::MIN_POSITIVE);
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(Error::VertexOutOfRange { triangle: t, index: v, count: nv });
                }
            }
            let area = signed_area(&[vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
            if area.abs() <= 1e-14 * scale * scale {
                return Err(Error::DegenerateTriangle { triangle: t });
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(3 * triangles.len() / 2 + nv);
        let mut edges = Vec::new();
        let mut edge_tris: Vec<[Option<usize>; 2]> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        let mut tri_signs = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            let mut ts = [0.0; 3];
            for k in 0..3 {
                let a = tri[(k + 1) % 3];
                let b = tri[(k + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_tris.push([None, None]);
                    edges.len() - 1
                });
                match edge_tris[e] {
                    [None, _] => edge_tris[e][0] = Some(t),
                    [Some(_), None] => edge_tris[e][1] = Some(t),
                    [Some(_), Some(_)] => {
                        return Err(Error::NonManifoldEdge { a: key[0], b: key[1], count: 3 });
                    }
                }
                te[k] = e;
                ts[k] = if a < b { 1.0 } else { -1.0 };
            }
            tri_edges.push(te);
            tri_signs.push(ts);
        }
        // two triangles sharing an edge must traverse it in opposite directions
        for (e, pair) in edge_tris.iter().enumerate() {
            if let [Some(t0), Some(t1)] = *pair {
                let s0 = sign_of(&tri_edges[t0], &tri_signs[t0], e);
                let s1 = sign_of(&tri_edges[t1], &tri_signs[t1], e);
                if s0 == s1 {
                    return Err(Error::InvalidArgument(format!(
                        "triangles {t0} and {t1} overlap across edge ({}, {})",
                        edges[e][0], edges[e][1]
                    )));
                }
            }
        }

        let boundary_edge: Vec<bool> = edge_tris.iter().map(|p| p[1].is_none()).collect();
        let mut boundary_vertex = vec![false; nv];
        for (e, &b) in boundary_edge.iter().enumerate() {
            if b {
                boundary_vertex[edges[e][0]] = true;
                boundary_vertex[edges[e][1]] = true;
            }
        }
        for &v in extra_boundary {
            if v >= nv {
                return Err(Error::InvalidArgument(format!("boundary vertex {v} out of range")));
            }
            boundary_vertex[v] = true;
        }

        Ok(Mesh { vertices, triangles, edges, tri_edges, tri_signs, edge_tris, boundary_vertex, boundary_edge, domain })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    /// Global edge indices of a triangle, local edge `k` opposite vertex `k`.
    pub fn tri_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    /// Orientation signs matching [`Mesh::tri_edges`].
    pub fn tri_signs(&self, t: usize) -> [f64; 3] {
        self.tri_signs[t]
    }

    /// The one or two triangles adjacent to an edge.
    pub fn edge_triangles(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_tris[e]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|&&b| !b).count()
    }

    pub fn element(&self, t: usize) -> Element {
        let [a, b, c] = self.triangles[t];
        Element::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn area(&self, t: usize) -> f64 {
        self.element(t).area
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    /// Unit normal of edge `e` under the global orientation convention.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let len = (q[0] - p[0]).hypot(q[1] - p[1]);
        [(q[1] - p[1]) / len, -(q[0] - p[0]) / len]
    }

    /// Mesh size: the largest triangle diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.element(t).diameter()).fold(0.0, f64::max)
    }

    /// Local index (0..3) of edge `e` in triangle `t`.
    pub fn local_edge(&self, t: usize, e: usize) -> Option<usize> {
        self.tri_edges[t].iter().position(|&x| x == e)
    }

    /// Lowest-indexed triangle containing `x` (points on shared edges go to
    /// the first triangle in index order).
    pub fn locate(&self, x: Point) -> Option<usize> {
        (0..self.n_triangles()).find(|&t| self.element(t).contains(x, 1e-12))
    }

    /// Triangles sharing vertex `v`, in index order.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v].push(t);
            }
        }
        out
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    /// Checks every structural invariant; returns a description of the first
    /// violation.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.n_triangles() {
            if self.area(t) <= 0.0 {
                return Err(Error::DegenerateTriangle { triangle: t });
            }
        }
        for (e, pair) in self.edge_tris.iter().enumerate() {
            let [a, b] = self.edges[e];
            if a >= b {
                return Err(Error::InvalidArgument(format!("edge {e} stored as ({a}, {b})")));
            }
            match *pair {
                [Some(t0), Some(t1)] => {
                    let s0 = sign_of(&self.tri_edges[t0], &self.tri_signs[t0], e);
                    let s1 = sign_of(&self.tri_edges[t1], &self.tri_signs[t1], e);
                    if s0 + s1 != 0.0 || self.boundary_edge[e] {
                        return Err(Error::InvalidArgument(format!("interior edge {e} has inconsistent signs")));
                    }
                }
                [Some(_), None] => {
                    if !self.boundary_edge[e] {
                        return Err(Error::InvalidArgument(format!("edge {e} with one triangle not flagged boundary")));
                    }
                }
                _ => return Err(Error::InvalidArgument(format!("edge {e} has no triangle"))),
            }
        }
        for t in 0..self.n_triangles() {
            let el = self.element(t);
            for k in 0..3 {
                let e = self.tri_edges[t][k];
                let n = self.edge_normal(e);
                let o = el.outward_normal(k);
                let agree = if n[0] * o[0] + n[1] * o[1] > 0.0 { 1.0 } else { -1.0 };
                if agree != self.tri_signs[t][k] {
                    return Err(Error::InvalidArgument(format!("triangle {t} local edge {k} has a wrong sign")));
                }
            }
        }
        if self.domain != DomainTag::Imported && self.euler_characteristic() != 1 {
            return Err(Error::InvalidArgument(format!(
                "Euler characteristic {} on a simply connected domain",
                self.euler_characteristic()
            )));
        }
        Ok(())
    }
}

fn sign_of(te: &[usize; 3], ts: &[f64; 3], e: usize) -> f64 {
    let k = te.iter().position(|&x| x == e).expect("edge belongs to triangle");
    ts[k]
}

fn bounding_box_diameter(v: &[Point]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in v {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (hi[0] - lo[0]).hypot(hi[1] - lo[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Mesh {
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![[0, 1, 2], [0, 2, 3]], DomainTag::Imported)
            .unwrap()
    }

    #[test]
    fn two_triangle_square_topology() {
        let m = square();
        assert_eq!(m.n_edges(), 5);
        assert_eq!(m.euler_characteristic(), 1);
        m.validate().unwrap();
        let diag = m.edges().iter().position(|&e| e == [0, 2]).unwrap();
        assert!(!m.is_boundary_edge(diag));
        let [t0, t1] = m.edge_triangles(diag);
        let s0 = m.tri_signs(t0.unwrap())[m.local_edge(t0.unwrap(), diag).unwrap()];
        let s1 = m.tri_signs(t1.unwrap())[m.local_edge(t1.unwrap(), diag).unwrap()];
        assert_eq!(s0, -s1);
    }

    #[test]
    fn clockwise_triangle_is_reoriented() {
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 2, 1], [0, 2, 3]],
            DomainTag::Imported,
        )
        .unwrap();
        assert!((0..2).all(|t| m.area(t) > 0.0));
        m.validate().unwrap();
    }

    #[test]
    fn dangling_index_and_zero_area_rejected() {
        let err =
            Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 5]], DomainTag::Imported).unwrap_err();
        assert!(err.to_string().contains("vertex index out of range"), "{err}");
        let err =
            Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![[0, 1, 2]], DomainTag::Imported).unwrap_err();
        assert!(matches!(err, Error::DegenerateTriangle { triangle: 0 }));
    }

    #[test]
    fn edge_normal_is_clockwise_rotation() {
        let m = square();
        let e = m.edges().iter().position(|&e| e == [0, 1]).unwrap();
        assert_eq!(m.edge_normal(e), [0.0, -1.0]);
    }

    #[test]
    fn barycentric_round_trip() {
        let el = Element::new([[0.2, 0.1], [1.3, 0.4], [0.5, 1.7]]);
        let x = el.from_barycentric([0.2, 0.3, 0.5]);
        let lam = el.barycentric(x);
        for (a, b) in lam.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-14);
        }
        let gsum = [el.grads.iter().map(|g| g[0]).sum::<f64>(), el.grads.iter().map(|g| g[1]).sum::<f64>()];
        assert!(gsum[0].abs() < 1e-14 && gsum[1].abs() < 1e-14);
    }
}
