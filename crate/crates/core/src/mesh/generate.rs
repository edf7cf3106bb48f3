//! Structured mesh generators and red refinement.

use super::{DomainTag, Mesh, Point};
use crate::error::{Error, Result};

fn check_n(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(format!("{what}: number of subdivisions must be at least 1")));
    }
    Ok(())
}

/// `n x n` squares on the unit square, each split into four triangles
/// through its center. Grid vertices come first (row major), then centers.
pub fn gen_crossed(n: usize) -> Result<Mesh> {
    check_n(n, "crossed mesh")?;
    let h = 1.0 / n as f64;
    let mut vertices: Vec<Point> = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut triangles = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = vertices.len();
            vertices.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            let a = j * (n + 1) + i;
            let (b, d) = (a + 1, a + n + 1);
            let e = d + 1;
            triangles.extend_from_slice(&[[a, b, c], [b, e, c], [e, d, c], [d, a, c]]);
        }
    }
    Mesh::new(vertices, triangles, DomainTag::UnitSquare)
}

/// `n x n` squares on the unit square, each cut by its lower-left to
/// upper-right diagonal.
pub fn gen_right(n: usize) -> Result<Mesh> {
    check_n(n, "right mesh")?;
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = j * (n + 1) + i;
            let (b, d) = (a + 1, a + n + 1);
            let e = d + 1;
            triangles.push([a, b, e]);
            triangles.push([a, e, d]);
        }
    }
    Mesh::new(vertices, triangles, DomainTag::UnitSquare)
}

/// Right-pattern mesh of `(-1,1)^2 \ (0,1)x(-1,0)` with `n` squares per unit
/// length.
pub fn gen_lshape(n: usize) -> Result<Mesh> {
    check_n(n, "L-shaped mesh")?;
    let h = 1.0 / n as f64;
    let m = 2 * n;
    let excluded_vertex = |i: usize, j: usize| i > n && j < n;
    let mut index = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            if !excluded_vertex(i, j) {
                index[j * (m + 1) + i] = vertices.len();
                vertices.push([-1.0 + i as f64 * h, -1.0 + j as f64 * h]);
            }
        }
    }
    let mut triangles = Vec::new();
    for j in 0..m {
        for i in 0..m {
            if i >= n && j < n {
                continue;
            }
            let id = |i: usize, j: usize| index[j * (m + 1) + i];
            let (a, b, d, e) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([a, b, e]);
            triangles.push([a, e, d]);
        }
    }
    Mesh::new(vertices, triangles, DomainTag::LShape)
}

/// Red refinement: every triangle is split into four through its edge
/// midpoints. Midpoint of edge `e` gets vertex index `n_vertices + e`.
pub fn uniform_refine(mesh: &Mesh) -> Result<Mesh> {
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices().to_vec();
    for &[a, b] in mesh.edges() {
        let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
    }
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for (t, &[v0, v1, v2]) in mesh.triangles().iter().enumerate() {
        let [e0, e1, e2] = mesh.tri_edges(t);
        let (m0, m1, m2) = (nv + e0, nv + e1, nv + e2);
        triangles.extend_from_slice(&[[v0, m2, m1], [m2, v1, m0], [m1, m0, v2], [m0, m1, m2]]);
    }
    Mesh::new(vertices, triangles, mesh.domain())
}
