//! Mesh import/export.
//!
//! Two formats are understood:
//!
//! * `internal_json`: `{"vertices": [[x, y], ...], "triangles": [[i, j, k], ...],
//!   "boundary_vertices": [...]}` with 0-based indices, `boundary_vertices`
//!   optional.
//! * `triangle_pair`: the `.node` / `.ele` text pair. The node file starts
//!   with `<#points> 2 <#attrs> <#markers>` followed by `index x y [attrs]
//!   [marker]`; the element file with `<#tris> 3 <#attrs>` followed by
//!   `index v1 v2 v3`. Vertex numbering follows the first index of the node
//!   file (normally 1). `#` starts a comment.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DomainTag, Mesh, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    TrianglePair,
    InternalJson,
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangle_pair" | "triangle" => Ok(MeshFormat::TrianglePair),
            "internal_json" | "json" => Ok(MeshFormat::InternalJson),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mesh format '{s}' (expected triangle_pair or internal_json)"
            ))),
        }
    }
}

impl MeshFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "json" => Some(MeshFormat::InternalJson),
            "node" | "ele" => Some(MeshFormat::TrianglePair),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary_vertices: Option<Vec<usize>>,
}

/// Reads a mesh. For `triangle_pair`, `path` may name the `.node` file, the
/// `.ele` file or their common stem.
pub fn import_mesh(path: &Path, format: MeshFormat) -> Result<Mesh> {
    match format {
        MeshFormat::InternalJson => {
            let text = fs::read_to_string(path)?;
            let raw: JsonMesh = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;
            Mesh::with_boundary(
                raw.vertices,
                raw.triangles,
                DomainTag::Imported,
                raw.boundary_vertices.as_deref().unwrap_or(&[]),
            )
        }
        MeshFormat::TrianglePair => {
            let node = path.with_extension("node");
            let ele = path.with_extension("ele");
            let (vertices, markers, base) = read_node(&node)?;
            let triangles = read_ele(&ele, base, vertices.len())?;
            Mesh::with_boundary(vertices, triangles, DomainTag::Imported, &markers)
        }
    }
}

/// Writes a mesh as `internal_json`, flagging its boundary vertices.
pub fn export_json(mesh: &Mesh, path: &Path) -> Result<()> {
    let raw = JsonMesh {
        vertices: mesh.vertices().to_vec(),
        triangles: mesh.triangles().to_vec(),
        boundary_vertices: Some((0..mesh.n_vertices()).filter(|&v| mesh.is_boundary_vertex(v)).collect()),
    };
    fs::write(path, serde_json::to_string(&raw)?)?;
    Ok(())
}

struct Lines {
    path: PathBuf,
    lines: Vec<(usize, Vec<String>)>,
}

impl Lines {
    fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("");
                let toks: Vec<String> = l.split_whitespace().map(str::to_owned).collect();
                (!toks.is_empty()).then_some((i + 1, toks))
            })
            .collect();
        Ok(Lines { path: path.to_path_buf(), lines })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { path: self.path.clone(), line, message: message.into() }
    }

    fn parse<T: FromStr>(&self, line: usize, tok: &str, what: &str) -> Result<T> {
        tok.parse().map_err(|_| self.err(line, format!("cannot parse {what} from '{tok}'")))
    }
}

fn read_node(path: &Path) -> Result<(Vec<Point>, Vec<usize>, usize)> {
    let f = Lines::read(path)?;
    let Some((hl, header)) = f.lines.first() else {
        return Err(f.err(1, "empty node file"));
    };
    if header.len() < 2 {
        return Err(f.err(*hl, "node header must read '<#points> 2 <#attrs> <#markers>'"));
    }
    let n: usize = f.parse(*hl, &header[0], "point count")?;
    let dim: usize = f.parse(*hl, &header[1], "dimension")?;
    if dim != 2 {
        return Err(f.err(*hl, format!("dimension must be 2, got {dim}")));
    }
    let nattr: usize = header.get(2).map(|t| f.parse(*hl, t, "attribute count")).transpose()?.unwrap_or(0);
    let nmark: usize = header.get(3).map(|t| f.parse(*hl, t, "marker count")).transpose()?.unwrap_or(0);
    let body = &f.lines[1..];
    if body.len() < n {
        return Err(f.err(hl + 1, format!("expected {n} points, found {}", body.len())));
    }
    let mut base = 1;
    let mut vertices = Vec::with_capacity(n);
    let mut markers = Vec::new();
    for (k, (ln, toks)) in body.iter().take(n).enumerate() {
        if toks.len() < 3 + nattr + nmark {
            return Err(f.err(*ln, "point line needs 'index x y [attrs] [marker]'"));
        }
        let idx: usize = f.parse(*ln, &toks[0], "point index")?;
        if k == 0 {
            base = idx;
            if base > 1 {
                return Err(f.err(*ln, "point numbering must start at 0 or 1"));
            }
        }
        if idx != k + base {
            return Err(f.err(*ln, format!("point index {idx} out of sequence")));
        }
        let x: f64 = f.parse(*ln, &toks[1], "x coordinate")?;
        let y: f64 = f.parse(*ln, &toks[2], "y coordinate")?;
        vertices.push([x, y]);
        if nmark > 0 {
            let m: i64 = f.parse(*ln, &toks[3 + nattr], "boundary marker")?;
            if m != 0 {
                markers.push(k);
            }
        }
    }
    Ok((vertices, markers, base))
}

fn read_ele(path: &Path, base: usize, nv: usize) -> Result<Vec<[usize; 3]>> {
    let f = Lines::read(path)?;
    let Some((hl, header)) = f.lines.first() else {
        return Err(f.err(1, "empty element file"));
    };
    let n: usize = f.parse(*hl, &header[0], "triangle count")?;
    if let Some(npt) = header.get(1) {
        let npt: usize = f.parse(*hl, npt, "nodes per triangle")?;
        if npt != 3 {
            return Err(f.err(*hl, format!("only 3-node triangles are supported, got {npt}")));
        }
    }
    let body = &f.lines[1..];
    if body.len() < n {
        return Err(f.err(hl + 1, format!("expected {n} triangles, found {}", body.len())));
    }
    let mut tris = Vec::with_capacity(n);
    for (t, (ln, toks)) in body.iter().take(n).enumerate() {
        if toks.len() < 4 {
            return Err(f.err(*ln, "triangle line needs 'index v1 v2 v3'"));
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            let v: usize = f.parse(*ln, &toks[k + 1], "vertex index")?;
            if v < base || v - base >= nv {
                return Err(Error::VertexOutOfRange { triangle: t, index: v, count: nv });
            }
            tri[k] = v - base;
        }
        tris.push(tri);
    }
    Ok(tris)
}
