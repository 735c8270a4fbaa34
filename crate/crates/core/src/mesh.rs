//! Flat simplicial approximations of the level-set surfaces: inscribed
//! polygons for curves, projected icosahedron refinements for surfaces,
//! plus ASCII OFF I/O for triangle meshes.

use crate::levelset::{LevelSetError, LevelSetSurface};
use crate::linalg as la;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("OFF parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("OFF facet at line {line} is not a triangle")]
    NonTriangleCell { line: usize },
    #[error(transparent)]
    LevelSet(#[from] LevelSetError),
}

/// Flat mesh with all vertices on `Γ`. Cells are segments (`D = 2`) or
/// triangles (`D = 3`), oriented so the induced normal points outward.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatMesh<const D: usize> {
    pub vertices: Vec<[f64; D]>,
    pub cells: Vec<[usize; D]>,
    pub level: usize,
    /// Largest cell diameter; the penalty scaling uses this mesh size.
    pub h: f64,
}

impl<const D: usize> FlatMesh<D> {
    fn compute_h(vertices: &[[f64; D]], cells: &[[usize; D]]) -> f64 {
        let mut h: f64 = 0.0;
        for cell in cells {
            for i in 0..D {
                for j in i + 1..D {
                    h = h.max(la::norm(&la::sub(&vertices[cell[i]], &vertices[cell[j]])));
                }
            }
        }
        h
    }

    fn finalize(vertices: Vec<[f64; D]>, cells: Vec<[usize; D]>, level: usize) -> Self {
        let h = Self::compute_h(&vertices, &cells);
        Self {
            vertices,
            cells,
            level,
            h,
        }
    }

    pub fn cell_vertices(&self, cell: usize) -> [[f64; D]; D] {
        std::array::from_fn(|i| self.vertices[self.cells[cell][i]])
    }

    /// Smallest cell diameter, for quasi-uniformity checks.
    pub fn min_diameter(&self) -> f64 {
        let mut h = f64::INFINITY;
        for cell in &self.cells {
            let mut diam: f64 = 0.0;
            for i in 0..D {
                for j in i + 1..D {
                    diam = diam
                        .max(la::norm(&la::sub(&self.vertices[cell[i]], &self.vertices[cell[j]])));
                }
            }
            h = h.min(diam);
        }
        h
    }
}

impl FlatMesh<2> {
    /// Regular `2^(level+3)`-gon in parameter angle, vertices on the ellipse.
    pub fn generate(surface: &LevelSetSurface<2>, level: usize) -> Result<Self, MeshError> {
        let n = 1usize << (level + 3);
        let [a, b] = *surface.semiaxes();
        let mut vertices = Vec::with_capacity(n);
        for k in 0..n {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            let raw = [a * t.cos(), b * t.sin()];
            let (p, _) = surface.closest_point(&raw)?;
            vertices.push(p);
        }
        let cells = (0..n).map(|k| [k, (k + 1) % n]).collect();
        Ok(Self::finalize(vertices, cells, level))
    }

    /// Split every segment at its midpoint and project the midpoint to `Γ`.
    pub fn refine(&self, surface: &LevelSetSurface<2>) -> Result<Self, MeshError> {
        let mut vertices = self.vertices.clone();
        let mut cells = Vec::with_capacity(2 * self.cells.len());
        for cell in &self.cells {
            let mid = la::scale(&la::add(&self.vertices[cell[0]], &self.vertices[cell[1]]), 0.5);
            let (p, _) = surface.closest_point(&mid)?;
            let m = vertices.len();
            vertices.push(p);
            cells.push([cell[0], m]);
            cells.push([m, cell[1]]);
        }
        Ok(Self::finalize(vertices, cells, self.level + 1))
    }
}

impl FlatMesh<3> {
    /// Icosahedron scaled by the semiaxes and projected to `Γ`, refined
    /// uniformly `level` times.
    pub fn generate(surface: &LevelSetSurface<3>, level: usize) -> Result<Self, MeshError> {
        let t = (1.0 + 5.0f64.sqrt()) / 2.0;
        let raw: [[f64; 3]; 12] = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let faces: [[usize; 3]; 20] = [
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let axes = surface.semiaxes();
        let mut vertices = Vec::with_capacity(12);
        for v in raw {
            let unit = la::normalize(&v).unwrap();
            let scaled = std::array::from_fn(|i| unit[i] * axes[i]);
            let (p, _) = surface.closest_point(&scaled)?;
            vertices.push(p);
        }
        let mut cells: Vec<[usize; 3]> = faces.to_vec();
        // Orient every seed facet outward; refinement preserves orientation.
        for cell in &mut cells {
            let [v0, v1, v2] = std::array::from_fn(|i| vertices[cell[i]]);
            let facet_n = la::cross(&la::sub(&v1, &v0), &la::sub(&v2, &v0));
            let bary = la::scale(&la::add(&la::add(&v0, &v1), &v2), 1.0 / 3.0);
            let n = surface.exact_normal(&bary)?;
            if la::dot(&facet_n, &n) < 0.0 {
                cell.swap(1, 2);
            }
        }
        let mut mesh = Self::finalize(vertices, cells, 0);
        for _ in 0..level {
            mesh = mesh.refine(surface)?;
        }
        mesh.level = level;
        Ok(mesh)
    }

    /// Uniform 1-to-4 refinement; edge midpoints are projected to `Γ`.
    pub fn refine(&self, surface: &LevelSetSurface<3>) -> Result<Self, MeshError> {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        let mut midpoint = |a: usize,
                            b: usize,
                            vertices: &mut Vec<[f64; 3]>|
         -> Result<usize, MeshError> {
            let key = (a.min(b), a.max(b));
            if let Some(&m) = midpoints.get(&key) {
                return Ok(m);
            }
            let mid = la::scale(&la::add(&vertices[a], &vertices[b]), 0.5);
            let (p, _) = surface.closest_point(&mid)?;
            let m = vertices.len();
            vertices.push(p);
            midpoints.insert(key, m);
            Ok(m)
        };
        for cell in &self.cells {
            let [v0, v1, v2] = *cell;
            let m01 = midpoint(v0, v1, &mut vertices)?;
            let m12 = midpoint(v1, v2, &mut vertices)?;
            let m02 = midpoint(v0, v2, &mut vertices)?;
            cells.push([v0, m01, m02]);
            cells.push([v1, m12, m01]);
            cells.push([v2, m02, m12]);
            cells.push([m01, m12, m02]);
        }
        Ok(Self::finalize(vertices, cells, self.level + 1))
    }

    pub fn edge_count(&self) -> usize {
        let mut edges = std::collections::HashSet::new();
        for cell in &self.cells {
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let (i, j) = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                edges.insert((i, j));
            }
        }
        edges.len()
    }

    /// Write the mesh as ASCII OFF with 17 significant digits, enough for an
    /// exact `f64` round trip.
    pub fn save_off(&self, path: &Path) -> Result<(), MeshError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "OFF")?;
        writeln!(out, "{} {} 0", self.vertices.len(), self.cells.len())?;
        for v in &self.vertices {
            writeln!(out, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
        }
        for c in &self.cells {
            writeln!(out, "3 {} {} {}", c[0], c[1], c[2])?;
        }
        Ok(())
    }

    pub fn load_off(path: &Path) -> Result<Self, MeshError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut lines = file
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| match l {
                Ok(s) => {
                    let t = s.trim();
                    !t.is_empty() && !t.starts_with('#')
                }
                Err(_) => true,
            });
        let mut next = |what: &str| -> Result<(usize, String), MeshError> {
            match lines.next() {
                Some((line, Ok(s))) => Ok((line, s)),
                Some((_, Err(e))) => Err(MeshError::Io(e)),
                None => Err(MeshError::ParseError {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let (line, header) = next("OFF header")?;
        if header.trim() != "OFF" {
            return Err(MeshError::ParseError {
                line,
                message: format!("expected 'OFF', found '{}'", header.trim()),
            });
        }
        let (line, counts) = next("vertex/face counts")?;
        let parts: Vec<&str> = counts.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(MeshError::ParseError {
                line,
                message: "expected '<vertices> <faces> <edges>'".into(),
            });
        }
        let parse_count = |s: &str, line: usize| -> Result<usize, MeshError> {
            s.parse().map_err(|_| MeshError::ParseError {
                line,
                message: format!("invalid count '{s}'"),
            })
        };
        let nv = parse_count(parts[0], line)?;
        let nf = parse_count(parts[1], line)?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, s) = next("vertex coordinates")?;
            let coords: Vec<&str> = s.split_whitespace().collect();
            if coords.len() != 3 {
                return Err(MeshError::ParseError {
                    line,
                    message: "expected three coordinates".into(),
                });
            }
            let mut v = [0.0; 3];
            for (i, c) in coords.iter().enumerate() {
                v[i] = c.parse().map_err(|_| MeshError::ParseError {
                    line,
                    message: format!("invalid coordinate '{c}'"),
                })?;
            }
            vertices.push(v);
        }
        let mut cells = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (line, s) = next("facet")?;
            let parts: Vec<&str> = s.split_whitespace().collect();
            if parts.is_empty() {
                return Err(MeshError::ParseError {
                    line,
                    message: "empty facet line".into(),
                });
            }
            let arity: usize = parse_count(parts[0], line)?;
            if arity != 3 {
                return Err(MeshError::NonTriangleCell { line });
            }
            if parts.len() != 4 {
                return Err(MeshError::ParseError {
                    line,
                    message: "expected three vertex indices".into(),
                });
            }
            let mut c = [0usize; 3];
            for (i, p) in parts[1..].iter().enumerate() {
                let idx = parse_count(p, line)?;
                if idx >= nv {
                    return Err(MeshError::ParseError {
                        line,
                        message: format!("vertex index {idx} out of range"),
                    });
                }
                c[i] = idx;
            }
            cells.push(c);
        }
        Ok(Self::finalize(vertices, cells, 0))
    }
}
