//! P1 meshes: ordered intervals in 1D and conforming triangulations in 2D,
//! with tagged boundary facets splitting the boundary into Dirichlet and
//! Neumann parts.
//!
//! The plain-text file format is
//! ```text
//! dim 2
//! vertices <count>
//! <x> <y>
//! elements <count>
//! <v0> <v1> <v2>
//! boundary <count>
//! <tag> <v0> [<v1>]
//! ```

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const TAG_LEFT: u32 = 1;
pub const TAG_RIGHT: u32 = 2;
pub const TAG_BOTTOM: u32 = 3;
pub const TAG_TOP: u32 = 4;

#[derive(Debug, Clone)]
pub struct BoundaryFacet {
    /// One vertex in 1D, an edge in 2D.
    pub vertices: Vec<usize>,
    pub tag: u32,
    /// Element owning the facet; orients the outward normal and provides the
    /// one-sided gradient for flux evaluation.
    pub element: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 2]>,
    /// Vertex indices: 2 per segment, 3 per triangle.
    elements: Vec<Vec<usize>>,
    boundary: Vec<BoundaryFacet>,
    /// Sorted vertex ids appearing in boundary facets.
    boundary_nodes: Vec<usize>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i][..self.dim]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn boundary(&self) -> &[BoundaryFacet] {
        &self.boundary
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_index(&self, vertex: usize) -> Option<usize> {
        self.boundary_nodes.binary_search(&vertex).ok()
    }

    pub fn is_boundary_node(&self, vertex: usize) -> bool {
        self.boundary_index(vertex).is_some()
    }

    /// Uniform mesh of the interval (a, b) with `cells` segments.
    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Mesh> {
        if !(b > a) || cells < 2 {
            return Err(Error::Mesh(format!("bad interval ({a}, {b}) x {cells}")));
        }
        let h = (b - a) / cells as f64;
        let vertices: Vec<[f64; 2]> = (0..=cells).map(|i| [a + i as f64 * h, 0.0]).collect();
        let elements: Vec<Vec<usize>> = (0..cells).map(|i| vec![i, i + 1]).collect();
        let boundary = vec![
            BoundaryFacet {
                vertices: vec![0],
                tag: TAG_LEFT,
                element: 0,
            },
            BoundaryFacet {
                vertices: vec![cells],
                tag: TAG_RIGHT,
                element: cells - 1,
            },
        ];
        Ok(Self::assemble(1, vertices, elements, boundary))
    }

    /// Structured triangulation of the unit square with `n` cells per side,
    /// each cell split along the bottom-left to top-right diagonal.
    pub fn unit_square(n: usize) -> Result<Mesh> {
        Self::rectangle(0.0, 1.0, 0.0, 1.0, n, n)
    }

    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if !(x1 > x0 && y1 > y0) || nx < 2 || ny < 2 {
            return Err(Error::Mesh("bad rectangle parameters".into()));
        }
        let hx = (x1 - x0) / nx as f64;
        let hy = (y1 - y0) / ny as f64;
        let vid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([x0 + i as f64 * hx, y0 + j as f64 * hy]);
            }
        }
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v01, v11) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
                elements.push(vec![v00, v10, v11]);
                elements.push(vec![v00, v11, v01]);
            }
        }
        let lower = |i: usize, j: usize| 2 * (j * nx + i);
        let upper = |i: usize, j: usize| 2 * (j * nx + i) + 1;
        let mut boundary = Vec::new();
        for i in 0..nx {
            boundary.push(BoundaryFacet {
                vertices: vec![vid(i, 0), vid(i + 1, 0)],
                tag: TAG_BOTTOM,
                element: lower(i, 0),
            });
            boundary.push(BoundaryFacet {
                vertices: vec![vid(i, ny), vid(i + 1, ny)],
                tag: TAG_TOP,
                element: upper(i, ny - 1),
            });
        }
        for j in 0..ny {
            boundary.push(BoundaryFacet {
                vertices: vec![vid(0, j), vid(0, j + 1)],
                tag: TAG_LEFT,
                element: upper(0, j),
            });
            boundary.push(BoundaryFacet {
                vertices: vec![vid(nx, j), vid(nx, j + 1)],
                tag: TAG_RIGHT,
                element: lower(nx - 1, j),
            });
        }
        Ok(Self::assemble(2, vertices, elements, boundary))
    }

    fn assemble(
        dim: usize,
        vertices: Vec<[f64; 2]>,
        elements: Vec<Vec<usize>>,
        boundary: Vec<BoundaryFacet>,
    ) -> Mesh {
        let mut boundary_nodes: Vec<usize> =
            boundary.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        boundary_nodes.sort_unstable();
        boundary_nodes.dedup();
        Mesh {
            dim,
            vertices,
            elements,
            boundary,
            boundary_nodes,
        }
    }

    /// Signed measure of an element (length / doubled in 2D it is the area).
    pub fn element_measure(&self, e: usize) -> f64 {
        let el = &self.elements[e];
        match self.dim {
            1 => self.vertices[el[1]][0] - self.vertices[el[0]][0],
            _ => {
                let (a, b, c) = (self.vertices[el[0]], self.vertices[el[1]], self.vertices[el[2]]);
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
            }
        }
    }

    /// Constant gradients of the P1 basis functions on an element,
    /// one row per local vertex.
    pub fn element_gradients(&self, e: usize) -> Vec<[f64; 2]> {
        let el = &self.elements[e];
        match self.dim {
            1 => {
                let h = self.element_measure(e);
                vec![[-1.0 / h, 0.0], [1.0 / h, 0.0]]
            }
            _ => {
                let (a, b, c) = (self.vertices[el[0]], self.vertices[el[1]], self.vertices[el[2]]);
                let det = 2.0 * self.element_measure(e);
                vec![
                    [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
                    [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
                    [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
                ]
            }
        }
    }

    /// Outward unit normal on a boundary facet.
    pub fn facet_normal(&self, facet: &BoundaryFacet) -> [f64; 2] {
        match self.dim {
            1 => {
                let x = self.vertices[facet.vertices[0]][0];
                let el = &self.elements[facet.element];
                let mid = 0.5 * (self.vertices[el[0]][0] + self.vertices[el[1]][0]);
                if x < mid {
                    [-1.0, 0.0]
                } else {
                    [1.0, 0.0]
                }
            }
            _ => {
                let a = self.vertices[facet.vertices[0]];
                let b = self.vertices[facet.vertices[1]];
                let t = [b[0] - a[0], b[1] - a[1]];
                let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
                let mut n = [t[1] / len, -t[0] / len];
                // orient away from the owning element's centroid
                let el = &self.elements[facet.element];
                let cx = el.iter().map(|&v| self.vertices[v][0]).sum::<f64>() / 3.0;
                let cy = el.iter().map(|&v| self.vertices[v][1]).sum::<f64>() / 3.0;
                let mx = 0.5 * (a[0] + b[0]) - cx;
                let my = 0.5 * (a[1] + b[1]) - cy;
                if n[0] * mx + n[1] * my < 0.0 {
                    n = [-n[0], -n[1]];
                }
                n
            }
        }
    }

    pub fn facet_measure(&self, facet: &BoundaryFacet) -> f64 {
        match self.dim {
            1 => 1.0,
            _ => {
                let a = self.vertices[facet.vertices[0]];
                let b = self.vertices[facet.vertices[1]];
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            }
        }
    }

    /// Mesh size h: the largest element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.elements.len())
            .map(|e| {
                let el = &self.elements[e];
                let mut d: f64 = 0.0;
                for i in 0..el.len() {
                    for j in (i + 1)..el.len() {
                        let a = self.vertices[el[i]];
                        let b = self.vertices[el[j]];
                        d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Locate the element containing a point; returns (element, barycentric
    /// weights per local vertex).
    pub fn locate(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        match self.dim {
            1 => {
                let p = x[0];
                let eps = 1e-12 * self.h_max();
                for (e, el) in self.elements.iter().enumerate() {
                    let (a, b) = (self.vertices[el[0]][0], self.vertices[el[1]][0]);
                    if p >= a - eps && p <= b + eps {
                        let t = ((p - a) / (b - a)).clamp(0.0, 1.0);
                        return Some((e, vec![1.0 - t, t]));
                    }
                }
                None
            }
            _ => {
                let eps = 1e-10;
                for (e, el) in self.elements.iter().enumerate() {
                    let (a, b, c) = (self.vertices[el[0]], self.vertices[el[1]], self.vertices[el[2]]);
                    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                    let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
                    let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
                    let l0 = 1.0 - l1 - l2;
                    if l0 >= -eps && l1 >= -eps && l2 >= -eps {
                        return Some((e, vec![l0.max(0.0), l1.max(0.0), l2.max(0.0)]));
                    }
                }
                None
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        for e in 0..self.elements.len() {
            let measure = self.element_measure(e);
            if !(measure > 0.0) {
                return Err(Error::Mesh(format!(
                    "element {e} degenerate or inverted (measure {measure})"
                )));
            }
        }
        for (i, f) in self.boundary.iter().enumerate() {
            if f.element >= self.elements.len() {
                return Err(Error::Mesh(format!("facet {i} points at missing element")));
            }
            let el = &self.elements[f.element];
            if !f.vertices.iter().all(|v| el.contains(v)) {
                return Err(Error::Mesh(format!(
                    "facet {i} is not a face of its owning element"
                )));
            }
        }
        Ok(())
    }

    pub fn write<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        writeln!(out, "dim {}", self.dim)?;
        writeln!(out, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            if self.dim == 1 {
                writeln!(out, "{:.17e}", v[0])?;
            } else {
                writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
            }
        }
        writeln!(out, "elements {}", self.elements.len())?;
        for el in &self.elements {
            let s: Vec<String> = el.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", s.join(" "))?;
        }
        writeln!(out, "boundary {}", self.boundary.len())?;
        for f in &self.boundary {
            let s: Vec<String> = f.vertices.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{} {}", f.tag, s.join(" "))?;
        }
        Ok(())
    }

    pub fn read<P: AsRef<Path>>(path: P) -> Result<Mesh> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let mut next = || -> Result<String> {
            loop {
                match lines.next() {
                    Some(l) => {
                        let l = l?;
                        let t = l.trim().to_string();
                        if !t.is_empty() && !t.starts_with('#') {
                            return Ok(t);
                        }
                    }
                    None => return Err(Error::Format("unexpected end of mesh file".into())),
                }
            }
        };
        let header = next()?;
        let dim: usize = parse_kv(&header, "dim")?;
        if dim != 1 && dim != 2 {
            return Err(Error::Format(format!("unsupported mesh dimension {dim}")));
        }
        let nv: usize = parse_kv(&next()?, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let l = next()?;
            let mut it = l.split_whitespace();
            let x: f64 = parse_tok(it.next())?;
            let y: f64 = if dim == 2 { parse_tok(it.next())? } else { 0.0 };
            vertices.push([x, y]);
        }
        let ne: usize = parse_kv(&next()?, "elements")?;
        let arity = dim + 1;
        let mut elements = Vec::with_capacity(ne);
        for _ in 0..ne {
            let l = next()?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Format(format!("bad index {t}"))))
                .collect::<Result<_>>()?;
            if ids.len() != arity {
                return Err(Error::Format(format!(
                    "element needs {arity} vertices, got {}",
                    ids.len()
                )));
            }
            if ids.iter().any(|&v| v >= nv) {
                return Err(Error::Format("element vertex out of range".into()));
            }
            elements.push(ids);
        }
        let nb: usize = parse_kv(&next()?, "boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let l = next()?;
            let mut it = l.split_whitespace();
            let tag: u32 = parse_tok(it.next())?;
            let ids: Vec<usize> = it
                .map(|t| t.parse().map_err(|_| Error::Format(format!("bad index {t}"))))
                .collect::<Result<_>>()?;
            if ids.len() != dim {
                return Err(Error::Format(format!(
                    "facet needs {dim} vertices, got {}",
                    ids.len()
                )));
            }
            let element = elements
                .iter()
                .position(|el| ids.iter().all(|v| el.contains(v)))
                .ok_or_else(|| Error::Format("facet not attached to any element".into()))?;
            boundary.push(BoundaryFacet {
                vertices: ids,
                tag,
                element,
            });
        }
        let mesh = Self::assemble(dim, vertices, elements, boundary);
        mesh.validate()?;
        Ok(mesh)
    }
}

fn parse_kv<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    let mut it = line.split_whitespace();
    if it.next() != Some(key) {
        return Err(Error::Format(format!("expected '{key} <n>', got '{line}'")));
    }
    parse_tok(it.next())
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>) -> Result<T> {
    tok.ok_or_else(|| Error::Format("missing token".into()))?
        .parse()
        .map_err(|_| Error::Format("unparsable token".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_mesh_basics() {
        let m = Mesh::interval(0.0, 1.0, 8).unwrap();
        m.validate().unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.boundary_nodes(), &[0, 8]);
        let left = &m.boundary()[0];
        assert_eq!(m.facet_normal(left), [-1.0, 0.0]);
    }

    #[test]
    fn unit_square_area_and_normals() {
        let m = Mesh::unit_square(4).unwrap();
        m.validate().unwrap();
        let area: f64 = (0..m.elements().len()).map(|e| m.element_measure(e)).sum();
        assert!((area - 1.0).abs() < 1e-13);
        assert_eq!(m.boundary().len(), 16);
        for f in m.boundary() {
            let n = m.facet_normal(f);
            let expected = match f.tag {
                TAG_LEFT => [-1.0, 0.0],
                TAG_RIGHT => [1.0, 0.0],
                TAG_BOTTOM => [0.0, -1.0],
                TAG_TOP => [0.0, 1.0],
                _ => panic!("unknown tag"),
            };
            assert!((n[0] - expected[0]).abs() < 1e-14 && (n[1] - expected[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn gradients_sum_to_zero() {
        let m = Mesh::unit_square(3).unwrap();
        for e in 0..m.elements().len() {
            let g = m.element_gradients(e);
            let sx: f64 = g.iter().map(|v| v[0]).sum();
            let sy: f64 = g.iter().map(|v| v[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
    }

    #[test]
    fn locate_recovers_barycentrics() {
        let m = Mesh::unit_square(4).unwrap();
        let (e, lam) = m.locate(&[0.3, 0.7]).unwrap();
        let el = &m.elements()[e];
        let mut x = 0.0;
        let mut y = 0.0;
        for (l, &v) in lam.iter().zip(el) {
            x += l * m.vertex(v)[0];
            y += l * m.vertex(v)[1];
        }
        assert!((x - 0.3).abs() < 1e-12 && (y - 0.7).abs() < 1e-12);
        assert!(m.locate(&[1.5, 0.5]).is_none());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.txt");
        let m = Mesh::unit_square(3).unwrap();
        m.write(&path).unwrap();
        let back = Mesh::read(&path).unwrap();
        assert_eq!(back.n_vertices(), m.n_vertices());
        assert_eq!(back.elements().len(), m.elements().len());
        assert_eq!(back.boundary().len(), m.boundary().len());
        assert_eq!(back.boundary_nodes(), m.boundary_nodes());
    }
}
