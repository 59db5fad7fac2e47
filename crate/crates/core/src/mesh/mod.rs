//! Polygonal partitions of a 2D domain with edge–cell adjacency.
//!
//! Cells are stored as counter-clockwise vertex loops. Edges are derived from
//! the cell loops: the left cell of an edge is the lower-index incident cell,
//! the stored vertex pair runs counter-clockwise around it, and the unit
//! normal points from left to right (outward on the boundary).

mod generators;
mod io;
mod validate;

use std::collections::HashMap;

pub use generators::{polygonal_grid, square_grid, Rectangle, POLYGON_PATTERN_CELLS};
pub use io::{load_mesh, parse_mesh, write_mesh};
pub use validate::{validate, MeshDiagnostic};

pub type Point = [f64; 2];

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid mesh: {0}")]
    Invalid(#[from] MeshDiagnostic),
    #[error("degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]")]
    DegenerateRectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("level must be at least 1")]
    InvalidLevel,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Endpoints, counter-clockwise with respect to `left`.
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: Option<usize>,
    /// Unit normal pointing from `left` into `right` (outward on the boundary).
    pub normal: Point,
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    /// Cells incident to the edge, left first.
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.left).chain(self.right)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellMeta {
    pub centroid: Point,
    pub area: f64,
    /// Diameter h_K (largest vertex-to-vertex distance).
    pub diameter: f64,
}

/// Geometric summary of one cell with its centroid fan.
#[derive(Clone, Debug, PartialEq)]
pub struct CellGeometry {
    pub centroid: Point,
    pub area: f64,
    pub diameter: f64,
    /// Counter-clockwise triangles `[centroid, v_i, v_{i+1}]`.
    pub fan: Vec<[Point; 3]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<usize>>,
    cell_meta: Vec<CellMeta>,
    h: f64,
}

pub(crate) fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}

pub(crate) fn polygon_meta(pts: &[Point]) -> CellMeta {
    let n = pts.len();
    let area = signed_area(pts);
    let (mut cx, mut cy) = (0.0, 0.0);
    // shift to the first vertex for round-off
    let o = pts[0];
    for i in 0..n {
        let p = [pts[i][0] - o[0], pts[i][1] - o[1]];
        let q = [pts[(i + 1) % n][0] - o[0], pts[(i + 1) % n][1] - o[1]];
        let c = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * c;
        cy += (p[1] + q[1]) * c;
    }
    let centroid = if area.abs() > 0.0 {
        [o[0] + cx / (6.0 * area), o[1] + cy / (6.0 * area)]
    } else {
        let s = pts.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        [s[0] / n as f64, s[1] / n as f64]
    };
    let mut diameter = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            diameter = diameter.max(dist(pts[i], pts[j]));
        }
    }
    CellMeta {
        centroid,
        area,
        diameter,
    }
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn unit_normal(a: Point, b: Point) -> (Point, f64) {
    let t = [b[0] - a[0], b[1] - a[1]];
    let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
    ([t[1] / len, -t[0] / len], len)
}

impl WeakMesh {
    /// Builds and validates a mesh from vertices and cell loops of either
    /// orientation. Clockwise loops are reversed.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        let mesh = Self::build(vertices, cells)?;
        validate(&mesh)?;
        Ok(mesh)
    }

    /// Derives edges and metadata without running `validate`.
    pub fn build(vertices: Vec<Point>, mut cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.len() < 3 {
                return Err(MeshDiagnostic::TooFewVertices { cell: c }.into());
            }
            if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshDiagnostic::VertexOutOfRange { cell: c, vertex: v }.into());
            }
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            if signed_area(&pts) < 0.0 {
                cell.reverse();
            }
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut local = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (cell[i], cell[(i + 1) % n]);
                if a == b {
                    return Err(MeshDiagnostic::DegenerateEdge { cell: c }.into());
                }
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        let (normal, length) = unit_normal(vertices[a], vertices[b]);
                        lookup.insert(key, edges.len());
                        local.push(edges.len());
                        edges.push(Edge {
                            vertices: [a, b],
                            left: c,
                            right: None,
                            normal,
                            length,
                        });
                    }
                    Some(&e) => {
                        let edge = &mut edges[e];
                        if edge.right.is_some() {
                            return Err(MeshDiagnostic::NonManifoldEdge { edge: e }.into());
                        }
                        if edge.vertices != [b, a] {
                            return Err(MeshDiagnostic::InconsistentOrientation { edge: e }.into());
                        }
                        edge.right = Some(c);
                        local.push(e);
                    }
                }
            }
            cell_edges.push(local);
        }
        Ok(Self::from_parts(vertices, cells, edges, cell_edges))
    }

    /// Assembles a mesh from explicit parts, recomputing cell metadata only.
    /// No consistency checks are made; use [`validate`] on the result.
    pub fn from_parts(
        vertices: Vec<Point>,
        cells: Vec<Vec<usize>>,
        edges: Vec<Edge>,
        cell_edges: Vec<Vec<usize>>,
    ) -> Self {
        let cell_meta: Vec<CellMeta> = cells
            .iter()
            .map(|cell| {
                let pts: Vec<Point> = cell
                    .iter()
                    .map(|&v| vertices.get(v).copied().unwrap_or([f64::NAN; 2]))
                    .collect();
                polygon_meta(&pts)
            })
            .collect();
        let h = cell_meta.iter().fold(0.0_f64, |m, c| m.max(c.diameter));
        Self {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_meta,
            h,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Edge indices of a cell, in loop order.
    pub fn cell_edges(&self, cell: usize) -> &[usize] {
        &self.cell_edges[cell]
    }

    pub fn cell_meta(&self, cell: usize) -> &CellMeta {
        &self.cell_meta[cell]
    }

    /// Mesh size: largest cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Point> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn edge_points(&self, e: usize) -> [Point; 2] {
        let [a, b] = self.edges[e].vertices;
        [self.vertices[a], self.vertices[b]]
    }

    /// Outward unit normal of `cell` on edge `e`.
    pub fn outward_normal(&self, cell: usize, e: usize) -> Point {
        let edge = &self.edges[e];
        if edge.left == cell {
            edge.normal
        } else {
            debug_assert_eq!(edge.right, Some(cell));
            [-edge.normal[0], -edge.normal[1]]
        }
    }

    /// The other cell across edge `e`, if any.
    pub fn neighbor(&self, cell: usize, e: usize) -> Option<usize> {
        let edge = &self.edges[e];
        if edge.left == cell {
            edge.right
        } else {
            Some(edge.left)
        }
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .map(|(i, _)| i)
    }

    pub fn total_area(&self) -> f64 {
        self.cell_meta.iter().map(|m| m.area).sum()
    }

    /// Area enclosed by the boundary edges.
    pub fn domain_area(&self) -> f64 {
        self.boundary_edges()
            .map(|e| {
                let [p, q] = self.edge_points(e);
                0.5 * (p[0] * q[1] - q[0] * p[1])
            })
            .sum()
    }

    /// Centroid, area, diameter and the centroid fan of a cell.
    pub fn cell_geometry(&self, cell: usize) -> Result<CellGeometry, MeshDiagnostic> {
        let meta = self.cell_meta[cell];
        let pts = self.cell_points(cell);
        let c = meta.centroid;
        let n = pts.len();
        let mut fan = Vec::with_capacity(n);
        for i in 0..n {
            let tri = [c, pts[i], pts[(i + 1) % n]];
            if signed_area(&tri) <= 1e-12 * meta.area {
                return Err(MeshDiagnostic::FanTriangulationInvalid { cell });
            }
            fan.push(tri);
        }
        Ok(CellGeometry {
            centroid: c,
            area: meta.area,
            diameter: meta.diameter,
            fan,
        })
    }
}
