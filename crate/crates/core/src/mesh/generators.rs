use std::collections::HashMap;

use super::{MeshError, Point, WeakMesh};

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rectangle {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rectangle {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }
}

/// Uniform `2^(level-1) x 2^(level-1)` grid of squares (rectangles, in general).
///
/// Cells are numbered row by row from the lower-left corner.
pub fn square_grid(level: u32, domain: Rectangle) -> Result<WeakMesh, MeshError> {
    if level == 0 {
        return Err(MeshError::InvalidLevel);
    }
    let Rectangle { x0, x1, y0, y1 } = domain;
    if !(x1 - x0 > 0.0 && y1 - y0 > 0.0) {
        return Err(MeshError::DegenerateRectangle { x0, x1, y0, y1 });
    }
    let n = 1usize << (level - 1);
    let dx = (x1 - x0) / n as f64;
    let dy = (y1 - y0) / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let x = if i == n { x1 } else { x0 + i as f64 * dx };
            let y = if j == n { y1 } else { y0 + j as f64 * dy };
            vertices.push([x, y]);
        }
    }
    let v = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    WeakMesh::new(vertices, cells)
}

/// Lattice resolution of the polygonal macro pattern: offsets are in units of
/// `1 / PATTERN_UNITS` of the macro-square side.
const PATTERN_UNITS: i64 = 20;
/// Corner cut along the macro boundary.
const CORNER_CUT: i64 = 4;
/// Inner corner point of the central polygon (on the diagonal).
const INNER_CORNER: i64 = 6;
/// Half-width of the central polygon's middle segment on each side.
const MID_HALF_WIDTH: i64 = 2;
/// Depth of the central polygon's middle segment from the macro boundary.
const MID_DEPTH: i64 = 5;

/// Number of cells in one macro-square of [`polygonal_grid`].
pub const POLYGON_PATTERN_CELLS: usize = 9;

/// The macro pattern in lattice units: four corner quadrilaterals, four
/// seven-sided side cells and a central twelve-sided cell, in row order.
fn macro_pattern() -> Vec<Vec<(i64, i64)>> {
    let u = PATTERN_UNITS;
    let a = CORNER_CUT;
    let b = INNER_CORNER;
    let half = u / 2;
    let w = MID_HALF_WIDTH;
    let e = MID_DEPTH;
    let corner_bl = vec![(0, 0), (a, 0), (b, b), (0, a)];
    let side_b = vec![
        (a, 0),
        (half, 0),
        (u - a, 0),
        (u - b, b),
        (half + w, e),
        (half - w, e),
        (b, b),
    ];
    let corner_br = vec![(u - a, 0), (u, 0), (u, a), (u - b, b)];
    let side_l = vec![
        (0, a),
        (b, b),
        (e, half - w),
        (e, half + w),
        (b, u - b),
        (0, u - a),
        (0, half),
    ];
    let center = vec![
        (b, b),
        (half - w, e),
        (half + w, e),
        (u - b, b),
        (u - e, half - w),
        (u - e, half + w),
        (u - b, u - b),
        (half + w, u - e),
        (half - w, u - e),
        (b, u - b),
        (e, half + w),
        (e, half - w),
    ];
    let side_r = vec![
        (u, a),
        (u, half),
        (u, u - a),
        (u - b, u - b),
        (u - e, half + w),
        (u - e, half - w),
        (u - b, b),
    ];
    let corner_tl = vec![(0, u - a), (b, u - b), (a, u), (0, u)];
    let side_t = vec![
        (u - a, u),
        (half, u),
        (a, u),
        (b, u - b),
        (half - w, u - e),
        (half + w, u - e),
        (u - b, u - b),
    ];
    let corner_tr = vec![(u - b, u - b), (u, u - a), (u, u), (u - a, u)];
    vec![
        corner_bl, side_b, corner_br, side_l, center, side_r, corner_tl, side_t, corner_tr,
    ]
}

/// Polygonal grids of the unit square: `2^(level-1) x 2^(level-1)` macro
/// squares, each split into a central 12-gon, four 7-gons and four corner
/// quadrilaterals.
pub fn polygonal_grid(level: u32) -> Result<WeakMesh, MeshError> {
    if level == 0 {
        return Err(MeshError::InvalidLevel);
    }
    let n = 1i64 << (level - 1);
    let total = n * PATTERN_UNITS;
    let pattern = macro_pattern();
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut cells = Vec::with_capacity((n * n) as usize * POLYGON_PATTERN_CELLS);
    let mut vertex = |p: (i64, i64)| -> usize {
        *index.entry(p).or_insert_with(|| {
            vertices.push([p.0 as f64 / total as f64, p.1 as f64 / total as f64]);
            vertices.len() - 1
        })
    };
    for j in 0..n {
        for i in 0..n {
            let (ox, oy) = (i * PATTERN_UNITS, j * PATTERN_UNITS);
            for cell in &pattern {
                cells.push(cell.iter().map(|&(x, y)| vertex((ox + x, oy + y))).collect());
            }
        }
    }
    WeakMesh::new(vertices, cells)
}
