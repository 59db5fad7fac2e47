use std::collections::HashMap;

use super::{signed_area, Point, WeakMesh};

/// First violated mesh invariant.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MeshDiagnostic {
    #[error("cell {cell} has fewer than 3 vertices")]
    TooFewVertices { cell: usize },
    #[error("cell {cell} references missing vertex {vertex}")]
    VertexOutOfRange { cell: usize, vertex: usize },
    #[error("cell {cell} has a repeated consecutive vertex")]
    DegenerateEdge { cell: usize },
    #[error("zero-area cell {cell}")]
    ZeroArea { cell: usize },
    #[error("cell {cell} is not a simple polygon")]
    SelfIntersecting { cell: usize },
    #[error("fan triangulation invalid for cell {cell} (not star-shaped about its centroid)")]
    FanTriangulationInvalid { cell: usize },
    #[error("non-manifold edge {edge}")]
    NonManifoldEdge { edge: usize },
    #[error("edge {edge} is traversed in the same direction by both cells")]
    InconsistentOrientation { edge: usize },
    #[error("cell {cell} boundary does not match its edge list")]
    CellEdgeMismatch { cell: usize },
    #[error("edge {edge} normal is not a unit vector from left to right")]
    BadNormal { edge: usize },
    #[error("open boundary at vertex {vertex}")]
    OpenBoundary { vertex: usize },
    #[error("cell areas sum to {cells} but the boundary encloses {domain}")]
    AreaMismatch { cells: f64, domain: f64 },
    #[error("stored mesh size {stored} differs from the largest cell diameter {actual}")]
    MeshSize { stored: f64, actual: f64 },
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, d: f64| {
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn is_simple(pts: &[Point]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if pts[i] == pts[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Checks every mesh invariant and reports the first violation.
pub fn validate(mesh: &WeakMesh) -> Result<(), MeshDiagnostic> {
    let nv = mesh.vertices().len();
    for (c, cell) in mesh.cells().iter().enumerate() {
        if cell.len() < 3 {
            return Err(MeshDiagnostic::TooFewVertices { cell: c });
        }
        if let Some(&v) = cell.iter().find(|&&v| v >= nv) {
            return Err(MeshDiagnostic::VertexOutOfRange { cell: c, vertex: v });
        }
        let pts = mesh.cell_points(c);
        let scale = mesh.cell_meta(c).diameter.powi(2);
        if !(signed_area(&pts) > 1e-14 * scale) {
            return Err(MeshDiagnostic::ZeroArea { cell: c });
        }
        if !is_simple(&pts) {
            return Err(MeshDiagnostic::SelfIntersecting { cell: c });
        }
        mesh.cell_geometry(c)?;
    }

    // every cell loop segment must be one of its edges, with matching adjacency
    let mut usage: HashMap<(usize, usize), usize> = HashMap::new();
    for (c, cell) in mesh.cells().iter().enumerate() {
        let n = cell.len();
        let local = mesh.cell_edges(c);
        if local.len() != n {
            return Err(MeshDiagnostic::CellEdgeMismatch { cell: c });
        }
        for i in 0..n {
            let (a, b) = (cell[i], cell[(i + 1) % n]);
            let Some(edge) = mesh.edges().get(local[i]) else {
                return Err(MeshDiagnostic::CellEdgeMismatch { cell: c });
            };
            let [ea, eb] = edge.vertices;
            let incident = edge.left == c || edge.right == Some(c);
            if !incident || (ea.min(eb), ea.max(eb)) != (a.min(b), a.max(b)) {
                return Err(MeshDiagnostic::CellEdgeMismatch { cell: c });
            }
            *usage.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        if usage.get(&(a.min(b), a.max(b))).copied().unwrap_or(0) > 2 {
            return Err(MeshDiagnostic::NonManifoldEdge { edge: e });
        }
        if let Some(r) = edge.right {
            if r <= edge.left {
                return Err(MeshDiagnostic::BadNormal { edge: e });
            }
        }
    }
    for (e, edge) in mesh.edges().iter().enumerate() {
        let nrm = edge.normal;
        if ((nrm[0] * nrm[0] + nrm[1] * nrm[1]).sqrt() - 1.0).abs() > 1e-12 {
            return Err(MeshDiagnostic::BadNormal { edge: e });
        }
        // the stored pair must run counter-clockwise around the left cell
        let [a, b] = edge.vertices;
        let left = &mesh.cells()[edge.left];
        let n = left.len();
        let ccw = (0..n).any(|i| left[i] == a && left[(i + 1) % n] == b);
        let [p, q] = mesh.edge_points(e);
        let t = [q[0] - p[0], q[1] - p[1]];
        let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
        let expect = [t[1] / len, -t[0] / len];
        if !ccw
            || (expect[0] - nrm[0]).abs() > 1e-12
            || (expect[1] - nrm[1]).abs() > 1e-12
            || (edge.length - len).abs() > 1e-12 * len.max(1.0)
        {
            return Err(MeshDiagnostic::BadNormal { edge: e });
        }
    }

    // boundary edges must form closed loops
    let mut degree: HashMap<usize, i64> = HashMap::new();
    for e in mesh.boundary_edges() {
        let [a, b] = mesh.edge(e).vertices;
        *degree.entry(a).or_default() += 1;
        *degree.entry(b).or_default() -= 1;
    }
    let mut open: Vec<usize> = degree
        .into_iter()
        .filter(|(_, d)| *d != 0)
        .map(|(v, _)| v)
        .collect();
    open.sort_unstable();
    if let Some(&v) = open.first() {
        return Err(MeshDiagnostic::OpenBoundary { vertex: v });
    }

    let cells = mesh.total_area();
    let domain = mesh.domain_area();
    if (cells - domain).abs() > 1e-12 * domain.abs().max(f64::MIN_POSITIVE) {
        return Err(MeshDiagnostic::AreaMismatch { cells, domain });
    }

    let actual = (0..mesh.num_cells()).fold(0.0_f64, |m, c| m.max(mesh.cell_meta(c).diameter));
    if mesh.h() != actual {
        return Err(MeshDiagnostic::MeshSize {
            stored: mesh.h(),
            actual,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{square_grid, MeshError, Rectangle};

    #[test]
    fn generated_meshes_validate() {
        for level in 1..=8 {
            validate(&square_grid(level, Rectangle::unit()).unwrap()).unwrap();
        }
        for level in 1..=6 {
            validate(&crate::mesh::polygonal_grid(level).unwrap()).unwrap();
        }
    }

    #[test]
    fn zero_area_cell_named() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [2.0, 0.0]];
        // second cell is a degenerate sliver along the bottom line
        let err = WeakMesh::new(v, vec![vec![0, 1, 2, 3], vec![1, 4, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::Invalid(MeshDiagnostic::DegenerateEdge { cell: 1 })));

        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [2.0, 0.0], [3.0, 0.0]];
        let err = WeakMesh::new(v, vec![vec![0, 1, 2, 3], vec![1, 4, 5]]).unwrap_err();
        assert!(matches!(err, MeshError::Invalid(MeshDiagnostic::ZeroArea { cell: 1 })));
    }

    #[test]
    fn open_boundary_detected() {
        let m = square_grid(2, Rectangle::unit()).unwrap();
        let b = m.boundary_edges().next().unwrap();
        let mut edges = m.edges().to_vec();
        // pretend a boundary edge is interior: the boundary chain breaks
        edges[b].right = Some(m.num_cells() - 1);
        let cells = m.cells().to_vec();
        let cell_edges: Vec<Vec<usize>> = (0..m.num_cells()).map(|c| m.cell_edges(c).to_vec()).collect();
        let broken = WeakMesh::from_parts(m.vertices().to_vec(), cells, edges, cell_edges);
        let err = validate(&broken).unwrap_err();
        assert!(matches!(err, MeshDiagnostic::OpenBoundary { .. }), "{err}");
        assert!(err.to_string().contains("open boundary"));
    }

    #[test]
    fn non_manifold_edge_detected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [1.5, 0.5]];
        let err = WeakMesh::new(v, vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]]).unwrap_err();
        assert!(err.to_string().contains("non-manifold edge"), "{err}");
    }

    #[test]
    fn self_intersecting_cell_detected() {
        let v = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let err = WeakMesh::new(v, vec![vec![0, 1, 2, 3]]).unwrap_err();
        assert!(matches!(
            err,
            MeshError::Invalid(MeshDiagnostic::ZeroArea { cell: 0 })
                | MeshError::Invalid(MeshDiagnostic::SelfIntersecting { cell: 0 })
        ));
    }

    #[test]
    fn edge_normal_closure_per_cell() {
        for m in [
            square_grid(3, Rectangle::unit()).unwrap(),
            crate::mesh::polygonal_grid(2).unwrap(),
        ] {
            for c in 0..m.num_cells() {
                let mut s = [0.0, 0.0];
                for &e in m.cell_edges(c) {
                    let n = m.outward_normal(c, e);
                    let l = m.edge(e).length;
                    s[0] += l * n[0];
                    s[1] += l * n[1];
                }
                assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12);
            }
        }
    }
}
