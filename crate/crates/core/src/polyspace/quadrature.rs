use std::sync::OnceLock;

use super::PolyError;
use crate::mesh::{Point, WeakMesh};

/// Highest polynomial degree the built-in triangle rules integrate exactly.
pub const MAX_TRIANGLE_EXACTNESS: usize = 40;

const MAX_GAUSS_POINTS: usize = MAX_TRIANGLE_EXACTNESS / 2 + 2;

/// Points and positive weights in physical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomials of total degree up to this value are integrated exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(*p))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// three-term recurrence.
fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Cached Gauss–Legendre rule with `n` points on [-1, 1].
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..=MAX_GAUSS_POINTS).map(compute_gauss_legendre).collect());
    assert!(
        (1..=MAX_GAUSS_POINTS).contains(&n),
        "unsupported Gauss-Legendre size {n}"
    );
    &table[n]
}

/// Rule on the reference triangle (0,0), (1,0), (0,1): barycentric-free
/// collapsed-coordinate product of Gauss rules.
struct ReferenceTriangleRule {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

fn reference_triangle(exactness: usize) -> &'static ReferenceTriangleRule {
    static TABLE: OnceLock<Vec<ReferenceTriangleRule>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..=MAX_TRIANGLE_EXACTNESS)
            .map(|d| {
                // the collapsed direction carries the extra Jacobian factor (1 - u)
                let (xu, wu) = gauss_legendre((d + 2).div_ceil(2));
                let (xv, wv) = gauss_legendre((d + 1).div_ceil(2).max(1));
                let mut points = Vec::with_capacity(xu.len() * xv.len());
                let mut weights = Vec::with_capacity(xu.len() * xv.len());
                for (a, wa) in xu.iter().zip(wu) {
                    let u = 0.5 * (a + 1.0);
                    for (b, wb) in xv.iter().zip(wv) {
                        let v = 0.5 * (b + 1.0);
                        points.push([u, v * (1.0 - u)]);
                        weights.push(0.25 * wa * wb * (1.0 - u));
                    }
                }
                ReferenceTriangleRule { points, weights }
            })
            .collect()
    });
    &table[exactness]
}

/// Rule exact to the given degree on one physical triangle.
pub fn triangle_quadrature(tri: &[Point; 3], exactness: usize) -> Result<QuadratureRule, PolyError> {
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        exactness,
    };
    push_triangle(&mut rule, tri, exactness)?;
    Ok(rule)
}

fn push_triangle(rule: &mut QuadratureRule, tri: &[Point; 3], exactness: usize) -> Result<(), PolyError> {
    if exactness > MAX_TRIANGLE_EXACTNESS {
        return Err(PolyError::UnsupportedExactness {
            requested: exactness,
            max: MAX_TRIANGLE_EXACTNESS,
        });
    }
    let reference = reference_triangle(exactness);
    let [p0, p1, p2] = *tri;
    let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
    let e2 = [p2[0] - p0[0], p2[1] - p0[1]];
    let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    for (q, w) in reference.points.iter().zip(&reference.weights) {
        rule.points.push([
            p0[0] + q[0] * e1[0] + q[1] * e2[0],
            p0[1] + q[0] * e1[1] + q[1] * e2[1],
        ]);
        rule.weights.push(w * jac);
    }
    Ok(())
}

/// Tensor Gauss–Legendre rule on the parallelogram spanned by `p1 - p0` and `p3 - p0`.
pub fn parallelogram_quadrature(corners: &[Point; 4], exactness: usize) -> Result<QuadratureRule, PolyError> {
    if exactness > MAX_TRIANGLE_EXACTNESS {
        return Err(PolyError::UnsupportedExactness {
            requested: exactness,
            max: MAX_TRIANGLE_EXACTNESS,
        });
    }
    let n = (exactness + 1).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let [p0, p1, _, p3] = *corners;
    let u = [p1[0] - p0[0], p1[1] - p0[1]];
    let v = [p3[0] - p0[0], p3[1] - p0[1]];
    let area = (u[0] * v[1] - u[1] * v[0]).abs();
    let mut rule = QuadratureRule {
        points: Vec::with_capacity(n * n),
        weights: Vec::with_capacity(n * n),
        exactness: 2 * n - 1,
    };
    for (tj, wj) in x.iter().zip(w) {
        let t = 0.5 * (tj + 1.0);
        for (si, wi) in x.iter().zip(w) {
            let s = 0.5 * (si + 1.0);
            rule.points.push([p0[0] + s * u[0] + t * v[0], p0[1] + s * u[1] + t * v[1]]);
            rule.weights.push(0.25 * wi * wj * area);
        }
    }
    Ok(rule)
}

/// The four corners of a cell when it is a parallelogram.
fn parallelogram_corners(mesh: &WeakMesh, cell: usize) -> Option<[Point; 4]> {
    let vs = &mesh.cells()[cell];
    if vs.len() != 4 {
        return None;
    }
    let p: Vec<Point> = vs.iter().map(|&v| mesh.vertices()[v]).collect();
    let gap = (p[0][0] + p[2][0] - p[1][0] - p[3][0]).hypot(p[0][1] + p[2][1] - p[1][1] - p[3][1]);
    (gap <= 1e-12 * mesh.cell_meta(cell).diameter).then(|| [p[0], p[1], p[2], p[3]])
}

/// Rule for a polygonal cell: tensor Gauss–Legendre on parallelograms,
/// otherwise assembled on the centroid fan.
pub fn cell_quadrature(mesh: &WeakMesh, cell: usize, exactness: usize) -> Result<QuadratureRule, PolyError> {
    if let Some(corners) = parallelogram_corners(mesh, cell) {
        return parallelogram_quadrature(&corners, exactness);
    }
    let geom = mesh.cell_geometry(cell)?;
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        exactness,
    };
    for tri in &geom.fan {
        push_triangle(&mut rule, tri, exactness)?;
    }
    Ok(rule)
}

/// Gauss–Legendre rule with `ceil((exactness + 1) / 2)` points on a segment.
pub fn segment_quadrature(a: Point, b: Point, exactness: usize) -> QuadratureRule {
    let n = (exactness + 1).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let len = crate::mesh::dist(a, b);
    let points = x
        .iter()
        .map(|t| {
            let s = 0.5 * (t + 1.0);
            [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
        })
        .collect();
    let weights = w.iter().map(|wi| 0.5 * wi * len).collect();
    QuadratureRule {
        points,
        weights,
        exactness: 2 * n - 1,
    }
}

/// Gauss–Legendre rule along a mesh edge, ordered in the edge's orientation.
pub fn edge_quadrature(mesh: &WeakMesh, edge: usize, exactness: usize) -> QuadratureRule {
    let [a, b] = mesh.edge_points(edge);
    segment_quadrature(a, b, exactness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{polygonal_grid, square_grid, Rectangle};

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..=MAX_GAUSS_POINTS {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let got: f64 = x.iter().zip(w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let want = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} p={p}: {got} vs {want}");
            }
            assert!(w.iter().all(|&wi| wi > 0.0));
        }
    }

    #[test]
    fn two_point_rule_on_unit_edge() {
        let r = segment_quadrature([0.0, 0.0], [1.0, 0.0], 3);
        assert_eq!(r.len(), 2);
        assert!((r.weights[0] - 0.5).abs() < 1e-15 && (r.weights[1] - 0.5).abs() < 1e-15);
        let x3 = r.integrate(|p| p[0].powi(3));
        assert!((x3 - 0.25).abs() < 1e-15);
        let long = segment_quadrature([0.0, 0.0], [3.0, 4.0], 0);
        assert!((long.measure() - 5.0).abs() < 1e-14);
    }

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!.
    fn ref_monomial(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn triangle_rules_are_exact() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for d in [0, 1, 2, 5, 10, 14, 20] {
            let r = triangle_quadrature(&tri, d).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let got = r.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let want = ref_monomial(a, b);
                    assert!((got - want).abs() <= 1e-12 * want, "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn parallelogram_rule_matches_split_triangles() {
        let c = [[0.0, 0.0], [2.0, 0.5], [2.5, 2.0], [0.5, 1.5]];
        let t1 = triangle_quadrature(&[c[0], c[1], c[2]], 12).unwrap();
        let t2 = triangle_quadrature(&[c[0], c[2], c[3]], 12).unwrap();
        for d in [0, 3, 7, 12] {
            let r = parallelogram_quadrature(&c, d).unwrap();
            assert!(r.exactness >= d);
            for a in 0..=d as i32 {
                for b in 0..=(d as i32 - a) {
                    let f = |p: Point| p[0].powi(a) * p[1].powi(b);
                    let want = t1.integrate(f) + t2.integrate(f);
                    assert!((r.integrate(f) - want).abs() <= 1e-12 * want.abs().max(1.0), "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn square_cells_use_tensor_rules() {
        let m = square_grid(2, Rectangle::unit()).unwrap();
        assert_eq!(cell_quadrature(&m, 3, 8).unwrap().len(), 25);
        let p = polygonal_grid(1).unwrap();
        let sizes: Vec<usize> = (0..p.num_cells()).map(|c| p.cells()[c].len()).collect();
        let quad = sizes.iter().position(|&n| n == 4).unwrap();
        assert!(!cell_quadrature(&p, quad, 2).unwrap().is_empty());
    }

    #[test]
    fn unit_square_cell_rules() {
        let m = square_grid(1, Rectangle::unit()).unwrap();
        let r0 = cell_quadrature(&m, 0, 0).unwrap();
        assert!((r0.measure() - 1.0).abs() < 1e-14);
        let r3 = cell_quadrature(&m, 0, 3).unwrap();
        let v = r3.integrate(|p| p[0] * p[0] * p[1]);
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn polygon_weights_sum_to_area() {
        let m = polygonal_grid(1).unwrap();
        for c in 0..m.num_cells() {
            for d in [0, 4, 9] {
                let r = cell_quadrature(&m, c, d).unwrap();
                let area = m.cell_meta(c).area;
                assert!((r.measure() - area).abs() <= 1e-13 * area);
            }
        }
    }

    #[test]
    fn polygon_monomials_match_vertex_formula() {
        // integral of x over a polygon = area * centroid_x
        let m = polygonal_grid(1).unwrap();
        for c in 0..m.num_cells() {
            let r = cell_quadrature(&m, c, 1).unwrap();
            let meta = m.cell_meta(c);
            let got = r.integrate(|p| p[0]);
            assert!((got - meta.area * meta.centroid[0]).abs() <= 1e-13);
        }
    }

    #[test]
    fn unsupported_exactness_is_an_error() {
        let m = square_grid(1, Rectangle::unit()).unwrap();
        assert!(matches!(
            cell_quadrature(&m, 0, MAX_TRIANGLE_EXACTNESS + 1),
            Err(PolyError::UnsupportedExactness { .. })
        ));
    }
}
