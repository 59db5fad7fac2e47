//! Polynomial spaces on cells and edges, quadrature, mass matrices and
//! L2 projections.

mod quadrature;

pub use quadrature::{
    cell_quadrature, edge_quadrature, gauss_legendre, segment_quadrature, triangle_quadrature,
    QuadratureRule, MAX_TRIANGLE_EXACTNESS,
};

use crate::linalg::{DenseMatrix, LinalgError, QrFactors};
use crate::mesh::{MeshDiagnostic, Point, WeakMesh};

#[derive(Debug, thiserror::Error)]
pub enum PolyError {
    #[error("quadrature exactness {requested} exceeds the supported maximum {max}")]
    UnsupportedExactness { requested: usize, max: usize },
    #[error(transparent)]
    Mesh(#[from] MeshDiagnostic),
    #[error("mass matrix: {0}")]
    Linalg(#[from] LinalgError),
    #[error("projection solve residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },
}

/// Cell quadrature exactness used for assembly.
pub fn assembly_cell_exactness(k: usize) -> usize {
    2 * k + 2
}

/// Edge quadrature exactness used for assembly.
pub fn assembly_edge_exactness(k: usize) -> usize {
    2 * k + 3
}

/// Quadrature exactness for error integrals and projections of non-polynomial data.
pub fn error_exactness(k: usize) -> usize {
    2 * k + 6
}

/// Number of polynomials of total degree at most `k` in two variables.
pub fn cell_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Number of polynomials of degree at most `k` in one variable.
pub fn edge_dim(k: usize) -> usize {
    k + 1
}

/// A scalar polynomial basis that can be evaluated at physical points.
pub trait Basis {
    fn dim(&self) -> usize;
    fn eval_into(&self, x: Point, out: &mut [f64]);

    fn eval(&self, x: Point) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        out
    }

    /// Value of `Σ coeffs[i] φ_i(x)`.
    fn evaluate(&self, coeffs: &[f64], x: Point) -> f64 {
        self.eval(x).iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }
}

/// Scaled monomials `((x - c)/h)^a ((y - c)/h)^b`, `a + b <= k`, ordered by
/// total degree and then by increasing power of `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellBasis {
    degree: usize,
    center: Point,
    scale: f64,
    exponents: Vec<(usize, usize)>,
}

impl CellBasis {
    pub fn new(degree: usize, center: Point, scale: f64) -> Self {
        let mut exponents = Vec::with_capacity(cell_dim(degree));
        for d in 0..=degree {
            for b in 0..=d {
                exponents.push((d - b, b));
            }
        }
        Self {
            degree,
            center,
            scale,
            exponents,
        }
    }

    /// Basis in the frame of a mesh cell: centroid and diameter.
    pub fn for_cell(mesh: &WeakMesh, cell: usize, degree: usize) -> Self {
        let meta = mesh.cell_meta(cell);
        Self::new(degree, meta.centroid, meta.diameter)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.exponents
    }

    fn powers(&self, x: Point) -> (Vec<f64>, Vec<f64>) {
        let s = [(x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale];
        let mut px = vec![1.0; self.degree + 1];
        let mut py = vec![1.0; self.degree + 1];
        for i in 1..=self.degree {
            px[i] = px[i - 1] * s[0];
            py[i] = py[i - 1] * s[1];
        }
        (px, py)
    }

    /// Gradients of all basis functions at `x`.
    pub fn grad_into(&self, x: Point, out: &mut [[f64; 2]]) {
        let (px, py) = self.powers(x);
        let inv = 1.0 / self.scale;
        for (g, &(a, b)) in out.iter_mut().zip(&self.exponents) {
            let gx = if a == 0 { 0.0 } else { a as f64 * px[a - 1] * py[b] * inv };
            let gy = if b == 0 { 0.0 } else { b as f64 * px[a] * py[b - 1] * inv };
            *g = [gx, gy];
        }
    }

    pub fn grad(&self, x: Point) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.dim()];
        self.grad_into(x, &mut out);
        out
    }
}

impl Basis for CellBasis {
    fn dim(&self) -> usize {
        self.exponents.len()
    }

    fn eval_into(&self, x: Point, out: &mut [f64]) {
        let (px, py) = self.powers(x);
        for (v, &(a, b)) in out.iter_mut().zip(&self.exponents) {
            *v = px[a] * py[b];
        }
    }
}

/// Legendre polynomials `P_j(t)` in the edge parameter `t ∈ [-1, 1]`, running
/// from the edge's first vertex to its second.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeBasis {
    degree: usize,
    start: Point,
    end: Point,
}

impl EdgeBasis {
    pub fn new(degree: usize, start: Point, end: Point) -> Self {
        Self { degree, start, end }
    }

    pub fn for_edge(mesh: &WeakMesh, edge: usize, degree: usize) -> Self {
        let [a, b] = mesh.edge_points(edge);
        Self::new(degree, a, b)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Edge parameter of a point on (or projected onto) the edge.
    pub fn parameter(&self, x: Point) -> f64 {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let r = [x[0] - self.start[0], x[1] - self.start[1]];
        2.0 * (r[0] * d[0] + r[1] * d[1]) / (d[0] * d[0] + d[1] * d[1]) - 1.0
    }

    /// Point of the edge at parameter `t`.
    pub fn point(&self, t: f64) -> Point {
        let s = 0.5 * (t + 1.0);
        [
            self.start[0] + s * (self.end[0] - self.start[0]),
            self.start[1] + s * (self.end[1] - self.start[1]),
        ]
    }
}

/// Legendre values `P_0(t) .. P_k(t)`.
pub fn legendre_into(t: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = t;
    }
    for j in 2..n {
        out[j] = ((2 * j - 1) as f64 * t * out[j - 1] - (j - 1) as f64 * out[j - 2]) / j as f64;
    }
}

impl Basis for EdgeBasis {
    fn dim(&self) -> usize {
        edge_dim(self.degree)
    }

    fn eval_into(&self, x: Point, out: &mut [f64]) {
        legendre_into(self.parameter(x), &mut out[..self.dim()]);
    }
}

/// Gram matrix `∫ φ_i φ_j` of a basis under a quadrature rule.
pub fn mass_matrix<B: Basis + ?Sized>(basis: &B, quad: &QuadratureRule) -> DenseMatrix {
    let n = basis.dim();
    let mut m = DenseMatrix::zeros(n, n);
    let mut phi = vec![0.0; n];
    for (x, w) in quad.iter() {
        basis.eval_into(x, &mut phi);
        for i in 0..n {
            let wi = w * phi[i];
            for j in i..n {
                m[(i, j)] += wi * phi[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    m
}

pub fn cell_mass_matrix(basis: &CellBasis, quad: &QuadratureRule) -> DenseMatrix {
    mass_matrix(basis, quad)
}

pub fn edge_mass_matrix(basis: &EdgeBasis, quad: &QuadratureRule) -> DenseMatrix {
    mass_matrix(basis, quad)
}

/// L2 projection onto the span of a basis under a fixed quadrature rule.
///
/// The projection is computed from a Householder QR of the weighted
/// evaluation matrix `W^{1/2} V`, whose triangular factor is the Cholesky
/// factor of the mass matrix `VᵀWV`; this avoids squaring the condition
/// number of the scaled-monomial mass matrix.
#[derive(Clone, Debug)]
pub struct Projector {
    quad: QuadratureRule,
    /// Basis values, one row per quadrature point.
    values: DenseMatrix,
    qr: QrFactors,
    mass: DenseMatrix,
}

impl Projector {
    pub fn new<B: Basis + ?Sized>(basis: &B, quad: QuadratureRule) -> Result<Self, PolyError> {
        let n = basis.dim();
        let mut values = DenseMatrix::zeros(quad.len(), n);
        for (q, x) in quad.points.iter().enumerate() {
            basis.eval_into(*x, values.row_mut(q));
        }
        let weighted = DenseMatrix::from_fn(quad.len(), n, |q, i| quad.weights[q].sqrt() * values[(q, i)]);
        let qr = weighted.qr()?;
        let mass = mass_matrix(basis, &quad);
        Ok(Self {
            quad,
            values,
            qr,
            mass,
        })
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn mass(&self) -> &DenseMatrix {
        &self.mass
    }

    /// Basis values at quadrature point `q`.
    pub fn basis_values(&self, q: usize) -> &[f64] {
        self.values.row(q)
    }

    /// Solves `M c = rhs` with the mass matrix of the basis.
    pub fn solve_mass(&self, rhs: &[f64]) -> Vec<f64> {
        self.qr.solve_normal(rhs)
    }

    pub fn project(&self, f: impl Fn(Point) -> f64) -> Result<Vec<f64>, PolyError> {
        let samples: Vec<f64> = self.quad.points.iter().map(|&x| f(x)).collect();
        self.project_samples(&samples)
    }

    /// Projection of the function with the given values at the quadrature points.
    pub fn project_samples(&self, samples: &[f64]) -> Result<Vec<f64>, PolyError> {
        let rhs: Vec<f64> = samples
            .iter()
            .zip(&self.quad.weights)
            .map(|(f, w)| w.sqrt() * f)
            .collect();
        let c = self.qr.least_squares(&rhs);
        // the coefficients must satisfy the normal equations M c = (∫ f φ_i)
        let n = self.mass.rows();
        let mut moments = vec![0.0; n];
        for (q, (f, w)) in samples.iter().zip(&self.quad.weights).enumerate() {
            for (m, p) in moments.iter_mut().zip(self.values.row(q)) {
                *m += w * f * p;
            }
        }
        let mc = self.mass.matvec(&c);
        let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
        let rn = norm(&mut moments.iter().zip(&mc).map(|(b, m)| b - m));
        let bn = norm(&mut moments.iter().copied());
        if rn > 1e-12 * bn {
            return Err(PolyError::Residual { residual: rn / bn });
        }
        Ok(c)
    }
}

/// L2 projection of `f` onto the span of `basis`.
pub fn project<B: Basis + ?Sized>(
    f: impl Fn(Point) -> f64,
    basis: &B,
    quad: &QuadratureRule,
) -> Result<Vec<f64>, PolyError> {
    Projector::new(basis, quad.clone())?.project(f)
}

/// Cell projection `P_h f` in the scaled-monomial basis of `cell`.
pub fn project_cell(
    f: impl Fn(Point) -> f64,
    mesh: &WeakMesh,
    cell: usize,
    k: usize,
) -> Result<Vec<f64>, PolyError> {
    let basis = CellBasis::for_cell(mesh, cell, k);
    let quad = cell_quadrature(mesh, cell, error_exactness(k))?;
    project(f, &basis, &quad)
}

/// Edge projection `P_∂K f` in the Legendre basis of `edge`.
pub fn project_edge(
    f: impl Fn(Point) -> f64,
    mesh: &WeakMesh,
    edge: usize,
    k: usize,
) -> Result<Vec<f64>, PolyError> {
    let basis = EdgeBasis::for_edge(mesh, edge, k);
    let quad = edge_quadrature(mesh, edge, error_exactness(k));
    project(f, &basis, &quad)
}
