//! Friedrichs systems `Σ A_k ∂_k u + B u = f` with boundary condition
//! `(M - D_n) u = 0`, admissibility checks and the builtin problems.

use std::fmt;
use std::sync::Arc;

pub use crate::linalg::spectral_radius;
use crate::linalg::{symmetric_eigenvalues, DenseMatrix};
use crate::mesh::{Point, WeakMesh};
use crate::polyspace::{cell_quadrature, edge_quadrature, PolyError};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(Point) -> DenseMatrix + Send + Sync>;
pub type FluxField = Arc<dyn Fn(Point) -> [DenseMatrix; 2] + Send + Sync>;
pub type BoundaryField = Arc<dyn Fn(Point, [f64; 2]) -> DenseMatrix + Send + Sync>;
pub type SystemVectorField = Arc<dyn Fn(Point) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FriedrichsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "mu = {mu} violates mu - rho(D_n)/2 > 0: the largest value of rho(D_n)/2 is {half_rho}"
    )]
    MuTooSmall { mu: f64, half_rho: f64 },
}

/// Data of a Friedrichs system together with its positivity and
/// stabilization constants.
#[derive(Clone)]
pub struct FriedrichsSystem {
    name: String,
    m: usize,
    a: FluxField,
    div_a: MatrixField,
    b: MatrixField,
    m_bnd: BoundaryField,
    f: SystemVectorField,
    exact: Option<SystemVectorField>,
    sigma0: f64,
    rho_max: f64,
    mu: f64,
    mu0: f64,
}

impl fmt::Debug for FriedrichsSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FriedrichsSystem")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("sigma0", &self.sigma0)
            .field("rho_max", &self.rho_max)
            .field("mu", &self.mu)
            .field("mu0", &self.mu0)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl FriedrichsSystem {
    /// A system with the default stabilization `μ = ρ_max/2 + 1`, where
    /// `rho_max` bounds `ρ(D_n)` over the domain and all unit normals.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        m: usize,
        a: FluxField,
        div_a: MatrixField,
        b: MatrixField,
        m_bnd: BoundaryField,
        f: SystemVectorField,
        sigma0: f64,
        rho_max: f64,
    ) -> Result<Self, FriedrichsError> {
        if m == 0 {
            return Err(FriedrichsError::InvalidParameter("system size must be positive".into()));
        }
        if !(sigma0 > 0.0) {
            return Err(FriedrichsError::InvalidParameter(format!(
                "sigma0 = {sigma0} must be positive"
            )));
        }
        if !(rho_max >= 0.0) || !rho_max.is_finite() {
            return Err(FriedrichsError::InvalidParameter(format!(
                "rho bound {rho_max} must be finite and non-negative"
            )));
        }
        Ok(Self {
            name: name.into(),
            m,
            a,
            div_a,
            b,
            m_bnd,
            f,
            exact: None,
            sigma0,
            rho_max,
            mu: 0.5 * rho_max + 1.0,
            mu0: 1.0,
        })
    }

    /// Replaces `μ`; the coercivity margin becomes `μ₀ = μ - ρ_max/2`.
    pub fn with_mu(mut self, mu: f64) -> Result<Self, FriedrichsError> {
        let half_rho = 0.5 * self.rho_max;
        if !(mu - half_rho > 0.0) || !mu.is_finite() {
            return Err(FriedrichsError::MuTooSmall { mu, half_rho });
        }
        self.mu = mu;
        self.mu0 = mu - half_rho;
        Ok(self)
    }

    pub fn with_source(mut self, f: SystemVectorField) -> Self {
        self.f = f;
        self
    }

    pub fn with_exact(mut self, u: SystemVectorField) -> Self {
        self.exact = Some(u);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of unknown components.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a(&self, x: Point) -> [DenseMatrix; 2] {
        (self.a)(x)
    }

    pub fn div_a(&self, x: Point) -> DenseMatrix {
        (self.div_a)(x)
    }

    pub fn b(&self, x: Point) -> DenseMatrix {
        (self.b)(x)
    }

    /// Boundary matrix `M(x)` for the outward unit normal `n`.
    pub fn m_bnd(&self, x: Point, n: [f64; 2]) -> DenseMatrix {
        (self.m_bnd)(x, n)
    }

    pub fn f(&self, x: Point) -> Vec<f64> {
        (self.f)(x)
    }

    pub fn exact(&self) -> Option<&SystemVectorField> {
        self.exact.as_ref()
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    /// Upper bound of `ρ(D_n)` over the domain and all unit normals.
    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    /// `D_n = A₁ n₁ + A₂ n₂`.
    pub fn d_n(&self, x: Point, n: [f64; 2]) -> DenseMatrix {
        d_n(self, x, n)
    }
}

/// `D_n = A₁(x) n₁ + A₂(x) n₂`.
pub fn d_n(sys: &FriedrichsSystem, x: Point, n: [f64; 2]) -> DenseMatrix {
    debug_assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() <= 1e-12);
    let [a1, a2] = sys.a(x);
    let mut d = a1.scaled(n[0]);
    d.add_assign_scaled(&a2, n[1]);
    d
}

/// Worst observed value of one admissibility quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Check {
    pub worst: f64,
    pub passed: bool,
}

/// Outcome of [`check_admissibility`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityReport {
    /// Largest `|A_k - A_kᵀ|` entry.
    pub symmetry: Check,
    /// Smallest eigenvalue of `B + Bᵀ - divA - 2σ₀I`.
    pub positivity: Check,
    /// Smallest eigenvalue of `M + Mᵀ` on boundary edges.
    pub boundary: Check,
    /// Smallest `μ - ρ(D_n)/2 - μ₀` on edges.
    pub coercivity: Check,
    /// Largest relative mismatch between `divA` and central differences of `A`.
    pub div_a: Check,
    pub mu0: f64,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.mu0 > 0.0 && self.checks().iter().all(|(_, c)| c.passed)
    }

    pub fn checks(&self) -> [(&'static str, Check); 5] {
        [
            ("symmetric A", self.symmetry),
            ("positivity of B + B^T - divA", self.positivity),
            ("non-negative M", self.boundary),
            ("mu - rho(D_n)/2 >= mu0", self.coercivity),
            ("divA matches A", self.div_a),
        ]
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks()
            .into_iter()
            .filter(|(_, c)| !c.passed)
            .map(|(n, _)| n)
            .collect()
    }
}

const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-5;

fn min_eigenvalue(s: &DenseMatrix) -> f64 {
    symmetric_eigenvalues(&s.symmetric_part())
        .map(|e| e[0])
        .unwrap_or(f64::NEG_INFINITY)
}

fn fd_div_a(sys: &FriedrichsSystem, x: Point) -> DenseMatrix {
    let h = FD_STEP;
    let [a1p, _] = sys.a([x[0] + h, x[1]]);
    let [a1m, _] = sys.a([x[0] - h, x[1]]);
    let [_, a2p] = sys.a([x[0], x[1] + h]);
    let [_, a2m] = sys.a([x[0], x[1] - h]);
    let mut d = a1p;
    d.add_assign_scaled(&a1m, -1.0);
    d.add_assign_scaled(&a2p, 1.0);
    d.add_assign_scaled(&a2m, -1.0);
    d.scaled(0.5 / h)
}

fn diff_max(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Interior-point checks: symmetry of `A_k`, positivity and the `divA` callback.
fn interior_checks(sys: &FriedrichsSystem, x: Point, sym: &mut f64, pos: &mut f64, div: &mut f64) {
    let [a1, a2] = sys.a(x);
    *sym = sym.max(a1.asymmetry()).max(a2.asymmetry());
    let div_a = sys.div_a(x);
    let b = sys.b(x);
    let mut n = b.clone();
    n.add_assign_scaled(&b.transpose(), 1.0);
    n.add_assign_scaled(&div_a, -1.0);
    n.add_assign_scaled(&DenseMatrix::identity(sys.m()), -2.0 * sys.sigma0());
    *pos = pos.min(min_eigenvalue(&n));
    let fd = fd_div_a(sys, x);
    *div = div.max(diff_max(&fd, &div_a) / div_a.max_abs().max(1.0));
}

/// Evaluates the admissibility conditions at quadrature points of every cell
/// and edge; `sample_exactness` selects the sampling rules.
pub fn check_admissibility(
    sys: &FriedrichsSystem,
    mesh: &WeakMesh,
    sample_exactness: usize,
) -> Result<AdmissibilityReport, PolyError> {
    let mut sym = 0.0_f64;
    let mut pos = f64::INFINITY;
    let mut div = 0.0_f64;
    let mut bnd = f64::INFINITY;
    let mut coer = f64::INFINITY;
    for c in 0..mesh.num_cells() {
        let q = cell_quadrature(mesh, c, sample_exactness)?;
        for &x in &q.points {
            interior_checks(sys, x, &mut sym, &mut pos, &mut div);
        }
    }
    for e in 0..mesh.num_edges() {
        let edge = mesh.edge(e);
        let q = edge_quadrature(mesh, e, sample_exactness);
        for &x in &q.points {
            let d = d_n(sys, x, edge.normal);
            let rho = spectral_radius(&d.symmetric_part()).unwrap_or(f64::INFINITY);
            coer = coer.min(sys.mu() - 0.5 * rho - sys.mu0());
            if edge.is_boundary() {
                let mb = sys.m_bnd(x, edge.normal);
                let mut s = mb.clone();
                s.add_assign_scaled(&mb.transpose(), 1.0);
                bnd = bnd.min(min_eigenvalue(&s));
            }
        }
    }
    if bnd == f64::INFINITY {
        bnd = 0.0;
    }
    let tol = 1e-12;
    Ok(AdmissibilityReport {
        symmetry: Check {
            worst: sym,
            passed: sym <= tol,
        },
        positivity: Check {
            worst: pos,
            passed: pos >= -tol,
        },
        boundary: Check {
            worst: bnd,
            passed: bnd >= -tol,
        },
        coercivity: Check {
            worst: coer,
            passed: coer >= -tol,
        },
        div_a: Check {
            worst: div,
            passed: div <= FD_TOL,
        },
        mu0: sys.mu0(),
    })
}

fn zero_source(m: usize) -> SystemVectorField {
    Arc::new(move |_| vec![0.0; m])
}

fn constant(mat: DenseMatrix) -> MatrixField {
    Arc::new(move |_| mat.clone())
}

/// Transport-reaction `β·∇u + αu = f` with `u = 0` on the inflow boundary,
/// for constant `β` and `α > 0`. The source is zero until set with
/// [`FriedrichsSystem::with_source`].
pub fn transport_reaction(beta: [f64; 2], alpha: f64) -> Result<FriedrichsSystem, FriedrichsError> {
    if !(alpha > 0.0) {
        return Err(FriedrichsError::InvalidParameter(format!(
            "alpha = {alpha} must be positive"
        )));
    }
    let a: FluxField = Arc::new(move |_| {
        [
            DenseMatrix::from_diagonal(&[beta[0]]),
            DenseMatrix::from_diagonal(&[beta[1]]),
        ]
    });
    let m_bnd: BoundaryField =
        Arc::new(move |_, n| DenseMatrix::from_diagonal(&[(beta[0] * n[0] + beta[1] * n[1]).abs()]));
    let rho = beta[0].hypot(beta[1]);
    FriedrichsSystem::new(
        "transport",
        1,
        a,
        constant(DenseMatrix::zeros(1, 1)),
        constant(DenseMatrix::from_diagonal(&[alpha])),
        m_bnd,
        zero_source(1),
        alpha,
        rho,
    )
}

/// Coefficients of `-ε Δu + β·∇u + αu = f` with `u = 0` on the boundary.
#[derive(Clone)]
pub struct ConvectionDiffusion {
    pub epsilon: f64,
    pub beta: VectorField,
    pub div_beta: ScalarField,
    pub alpha: ScalarField,
    pub f: ScalarField,
    /// Lower bound of `α - div β / 2` over the domain.
    pub alpha0: f64,
    /// Upper bound of `|β|_∞` over the domain.
    pub beta_inf: f64,
    /// Upper bound of `|β|_2` over the domain.
    pub beta_norm: f64,
}

impl ConvectionDiffusion {
    /// Constant `β` and `α`.
    pub fn constant(epsilon: f64, beta: [f64; 2], alpha: f64, f: ScalarField) -> Self {
        Self {
            epsilon,
            beta: Arc::new(move |_| beta),
            div_beta: Arc::new(|_| 0.0),
            alpha: Arc::new(move |_| alpha),
            f,
            alpha0: alpha,
            beta_inf: beta[0].abs().max(beta[1].abs()),
            beta_norm: beta[0].hypot(beta[1]),
        }
    }
}

/// First-order form of convection-diffusion-reaction with unknown
/// `(σ₁, σ₂, u)`, `σ = -√ε ∇u`. Uses `μ = |β|_∞ + 1`.
pub fn conv_diff_system(data: ConvectionDiffusion) -> Result<FriedrichsSystem, FriedrichsError> {
    let eps = data.epsilon;
    if !(eps > 0.0) {
        return Err(FriedrichsError::InvalidParameter(format!(
            "epsilon = {eps} must be positive"
        )));
    }
    if !(data.alpha0 > 0.0) {
        return Err(FriedrichsError::InvalidParameter(format!(
            "alpha - div(beta)/2 >= {} must be bounded away from zero",
            data.alpha0
        )));
    }
    let s = eps.sqrt();
    let beta = data.beta.clone();
    let a: FluxField = Arc::new(move |x| {
        let b = beta(x);
        [
            DenseMatrix::from_rows(&[[0.0, 0.0, s], [0.0, 0.0, 0.0], [s, 0.0, b[0]]]),
            DenseMatrix::from_rows(&[[0.0, 0.0, 0.0], [0.0, 0.0, s], [0.0, s, b[1]]]),
        ]
    });
    let div_beta = data.div_beta.clone();
    let div_a: MatrixField = Arc::new(move |x| DenseMatrix::from_diagonal(&[0.0, 0.0, div_beta(x)]));
    let alpha = data.alpha.clone();
    let b: MatrixField = Arc::new(move |x| DenseMatrix::from_diagonal(&[1.0, 1.0, alpha(x)]));
    let m_bnd: BoundaryField = Arc::new(move |_, n| {
        DenseMatrix::from_rows(&[
            [0.0, 0.0, -s * n[0]],
            [0.0, 0.0, -s * n[1]],
            [s * n[0], s * n[1], 1.0],
        ])
    });
    let f = data.f.clone();
    let source: SystemVectorField = Arc::new(move |x| vec![0.0, 0.0, f(x)]);
    // eigenvalues of D_n are 0 and (β·n ± sqrt((β·n)² + 4ε))/2
    let rho = 0.5 * (data.beta_norm + (data.beta_norm * data.beta_norm + 4.0 * eps).sqrt());
    FriedrichsSystem::new(
        "cdr",
        3,
        a,
        div_a,
        b,
        m_bnd,
        source,
        data.alpha0.min(1.0),
        rho,
    )?
    .with_mu(data.beta_inf + 1.0)
}

/// Coefficients of the two-dimensional Maxwell system.
#[derive(Clone)]
pub struct Maxwell2d {
    pub nu: ScalarField,
    pub sigma: ScalarField,
    pub h: VectorField,
    pub g: ScalarField,
    /// Positive lower bounds of `ν` and `σ`.
    pub nu_min: f64,
    pub sigma_min: f64,
}

impl Maxwell2d {
    pub fn constant(nu: f64, sigma: f64, h: VectorField, g: ScalarField) -> Self {
        Self {
            nu: Arc::new(move |_| nu),
            sigma: Arc::new(move |_| sigma),
            h,
            g,
            nu_min: nu,
            sigma_min: sigma,
        }
    }
}

/// Maxwell system in `(H₁, H₂, E)` with `E = 0` on the boundary; `μ = 1`.
pub fn maxwell2d(data: Maxwell2d) -> Result<FriedrichsSystem, FriedrichsError> {
    if !(data.nu_min > 0.0) || !(data.sigma_min > 0.0) {
        return Err(FriedrichsError::InvalidParameter(format!(
            "nu >= {} and sigma >= {} must be positive",
            data.nu_min, data.sigma_min
        )));
    }
    let a: FluxField = Arc::new(|_| {
        [
            DenseMatrix::from_rows(&[[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, -1.0, 0.0]]),
            DenseMatrix::from_rows(&[[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        ]
    });
    let (nu, sigma) = (data.nu.clone(), data.sigma.clone());
    let b: MatrixField = Arc::new(move |x| {
        let v = nu(x);
        DenseMatrix::from_diagonal(&[v, v, sigma(x)])
    });
    let m_bnd: BoundaryField = Arc::new(|_, n| {
        DenseMatrix::from_rows(&[
            [0.0, 0.0, -n[1]],
            [0.0, 0.0, n[0]],
            [n[1], -n[0], 1.0],
        ])
    });
    let (h, g) = (data.h.clone(), data.g.clone());
    let source: SystemVectorField = Arc::new(move |x| {
        let hx = h(x);
        vec![hx[0], hx[1], g(x)]
    });
    FriedrichsSystem::new(
        "maxwell2d",
        3,
        a,
        constant(DenseMatrix::zeros(3, 3)),
        b,
        m_bnd,
        source,
        data.nu_min.min(data.sigma_min),
        1.0,
    )?
    .with_mu(1.0)
}
