//! Manufactured problems on the unit square with closed-form solutions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::friedrichs::{
    conv_diff_system, maxwell2d, transport_reaction, ConvectionDiffusion, FriedrichsError, FriedrichsSystem,
    Maxwell2d, SystemVectorField,
};
use crate::mesh::Point;

/// Value, first and second derivative of a function of one variable.
type Profile = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// Value, gradient and Hessian of a scalar function of two variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Jet {
    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1]
    }
}

/// `scale · p(x) · q(y)`.
#[derive(Clone)]
struct Separable {
    scale: f64,
    p: Profile,
    q: Profile,
}

impl Separable {
    fn jet(&self, x: Point) -> Jet {
        let [p, dp, ddp] = (self.p)(x[0]);
        let [q, dq, ddq] = (self.q)(x[1]);
        let s = self.scale;
        Jet {
            value: s * p * q,
            grad: [s * dp * q, s * p * dq],
            hess: [[s * ddp * q, s * dp * dq], [s * dp * dq, s * p * ddq]],
        }
    }
}

fn bubble() -> Profile {
    Arc::new(|t| [t * (1.0 - t), 1.0 - 2.0 * t, -2.0])
}

/// `sin(πt/2)(1 - e^{(t-1)/δ})`; the exponent is never positive on `[0, 1]`.
fn layer(delta: f64) -> Profile {
    Arc::new(move |t| {
        let w = 0.5 * PI;
        let (s, c) = (w * t).sin_cos();
        let e = ((t - 1.0) / delta).exp();
        let g = 1.0 - e;
        [
            s * g,
            w * c * g - s * e / delta,
            -w * w * s * g - 2.0 * w * c * e / delta - s * e / (delta * delta),
        ]
    })
}

/// Exact solution `U` with its partial derivatives `∂ₓU`, `∂_yU`.
pub type JacobianField = Arc<dyn Fn(Point) -> [Vec<f64>; 2] + Send + Sync>;

/// A Friedrichs system with an exact solution and the matching source.
#[derive(Clone)]
pub struct ManufacturedProblem {
    name: String,
    system: FriedrichsSystem,
    exact: SystemVectorField,
    jacobian: JacobianField,
    epsilon: Option<f64>,
}

impl fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("name", &self.name)
            .field("system", &self.system)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

impl ManufacturedProblem {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn system(&self) -> &FriedrichsSystem {
        &self.system
    }

    pub fn exact(&self, x: Point) -> Vec<f64> {
        (self.exact)(x)
    }

    pub fn exact_field(&self) -> &SystemVectorField {
        &self.exact
    }

    /// `[∂ₓU(x), ∂_yU(x)]`.
    pub fn jacobian(&self, x: Point) -> [Vec<f64>; 2] {
        (self.jacobian)(x)
    }

    /// Diffusion parameter of the convection-diffusion problems.
    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// Components measured by the L2 column of a convergence table: the
    /// scalar `u` for the convection-diffusion problems, all components otherwise.
    pub fn error_components(&self) -> std::ops::Range<usize> {
        let m = self.system.m();
        match self.epsilon {
            Some(_) => m - 1..m,
            None => 0..m,
        }
    }

    /// Replaces the stabilization parameter of the underlying system.
    pub fn with_mu(mut self, mu: f64) -> Result<Self, FriedrichsError> {
        self.system = self.system.with_mu(mu)?;
        Ok(self)
    }

    /// Largest entry of `|A₁∂ₓU + A₂∂_yU + BU - f|` relative to `1 + |f|_∞`.
    pub fn consistency_residual(&self, x: Point) -> f64 {
        let u = self.exact(x);
        let [ux, uy] = self.jacobian(x);
        let [a1, a2] = self.system.a(x);
        let mut lhs = self.system.b(x).matvec(&u);
        a1.matvec_acc(&ux, 1.0, &mut lhs);
        a2.matvec_acc(&uy, 1.0, &mut lhs);
        let f = self.system.f(x);
        let scale = 1.0 + f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        lhs.iter().zip(&f).fold(0.0f64, |m, (l, r)| m.max((l - r).abs())) / scale
    }
}

fn cdr_problem(
    name: &str,
    epsilon: f64,
    beta: [f64; 2],
    alpha: f64,
    u: Separable,
) -> Result<ManufacturedProblem, FriedrichsError> {
    if !(epsilon > 0.0) {
        return Err(FriedrichsError::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let s = epsilon.sqrt();
    let src = u.clone();
    let f = Arc::new(move |x: Point| {
        let j = src.jet(x);
        -epsilon * j.laplacian() + beta[0] * j.grad[0] + beta[1] * j.grad[1] + alpha * j.value
    });
    let ue = u.clone();
    let exact: SystemVectorField = Arc::new(move |x| {
        let j = ue.jet(x);
        vec![-s * j.grad[0], -s * j.grad[1], j.value]
    });
    let jacobian: JacobianField = Arc::new(move |x| {
        let j = u.jet(x);
        [
            vec![-s * j.hess[0][0], -s * j.hess[1][0], j.grad[0]],
            vec![-s * j.hess[0][1], -s * j.hess[1][1], j.grad[1]],
        ]
    });
    let system = conv_diff_system(ConvectionDiffusion::constant(epsilon, beta, alpha, f))?
        .with_exact(exact.clone())
        .with_name(name);
    Ok(ManufacturedProblem {
        name: name.into(),
        system,
        exact,
        jacobian,
        epsilon: Some(epsilon),
    })
}

/// `u = x(1-x)y(1-y)` for `-εΔu + β·∇u + αu = f` in first-order form
/// `(σ₁, σ₂, u)`, `σ = -√ε∇u`.
pub fn manufactured_cdr_smooth(epsilon: f64, beta: [f64; 2], alpha: f64) -> Result<ManufacturedProblem, FriedrichsError> {
    let u = Separable {
        scale: 1.0,
        p: bubble(),
        q: bubble(),
    };
    cdr_problem("cdr-smooth", epsilon, beta, alpha, u)
}

/// `u = sin(πx/2) sin(πy/2)(1 - e^{(x-1)/√ε})(1 - e^{(y-1)/√ε})`, with
/// boundary layers along `x = 1` and `y = 1`.
pub fn manufactured_cdr_layer(epsilon: f64, beta: [f64; 2], alpha: f64) -> Result<ManufacturedProblem, FriedrichsError> {
    if !(epsilon > 0.0) {
        return Err(FriedrichsError::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    let delta = epsilon.sqrt();
    let u = Separable {
        scale: 1.0,
        p: layer(delta),
        q: layer(delta),
    };
    cdr_problem("cdr-layer", epsilon, beta, alpha, u)
}

/// `E = 8x(1-x)y(1-y)`, `H = (-∂_yE, ∂ₓE)` for `νH + ∇∧E = h`,
/// `σE - ∇∧H = g`.
pub fn manufactured_maxwell(nu: f64, sigma: f64) -> Result<ManufacturedProblem, FriedrichsError> {
    let e = Separable {
        scale: 8.0,
        p: bubble(),
        q: bubble(),
    };
    let (eh, eg, ex, ej) = (e.clone(), e.clone(), e.clone(), e);
    let h = Arc::new(move |x: Point| {
        let j = eh.jet(x);
        [(1.0 - nu) * j.grad[1], (nu - 1.0) * j.grad[0]]
    });
    let g = Arc::new(move |x: Point| {
        let j = eg.jet(x);
        sigma * j.value - j.laplacian()
    });
    let exact: SystemVectorField = Arc::new(move |x| {
        let j = ex.jet(x);
        vec![-j.grad[1], j.grad[0], j.value]
    });
    let jacobian: JacobianField = Arc::new(move |x| {
        let j = ej.jet(x);
        [
            vec![-j.hess[1][0], j.hess[0][0], j.grad[0]],
            vec![-j.hess[1][1], j.hess[0][1], j.grad[1]],
        ]
    });
    let system = maxwell2d(Maxwell2d::constant(nu, sigma, h, g))?.with_exact(exact.clone());
    Ok(ManufacturedProblem {
        name: "maxwell2d".into(),
        system,
        exact,
        jacobian,
        epsilon: None,
    })
}

/// `u = x(1-x)y(1-y)` for `β·∇u + αu = f`.
pub fn manufactured_transport(beta: [f64; 2], alpha: f64) -> Result<ManufacturedProblem, FriedrichsError> {
    let u = Separable {
        scale: 1.0,
        p: bubble(),
        q: bubble(),
    };
    let (uf, ue, uj) = (u.clone(), u.clone(), u);
    let f: SystemVectorField = Arc::new(move |x| {
        let j = uf.jet(x);
        vec![beta[0] * j.grad[0] + beta[1] * j.grad[1] + alpha * j.value]
    });
    let exact: SystemVectorField = Arc::new(move |x| vec![ue.jet(x).value]);
    let jacobian: JacobianField = Arc::new(move |x| {
        let j = uj.jet(x);
        [vec![j.grad[0]], vec![j.grad[1]]]
    });
    let system = transport_reaction(beta, alpha)?.with_source(f).with_exact(exact.clone());
    Ok(ManufacturedProblem {
        name: "transport".into(),
        system,
        exact,
        jacobian,
        epsilon: None,
    })
}
