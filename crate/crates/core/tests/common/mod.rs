#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wgfem::friedrichs::{
    conv_diff_system, maxwell2d, transport_reaction, ConvectionDiffusion, FriedrichsSystem, Maxwell2d,
    SystemVectorField,
};
use wgfem::mesh::{Point, WeakMesh};
use wgfem::polyspace::cell_quadrature;
use wgfem::wg_assembly::{DofMap, WeakVector};

/// Transport, convection-diffusion and Maxwell systems with smooth sources.
pub fn builtins() -> Vec<FriedrichsSystem> {
    vec![
        transport_reaction([1.0, 2.0], 1.0)
            .unwrap()
            .with_source(Arc::new(|x| vec![(3.0 * x[0]).sin() + x[1]])),
        conv_diff_system(ConvectionDiffusion::constant(
            1e-2,
            [1.0, 2.0],
            1.0,
            Arc::new(|x| 1.0 + x[0] * x[1]),
        ))
        .unwrap(),
        maxwell2d(Maxwell2d::constant(
            1.0,
            1.0,
            Arc::new(|x| [x[1], -x[0]]),
            Arc::new(|x| (x[0] + 2.0 * x[1]).cos()),
        ))
        .unwrap(),
    ]
}

pub fn random_weak(dofs: &DofMap, rng: &mut ChaCha8Rng) -> WeakVector {
    WeakVector {
        u0: (0..dofs.n0()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        ub: (0..dofs.nb()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

/// `‖a - b‖ / ‖b‖`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// A random `m`-vector field of low-frequency trigonometric modes.
pub fn random_smooth_field(m: usize, rng: &mut ChaCha8Rng) -> SystemVectorField {
    let modes: Vec<Vec<(f64, f64, f64, f64)>> = (0..m)
        .map(|_| {
            (0..3)
                .map(|_| {
                    (
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..4.0),
                        rng.gen_range(0.0..4.0),
                        rng.gen_range(0.0..6.3),
                    )
                })
                .collect()
        })
        .collect();
    Arc::new(move |x: Point| {
        modes
            .iter()
            .map(|comp| comp.iter().map(|&(a, p, q, phase)| a * (p * x[0] + q * x[1] + phase).sin()).sum())
            .collect()
    })
}

/// `‖f‖` over the mesh by cell quadrature of the given exactness.
pub fn field_norm(mesh: &WeakMesh, f: &SystemVectorField, exactness: usize) -> f64 {
    let mut sum = 0.0;
    for cell in 0..mesh.num_cells() {
        for (x, w) in cell_quadrature(mesh, cell, exactness).unwrap().iter() {
            sum += w * f(x).iter().map(|v| v * v).sum::<f64>();
        }
    }
    sum.sqrt()
}
