//! Structural invariants of the discrete forms on small meshes.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgfem::linalg::SolverOptions;
use wgfem::mesh::{polygonal_grid, square_grid, Rectangle, WeakMesh};
use wgfem::wg_assembly::Discretization;

use common::{builtins, field_norm, random_smooth_field, random_weak, rel_diff};

fn mesh(polygonal: bool, level: u32) -> WeakMesh {
    if polygonal {
        polygonal_grid(level).unwrap()
    } else {
        square_grid(level, Rectangle::unit()).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_identity_holds(sys in 0usize..3, k in 0usize..3, polygonal: bool, seed: u64) {
        let sys = &builtins()[sys];
        let mesh = mesh(polygonal, 2);
        let disc = Discretization::new(&mesh, sys, k);
        let v = random_weak(disc.dofs(), &mut ChaCha8Rng::seed_from_u64(seed));
        let (a, s) = disc.energy_forms(&v, &v).unwrap();
        let rhs = disc.energy_identity_rhs(&v).unwrap();
        prop_assert!((a + s - rhs).abs() <= 1e-11 * (1.0 + rhs.abs()), "{a} + {s} vs {rhs}");
    }

    #[test]
    fn forms_are_coercive_in_the_triple_norm(sys in 0usize..3, k in 0usize..3, polygonal: bool, seed: u64) {
        let sys = &builtins()[sys];
        let mesh = mesh(polygonal, 2);
        let disc = Discretization::new(&mesh, sys, k);
        let v = random_weak(disc.dofs(), &mut ChaCha8Rng::seed_from_u64(seed));
        let (a, s) = disc.energy_forms(&v, &v).unwrap();
        let norm = disc.triple_norm(&v).unwrap();
        prop_assert!(a + s >= norm * norm * (1.0 - 1e-10), "{} < {}", a + s, norm * norm);
    }

    #[test]
    fn interior_fluxes_telescope(sys in 0usize..3, k in 0usize..3, polygonal: bool, seed: u64) {
        let sys = &builtins()[sys];
        let mesh = mesh(polygonal, 2);
        let disc = Discretization::new(&mesh, sys, k);
        let v = random_weak(disc.dofs(), &mut ChaCha8Rng::seed_from_u64(seed));
        let (all, outer) = disc.boundary_fluxes(&v).unwrap();
        prop_assert!((all - outer).abs() <= 1e-11 * (1.0 + all.abs()), "{all} vs {outer}");
    }

    #[test]
    fn weak_vector_splits_into_triple_norm_parts(sys in 0usize..3, k in 0usize..3, seed: u64) {
        let sys = &builtins()[sys];
        let mesh = mesh(false, 2);
        let disc = Discretization::new(&mesh, sys, k);
        let v = random_weak(disc.dofs(), &mut ChaCha8Rng::seed_from_u64(seed));
        let parts = disc.triple_norm_parts(&v).unwrap();
        prop_assert!(parts.volume > 0.0 && parts.jump > 0.0 && parts.boundary >= 0.0);
        prop_assert!((parts.total().sqrt() - disc.triple_norm(&v).unwrap()).abs() <= 1e-14 * parts.total().sqrt());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solution_is_bounded_by_the_source(sys in 0usize..3, k in 0usize..3, polygonal: bool, seed: u64) {
        let base = &builtins()[sys];
        let mesh = mesh(polygonal, 2);
        let f = random_smooth_field(base.m(), &mut ChaCha8Rng::seed_from_u64(seed));
        let sys = base.clone().with_source(f.clone());
        let disc = Discretization::new(&mesh, &sys, k);
        let u = disc.solve(&SolverOptions::default()).unwrap().u;
        let bound = field_norm(&mesh, &f, 24) / sys.sigma0().sqrt();
        prop_assert!(disc.triple_norm(&u).unwrap() <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn condensed_and_monolithic_solutions_agree(sys in 0usize..3, k in 0usize..3, polygonal: bool) {
        let sys = &builtins()[sys];
        let mesh = mesh(polygonal, 2);
        let disc = Discretization::new(&mesh, sys, k);
        let opts = SolverOptions::default();
        let c = disc.solve(&opts).unwrap().u;
        let m = disc.solve_monolithic(&opts).unwrap().u;
        prop_assert!(rel_diff(&c.u0, &m.u0) <= 1e-10);
        prop_assert!(rel_diff(&c.ub, &m.ub) <= 1e-10);
    }

    #[test]
    fn galerkin_orthogonality_against_the_load(sys in 0usize..3, k in 0usize..2, seed: u64) {
        let sys = &builtins()[sys];
        let mesh = mesh(false, 2);
        let disc = Discretization::new(&mesh, sys, k);
        let u = disc.solve(&SolverOptions::with_tol(1e-13)).unwrap().u;
        let v = random_weak(disc.dofs(), &mut ChaCha8Rng::seed_from_u64(seed));
        let (a, s) = disc.energy_forms(&u, &v).unwrap();
        let l = disc.load(&v).unwrap();
        prop_assert!((a + s - l).abs() <= 1e-8 * (1.0 + l.abs()), "{} vs {l}", a + s);
    }
}
