use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::friedrichs::{
    conv_diff_system, maxwell2d, transport_reaction, ConvectionDiffusion, FriedrichsSystem, Maxwell2d,
};
use crate::linalg::{symmetric_eigenvalues, SolverOptions};
use crate::mesh::{polygonal_grid, square_grid, Rectangle};
use crate::polyspace::{edge_mass_matrix, segment_quadrature};

fn unit_transport(mu: f64) -> FriedrichsSystem {
    transport_reaction([1.0, 0.0], 1.0)
        .unwrap()
        .with_source(Arc::new(|_| vec![1.0]))
        .with_mu(mu)
        .unwrap()
}

fn builtins() -> Vec<FriedrichsSystem> {
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
            Arc::new(|x| (x[0] - x[1]).cos()),
        ))
        .unwrap(),
    ]
}

fn random_weak(dofs: &DofMap, rng: &mut ChaCha8Rng) -> WeakVector {
    WeakVector {
        u0: (0..dofs.n0()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        ub: (0..dofs.nb()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn dense_opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn dof_blocks_cover_ranges() {
    let d = DofMap::new(3, 2, 5, 7);
    assert_eq!(d.cell_block(), 18);
    assert_eq!(d.edge_block(), 9);
    assert_eq!(d.n0(), 90);
    assert_eq!(d.nb(), 63);
    let mut covered = vec![0; d.n0()];
    for c in 0..5 {
        for i in d.cell_range(c) {
            covered[i] += 1;
        }
    }
    assert!(covered.iter().all(|&c| c == 1));
    assert_eq!(d.edge_range(6), 54..63);
}

#[test]
fn unit_transport_cell_block() {
    let mesh = square_grid(1, Rectangle::unit()).unwrap();
    for mu in [2.0, 5.0, 50.0] {
        let sys = unit_transport(mu);
        let disc = Discretization::new(&mesh, &sys, 0);
        let op = disc.local_cell_operator(0).unwrap();
        assert!((op.a[(0, 0)] - (1.0 + 4.0 * mu)).abs() < 1e-12);
        assert!((op.load[0] - 1.0).abs() < 1e-14);
    }
}

#[test]
fn unit_transport_hand_solution() {
    let mesh = square_grid(1, Rectangle::unit()).unwrap();
    for mu in [2.0, 5.0, 50.0] {
        let sys = unit_transport(mu);
        let disc = Discretization::new(&mesh, &sys, 0);
        let op = disc.assemble_condensed().unwrap();
        assert!((op.matrix.get(0, 0) - 2.0).abs() < 1e-12);
        let sol = disc.solve(&dense_opts()).unwrap();
        assert!((sol.u.u0[0] - 0.5).abs() < 1e-12);
        for e in 0..mesh.num_edges() {
            let n = mesh.edge(e).normal;
            let want = if n[0] < -0.5 { 0.5 * mu / (mu + 1.0) } else { 0.5 };
            assert!((sol.u.ub[e] - want).abs() < 1e-12, "edge {e} normal {n:?}");
        }
        let mono = disc.solve_monolithic(&dense_opts()).unwrap();
        assert!(rel_diff(&mono.u.u0, &sol.u.u0) < 1e-12);
        assert!(rel_diff(&mono.u.ub, &sol.u.ub) < 1e-12);
    }
}

#[test]
fn zero_coefficients_leave_only_stabilization() {
    let zero = FriedrichsSystem::new(
        "zero",
        1,
        Arc::new(|_| [DenseMatrix::zeros(1, 1), DenseMatrix::zeros(1, 1)]),
        Arc::new(|_| DenseMatrix::zeros(1, 1)),
        Arc::new(|_| DenseMatrix::zeros(1, 1)),
        Arc::new(|_, _| DenseMatrix::zeros(1, 1)),
        Arc::new(|_| vec![0.0]),
        1.0,
        0.0,
    )
    .unwrap();
    let mesh = square_grid(2, Rectangle::unit()).unwrap();
    let disc = Discretization::new(&mesh, &zero, 1);
    let op = disc.local_cell_operator(0).unwrap();
    let mu = zero.mu();
    // with A = B = divA = 0 only μ⟨u⁰ − uᵇ, v⁰⟩ remains
    let mut boundary_mass = DenseMatrix::zeros(3, 3);
    let basis = disc.cell_basis(0);
    for &e in mesh.cell_edges(0) {
        let q = crate::polyspace::edge_quadrature(&mesh, e, 5);
        for (x, w) in q.iter() {
            let phi = basis.eval(x);
            for i in 0..3 {
                for j in 0..3 {
                    boundary_mass[(i, j)] += w * phi[i] * phi[j];
                }
            }
        }
    }
    let mut rest = op.a.clone();
    rest.add_assign_scaled(&boundary_mass, -mu);
    assert!(rest.max_abs() < 1e-14);
    for (c, t) in op.c.iter().zip(&op.trace) {
        let mut r = c.clone();
        r.add_assign_scaled(&t.transpose(), mu);
        assert!(r.max_abs() < 1e-14);
    }
    assert!(op.load.iter().all(|&v| v == 0.0));
}

#[test]
fn condensed_sparsity_is_local() {
    let mesh = square_grid(3, Rectangle::unit()).unwrap();
    let sys = transport_reaction([1.0, 2.0], 1.0).unwrap();
    let disc = Discretization::new(&mesh, &sys, 1);
    let op = disc.assemble_condensed().unwrap();
    assert_eq!(op.matrix.nrows(), 16 * 3);
    assert!(op.matrix.is_well_formed());
    for cell in 0..16 {
        let mut allowed: Vec<usize> = vec![cell];
        for &e in mesh.cell_edges(cell) {
            allowed.extend(mesh.neighbor(cell, e));
        }
        for r in disc.dofs().cell_range(cell) {
            let (cols, _) = op.matrix.row(r);
            assert!(cols.len() <= 5 * 3);
            for &c in cols {
                assert!(allowed.contains(&(c / 3)));
            }
        }
    }
}

#[test]
fn zero_source_gives_zero_solution() {
    let mesh = square_grid(3, Rectangle::unit()).unwrap();
    let sys = transport_reaction([1.0, 2.0], 1.0).unwrap();
    let disc = Discretization::new(&mesh, &sys, 2);
    let sol = disc.solve(&dense_opts()).unwrap();
    assert!(sol.u.u0.iter().chain(&sol.u.ub).all(|&v| v == 0.0));
}

#[test]
fn edge_elimination_examples() {
    let mesh = square_grid(3, Rectangle::unit()).unwrap();
    let sys = transport_reaction([1.0, 2.0], 1.0).unwrap();
    let disc = Discretization::new(&mesh, &sys, 2);
    let op = disc.assemble_condensed().unwrap();
    // a global quadratic has identical traces from both sides
    let p = |x: Point| vec![1.0 + x[0] - 2.0 * x[1] * x[0] + x[1] * x[1]];
    let q = disc.interpolate(&p).unwrap();
    let rec = op.recover_edge_unknowns(q.u0.clone());
    for e in 0..mesh.num_edges() {
        if mesh.edge(e).is_boundary() {
            continue;
        }
        let got = rec.edge(disc.dofs(), e);
        let want = q.edge(disc.dofs(), e);
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
    // outflow edges reproduce the trace, inflow edges scale it by μ/(μ + |β·n|)
    let mu = sys.mu();
    for e in mesh.boundary_edges() {
        let n = mesh.edge(e).normal;
        let bn = n[0] + 2.0 * n[1];
        let scale = if bn > 0.0 { 1.0 } else { mu / (mu - bn) };
        for (a, b) in rec.edge(disc.dofs(), e).iter().zip(q.edge(disc.dofs(), e)) {
            assert!((a - scale * b).abs() < 1e-12, "edge {e}: {a} vs {}", scale * b);
        }
    }
}

#[test]
fn boundary_edge_matrices_are_coercive() {
    let mesh = square_grid(2, Rectangle::unit()).unwrap();
    for sys in builtins() {
        for k in 0..=2 {
            let disc = Discretization::new(&mesh, &sys, k);
            let cells = disc.cell_operators().unwrap();
            for e in mesh.boundary_edges() {
                let op = disc.edge_operator(e, &cells);
                let eb = disc.edge_basis(e);
                let [a, b] = mesh.edge_points(e);
                let me = edge_mass_matrix(&eb, &segment_quadrature(a, b, 2 * k));
                let ne = k + 1;
                let mut shifted = op.e.symmetric_part();
                for c in 0..sys.m() {
                    for i in 0..ne {
                        for j in 0..ne {
                            shifted[(c * ne + i, c * ne + j)] -= sys.mu0() * me[(i, j)];
                        }
                    }
                }
                let eig = symmetric_eigenvalues(&shifted).unwrap();
                assert!(eig[0] >= -1e-12, "{} k={k} e={e}: {eig:?}", sys.name());
            }
        }
    }
}

#[test]
fn monolithic_matches_condensed() {
    for level in 1..=4 {
        let mesh = square_grid(level, Rectangle::unit()).unwrap();
        for sys in builtins() {
            for k in 0..=2 {
                let disc = Discretization::new(&mesh, &sys, k);
                let a = disc.solve(&dense_opts()).unwrap();
                let b = disc.solve_monolithic(&dense_opts()).unwrap();
                assert!(rel_diff(&a.u.u0, &b.u.u0) < 1e-10, "{} level {level} k={k}", sys.name());
                assert!(rel_diff(&a.u.ub, &b.u.ub) < 1e-10, "{} level {level} k={k}", sys.name());
            }
        }
    }
}

#[test]
fn monolithic_rows_match_energy_forms() {
    let mesh = polygonal_grid(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for sys in builtins() {
        for k in 0..=2 {
            let disc = Discretization::new(&mesh, &sys, k);
            let op = disc.assemble_monolithic().unwrap();
            let u = random_weak(disc.dofs(), &mut rng);
            let v = random_weak(disc.dofs(), &mut rng);
            let x: Vec<f64> = u.u0.iter().chain(&u.ub).copied().collect();
            let y: Vec<f64> = v.u0.iter().chain(&v.ub).copied().collect();
            let au = op.matrix.matvec(&x);
            let assembled: f64 = au.iter().zip(&y).map(|(a, b)| a * b).sum();
            let (a, s) = disc.energy_forms(&u, &v).unwrap();
            assert!(
                (assembled - (a + s)).abs() <= 1e-11 * (1.0 + assembled.abs()),
                "{} k={k}: {assembled} vs {}",
                sys.name(),
                a + s
            );
            let f: f64 = op.rhs.iter().zip(&y).map(|(a, b)| a * b).sum();
            assert!((f - disc.load(&v).unwrap()).abs() <= 1e-12 * (1.0 + f.abs()));
        }
    }
}

#[test]
fn energy_identity_and_coercivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for mesh in [square_grid(3, Rectangle::unit()).unwrap(), polygonal_grid(2).unwrap()] {
        for sys in builtins() {
            for k in 0..=2 {
                let disc = Discretization::new(&mesh, &sys, k);
                for _ in 0..3 {
                    let v = random_weak(disc.dofs(), &mut rng);
                    let (a, s) = disc.energy_forms(&v, &v).unwrap();
                    let rhs = disc.energy_identity_rhs(&v).unwrap();
                    assert!((a + s - rhs).abs() <= 1e-11 * (1.0 + (a + s).abs()), "{}", sys.name());
                    let t = disc.triple_norm(&v).unwrap();
                    assert!(t * t <= a + s + 1e-11 * t * t);
                    let (all, outer) = disc.boundary_fluxes(&v).unwrap();
                    assert!((all - outer).abs() <= 1e-11 * (1.0 + all.abs()));
                }
            }
        }
    }
}

#[test]
fn stabilizer_vanishes_on_matching_traces() {
    let mesh = polygonal_grid(1).unwrap();
    let sys = &builtins()[1];
    let disc = Discretization::new(&mesh, sys, 1);
    let lin = disc
        .interpolate(&|x: Point| vec![x[0], 1.0 - x[1], 2.0 * x[0] + x[1]])
        .unwrap();
    let (_, s) = disc.energy_forms(&lin, &lin).unwrap();
    assert!(s.abs() < 1e-24);
    assert_eq!(disc.triple_norm(&WeakVector::zeros(disc.dofs())).unwrap(), 0.0);
}

#[test]
fn solution_satisfies_discrete_equations() {
    let mesh = polygonal_grid(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for sys in builtins() {
        let disc = Discretization::new(&mesh, &sys, 1);
        let sol = disc.solve(&SolverOptions::default().dense_threshold(0)).unwrap();
        for _ in 0..20 {
            let v = random_weak(disc.dofs(), &mut rng);
            let (a, s) = disc.energy_forms(&sol.u, &v).unwrap();
            let f = disc.load(&v).unwrap();
            assert!((a + s - f).abs() <= 1e-10 * (1.0 + f.abs()), "{}: {}", sys.name(), a + s - f);
        }
    }
}

#[test]
fn weak_derivative_examples() {
    let mesh = square_grid(1, Rectangle::unit()).unwrap();
    let sys = transport_reaction([1.0, 0.0], 1.0).unwrap();
    let disc = Discretization::new(&mesh, &sys, 1);
    let v = disc.interpolate(&|x: Point| vec![x[0]]).unwrap();
    let g = disc.weak_derivative(&v, 0).unwrap();
    assert!((g[0] - 1.0).abs() < 1e-13 && g[1].abs() < 1e-13 && g[2].abs() < 1e-13);

    let disc0 = Discretization::new(&mesh, &sys, 0);
    let mut v = WeakVector::zeros(disc0.dofs());
    v.u0[0] = 1.0;
    assert!(disc0.weak_derivative(&v, 0).unwrap()[0].abs() < 1e-15);
}

#[test]
fn weak_derivative_kills_constants() {
    let mesh = polygonal_grid(1).unwrap();
    for sys in builtins() {
        let disc = Discretization::new(&mesh, &sys, 2);
        let c: Vec<f64> = (0..sys.m()).map(|i| 0.5 + i as f64).collect();
        let dofs = *disc.dofs();
        let mut v = WeakVector::zeros(&dofs);
        for (comp, value) in c.iter().enumerate() {
            for cell in 0..mesh.num_cells() {
                v.u0[dofs.cell_range(cell).start + comp * dofs.cell_scalar_dim()] = *value;
            }
            for e in 0..mesh.num_edges() {
                v.ub[dofs.edge_range(e).start + comp * dofs.edge_scalar_dim()] = *value;
            }
        }
        for cell in 0..mesh.num_cells() {
            let g = disc.weak_derivative(&v, cell).unwrap();
            assert!(g.iter().all(|x| x.abs() < 1e-12), "{}: {g:?}", sys.name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn weak_derivative_is_exact_on_polynomials(
        k in 0usize..=3,
        cell in 0usize..9,
        sys_index in 0usize..3,
        coeffs in proptest::collection::vec(-1.0f64..1.0, 30),
    ) {
        let mesh = polygonal_grid(1).unwrap();
        let sys = &builtins()[sys_index];
        let disc = Discretization::new(&mesh, sys, k);
        let basis = disc.cell_basis(cell);
        let nk = basis.dim();
        let m = sys.m();
        let block: Vec<f64> = coeffs[..m * nk].to_vec();
        // traces of p on each edge, in the edge basis
        let p = |x: Point| -> Vec<f64> {
            let phi = basis.eval(x);
            (0..m).map(|c| (0..nk).map(|i| block[c * nk + i] * phi[i]).sum()).collect()
        };
        let ub: Vec<Vec<f64>> = mesh
            .cell_edges(cell)
            .iter()
            .map(|&e| {
                (0..m)
                    .flat_map(|c| crate::polyspace::project_edge(|x| p(x)[c], &mesh, e, k).unwrap())
                    .collect()
            })
            .collect();
        let ub_refs: Vec<&[f64]> = ub.iter().map(Vec::as_slice).collect();
        let g = disc.weak_derivative_cell(cell, &block, &ub_refs).unwrap();
        // A·∇p with the system's constant A, projected onto P_k
        let grad_p = |x: Point| -> Vec<f64> {
            let gr = basis.grad(x);
            let [a1, a2] = sys.a(x);
            let dx: Vec<f64> = (0..m).map(|c| (0..nk).map(|i| block[c * nk + i] * gr[i][0]).sum()).collect();
            let dy: Vec<f64> = (0..m).map(|c| (0..nk).map(|i| block[c * nk + i] * gr[i][1]).sum()).collect();
            let mut out = a1.matvec(&dx);
            a2.matvec_acc(&dy, 1.0, &mut out);
            out
        };
        for c in 0..m {
            let want = crate::polyspace::project_cell(|x| grad_p(x)[c], &mesh, cell, k).unwrap();
            for i in 0..nk {
                prop_assert!((g[c * nk + i] - want[i]).abs() <= 1e-11, "k={} c={} i={}: {} vs {}", k, c, i, g[c * nk + i], want[i]);
            }
        }
    }
}
