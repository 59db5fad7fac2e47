use super::*;
use crate::mesh::write_mesh;

fn transport() -> ManufacturedProblem {
    manufactured_transport([1.0, 2.0], 1.0).unwrap()
}

#[test]
fn zero_solution_error_is_the_exact_norm() {
    let p = transport();
    let mesh = square_grid(3, Rectangle::unit()).unwrap();
    let disc = Discretization::new(&mesh, p.system(), 1);
    let zero = WeakVector::zeros(disc.dofs());
    assert!((l2_error(&disc, &zero).unwrap() - 1.0 / 30.0).abs() < 1e-14);

    let cdr = manufactured_cdr_smooth(1e-8, [1.0, 2.0], 1.0).unwrap();
    let disc = Discretization::new(&mesh, cdr.system(), 1);
    let zero = WeakVector::zeros(disc.dofs());
    let e = l2_error_components(&disc, &zero, 2..3).unwrap();
    assert!((e - 1.0 / 30.0).abs() < 1e-14);
}

#[test]
fn projection_of_polynomial_solution_has_no_error() {
    let mesh = polygonal_grid(1).unwrap();
    for p in [
        transport(),
        manufactured_cdr_smooth(1e-2, [1.0, 2.0], 1.0).unwrap(),
        manufactured_maxwell(1.0, 1.0).unwrap(),
    ] {
        let disc = Discretization::new(&mesh, p.system(), 4);
        let q = disc.interpolate(&|x| p.exact(x)).unwrap();
        assert!(l2_error(&disc, &q).unwrap() <= 1e-11, "{}", p.name());
        assert!(triple_error(&disc, &q).unwrap() <= 1e-12, "{}", p.name());
    }
}

#[test]
fn missing_exact_solution_is_an_error() {
    let sys = crate::friedrichs::transport_reaction([1.0, 0.0], 1.0).unwrap();
    let mesh = square_grid(1, Rectangle::unit()).unwrap();
    let disc = Discretization::new(&mesh, &sys, 0);
    let zero = WeakVector::zeros(disc.dofs());
    assert!(matches!(l2_error(&disc, &zero), Err(AssemblyError::MissingExact)));
    assert!(matches!(triple_error(&disc, &zero), Err(AssemblyError::MissingExact)));
}

#[test]
fn rates_follow_the_error_columns() {
    let mut t = ConvergenceTable::new("x", 1);
    t.push(1, 0.5, 4, 1e-2, 3e-2, 0.0);
    t.push(2, 0.25, 16, 2.5e-3, 1.1e-2, 0.0);
    t.push(3, 0.125, 64, 7e-4, 3.7e-3, 0.0);
    assert_eq!(t.rows[0].rate_l2, None);
    for w in t.rows.windows(2) {
        assert_eq!(w[1].rate_l2, Some((w[0].err_l2 / w[1].err_l2).log2()));
        assert_eq!(w[1].rate_triple, Some((w[0].err_triple / w[1].err_triple).log2()));
    }
    assert!((t.rows[1].rate_l2.unwrap() - 2.0).abs() < 1e-14);
}

#[test]
fn csv_layout() {
    let mut t = ConvergenceTable::new("x", 1);
    t.push(5, 0.0441942, 9216, 2.627e-4, 2.448e-3, 1.25);
    t.push(6, 0.0220971, 36864, 6.663e-5, 8.645e-4, 4.5);
    let csv = t.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines[1], "5,4.41942e-2,9216,2.62700e-4,,2.44800e-3,,1.25000e0");
    let fields: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(fields.len(), 8);
    assert_eq!(fields[4], "1.97917e0");
    assert_eq!(sig6(-0.00012345678), "-1.23457e-4");
}

#[test]
fn solving_twice_is_bit_identical() {
    let p = manufactured_cdr_layer(1e-4, [1.0, 1.0], 1.0).unwrap();
    let opts = SolverOptions::default().dense_threshold(0);
    let a = solve_level(&p, 1, square_grid(4, Rectangle::unit()).unwrap(), &opts).unwrap();
    let b = solve_level(&p, 1, square_grid(4, Rectangle::unit()).unwrap(), &opts).unwrap();
    assert_eq!(a.err_l2.to_bits(), b.err_l2.to_bits());
    assert_eq!(a.err_triple.to_bits(), b.err_triple.to_bits());
    assert_eq!(a.solution, b.solution);
}

#[test]
fn weak_gradient_error_equals_flux_error() {
    let p = manufactured_cdr_smooth(1e-3, [1.0, 2.0], 1.0).unwrap();
    let mesh = square_grid(3, Rectangle::unit()).unwrap();
    let disc = Discretization::new(&mesh, p.system(), 1);
    let sol = disc.solve(&SolverOptions::default()).unwrap();
    let grad = weak_gradient_error(&p, &disc, &sol.u).unwrap().unwrap();
    let flux = l2_error_components(&disc, &sol.u, 0..2).unwrap();
    assert!((grad - flux).abs() <= 1e-12 * flux, "{grad} vs {flux}");
    assert_eq!(weak_gradient_error(&transport(), &disc, &sol.u).unwrap(), None);
}

#[test]
fn transport_converges_at_expected_rates() {
    let t = run_convergence(&transport(), 1, 3..=5, &MeshFamily::Square, &SolverOptions::default()).unwrap();
    assert_eq!(t.rows.len(), 3);
    let last = t.rows.last().unwrap();
    assert!((last.rate_l2.unwrap() - 2.0).abs() < 0.3, "{t:?}");
    assert!(last.rate_triple.unwrap() > 1.3, "{t:?}");
    assert_eq!(last.dofs, 3 * 256);
}

#[test]
fn failing_level_keeps_earlier_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = square_grid(2, Rectangle::unit()).unwrap();
    std::fs::write(dir.path().join("grid_2.msh"), write_mesh(&mesh)).unwrap();
    let family = MeshFamily::File(dir.path().join("grid_{level}.msh"));
    let err = run_convergence(&transport(), 0, 2..=3, &family, &SolverOptions::default()).unwrap_err();
    assert_eq!(err.level, 3);
    assert_eq!(err.partial.rows.len(), 1);
    assert!(matches!(err.source, StudyError::MeshFile { .. }));
}

#[test]
fn empty_levels_are_rejected() {
    #[allow(clippy::reversed_empty_ranges)]
    let err = run_convergence(&transport(), 0, 3..=2, &MeshFamily::Square, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err.source, StudyError::InvalidLevels(_)));
}

#[test]
fn centroid_dump_has_one_row_per_cell() {
    let p = transport();
    let mesh = square_grid(2, Rectangle::unit()).unwrap();
    let disc = Discretization::new(&mesh, p.system(), 2);
    let q = disc.interpolate(&|x| p.exact(x)).unwrap();
    let values = centroid_values(&disc, &q);
    assert_eq!(values.len(), 4);
    assert!((values[0].1[0] - p.exact([0.25, 0.25])[0]).abs() < 1e-3);
    let csv = centroid_csv(&values);
    assert!(csv.starts_with("x,y,comp0\n2.50000e-1,2.50000e-1,"));
    assert_eq!(csv.lines().count(), 5);
}
