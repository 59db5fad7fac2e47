//! Error measurement against exact solutions and convergence tables.

mod problems;

use std::fmt::Write as _;
use std::ops::Range;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

pub use problems::{
    manufactured_cdr_layer, manufactured_cdr_smooth, manufactured_maxwell, manufactured_transport, JacobianField,
    Jet, ManufacturedProblem,
};

use crate::friedrichs::FriedrichsError;
use crate::linalg::SolverOptions;
use crate::mesh::{load_mesh, polygonal_grid, square_grid, MeshError, Point, Rectangle, WeakMesh};
use crate::polyspace::{cell_quadrature, error_exactness, Basis};
use crate::wg_assembly::{AssemblyError, Discretization, WeakVector};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Friedrichs(#[from] FriedrichsError),
    #[error("mesh file {path}: {source}")]
    MeshFile { path: PathBuf, source: MeshError },
    #[error("invalid levels: {0}")]
    InvalidLevels(String),
}

/// `(Σ_K ∫_K Σ_{c ∈ comps} |u_c - u⁰_{h,c}|²)^{1/2}` with quadrature exactness `2k+6`.
pub fn l2_error_components(
    disc: &Discretization,
    u_h: &WeakVector,
    comps: Range<usize>,
) -> Result<f64, AssemblyError> {
    let exact = disc.sys().exact().ok_or(AssemblyError::MissingExact)?.clone();
    let dofs = *disc.dofs();
    if u_h.u0.len() != dofs.n0() {
        return Err(AssemblyError::DimensionMismatch {
            expected: dofs.n0(),
            found: u_h.u0.len(),
        });
    }
    let nk = dofs.cell_scalar_dim();
    let exactness = error_exactness(disc.degree());
    let per_cell: Vec<f64> = (0..disc.mesh().num_cells())
        .into_par_iter()
        .map(|cell| -> Result<f64, AssemblyError> {
            let basis = disc.cell_basis(cell);
            let quad = cell_quadrature(disc.mesh(), cell, exactness)?;
            let block = u_h.cell(&dofs, cell);
            let mut phi = vec![0.0; nk];
            let mut sum = 0.0;
            for (x, w) in quad.iter() {
                basis.eval_into(x, &mut phi);
                let u = exact(x);
                for c in comps.clone() {
                    let uh: f64 = block[c * nk..(c + 1) * nk].iter().zip(&phi).map(|(a, b)| a * b).sum();
                    sum += w * (u[c] - uh) * (u[c] - uh);
                }
            }
            Ok(sum)
        })
        .collect::<Result<_, _>>()?;
    Ok(per_cell.iter().sum::<f64>().sqrt())
}

/// `‖u - u_h⁰‖` over all components.
pub fn l2_error(disc: &Discretization, u_h: &WeakVector) -> Result<f64, AssemblyError> {
    l2_error_components(disc, u_h, 0..disc.sys().m())
}

/// `|||Q_h u - u_h|||`.
pub fn triple_error(disc: &Discretization, u_h: &WeakVector) -> Result<f64, AssemblyError> {
    let exact = disc.sys().exact().ok_or(AssemblyError::MissingExact)?.clone();
    let q = disc.interpolate(&|x| exact(x))?;
    let diff = q.sub(u_h);
    disc.triple_norm(&diff)
}

/// `√ε‖∇u - ∇ʷu_h‖` for a convection-diffusion problem, with the weak
/// gradient `∇ʷu_h = -(σ⁰_{1,h}, σ⁰_{2,h})/√ε`.
pub fn weak_gradient_error(
    problem: &ManufacturedProblem,
    disc: &Discretization,
    u_h: &WeakVector,
) -> Result<Option<f64>, AssemblyError> {
    let Some(epsilon) = problem.epsilon() else {
        return Ok(None);
    };
    let s = epsilon.sqrt();
    let dofs = *disc.dofs();
    let nk = dofs.cell_scalar_dim();
    let exactness = error_exactness(disc.degree());
    let per_cell: Vec<f64> = (0..disc.mesh().num_cells())
        .into_par_iter()
        .map(|cell| -> Result<f64, AssemblyError> {
            let basis = disc.cell_basis(cell);
            let quad = cell_quadrature(disc.mesh(), cell, exactness)?;
            let block = u_h.cell(&dofs, cell);
            let mut phi = vec![0.0; nk];
            let mut sum = 0.0;
            for (x, w) in quad.iter() {
                basis.eval_into(x, &mut phi);
                let [ux, uy] = problem.jacobian(x);
                for (c, du) in [ux[2], uy[2]].into_iter().enumerate() {
                    let sigma: f64 = block[c * nk..(c + 1) * nk].iter().zip(&phi).map(|(a, b)| a * b).sum();
                    let d = du - (-sigma / s);
                    sum += w * d * d;
                }
            }
            Ok(sum)
        })
        .collect::<Result<_, _>>()?;
    Ok(Some(s * per_cell.iter().sum::<f64>().sqrt()))
}

/// Values of `u_h⁰` at every cell centroid.
pub fn centroid_values(disc: &Discretization, u_h: &WeakVector) -> Vec<(Point, Vec<f64>)> {
    let dofs = *disc.dofs();
    let nk = dofs.cell_scalar_dim();
    (0..disc.mesh().num_cells())
        .map(|cell| {
            let x = disc.mesh().cell_meta(cell).centroid;
            let phi = disc.cell_basis(cell).eval(x);
            let block = u_h.cell(&dofs, cell);
            let values = (0..disc.sys().m())
                .map(|c| block[c * nk..(c + 1) * nk].iter().zip(&phi).map(|(a, b)| a * b).sum())
                .collect();
            (x, values)
        })
        .collect()
}

/// CSV `x,y,comp0,...` of [`centroid_values`].
pub fn centroid_csv(values: &[(Point, Vec<f64>)]) -> String {
    let m = values.first().map_or(0, |(_, v)| v.len());
    let mut out = String::from("x,y");
    for c in 0..m {
        let _ = write!(out, ",comp{c}");
    }
    out.push('\n');
    for (x, v) in values {
        let _ = write!(out, "{},{}", sig6(x[0]), sig6(x[1]));
        for value in v {
            let _ = write!(out, ",{}", sig6(*value));
        }
        out.push('\n');
    }
    out
}

/// Decimal scientific notation with 6 significant digits.
pub fn sig6(x: f64) -> String {
    format!("{x:.5e}")
}

/// Mesh family indexed by refinement level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeshFamily {
    /// `square_grid(level)` on the unit square.
    Square,
    /// `polygonal_grid(level)`.
    Polygonal,
    /// A mesh file; `{level}` in the path is replaced by the level number.
    File(PathBuf),
}

impl MeshFamily {
    pub fn mesh(&self, level: u32) -> Result<WeakMesh, StudyError> {
        match self {
            MeshFamily::Square => Ok(square_grid(level, Rectangle::unit())?),
            MeshFamily::Polygonal => Ok(polygonal_grid(level)?),
            MeshFamily::File(pattern) => {
                let path = PathBuf::from(pattern.to_string_lossy().replace("{level}", &level.to_string()));
                load_mesh(&path).map_err(|source| StudyError::MeshFile { path, source })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    /// Number of cell unknowns `N₀`.
    pub dofs: usize,
    pub err_l2: f64,
    pub rate_l2: Option<f64>,
    pub err_triple: f64,
    pub rate_triple: Option<f64>,
    /// Assembly and solve time.
    pub seconds: f64,
}

pub const CSV_HEADER: &str = "level,h,dofs,err_l2,rate_l2,err_triple,rate_triple,seconds";

/// Observed rate `log₂(previous/current)`.
pub fn rate(previous: f64, current: f64) -> f64 {
    (previous / current).log2()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTable {
    pub problem: String,
    pub degree: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new(problem: impl Into<String>, degree: usize) -> Self {
        Self {
            problem: problem.into(),
            degree,
            rows: Vec::new(),
        }
    }

    /// Appends a row, filling in the rates against the previous row.
    pub fn push(&mut self, level: u32, h: f64, dofs: usize, err_l2: f64, err_triple: f64, seconds: f64) {
        let (rate_l2, rate_triple) = match self.rows.last() {
            Some(prev) => (Some(rate(prev.err_l2, err_l2)), Some(rate(prev.err_triple, err_triple))),
            None => (None, None),
        };
        self.rows.push(ConvergenceRow {
            level,
            h,
            dofs,
            err_l2,
            rate_l2,
            err_triple,
            rate_triple,
            seconds,
        });
    }

    pub fn row(&self, level: u32) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.level == level)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let opt = |r: Option<f64>| r.map(sig6).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.level,
                sig6(r.h),
                r.dofs,
                sig6(r.err_l2),
                opt(r.rate_l2),
                sig6(r.err_triple),
                opt(r.rate_triple),
                sig6(r.seconds)
            );
        }
        out
    }
}

/// A table cut short by a failing level; rows before it are kept.
#[derive(Debug, thiserror::Error)]
#[error("level {level} failed: {source}")]
pub struct StudyFailure {
    pub partial: ConvergenceTable,
    pub level: u32,
    #[source]
    pub source: StudyError,
}

/// Result of solving one problem on one mesh.
#[derive(Clone, Debug)]
pub struct LevelResult {
    pub mesh: WeakMesh,
    pub solution: WeakVector,
    pub err_l2: f64,
    pub err_triple: f64,
    pub seconds: f64,
}

/// Assembles, solves and measures both errors on one mesh; the L2 error
/// covers [`ManufacturedProblem::error_components`].
pub fn solve_level(
    problem: &ManufacturedProblem,
    k: usize,
    mesh: WeakMesh,
    opts: &SolverOptions,
) -> Result<LevelResult, StudyError> {
    let disc = Discretization::new(&mesh, problem.system(), k);
    let start = Instant::now();
    let sol = disc.solve(opts)?;
    let seconds = start.elapsed().as_secs_f64();
    let err_l2 = l2_error_components(&disc, &sol.u, problem.error_components())?;
    let err_triple = triple_error(&disc, &sol.u)?;
    Ok(LevelResult {
        solution: sol.u,
        err_l2,
        err_triple,
        seconds,
        mesh,
    })
}

/// Runs the levels in order and tabulates errors and observed rates.
pub fn run_convergence(
    problem: &ManufacturedProblem,
    k: usize,
    levels: std::ops::RangeInclusive<u32>,
    family: &MeshFamily,
    opts: &SolverOptions,
) -> Result<ConvergenceTable, StudyFailure> {
    run_convergence_with(problem, k, levels, family, opts, |_, _| {})
}

/// As [`run_convergence`], calling `visit` with each finished row and level result.
pub fn run_convergence_with(
    problem: &ManufacturedProblem,
    k: usize,
    levels: std::ops::RangeInclusive<u32>,
    family: &MeshFamily,
    opts: &SolverOptions,
    mut visit: impl FnMut(&ConvergenceRow, &LevelResult),
) -> Result<ConvergenceTable, StudyFailure> {
    let mut table = ConvergenceTable::new(problem.name(), k);
    if levels.is_empty() || *levels.start() == 0 {
        return Err(StudyFailure {
            partial: table,
            level: *levels.start(),
            source: StudyError::InvalidLevels(format!("{}:{}", levels.start(), levels.end())),
        });
    }
    for level in levels {
        let result = family
            .mesh(level)
            .and_then(|mesh| solve_level(problem, k, mesh, opts));
        match result {
            Ok(res) => {
                let dofs = problem.system().m() * crate::polyspace::cell_dim(k) * res.mesh.num_cells();
                table.push(level, res.mesh.h(), dofs, res.err_l2, res.err_triple, res.seconds);
                visit(table.rows.last().expect("row just pushed"), &res);
            }
            Err(source) => {
                return Err(StudyFailure {
                    partial: table,
                    level,
                    source,
                })
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests;
