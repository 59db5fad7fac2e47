//! The `wgsolve` command line driver.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::friedrichs::check_admissibility;
use crate::linalg::SolverOptions;
use crate::study::{
    centroid_csv, centroid_values, manufactured_cdr_layer, manufactured_cdr_smooth, manufactured_maxwell,
    manufactured_transport, run_convergence_with, sig6, ConvergenceTable, ManufacturedProblem, MeshFamily,
};
use crate::wg_assembly::Discretization;
use crate::Error;

/// Largest degree whose error quadrature is available.
pub const MAX_DEGREE: usize = 17;

/// Diffusion used by the convection-diffusion problems unless overridden.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Convection field of the transport problem.
pub const TRANSPORT_BETA: [f64; 2] = [1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemName {
    /// `u = x(1-x)y(1-y)`, `β = (1, 2)`, `α = 1`.
    CdrSmooth,
    /// Boundary layers at `x = 1` and `y = 1`, `β = (1, 1)`, `α = 1`.
    CdrLayer,
    /// `E = 8x(1-x)y(1-y)`, `ν = σ = 1`.
    Maxwell2d,
    /// `u = x(1-x)y(1-y)`, `β = (1, 2)`, `α = 1`.
    Transport,
}

impl ProblemName {
    pub fn is_cdr(self) -> bool {
        matches!(self, ProblemName::CdrSmooth | ProblemName::CdrLayer)
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.to_possible_value().expect("no skipped variants");
        f.write_str(name.get_name())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wgsolve",
    version,
    about = "Weak Galerkin convergence studies for Friedrichs systems on the unit square"
)]
struct Args {
    /// Manufactured problem to solve.
    #[arg(long, value_enum)]
    problem: ProblemName,
    /// Polynomial degree k.
    #[arg(long, default_value_t = 1, value_parser = parse_degree)]
    degree: usize,
    /// Inclusive range of refinement levels `a:b`; level l has 2^(l-1) squares per side.
    #[arg(long, default_value = "1:5", value_parser = parse_levels)]
    levels: RangeInclusive<u32>,
    /// Diffusion parameter of cdr-smooth and cdr-layer [default: 1e-8].
    #[arg(long, value_parser = parse_positive)]
    epsilon: Option<f64>,
    /// Stabilization parameter, replacing the problem's default.
    #[arg(long, value_parser = parse_positive)]
    mu: Option<f64>,
    /// Mesh family: square, polygonal or file:<path>, where `{level}` in the path is replaced by the level.
    #[arg(long, default_value = "square", value_parser = parse_mesh_family)]
    mesh: MeshFamily,
    /// Write the convergence table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write `x,y,comp0,...` of the finest solution at the cell centroids.
    #[arg(long)]
    dump_solution: bool,
}

fn parse_degree(s: &str) -> Result<usize, String> {
    let k: usize = s.parse().map_err(|e| format!("{e}"))?;
    if k > MAX_DEGREE {
        return Err(format!("degree {k} exceeds the largest supported degree {MAX_DEGREE}"));
    }
    Ok(k)
}

fn parse_levels(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (a, b) = s.split_once(':').unwrap_or((s, s));
    let a: u32 = a.trim().parse().map_err(|e| format!("level `{a}`: {e}"))?;
    let b: u32 = b.trim().parse().map_err(|e| format!("level `{b}`: {e}"))?;
    if a == 0 {
        return Err("levels start at 1".into());
    }
    if a > b {
        return Err(format!("empty level range {a}:{b}"));
    }
    if b > 12 {
        return Err(format!("level {b} exceeds the largest supported level 12"));
    }
    Ok(a..=b)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(format!("{s} must be a positive number"));
    }
    Ok(v)
}

fn parse_mesh_family(s: &str) -> Result<MeshFamily, String> {
    match s {
        "square" => Ok(MeshFamily::Square),
        "polygonal" => Ok(MeshFamily::Polygonal),
        _ => match s.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(MeshFamily::File(PathBuf::from(path))),
            _ => Err(format!("unknown mesh `{s}`; expected square, polygonal or file:<path>")),
        },
    }
}

/// A validated invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemName,
    pub degree: usize,
    pub levels: RangeInclusive<u32>,
    /// Set for the convection-diffusion problems only.
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub mesh: MeshFamily,
    pub out: Option<PathBuf>,
    pub dump_solution: bool,
}

impl RunConfig {
    /// The manufactured problem with the configured `ε` and `μ`.
    pub fn build_problem(&self) -> Result<ManufacturedProblem, Error> {
        let eps = self.epsilon.unwrap_or(DEFAULT_EPSILON);
        let problem = match self.problem {
            ProblemName::CdrSmooth => manufactured_cdr_smooth(eps, [1.0, 2.0], 1.0)?,
            ProblemName::CdrLayer => manufactured_cdr_layer(eps, [1.0, 1.0], 1.0)?,
            ProblemName::Maxwell2d => manufactured_maxwell(1.0, 1.0)?,
            ProblemName::Transport => manufactured_transport(TRANSPORT_BETA, 1.0)?,
        };
        match self.mu {
            Some(mu) => Ok(problem.with_mu(mu)?),
            None => Ok(problem),
        }
    }

    /// Where the centroid dump goes: next to the table, or in the current directory.
    pub fn dump_path(&self) -> PathBuf {
        match &self.out {
            Some(out) => {
                let mut name = out.file_stem().unwrap_or_default().to_os_string();
                name.push(".solution.csv");
                out.with_file_name(name)
            }
            None => PathBuf::from(format!("{}.solution.csv", self.problem)),
        }
    }
}

/// Parses `argv` (including the program name) into a validated configuration.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    if args.epsilon.is_some() && !args.problem.is_cdr() {
        return Err(Error::Usage(format!("epsilon is not a {} parameter", args.problem)));
    }
    let config = RunConfig {
        problem: args.problem,
        degree: args.degree,
        levels: args.levels,
        epsilon: if args.problem.is_cdr() {
            Some(args.epsilon.unwrap_or(DEFAULT_EPSILON))
        } else {
            None
        },
        mu: args.mu,
        mesh: args.mesh,
        out: args.out,
        dump_solution: args.dump_solution,
    };
    config.build_problem()?;
    Ok(config)
}

/// Runs the study, writes the table (and the optional dump) and returns it.
pub fn run(config: &RunConfig, log: &mut dyn Write) -> Result<ConvergenceTable, Error> {
    let problem = config.build_problem()?;
    let coarse = config.mesh.mesh(*config.levels.start())?;
    let report = check_admissibility(problem.system(), &coarse, 2 * config.degree + 2)?;
    if !report.passed() {
        return Err(Error::Inadmissible(report.failures().join(", ")));
    }
    let _ = writeln!(
        log,
        "{} k={} mu={} mesh={:?}",
        problem.name(),
        config.degree,
        problem.system().mu(),
        config.mesh
    );
    let mut dump = None;
    let finest = *config.levels.end();
    let result = run_convergence_with(
        &problem,
        config.degree,
        config.levels.clone(),
        &config.mesh,
        &SolverOptions::default(),
        |row, res| {
            let _ = writeln!(
                log,
                "level {} dofs {} err_l2 {} err_triple {} ({:.2}s)",
                row.level,
                row.dofs,
                sig6(row.err_l2),
                sig6(row.err_triple),
                row.seconds
            );
            if config.dump_solution && row.level == finest {
                let disc = Discretization::new(&res.mesh, problem.system(), config.degree);
                dump = Some(centroid_csv(&centroid_values(&disc, &res.solution)));
            }
        },
    );
    let table = match result {
        Ok(table) => table,
        Err(failure) => {
            if !failure.partial.rows.is_empty() {
                write_output(config.out.as_deref(), &failure.partial.to_csv())?;
            }
            return Err(failure.into());
        }
    };
    write_output(config.out.as_deref(), &table.to_csv())?;
    if let Some(csv) = dump {
        let path = config.dump_path();
        std::fs::write(&path, csv).map_err(|source| Error::Io { path, source })?;
    }
    Ok(table)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Cli(e) => e.exit_code(),
        Error::Usage(_) | Error::Friedrichs(_) => 2,
        _ => 1,
    }
}

/// Entry point shared by the binary: parse, run, report.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(config) => config,
        Err(Error::Cli(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("wgsolve: {e}");
            return exit_code(&e);
        }
    };
    match run(&config, &mut std::io::stderr()) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("wgsolve: {e}");
            exit_code(&e)
        }
    }
}
