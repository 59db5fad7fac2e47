//! Weak Galerkin finite elements for Friedrichs systems on polygonal meshes.

pub mod cli;
pub mod friedrichs;
pub mod linalg;
pub mod mesh;
pub mod polyspace;
pub mod study;
pub mod wg_assembly;

use std::path::PathBuf;

/// Errors surfaced by the command line driver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Cli(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Friedrichs(#[from] friedrichs::FriedrichsError),
    #[error(transparent)]
    Poly(#[from] polyspace::PolyError),
    #[error(transparent)]
    Study(#[from] study::StudyError),
    #[error(transparent)]
    StudyFailure(#[from] study::StudyFailure),
    #[error("admissibility check failed: {0}")]
    Inadmissible(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
