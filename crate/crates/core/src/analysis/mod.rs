//! Theorem-level analyses built on top of the solver: the conformal-image
//! radius sweep, the reverse-Hölder report with its Saint-Venant reduction,
//! level-set diagnostics, closed-form reference values, and mesh-refinement
//! studies.

pub mod convergence;
pub mod level_set;
pub mod payne_rayner;
pub mod reference;
pub mod schwarz;

pub use convergence::{convergence_study, ConvergenceRow, ConvergenceStudy};
pub use level_set::{
    level_set_table, verify_levelset_inequalities, LevelSetRow, LevelSetTable, LevelSetVerdicts,
};
pub use payne_rayner::{
    payne_rayner_report, saint_venant_check, PayneRaynerReport, SaintVenantRecord,
};
pub use schwarz::{r_grid, schwarz_sweep, SchwarzSweep, SkippedRow, SweepRow, SweepVerdicts};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("only {valid} sweep radii produced valid rows; at least 4 are required for verdicts")]
    SweepTooSparse { valid: usize },
    #[error("only {usable} regular level-set rows available; at least 8 are required to form difference quotients")]
    InsufficientRegularRows { usable: usize },
    #[error("this check requires exponent p = 1, got p = {p}")]
    WrongExponent { p: f64 },
    #[error("sweep radius {r} exceeds the 0.95 ceiling; pass --allow-large-r to override")]
    RadiusOutOfRange { r: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}
