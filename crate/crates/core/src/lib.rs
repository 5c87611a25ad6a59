//! Generator maintenance scheduling as mixed-integer programs.
//!
//! The crate builds seven MIP formulations of non-preemptive maintenance
//! scheduling over a common [`MipModel`] representation, solves their LP
//! relaxations with a bounded primal simplex ([`simplex`]) and their integer
//! programs with best-bound branch and bound ([`bnb`]), and compares the
//! relaxation polytopes of the formulations ([`tightness`], [`verify`]).

pub mod bnb;
mod error;
pub mod formulation;
pub mod instance;
pub mod lp_format;
pub mod model;
pub mod simplex;
pub mod tightness;
pub mod verify;

pub use error::{Error, Result};
pub use formulation::{build, integer_feasible_set, FormulationId};
pub use instance::{generate, schedule_cost, validate, GenerationProfile, Instance, MaintenanceTask, Schedule, Violation};
pub use model::{residuals, FractionalPoint, MipModel, ResidualReport, RowFamily, RowSense, RowTag, VarKind, VarLabel};
pub use simplex::{feasibility_probe, lp_solve, sample_vertex, LpSolution, LpStatus, ProbeOutcome};
pub use bnb::{bnb_solve, brute_force_solve, MipSolution, MipStatus};
pub use tightness::{compare, verify_lemma1, verify_lemma2, LemmaReport, TightnessVerdict, Verdict};
pub use verify::{verify_paper, PaperReport};

/// Tolerances shared by every component.
pub mod tol {
    /// Row and bound feasibility.
    pub const FEASIBILITY: f64 = 1e-6;
    /// Smallest tableau entry accepted as a pivot.
    pub const PIVOT: f64 = 1e-9;
    /// Total phase-one infeasibility accepted as "feasible".
    pub const PHASE_ONE: f64 = 1e-7;
    /// Distance to the nearest integer accepted as integral.
    pub const INTEGRALITY: f64 = 1e-6;
}

/// Budget for exhaustive start-time enumeration.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;
