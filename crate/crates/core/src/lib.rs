//! Two-step fourth-order solver for the time variable-order fractional
//! mobile-immobile advection-dispersion equation
//!
//! `u_t = -D^{β(x,t)} u + u_xx - u_x + f` on `[L0, L] × [0, T]`,
//!
//! where `D^β` is the Caputo derivative of variable order.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod problems;
pub mod scheme;
pub mod stencil;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid1D, GridField, Level, TimeMesh};
pub use harness::{ConvergenceReport, Coupling, OutputFormat, RunConfig, SolveReport, TemporalReport};
pub use kernel::{CoeffFamily, FamilyOptions, HalfLayout, StartSeed};
pub use linalg::{GmresConfig, Preconditioner, SolverKind};
pub use problems::{resolve, ProblemSpec};
pub use scheme::{march, MarchResult, SchemeConfig, SchemeVariant};
pub use stencil::{NearBoundary, Pentadiagonal};
pub use verify::{Suite, VerifyReport};
