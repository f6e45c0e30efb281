//! Transcription of the gait problem into a sparse nonlinear program.

mod layout;
mod problem;
mod refine;

pub use layout::{DecisionLayout, LoadSlot};
pub use problem::{assemble, BlockKind, ConstraintBlock, GaitProblem, ProblemConfig, SimpsonSample, TerminalCondition};
pub use refine::{solve_gait, GaitSolution, MAX_REFINEMENTS};
