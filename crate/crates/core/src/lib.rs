//! Trajectory optimization for legged locomotion under a linear inverted
//! pendulum model.
//!
//! The center of mass moves along a spline of quartic polynomials, feet hold
//! fixed poses in stance and swing along cubics, and the center of pressure is
//! a convex combination of foot corners in contact. All three are optimized
//! together as one sparse nonlinear program.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cop;
pub mod foot;
pub mod lip;
pub mod nlp;
pub mod output;
pub mod plan;
pub mod scenario;
pub mod schedule;
pub mod solver;
pub mod spline;
pub mod verify;

pub type Vec2 = nalgebra::Vector2<f64>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("time {t} outside horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use foot::{FootGeometry, FootPlan};
pub use lip::{PendulumParams, PendulumState};
pub use nlp::{GaitProblem, ProblemConfig};
pub use plan::MotionPlan;
pub use schedule::{build_gait, ContactSchedule, FootId, GaitKind, GaitTimings, Phase};
pub use solver::{solve, Solution, SolverOptions, Status};
pub use spline::{ComSpline, QuarticPoly2D};
