//! Scenario files: robot, gait, boundary states, solver options and output
//! settings in one TOML document.
//!
//! ```toml
//! name = "trot_4step"
//! robust_cost = false
//!
//! [robot]
//! height = 0.6
//! nominal_offsets = [[0.33, 0.19], [0.33, -0.19], [-0.33, 0.19], [-0.33, -0.19]]
//! range_of_motion = [0.15, 0.10]
//! geometry = { kind = "point" }
//!
//! [gait]
//! kind = "trot"
//! n_steps = 4
//! timings = { swing = 0.1, lead_in = 0.1, lead_out = 0.1 }
//!
//! [terminal]
//! position = [0.2, 0.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::foot::FootGeometry;
use crate::lip::{PendulumParams, PendulumState};
use crate::nlp::{solve_gait, ProblemConfig, TerminalCondition};
use crate::output::SolutionDump;
use crate::schedule::{build_gait, ContactSchedule, GaitKind, GaitTimings, Phase, BIPED_FEET, QUADRUPED_FEET};
use crate::solver::SolverOptions;
use crate::verify::{check_solution, Tolerances, VerifyInput};
use crate::{Error, Result, Vec2};

const DEFAULT_GRAVITY: f64 = 9.81;
const DEFAULT_HEIGHT: f64 = 0.6;
/// Polynomial length for custom phase lists.
const CUSTOM_MAX_POLY: f64 = 0.05;

fn yes() -> bool {
    true
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

fn default_sample_dt() -> f64 {
    0.01
}

fn zero() -> Option<Vec2> {
    Some(Vec2::zeros())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub robot: RobotSpec,
    pub gait: GaitSpec,
    #[serde(default)]
    pub initial: StateSpec,
    #[serde(default)]
    pub terminal: TerminalSpec,
    #[serde(default = "yes")]
    pub robust_cost: bool,
    #[serde(default = "yes")]
    pub fix_initial_stance: bool,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub height: f64,
    /// Foot position relative to the CoM when standing, one per foot.
    pub nominal_offsets: Vec<Vec2>,
    /// Half-extents of the reachable box; omit to leave feet unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_of_motion: Option<Vec2>,
    #[serde(default)]
    pub geometry: GeometrySpec,
}

/// Sole shape shared by all feet.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    #[default]
    Point,
    Square {
        half_width: f64,
    },
    Polygon {
        vertices: Vec<Vec2>,
    },
}

impl GeometrySpec {
    pub fn build(&self) -> Result<FootGeometry> {
        match self {
            GeometrySpec::Point => Ok(FootGeometry::point()),
            GeometrySpec::Square { half_width } => {
                if !(*half_width > 0.0 && half_width.is_finite()) {
                    return Err(Error::Config("square foot half width must be positive".into()));
                }
                FootGeometry::square(*half_width)
            }
            GeometrySpec::Polygon { vertices } => FootGeometry::new(vertices.clone()),
        }
    }
}

/// Either a standard gait (`kind`, `n_steps`, `timings`) or an explicit
/// phase list over named `feet`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<GaitKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(default)]
    pub timings: GaitTimings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feet: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<PhaseSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_poly_duration: Option<f64>,
}

/// One phase of a custom gait; feet not listed in `swing` are in contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub duration: f64,
    #[serde(default)]
    pub swing: Vec<String>,
}

impl GaitSpec {
    pub fn schedule(&self) -> Result<ContactSchedule> {
        match (&self.phases, self.kind) {
            (Some(_), Some(_)) => Err(Error::Config("gait has both a kind and an explicit phase list".into())),
            (Some(phases), None) => {
                let feet = self
                    .feet
                    .clone()
                    .ok_or_else(|| Error::Config("an explicit phase list needs gait.feet".into()))?;
                let mut out = Vec::with_capacity(phases.len());
                for p in phases {
                    if let Some(bad) = p.swing.iter().find(|s| !feet.contains(s)) {
                        return Err(Error::Config(format!("phase swings unknown foot '{bad}'")));
                    }
                    out.push(Phase::new(
                        p.duration,
                        feet.iter().map(|f| !p.swing.contains(f)).collect(),
                    ));
                }
                ContactSchedule::new(feet, out)
            }
            (None, Some(kind)) => {
                let n = self
                    .n_steps
                    .ok_or_else(|| Error::Config("gait.n_steps is required with gait.kind".into()))?;
                if self.feet.is_some() {
                    return Err(Error::Config(
                        "gait.feet is only used with an explicit phase list".into(),
                    ));
                }
                build_gait(kind, n, &self.timings)
            }
            (None, None) => Err(Error::Config("gait needs a kind or a phase list".into())),
        }
    }

    pub fn max_poly_duration(&self) -> f64 {
        self.max_poly_duration
            .unwrap_or_else(|| self.kind.map_or(CUSTOM_MAX_POLY, GaitKind::default_max_poly_duration))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default = "Vec2::zeros")]
    pub position: Vec2,
    #[serde(default = "Vec2::zeros")]
    pub velocity: Vec2,
}

/// Goal state. A missing position leaves it free; the velocity defaults to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec2>,
    #[serde(default = "zero")]
    pub velocity: Option<Vec2>,
    #[serde(default)]
    pub free_velocity: bool,
}

impl Default for TerminalSpec {
    fn default() -> Self {
        Self {
            position: None,
            velocity: zero(),
            free_velocity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    #[serde(default)]
    pub plot: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            sample_dt: default_sample_dt(),
            plot: false,
        }
    }
}

/// Standing nominal offsets of a quadruped with 0.66 m by 0.38 m stance.
pub fn quadruped_offsets() -> Vec<Vec2> {
    vec![
        Vec2::new(0.33, 0.19),
        Vec2::new(0.33, -0.19),
        Vec2::new(-0.33, 0.19),
        Vec2::new(-0.33, -0.19),
    ]
}

pub fn biped_offsets() -> Vec<Vec2> {
    vec![Vec2::new(0.0, 0.1), Vec2::new(0.0, -0.1)]
}

/// Timings whose horizons match the reference problem sizes for 4 and 16 steps.
pub fn reference_timings(kind: GaitKind, n_steps: usize) -> GaitTimings {
    let long = n_steps >= 16;
    let (lead, swing, transition) = match kind {
        GaitKind::Walk if long => (0.32, 0.36, 0.1),
        GaitKind::Walk => (0.2, 0.3, 0.1),
        GaitKind::Trot if long => (0.4, 0.1, 0.1),
        GaitKind::Trot => (0.1, 0.1, 0.1),
        GaitKind::Pace | GaitKind::Bound => (0.1, 0.12, 0.04),
        GaitKind::BipedWalk => (0.2, 0.3, 0.1),
    };
    GaitTimings {
        swing,
        transition,
        lead_in: lead,
        lead_out: lead,
    }
}

impl Scenario {
    /// A standard gait from rest at the origin to rest at `goal`, on the
    /// default quadruped (point feet) or biped (square soles).
    pub fn standard(kind: GaitKind, n_steps: usize, goal: Vec2) -> Self {
        let biped = kind == GaitKind::BipedWalk;
        Scenario {
            name: format!("{kind}_{n_steps}step"),
            description: String::new(),
            robot: RobotSpec {
                gravity: DEFAULT_GRAVITY,
                height: DEFAULT_HEIGHT,
                nominal_offsets: if biped { biped_offsets() } else { quadruped_offsets() },
                range_of_motion: Some(if biped {
                    Vec2::new(0.2, 0.06)
                } else {
                    Vec2::new(0.15, 0.10)
                }),
                geometry: if biped {
                    GeometrySpec::Square { half_width: 0.05 }
                } else {
                    GeometrySpec::Point
                },
            },
            gait: GaitSpec {
                kind: Some(kind),
                n_steps: Some(n_steps),
                timings: reference_timings(kind, n_steps),
                ..Default::default()
            },
            initial: StateSpec::default(),
            terminal: TerminalSpec {
                position: Some(goal),
                ..Default::default()
            },
            robust_cost: matches!(kind, GaitKind::Walk | GaitKind::BipedWalk),
            fix_initial_stance: true,
            solver: SolverOptions::default(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.problem_config().map(|_| ())
    }

    pub fn schedule(&self) -> Result<ContactSchedule> {
        self.gait.schedule()
    }

    /// Builds the optimization problem configuration, rejecting any
    /// inconsistency as a configuration error.
    pub fn problem_config(&self) -> Result<ProblemConfig> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        let params = PendulumParams::new(self.robot.gravity, self.robot.height).map_err(cfg)?;
        let schedule = self.schedule().map_err(cfg)?;
        let n_feet = schedule.n_feet();
        if self.robot.nominal_offsets.len() != n_feet {
            return Err(Error::Config(format!(
                "{} nominal offsets given for {n_feet} feet",
                self.robot.nominal_offsets.len()
            )));
        }
        if let Some(r) = self.robot.range_of_motion {
            if !(r.x > 0.0 && r.y > 0.0 && r.x.is_finite() && r.y.is_finite()) {
                return Err(Error::Config("range of motion half-extents must be positive".into()));
            }
        }
        let max_poly = self.gait.max_poly_duration();
        if !(max_poly > 0.0 && max_poly.is_finite()) {
            return Err(Error::Config("max_poly_duration must be positive".into()));
        }
        if !(self.output.sample_dt > 0.0 && self.output.sample_dt.is_finite()) {
            return Err(Error::Config("output.sample_dt must be positive".into()));
        }
        self.solver.validate().map_err(cfg)?;
        let geometry = self.robot.geometry.build().map_err(cfg)?;
        let vectors = [
            Some(self.initial.position),
            Some(self.initial.velocity),
            self.terminal.position,
            self.terminal.velocity,
        ];
        if vectors
            .iter()
            .flatten()
            .chain(&self.robot.nominal_offsets)
            .any(|v| !(v.x.is_finite() && v.y.is_finite()))
        {
            return Err(Error::Config("states and offsets must be finite".into()));
        }
        Ok(ProblemConfig {
            params,
            schedule,
            max_poly_duration: max_poly,
            geometries: vec![geometry; n_feet],
            nominal_offsets: self.robot.nominal_offsets.clone(),
            range_of_motion: self.robot.range_of_motion,
            initial: PendulumState::new(self.initial.position, self.initial.velocity),
            terminal: TerminalCondition {
                position: self.terminal.position,
                velocity: if self.terminal.free_velocity {
                    None
                } else {
                    self.terminal.velocity
                },
            },
            robust_cost: self.robust_cost,
            fix_initial_stance: self.fix_initial_stance,
        })
    }
}

impl Scenario {
    /// Solves the scenario, refining range-of-motion bounds as needed, and
    /// verifies the result.
    pub fn solve(&self) -> Result<SolutionDump> {
        let config = self.problem_config()?;
        let gs = solve_gait(&config, &self.solver)?;
        let plan = gs.problem.decode(&gs.solution.w)?;
        let report = check_solution(
            &VerifyInput {
                plan: &plan,
                schedule: &config.schedule,
                params: &config.params,
                nominal_offsets: &config.nominal_offsets,
                range_of_motion: config.range_of_motion,
            },
            &Tolerances::default(),
        )?;
        let sol = gs.solution;
        Ok(SolutionDump {
            scenario: self.clone(),
            status: sol.status,
            cost: sol.cost,
            constraint_violation: sol.constraint_violation,
            optimality: sol.optimality,
            iterations: gs.total_iterations,
            refinements: gs.refinements,
            wall_time: sol.wall_time,
            n_variables: gs.problem.layout().n_vars,
            n_free_variables: gs.problem.n_free_variables(),
            n_constraints: gs.problem.n_rows(),
            w: sol.w,
            plan,
            report,
        })
    }
}

/// Feet labels of the standard robots, for building custom phase lists.
pub fn standard_feet(biped: bool) -> Vec<String> {
    let labels: &[&str] = if biped { &BIPED_FEET } else { &QUADRUPED_FEET };
    labels.iter().map(|s| s.to_string()).collect()
}
