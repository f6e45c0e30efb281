//! Footholds, swing interpolation and foot corner geometry.
//!
//! A foot holds a constant pose while in stance and moves between two
//! consecutive stances along a cubic with zero velocity at both ends. Only the
//! ground-plane motion is represented.

use nalgebra::Rotation2;
use serde::{Deserialize, Serialize};

use crate::schedule::{ContactSchedule, FootId};
use crate::{Error, Result, Vec2};

/// Corner positions of a foot in its own frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec2>", into = "Vec<Vec2>")]
pub struct FootGeometry {
    vertices: Vec<Vec2>,
}

impl TryFrom<Vec<Vec2>> for FootGeometry {
    type Error = Error;

    fn try_from(vertices: Vec<Vec2>) -> Result<Self> {
        FootGeometry::new(vertices)
    }
}

impl From<FootGeometry> for Vec<Vec2> {
    fn from(g: FootGeometry) -> Self {
        g.vertices
    }
}

impl FootGeometry {
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("foot needs at least one vertex".into()));
        }
        if vertices.iter().any(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(Error::NonFinite("foot vertex".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].iter().any(|w| (w - v).norm() < 1e-12) {
                return Err(Error::InvalidInput(format!("duplicate foot vertex {i}")));
            }
        }
        Ok(Self { vertices })
    }

    pub fn point() -> Self {
        Self {
            vertices: vec![Vec2::zeros()],
        }
    }

    /// Square sole with the given half side length, corners in counter-clockwise order.
    pub fn square(half_width: f64) -> Result<Self> {
        let w = half_width;
        Self::new(vec![
            Vec2::new(w, w),
            Vec2::new(-w, w),
            Vec2::new(-w, -w),
            Vec2::new(w, -w),
        ])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Orientation only matters when the foot has an extent.
    pub fn has_orientation(&self) -> bool {
        self.vertices.len() > 1
    }
}

/// Corner positions `p + R(alpha) p_v` in the world frame.
pub fn world_vertices(position: &Vec2, orientation: f64, geometry: &FootGeometry) -> Vec<Vec2> {
    let rot = Rotation2::new(orientation);
    geometry.vertices.iter().map(|v| position + rot * v).collect()
}

/// Blend weight of the end pose along a zero-velocity cubic, `3τ² - 2τ³`.
pub fn swing_weight(tau: f64) -> f64 {
    tau * tau * (3.0 - 2.0 * tau)
}

/// Derivative of [`swing_weight`] with respect to `τ`.
pub fn swing_weight_rate(tau: f64) -> f64 {
    6.0 * tau * (1.0 - tau)
}

/// A foot held at a fixed pose over `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stance {
    pub position: Vec2,
    pub orientation: f64,
    pub start: f64,
    pub end: f64,
}

/// Which stances determine a foot's pose at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoseSource {
    Stance(usize),
    /// Swinging from stance `from` to `from + 1`; the pose is
    /// `(1 - weight) * stance[from] + weight * stance[from + 1]`.
    Swing {
        from: usize,
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootTrajectory {
    pub geometry: FootGeometry,
    pub stances: Vec<Stance>,
}

impl FootTrajectory {
    pub fn pose_source(&self, t: f64) -> PoseSource {
        let s = self.stances.partition_point(|st| st.start <= t).saturating_sub(1);
        let stance = &self.stances[s];
        if t <= stance.end || s + 1 == self.stances.len() {
            PoseSource::Stance(s)
        } else {
            let next = &self.stances[s + 1];
            let tau = ((t - stance.end) / (next.start - stance.end)).clamp(0.0, 1.0);
            PoseSource::Swing {
                from: s,
                weight: swing_weight(tau),
            }
        }
    }

    pub fn pose(&self, t: f64) -> (Vec2, f64) {
        match self.pose_source(t) {
            PoseSource::Stance(s) => (self.stances[s].position, self.stances[s].orientation),
            PoseSource::Swing { from, weight } => {
                let a = &self.stances[from];
                let b = &self.stances[from + 1];
                (
                    a.position * (1.0 - weight) + b.position * weight,
                    a.orientation * (1.0 - weight) + b.orientation * weight,
                )
            }
        }
    }
}

/// Stances and geometry of every foot over a schedule's horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootPlan {
    pub feet: Vec<FootTrajectory>,
    pub horizon: f64,
}

/// Stance intervals `[start, end]` of one foot under a schedule.
///
/// Every foot has to be in contact in the first and the last phase so that
/// each swing is enclosed by two stances.
pub fn stance_intervals(schedule: &ContactSchedule, foot: FootId) -> Result<Vec<(f64, f64)>> {
    let runs = schedule.contact_runs(foot);
    let label = &schedule.feet()[foot.0];
    match (runs.first(), runs.last()) {
        (Some(first), Some(last)) if first.in_contact && last.in_contact => {}
        _ => {
            return Err(Error::InvalidSchedule(format!(
                "foot {label} must be in contact at the start and the end of the schedule"
            )))
        }
    }
    Ok(runs
        .iter()
        .filter(|r| r.in_contact)
        .map(|r| (schedule.phase_start(r.first_phase), schedule.phase_end(r.last_phase)))
        .collect())
}

impl FootPlan {
    /// Builds a plan from per-foot stance poses, one `(position, orientation)`
    /// per stance interval of the schedule.
    pub fn from_schedule(
        schedule: &ContactSchedule,
        geometries: &[FootGeometry],
        poses: &[Vec<(Vec2, f64)>],
    ) -> Result<Self> {
        let n = schedule.n_feet();
        if geometries.len() != n || poses.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected geometry and poses for {n} feet, got {} and {}",
                geometries.len(),
                poses.len()
            )));
        }
        let mut feet = Vec::with_capacity(n);
        for f in 0..n {
            let intervals = stance_intervals(schedule, FootId(f))?;
            if intervals.len() != poses[f].len() {
                return Err(Error::InvalidInput(format!(
                    "foot {} has {} stances but {} poses were given",
                    schedule.feet()[f],
                    intervals.len(),
                    poses[f].len()
                )));
            }
            let stances = intervals
                .iter()
                .zip(&poses[f])
                .map(|(&(start, end), &(position, orientation))| Stance {
                    position,
                    orientation,
                    start,
                    end,
                })
                .collect();
            feet.push(FootTrajectory {
                geometry: geometries[f].clone(),
                stances,
            });
        }
        Ok(Self {
            feet,
            horizon: schedule.horizon(),
        })
    }

    pub fn n_feet(&self) -> usize {
        self.feet.len()
    }

    pub fn foot_pose(&self, foot: FootId, t: f64) -> Result<(Vec2, f64)> {
        if !(t >= -1e-12 && t <= self.horizon + 1e-12) {
            return Err(Error::OutOfHorizon {
                t,
                horizon: self.horizon,
            });
        }
        let traj = self.feet.get(foot.0).ok_or(Error::IndexOutOfRange {
            what: "foot",
            index: foot.0,
            len: self.feet.len(),
        })?;
        Ok(traj.pose(t))
    }
}
