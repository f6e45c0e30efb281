//! A solved motion: CoM spline, foot poses and vertex loads.

use serde::{Deserialize, Serialize};

use crate::cop::{cop, LoadProfile};
use crate::foot::FootPlan;
use crate::schedule::FootId;
use crate::spline::{ComSpline, SplinePoint};
use crate::{Result, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionPlan {
    pub spline: ComSpline,
    pub feet: FootPlan,
    pub loads: LoadProfile,
}

impl MotionPlan {
    pub fn horizon(&self) -> f64 {
        self.spline.horizon()
    }

    pub fn com(&self, t: f64) -> Result<SplinePoint> {
        self.spline.eval(t)
    }

    pub fn cop(&self, t: f64) -> Result<Vec2> {
        cop(&self.loads, &self.feet, t)
    }

    pub fn foot_pose(&self, foot: FootId, t: f64) -> Result<(Vec2, f64)> {
        self.feet.foot_pose(foot, t)
    }
}
