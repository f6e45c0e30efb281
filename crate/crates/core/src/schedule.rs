//! Predefined contact sequences and timings.
//!
//! A [`ContactSchedule`] is an ordered list of phases, each with a duration and
//! a contact flag per foot. Flags are right-continuous: at a phase boundary the
//! incoming phase applies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Index of a foot within a robot's foot set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FootId(pub usize);

pub const QUADRUPED_FEET: [&str; 4] = ["LF", "RF", "LH", "RH"];
pub const BIPED_FEET: [&str; 2] = ["L", "R"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub duration: f64,
    /// Contact flag per foot, indexed by [`FootId`].
    pub contact: Vec<bool>,
}

impl Phase {
    pub fn new(duration: f64, contact: Vec<bool>) -> Self {
        Self { duration, contact }
    }

    pub fn all_stance(duration: f64, n_feet: usize) -> Self {
        Self::new(duration, vec![true; n_feet])
    }

    pub fn n_in_contact(&self) -> usize {
        self.contact.iter().filter(|&&c| c).count()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSchedule {
    feet: Vec<String>,
    phases: Vec<Phase>,
}

/// Contact flags of every foot over a finite horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct ContactSchedule {
    feet: Vec<String>,
    phases: Vec<Phase>,
    starts: Vec<f64>,
}

impl TryFrom<RawSchedule> for ContactSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        ContactSchedule::new(raw.feet, raw.phases)
    }
}

impl From<ContactSchedule> for RawSchedule {
    fn from(s: ContactSchedule) -> Self {
        RawSchedule {
            feet: s.feet,
            phases: s.phases,
        }
    }
}

impl ContactSchedule {
    pub fn new(feet: Vec<String>, phases: Vec<Phase>) -> Result<Self> {
        if feet.is_empty() {
            return Err(Error::InvalidSchedule("schedule needs at least one foot".into()));
        }
        for (i, label) in feet.iter().enumerate() {
            if feet[..i].contains(label) {
                return Err(Error::InvalidSchedule(format!("duplicate foot label {label}")));
            }
        }
        for (i, phase) in phases.iter().enumerate() {
            if !(phase.duration.is_finite() && phase.duration > 0.0) {
                return Err(Error::InvalidSchedule(format!(
                    "phase {i} has non-positive duration {}",
                    phase.duration
                )));
            }
            if phase.contact.len() != feet.len() {
                return Err(Error::InvalidSchedule(format!(
                    "phase {i} has {} contact flags for {} feet",
                    phase.contact.len(),
                    feet.len()
                )));
            }
            if phase.n_in_contact() == 0 {
                return Err(Error::InvalidSchedule(format!("no foot in contact during phase {i}")));
            }
        }
        let mut starts = Vec::with_capacity(phases.len() + 1);
        let mut acc = 0.0;
        starts.push(acc);
        for phase in &phases {
            acc += phase.duration;
            starts.push(acc);
        }
        Ok(Self { feet, phases, starts })
    }

    /// A schedule without phases; the neutral element of [`concat`].
    pub fn empty(feet: Vec<String>) -> Result<Self> {
        Self::new(feet, Vec::new())
    }

    pub fn from_labels(feet: &[&str], phases: Vec<Phase>) -> Result<Self> {
        Self::new(feet.iter().map(|s| s.to_string()).collect(), phases)
    }

    pub fn feet(&self) -> &[String] {
        &self.feet
    }

    pub fn n_feet(&self) -> usize {
        self.feet.len()
    }

    pub fn foot_id(&self, label: &str) -> Option<FootId> {
        self.feet.iter().position(|f| f == label).map(FootId)
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Total horizon `T`.
    pub fn horizon(&self) -> f64 {
        *self.starts.last().unwrap()
    }

    /// Start time of phase `i`; `phase_start(n_phases)` is the horizon.
    pub fn phase_start(&self, i: usize) -> f64 {
        self.starts[i]
    }

    pub fn phase_end(&self, i: usize) -> f64 {
        self.starts[i + 1]
    }

    /// Index of the phase containing `t`, right-continuous at boundaries.
    pub fn phase_index(&self, t: f64) -> Result<usize> {
        let horizon = self.horizon();
        if self.phases.is_empty() || !(t >= -1e-12 && t <= horizon + 1e-12) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
        // number of starts <= t, minus one
        let idx = self.starts[..self.phases.len()].partition_point(|&s| s <= t);
        Ok(idx.saturating_sub(1))
    }

    pub fn contact_flags(&self, t: f64) -> Result<&[bool]> {
        Ok(&self.phases[self.phase_index(t)?].contact)
    }

    pub fn in_contact(&self, foot: FootId, t: f64) -> Result<bool> {
        Ok(self.contact_flags(t)?[foot.0])
    }

    /// Number of swing intervals (maximal runs of non-contact phases) of `foot`.
    pub fn swing_count(&self, foot: FootId) -> usize {
        self.contact_runs(foot).iter().filter(|r| !r.in_contact).count()
    }

    /// Maximal runs of equal contact state for one foot.
    pub fn contact_runs(&self, foot: FootId) -> Vec<ContactRun> {
        let mut runs: Vec<ContactRun> = Vec::new();
        for (i, phase) in self.phases.iter().enumerate() {
            let c = phase.contact[foot.0];
            match runs.last_mut() {
                Some(run) if run.in_contact == c => run.last_phase = i,
                _ => runs.push(ContactRun {
                    in_contact: c,
                    first_phase: i,
                    last_phase: i,
                }),
            }
        }
        runs
    }
}

/// A maximal run of consecutive phases in which a foot keeps its contact state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactRun {
    pub in_contact: bool,
    pub first_phase: usize,
    pub last_phase: usize,
}

/// Appends `b` after `a`.
pub fn concat(a: &ContactSchedule, b: &ContactSchedule) -> Result<ContactSchedule> {
    if a.feet != b.feet {
        return Err(Error::InvalidSchedule(format!(
            "cannot concatenate schedules over different feet {:?} and {:?}",
            a.feet, b.feet
        )));
    }
    let phases = a.phases.iter().chain(b.phases.iter()).cloned().collect();
    ContactSchedule::new(a.feet.clone(), phases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitKind {
    Walk,
    Trot,
    Pace,
    Bound,
    BipedWalk,
}

impl GaitKind {
    pub fn feet(self) -> &'static [&'static str] {
        match self {
            GaitKind::BipedWalk => &BIPED_FEET,
            _ => &QUADRUPED_FEET,
        }
    }

    /// Feet that swing together, in the order they cycle.
    fn swing_groups(self) -> &'static [&'static [&'static str]] {
        match self {
            GaitKind::Walk => &[&["LH"], &["LF"], &["RH"], &["RF"]],
            GaitKind::Trot => &[&["RF", "LH"], &["LF", "RH"]],
            GaitKind::Pace => &[&["LF", "LH"], &["RF", "RH"]],
            GaitKind::Bound => &[&["LF", "RF"], &["LH", "RH"]],
            GaitKind::BipedWalk => &[&["L"], &["R"]],
        }
    }

    fn has_transitions(self) -> bool {
        matches!(self, GaitKind::Pace | GaitKind::Bound | GaitKind::BipedWalk)
    }

    /// Polynomial duration used for this gait unless configured otherwise.
    pub fn default_max_poly_duration(self) -> f64 {
        match self {
            GaitKind::Walk => 0.1,
            GaitKind::Trot => 0.05,
            GaitKind::Pace | GaitKind::Bound => 0.02,
            GaitKind::BipedWalk => 0.05,
        }
    }
}

impl FromStr for GaitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "walk" => Ok(GaitKind::Walk),
            "trot" => Ok(GaitKind::Trot),
            "pace" => Ok(GaitKind::Pace),
            "bound" => Ok(GaitKind::Bound),
            "biped_walk" => Ok(GaitKind::BipedWalk),
            other => Err(Error::InvalidSchedule(format!("unknown gait kind '{other}'"))),
        }
    }
}

impl fmt::Display for GaitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GaitKind::Walk => "walk",
            GaitKind::Trot => "trot",
            GaitKind::Pace => "pace",
            GaitKind::Bound => "bound",
            GaitKind::BipedWalk => "biped_walk",
        };
        f.write_str(s)
    }
}

/// Phase durations for [`build_gait`], in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitTimings {
    pub swing: f64,
    /// All-stance period between swing phases (pace, bound and biped walk only).
    pub transition: f64,
    pub lead_in: f64,
    pub lead_out: f64,
}

impl Default for GaitTimings {
    fn default() -> Self {
        Self {
            swing: 0.3,
            transition: 0.1,
            lead_in: 0.4,
            lead_out: 0.4,
        }
    }
}

/// Builds one of the standard gaits: all-stance lead-in, `n_steps` swing
/// phases cycling through the gait's swing groups, all-stance lead-out.
pub fn build_gait(kind: GaitKind, n_steps: usize, timings: &GaitTimings) -> Result<ContactSchedule> {
    if n_steps == 0 {
        return Err(Error::InvalidSchedule("a gait needs at least one step".into()));
    }
    let feet = kind.feet();
    let n = feet.len();
    let groups = kind.swing_groups();
    let mut phases = vec![Phase::all_stance(timings.lead_in, n)];
    for step in 0..n_steps {
        if step > 0 && kind.has_transitions() {
            phases.push(Phase::all_stance(timings.transition, n));
        }
        let swinging = groups[step % groups.len()];
        let contact = feet.iter().map(|f| !swinging.contains(f)).collect();
        phases.push(Phase::new(timings.swing, contact));
    }
    phases.push(Phase::all_stance(timings.lead_out, n));
    ContactSchedule::from_labels(feet, phases)
}
