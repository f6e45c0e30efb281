use std::collections::HashMap;
use std::ops::Range;

use nalgebra::Rotation2;
use serde::{Deserialize, Serialize};

use super::layout::DecisionLayout;
use crate::cop::{target_from_flags, LoadProfile, VertexIndex};
use crate::foot::{stance_intervals, FootGeometry, FootPlan, FootTrajectory, PoseSource, Stance};
use crate::lip::{PendulumParams, PendulumState};
use crate::plan::MotionPlan;
use crate::schedule::{ContactSchedule, FootId};
use crate::solver::Nlp;
use crate::spline::{build_segmentation, ComSpline, QuarticPoly2D, Segmentation};
use crate::{Error, Result, Vec2};

/// Desired state at the end of the horizon; `None` leaves a component free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalCondition {
    pub position: Option<Vec2>,
    pub velocity: Option<Vec2>,
}

impl TerminalCondition {
    pub fn at_rest(position: Vec2) -> Self {
        Self {
            position: Some(position),
            velocity: Some(Vec2::zeros()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub params: PendulumParams,
    pub schedule: ContactSchedule,
    pub max_poly_duration: f64,
    pub geometries: Vec<FootGeometry>,
    /// Nominal foot position relative to the CoM, per foot.
    pub nominal_offsets: Vec<Vec2>,
    /// Half-extents of the reachable box around each nominal foothold.
    pub range_of_motion: Option<Vec2>,
    pub initial: PendulumState,
    pub terminal: TerminalCondition,
    pub robust_cost: bool,
    /// Pin the first stance of every foot to its nominal pose around the initial CoM.
    pub fix_initial_stance: bool,
}

impl ProblemConfig {
    /// A single point foot in contact for `horizon` seconds, free to be
    /// placed anywhere, with the CoM brought to rest at a free position.
    /// The optimal foothold is the capture point of `initial`.
    pub fn capture_point(
        params: PendulumParams,
        initial: PendulumState,
        horizon: f64,
        max_poly_duration: f64,
    ) -> Result<Self> {
        let schedule = ContactSchedule::from_labels(&["F"], vec![crate::schedule::Phase::all_stance(horizon, 1)])?;
        Ok(Self {
            params,
            schedule,
            max_poly_duration,
            geometries: vec![FootGeometry::point()],
            nominal_offsets: vec![Vec2::zeros()],
            range_of_motion: None,
            initial,
            terminal: TerminalCondition {
                position: None,
                velocity: Some(Vec2::zeros()),
            },
            robust_cost: false,
            fix_initial_stance: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Equality,
    Inequality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBlock {
    pub name: &'static str,
    pub kind: BlockKind,
    pub rows: Range<usize>,
    pub linear: bool,
}

/// Collocation point within a polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimpsonSample {
    Start,
    Mid,
    End,
}

impl SimpsonSample {
    pub const ALL: [SimpsonSample; 3] = [SimpsonSample::Start, SimpsonSample::Mid, SimpsonSample::End];

    pub fn local_time(self, duration: f64) -> f64 {
        match self {
            SimpsonSample::Start => 0.0,
            SimpsonSample::Mid => 0.5 * duration,
            SimpsonSample::End => duration,
        }
    }
}

/// Foot position as a combination of stance variables, `Σ coef * stance`.
pub(super) type StanceWeights = Vec<(usize, f64)>;

fn stance_weights(traj: &FootTrajectory, t: f64) -> StanceWeights {
    match traj.pose_source(t) {
        PoseSource::Stance(s) => vec![(s, 1.0)],
        PoseSource::Swing { from, weight } => vec![(from, 1.0 - weight), (from + 1, weight)],
    }
}

/// Interior Bernstein control points of `p - c - p_nom` over one polynomial.
/// Together with the junction samples they bound the residual on the whole interval.
#[derive(Debug, Clone)]
pub(super) struct ControlBound {
    pub(super) poly: usize,
    pub(super) foot: usize,
    pub(super) weights: [StanceWeights; 3],
}

pub(super) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weight of power coefficient `i` (in the scaled variable) on Bernstein coefficient `j`, degree 4.
pub(super) fn bernstein_weight(j: usize, i: usize) -> f64 {
    if i > j {
        0.0
    } else {
        binomial(j, i) / binomial(4, i)
    }
}

pub(super) fn control_bound(traj: &FootTrajectory, poly: usize, foot: usize, t0: f64, dur: f64) -> ControlBound {
    let from = match traj.pose_source(t0 + 0.5 * dur) {
        PoseSource::Stance(s) => {
            return ControlBound {
                poly,
                foot,
                weights: std::array::from_fn(|_| vec![(s, 1.0)]),
            }
        }
        PoseSource::Swing { from, .. } => from,
    };
    let lift = traj.stances[from].end;
    let span = traj.stances[from + 1].start - lift;
    let (s0, r) = ((t0 - lift) / span, dur / span);
    let m = [
        3.0 * s0 * s0 - 2.0 * s0.powi(3),
        6.0 * s0 * r * (1.0 - s0),
        3.0 * r * r * (1.0 - 2.0 * s0),
        -2.0 * r.powi(3),
    ];
    let weights = std::array::from_fn(|j| {
        let beta: f64 = (0..4).map(|i| bernstein_weight(j + 1, i) * m[i]).sum();
        vec![(from, 1.0 - beta), (from + 1, beta)]
    });
    ControlBound { poly, foot, weights }
}

/// Sparse entries recorded in a fixed order that does not depend on `w`.
#[derive(Default)]
struct Entries {
    items: Vec<(usize, usize, f64)>,
}

impl Entries {
    fn push(&mut self, row: usize, col: usize, v: f64) {
        self.items.push((row, col, v));
    }

    /// Lower-triangular Hessian entry.
    fn push_sym(&mut self, i: usize, j: usize, v: f64) {
        self.items.push((i.max(j), i.min(j), v));
    }
}

/// Deduplicated sparsity pattern plus the slot of each recorded entry.
#[derive(Debug, Clone, Default)]
struct Pattern {
    rows: Vec<usize>,
    cols: Vec<usize>,
    slot_of: Vec<usize>,
}

impl Pattern {
    fn from_entries(entries: &[(usize, usize, f64)]) -> Self {
        let mut map = HashMap::new();
        let mut p = Pattern::default();
        for &(r, c, _) in entries {
            let next = p.rows.len();
            let slot = *map.entry((r, c)).or_insert(next);
            if slot == next {
                p.rows.push(r);
                p.cols.push(c);
            }
            p.slot_of.push(slot);
        }
        p
    }

    fn scatter(&self, entries: &[(usize, usize, f64)], values: &mut [f64]) {
        values.fill(0.0);
        for (&slot, &(_, _, v)) in self.slot_of.iter().zip(entries) {
            values[slot] += v;
        }
    }
}

/// The transcribed gait optimization problem.
#[derive(Debug, Clone)]
pub struct GaitProblem {
    config: ProblemConfig,
    segmentation: Segmentation,
    layout: DecisionLayout,
    blocks: Vec<ConstraintBlock>,
    template: FootPlan,
    targets: Vec<Vec<f64>>,
    /// Per polynomial and collocation point, stance weights of every foot in contact.
    dyn_weights: Vec<[Vec<(usize, StanceWeights)>; 3]>,
    /// Per junction time, stance weights of every foot.
    rom_weights: Vec<Vec<StanceWeights>>,
    /// Interior Bernstein control points of swinging feet, per polynomial.
    rom_interior: Vec<ControlBound>,
    n_rows: usize,
    var_lo: Vec<f64>,
    var_hi: Vec<f64>,
    row_lo: Vec<f64>,
    row_hi: Vec<f64>,
    jac: Pattern,
    hess: Pattern,
}

/// Builds the problem for a configuration.
pub fn assemble(config: ProblemConfig) -> Result<GaitProblem> {
    GaitProblem::assemble(config)
}

impl GaitProblem {
    /// Range of motion is enforced at every junction and continuously for swinging feet.
    pub fn assemble(config: ProblemConfig) -> Result<Self> {
        Self::assemble_refined(config, &[])
    }

    /// Like [`GaitProblem::assemble`], additionally bounding the range of
    /// motion continuously for the listed `(polynomial, foot)` pairs.
    pub fn assemble_refined(config: ProblemConfig, refine: &[(usize, FootId)]) -> Result<Self> {
        config.params.validate()?;
        let schedule = &config.schedule;
        if schedule.is_empty() {
            return Err(Error::InvalidSchedule("schedule has no phases".into()));
        }
        let n_feet = schedule.n_feet();
        if config.geometries.len() != n_feet || config.nominal_offsets.len() != n_feet {
            return Err(Error::InvalidInput(format!(
                "schedule has {n_feet} feet but {} geometries and {} nominal offsets were given",
                config.geometries.len(),
                config.nominal_offsets.len()
            )));
        }
        if !config.initial.is_finite() {
            return Err(Error::NonFinite("initial state".into()));
        }
        if let Some(r) = config.range_of_motion {
            if !(r.x > 0.0 && r.y > 0.0) {
                return Err(Error::InvalidInput("range of motion must be positive".into()));
            }
        }
        let segmentation = build_segmentation(schedule, config.max_poly_duration)?;
        let layout = DecisionLayout::new(schedule, &segmentation, &config.geometries)?;

        let mut feet = Vec::with_capacity(n_feet);
        for f in 0..n_feet {
            let stances = stance_intervals(schedule, FootId(f))?
                .into_iter()
                .map(|(start, end)| Stance {
                    position: Vec2::zeros(),
                    orientation: 0.0,
                    start,
                    end,
                })
                .collect();
            feet.push(FootTrajectory {
                geometry: config.geometries[f].clone(),
                stances,
            });
        }
        let template = FootPlan {
            feet,
            horizon: schedule.horizon(),
        };

        let index = VertexIndex::from_geometries(&config.geometries);
        let mut targets = Vec::with_capacity(layout.n_polys);
        let mut dyn_weights = Vec::with_capacity(layout.n_polys);
        for k in 0..layout.n_polys {
            let flags = &schedule.phases()[segmentation.phase_of[k]].contact;
            let full = target_from_flags(flags, &index)?;
            targets.push(
                layout.loads[k]
                    .iter()
                    .map(|s| full[index.range(s.foot).start + s.vertex])
                    .collect(),
            );
            let (t0, dur) = (segmentation.times[k], segmentation.duration(k));
            dyn_weights.push(SimpsonSample::ALL.map(|s| {
                let t = if s == SimpsonSample::End {
                    segmentation.times[k + 1]
                } else {
                    t0 + s.local_time(dur)
                };
                (0..n_feet)
                    .filter(|&f| flags[f])
                    .map(|f| (f, stance_weights(&template.feet[f], t)))
                    .collect()
            }));
        }
        let rom_weights = segmentation
            .times
            .iter()
            .map(|&t| template.feet.iter().map(|tr| stance_weights(tr, t)).collect())
            .collect();
        let mut rom_interior = Vec::new();
        if config.range_of_motion.is_some() {
            for k in 0..layout.n_polys {
                let flags = &schedule.phases()[segmentation.phase_of[k]].contact;
                for (f, traj) in template.feet.iter().enumerate() {
                    if !flags[f] || refine.contains(&(k, FootId(f))) {
                        rom_interior.push(control_bound(
                            traj,
                            k,
                            f,
                            segmentation.times[k],
                            segmentation.duration(k),
                        ));
                    }
                }
            }
        }

        let mut problem = GaitProblem {
            config,
            segmentation,
            layout,
            blocks: Vec::new(),
            template,
            targets,
            dyn_weights,
            rom_weights,
            rom_interior,
            n_rows: 0,
            var_lo: Vec::new(),
            var_hi: Vec::new(),
            row_lo: Vec::new(),
            row_hi: Vec::new(),
            jac: Pattern::default(),
            hess: Pattern::default(),
        };
        problem.build_blocks();
        problem.build_bounds();
        let w0 = problem.initial_guess();
        let mut g = vec![0.0; problem.n_rows];
        let mut entries = Entries::default();
        problem.eval_constraints(&w0, &mut g, &mut entries);
        problem.jac = Pattern::from_entries(&entries.items);
        let mut entries = Entries::default();
        problem.eval_hessian(&w0, 1.0, &vec![1.0; problem.n_rows], &mut entries);
        problem.hess = Pattern::from_entries(&entries.items);
        Ok(problem)
    }

    fn build_blocks(&mut self) {
        let n_p = self.layout.n_polys;
        let n_feet = self.config.schedule.n_feet();
        let mut row = 0;
        let mut add = |blocks: &mut Vec<ConstraintBlock>, name, kind, n: usize, linear| {
            blocks.push(ConstraintBlock {
                name,
                kind,
                rows: row..row + n,
                linear,
            });
            row += n;
        };
        let mut blocks = Vec::new();
        add(&mut blocks, "initial", BlockKind::Equality, 4, true);
        add(&mut blocks, "continuity", BlockKind::Equality, 4 * (n_p - 1), true);
        add(&mut blocks, "dynamics", BlockKind::Equality, 6 * n_p, false);
        if self.config.range_of_motion.is_some() {
            add(
                &mut blocks,
                "range_of_motion",
                BlockKind::Inequality,
                2 * n_feet * (n_p + 1) + 6 * self.rom_interior.len(),
                true,
            );
        }
        add(&mut blocks, "convexity", BlockKind::Equality, n_p, true);
        let n_terminal =
            2 * (self.config.terminal.position.is_some() as usize + self.config.terminal.velocity.is_some() as usize);
        if n_terminal > 0 {
            add(&mut blocks, "terminal", BlockKind::Equality, n_terminal, true);
        }
        self.blocks = blocks.into_iter().filter(|b| !b.rows.is_empty()).collect();
        self.n_rows = row;
    }

    fn build_bounds(&mut self) {
        let n = self.layout.n_vars;
        self.var_lo = vec![f64::NEG_INFINITY; n];
        self.var_hi = vec![f64::INFINITY; n];
        for node in &self.layout.loads {
            for slot in node {
                self.var_lo[slot.var] = 0.0;
                self.var_hi[slot.var] = 1.0;
            }
        }
        if self.config.fix_initial_stance {
            let w0 = self.initial_guess();
            for f in 0..self.config.schedule.n_feet() {
                let x = self.layout.stance_x(f, 0);
                let width = if self.layout.oriented[f] { 3 } else { 2 };
                let pinned = x..x + width;
                self.var_lo[pinned.clone()].copy_from_slice(&w0[pinned.clone()]);
                self.var_hi[pinned.clone()].copy_from_slice(&w0[pinned]);
            }
        }
        self.row_lo = vec![0.0; self.n_rows];
        self.row_hi = vec![0.0; self.n_rows];
        if let (Some(block), Some(r)) = (self.block("range_of_motion"), self.config.range_of_motion) {
            for (j, row) in block.rows.clone().enumerate() {
                let half = if j % 2 == 0 { r.x } else { r.y };
                self.row_lo[row] = -half;
                self.row_hi[row] = half;
            }
        }
    }

    pub fn config(&self) -> &ProblemConfig {
        &self.config
    }

    pub fn segmentation(&self) -> &Segmentation {
        &self.segmentation
    }

    pub fn layout(&self) -> &DecisionLayout {
        &self.layout
    }

    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&ConstraintBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Number of variables that are not pinned by equal bounds.
    pub fn n_free_variables(&self) -> usize {
        self.var_lo.iter().zip(&self.var_hi).filter(|(l, h)| l != h).count()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// CoM constant at the initial position, every stance at its nominal pose
    /// around it, and loads equally shared among the corners in contact.
    pub fn initial_guess(&self) -> Vec<f64> {
        let l = &self.layout;
        let mut w = vec![0.0; l.n_vars];
        let c0 = self.config.initial.position;
        for k in 0..l.n_polys {
            w[l.coeff(k, 0, 0)] = c0.x;
            w[l.coeff(k, 0, 1)] = c0.y;
        }
        for (f, starts) in l.stances.iter().enumerate() {
            let p = c0 + self.config.nominal_offsets[f];
            for &x in starts {
                w[x] = p.x;
                w[x + 1] = p.y;
            }
        }
        for (node, target) in l.loads.iter().zip(&self.targets) {
            for (slot, &v) in node.iter().zip(target) {
                w[slot.var] = v;
            }
        }
        w
    }

    fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.layout.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.layout.n_vars,
                got: w.len(),
            });
        }
        Ok(())
    }

    /// Spline acceleration minus `(g/h)(c - u)` at a collocation point of polynomial `k`.
    pub fn dynamics_residual(&self, w: &[f64], k: usize, sample: SimpsonSample) -> Result<Vec2> {
        self.check_len(w)?;
        if k >= self.layout.n_polys {
            return Err(Error::IndexOutOfRange {
                what: "polynomial",
                index: k,
                len: self.layout.n_polys,
            });
        }
        let g = self.constraint_values(w);
        let s = SimpsonSample::ALL.iter().position(|&x| x == sample).unwrap();
        let row = self.block("dynamics").unwrap().rows.start + 6 * k + 2 * s;
        Ok(Vec2::new(g[row], g[row + 1]))
    }

    /// `p - c - p_nom` of one foot at junction time `t_j`.
    pub fn rom_residual(&self, w: &[f64], foot: FootId, junction: usize) -> Result<Vec2> {
        self.check_len(w)?;
        let n_feet = self.config.schedule.n_feet();
        if foot.0 >= n_feet || junction > self.layout.n_polys {
            return Err(Error::IndexOutOfRange {
                what: "range of motion sample",
                index: junction,
                len: self.layout.n_polys + 1,
            });
        }
        let block = self
            .block("range_of_motion")
            .ok_or_else(|| Error::InvalidInput("problem has no range of motion constraint".into()))?;
        let g = self.constraint_values(w);
        let row = block.rows.start + 2 * (junction * n_feet + foot.0);
        Ok(Vec2::new(g[row], g[row + 1]))
    }

    /// Largest amount by which an interior control point of `p - c - p_nom`
    /// leaves the range of motion, for every `(polynomial, foot)` pair that
    /// exceeds it. Empty when the range of motion holds for all `t`
    /// (given junction feasibility).
    pub fn rom_control_excess(&self, w: &[f64]) -> Result<Vec<(usize, FootId, f64)>> {
        self.check_len(w)?;
        let Some(r) = self.config.range_of_motion else {
            return Ok(Vec::new());
        };
        let l = &self.layout;
        let mut out = Vec::new();
        for k in 0..l.n_polys {
            let (t0, tau) = (self.segmentation.times[k], self.segmentation.duration(k));
            for (f, traj) in self.template.feet.iter().enumerate() {
                let cb = control_bound(traj, k, f, t0, tau);
                let mut excess = 0.0_f64;
                for (j, ws) in cb.weights.iter().enumerate() {
                    let (p, _) = self.stance_point(w, f, ws);
                    for axis in 0..2 {
                        let com: f64 = (0..=j + 1)
                            .map(|i| bernstein_weight(j + 1, i) * tau.powi(i as i32) * w[l.coeff(k, i, axis)])
                            .sum();
                        let v = p[axis] - com - self.config.nominal_offsets[f][axis];
                        excess = excess.max(v.abs() - r[axis]);
                    }
                }
                if excess > 0.0 {
                    out.push((k, FootId(f), excess));
                }
            }
        }
        Ok(out)
    }

    pub fn constraint_values(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n_rows];
        self.eval_constraints(w, &mut g, &mut Entries::default());
        g
    }

    /// Rows as they violate their bounds, zero when satisfied.
    pub fn violations(&self, w: &[f64]) -> Vec<f64> {
        self.constraint_values(w)
            .iter()
            .zip(self.row_lo.iter().zip(&self.row_hi))
            .map(|(&g, (&lo, &hi))| (lo - g).max(g - hi).max(0.0))
            .collect()
    }

    fn stance_point(&self, w: &[f64], foot: usize, weights: &StanceWeights) -> (Vec2, f64) {
        let mut p = Vec2::zeros();
        let mut alpha = 0.0;
        for &(s, c) in weights {
            let x = self.layout.stance_x(foot, s);
            p += Vec2::new(w[x], w[x + 1]) * c;
            if let Some(a) = self.layout.stance_orientation(foot, s) {
                alpha += c * w[a];
            }
        }
        (p, alpha)
    }

    fn eval_constraints(&self, w: &[f64], g: &mut [f64], jac: &mut Entries) {
        let l = &self.layout;
        let n_p = l.n_polys;
        let omega_sq = self.config.params.omega_sq();
        let mut row = 0;

        let x0 = &self.config.initial;
        for (i, target) in [x0.position, x0.velocity].iter().enumerate() {
            for axis in 0..2 {
                let v = l.coeff(0, i, axis);
                g[row] = w[v] - target[axis];
                jac.push(row, v, 1.0);
                row += 1;
            }
        }

        for k in 1..n_p {
            let tau = self.segmentation.duration(k - 1);
            for d in 0..2 {
                for axis in 0..2 {
                    let mut val = -w[l.coeff(k, d, axis)];
                    let mut pw = 1.0;
                    for i in d..5 {
                        let c = falling(i, d) * pw;
                        val += c * w[l.coeff(k - 1, i, axis)];
                        jac.push(row, l.coeff(k - 1, i, axis), c);
                        pw *= tau;
                    }
                    jac.push(row, l.coeff(k, d, axis), -1.0);
                    g[row] = val;
                    row += 1;
                }
            }
        }

        for k in 0..n_p {
            let dur = self.segmentation.duration(k);
            for (s, sample) in SimpsonSample::ALL.iter().enumerate() {
                let tau = sample.local_time(dur);
                let feet: Vec<(usize, Vec2, f64)> = self.dyn_weights[k][s]
                    .iter()
                    .map(|(f, ws)| {
                        let (p, a) = self.stance_point(w, *f, ws);
                        (*f, p, a)
                    })
                    .collect();
                for axis in 0..2 {
                    let mut val = 0.0;
                    for i in 0..5 {
                        let acc = if i >= 2 {
                            falling(i, 2) * tau.powi(i as i32 - 2)
                        } else {
                            0.0
                        };
                        let c = acc - omega_sq * tau.powi(i as i32);
                        val += c * w[l.coeff(k, i, axis)];
                        jac.push(row, l.coeff(k, i, axis), c);
                    }
                    for (fi, (f, ws)) in self.dyn_weights[k][s].iter().enumerate() {
                        let (_, p, alpha) = feet[fi];
                        let rot = Rotation2::new(alpha);
                        let geom = &self.config.geometries[*f];
                        let mut load = 0.0;
                        let mut dalpha = 0.0;
                        for slot in l.loads[k].iter().filter(|sl| sl.foot == *f) {
                            let v = geom.vertices()[slot.vertex];
                            let lam = w[slot.var];
                            let corner = p[axis] + (rot * v)[axis];
                            val += omega_sq * lam * corner;
                            jac.push(row, slot.var, omega_sq * corner);
                            load += lam;
                            dalpha += lam * rot_deriv(alpha, &v)[axis];
                        }
                        for &(st, c) in ws {
                            jac.push(row, l.stance_x(*f, st) + axis, omega_sq * c * load);
                            if let Some(a) = l.stance_orientation(*f, st) {
                                jac.push(row, a, omega_sq * c * dalpha);
                            }
                        }
                    }
                    g[row] = val;
                    row += 1;
                }
            }
        }

        if self.config.range_of_motion.is_some() {
            for j in 0..=n_p {
                for (f, ws) in self.rom_weights[j].iter().enumerate() {
                    let (p, _) = self.stance_point(w, f, ws);
                    let nominal = self.config.nominal_offsets[f];
                    for axis in 0..2 {
                        let mut com = 0.0;
                        if j < n_p {
                            let v = l.coeff(j, 0, axis);
                            com = w[v];
                            jac.push(row, v, -1.0);
                        } else {
                            let tau = self.segmentation.duration(n_p - 1);
                            for i in 0..5 {
                                let v = l.coeff(n_p - 1, i, axis);
                                let c = tau.powi(i as i32);
                                com += c * w[v];
                                jac.push(row, v, -c);
                            }
                        }
                        for &(st, c) in ws {
                            jac.push(row, l.stance_x(f, st) + axis, c);
                        }
                        g[row] = p[axis] - com - nominal[axis];
                        row += 1;
                    }
                }
            }
            for sb in &self.rom_interior {
                let tau = self.segmentation.duration(sb.poly);
                let nominal = self.config.nominal_offsets[sb.foot];
                for (j, ws) in sb.weights.iter().enumerate() {
                    let (p, _) = self.stance_point(w, sb.foot, ws);
                    for axis in 0..2 {
                        let mut com = 0.0;
                        for i in 0..=j + 1 {
                            let v = l.coeff(sb.poly, i, axis);
                            let c = bernstein_weight(j + 1, i) * tau.powi(i as i32);
                            com += c * w[v];
                            jac.push(row, v, -c);
                        }
                        for &(st, c) in ws {
                            jac.push(row, l.stance_x(sb.foot, st) + axis, c);
                        }
                        g[row] = p[axis] - com - nominal[axis];
                        row += 1;
                    }
                }
            }
        }

        for node in &l.loads {
            let mut sum = -1.0;
            for slot in node {
                sum += w[slot.var];
                jac.push(row, slot.var, 1.0);
            }
            g[row] = sum;
            row += 1;
        }

        let tau = self.segmentation.duration(n_p - 1);
        let terminal = self.config.terminal;
        for (d, target) in [terminal.position, terminal.velocity].iter().enumerate() {
            let Some(target) = target else { continue };
            for axis in 0..2 {
                let mut val = -target[axis];
                let mut pw = 1.0;
                for i in d..5 {
                    let c = falling(i, d) * pw;
                    val += c * w[l.coeff(n_p - 1, i, axis)];
                    jac.push(row, l.coeff(n_p - 1, i, axis), c);
                    pw *= tau;
                }
                g[row] = val;
                row += 1;
            }
        }
        debug_assert_eq!(row, self.n_rows);
    }

    fn eval_hessian(&self, w: &[f64], cost_factor: f64, y: &[f64], out: &mut Entries) {
        let l = &self.layout;
        if self.config.robust_cost {
            for node in &l.loads {
                for slot in node {
                    out.push_sym(slot.var, slot.var, 2.0 * cost_factor);
                }
            }
        }
        let omega_sq = self.config.params.omega_sq();
        let first = self.block("dynamics").unwrap().rows.start;
        for k in 0..l.n_polys {
            for s in 0..3 {
                for axis in 0..2 {
                    let m = omega_sq * y[first + 6 * k + 2 * s + axis];
                    for (f, ws) in &self.dyn_weights[k][s] {
                        let (_, alpha) = self.stance_point(w, *f, ws);
                        let geom = &self.config.geometries[*f];
                        let mut curvature = 0.0;
                        for slot in l.loads[k].iter().filter(|sl| sl.foot == *f) {
                            let v = geom.vertices()[slot.vertex];
                            let dv = rot_deriv(alpha, &v)[axis];
                            curvature -= w[slot.var] * (Rotation2::new(alpha) * v)[axis];
                            for &(st, c) in ws {
                                out.push_sym(slot.var, l.stance_x(*f, st) + axis, m * c);
                                if let Some(a) = l.stance_orientation(*f, st) {
                                    out.push_sym(slot.var, a, m * c * dv);
                                }
                            }
                        }
                        for (i, &(si, ci)) in ws.iter().enumerate() {
                            for &(sj, cj) in &ws[..=i] {
                                if let (Some(a), Some(b)) = (l.stance_orientation(*f, si), l.stance_orientation(*f, sj))
                                {
                                    out.push_sym(a, b, m * ci * cj * curvature);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn targets_flat(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.layout
            .loads
            .iter()
            .zip(&self.targets)
            .flat_map(|(node, t)| node.iter().zip(t).map(|(s, &v)| (s.var, v)))
    }

    /// Spline, footholds and loads encoded in `w`.
    pub fn decode(&self, w: &[f64]) -> Result<MotionPlan> {
        self.check_len(w)?;
        let l = &self.layout;
        let seg = &self.segmentation;
        let mut polys = Vec::with_capacity(l.n_polys);
        for k in 0..l.n_polys {
            let coeffs = std::array::from_fn(|i| Vec2::new(w[l.coeff(k, i, 0)], w[l.coeff(k, i, 1)]));
            polys.push(QuarticPoly2D::new(coeffs, seg.times[k], seg.duration(k))?);
        }
        let spline = ComSpline::new(polys)?;

        let mut feet = self.template.clone();
        for (f, traj) in feet.feet.iter_mut().enumerate() {
            for (s, stance) in traj.stances.iter_mut().enumerate() {
                let x = l.stance_x(f, s);
                stance.position = Vec2::new(w[x], w[x + 1]);
                stance.orientation = l.stance_orientation(f, s).map_or(0.0, |a| w[a]);
            }
        }

        let index = VertexIndex::from_geometries(&self.config.geometries);
        let values = l
            .loads
            .iter()
            .map(|node| {
                let mut v = vec![0.0; index.len()];
                for slot in node {
                    v[index.range(slot.foot).start + slot.vertex] = w[slot.var];
                }
                v
            })
            .collect();
        let loads = LoadProfile::new(seg.times.clone(), index, values)?;
        Ok(MotionPlan { spline, feet, loads })
    }
}

/// `i (i-1) ... (i-d+1)`, the coefficient of the d-th derivative of `t^i`.
fn falling(i: usize, d: usize) -> f64 {
    if i < d {
        return 0.0;
    }
    (i + 1 - d..=i).map(|x| x as f64).product()
}

/// `dR(α)/dα · v`.
fn rot_deriv(alpha: f64, v: &Vec2) -> Vec2 {
    let (s, c) = alpha.sin_cos();
    Vec2::new(-s * v.x - c * v.y, c * v.x - s * v.y)
}

impl Nlp for GaitProblem {
    fn n_variables(&self) -> usize {
        self.layout.n_vars
    }

    fn n_constraints(&self) -> usize {
        self.n_rows
    }

    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.var_lo.clone(), self.var_hi.clone())
    }

    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.row_lo.clone(), self.row_hi.clone())
    }

    fn cost(&self, w: &[f64]) -> f64 {
        if !self.config.robust_cost {
            return 0.0;
        }
        self.targets_flat().map(|(i, t)| (w[i] - t).powi(2)).sum()
    }

    fn cost_gradient(&self, w: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        if self.config.robust_cost {
            for (i, t) in self.targets_flat() {
                grad[i] = 2.0 * (w[i] - t);
            }
        }
    }

    fn constraints(&self, w: &[f64], g: &mut [f64]) {
        self.eval_constraints(w, g, &mut Entries::default());
    }

    fn jacobian_structure(&self) -> (Vec<usize>, Vec<usize>) {
        (self.jac.rows.clone(), self.jac.cols.clone())
    }

    fn jacobian_values(&self, w: &[f64], values: &mut [f64]) {
        let mut g = vec![0.0; self.n_rows];
        let mut entries = Entries::default();
        self.eval_constraints(w, &mut g, &mut entries);
        self.jac.scatter(&entries.items, values);
    }

    fn hessian_structure(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        Some((self.hess.rows.clone(), self.hess.cols.clone()))
    }

    fn hessian_values(&self, w: &[f64], cost_factor: f64, multipliers: &[f64], values: &mut [f64]) {
        let mut entries = Entries::default();
        self.eval_hessian(w, cost_factor, multipliers, &mut entries);
        self.hess.scatter(&entries.items, values);
    }
}
