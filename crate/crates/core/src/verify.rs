//! Independent checks of a solved motion.
//!
//! Everything here works from the decoded plan, the contact schedule and the
//! pendulum model alone: support polygons are rebuilt geometrically, the
//! dynamics are re-integrated numerically and the range of motion is sampled
//! densely.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::foot::world_vertices;
use crate::lip::{simulate_piecewise, PendulumParams, PendulumState};
use crate::plan::MotionPlan;
use crate::schedule::ContactSchedule;
use crate::solver::Nlp;
use crate::{Error, Result, Vec2};

fn cross(o: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull in counter-clockwise order with collinear points removed.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-12);
    if pts.len() <= 2 {
        return pts;
    }
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let eps = 1e-14 * scale * scale;
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    if hull.len() == 2 && (hull[0] - hull[1]).norm() < 1e-12 {
        hull.pop();
    }
    hull
}

fn segment_distance(u: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    if len_sq == 0.0 {
        return (u - a).norm();
    }
    let s = ((u - a).dot(&ab) / len_sq).clamp(0.0, 1.0);
    (u - (a + ab * s)).norm()
}

/// Signed distance from `u` to the boundary of the convex hull of `points`,
/// negative inside.
///
/// A single point or a set of collinear points has no interior, so the
/// result is the plain distance to the point or segment.
pub fn hull_containment(u: &Vec2, points: &[Vec2]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidInput("hull of an empty point set".into()));
    }
    let hull = convex_hull(points);
    match hull.len() {
        1 => Ok((u - hull[0]).norm()),
        2 => Ok(segment_distance(u, &hull[0], &hull[1])),
        n => {
            let mut inside = true;
            let mut dist = f64::INFINITY;
            for i in 0..n {
                let (a, b) = (&hull[i], &hull[(i + 1) % n]);
                if cross(a, b, u) < 0.0 {
                    inside = false;
                }
                dist = dist.min(segment_distance(u, a, b));
            }
            Ok(if inside { -dist } else { dist })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub sample_dt: f64,
    pub integration_dt: f64,
    pub hull: f64,
    pub range_of_motion: f64,
    pub terminal_position: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sample_dt: 5e-3,
            integration_dt: 1e-3,
            hull: 1e-6,
            range_of_motion: 1e-6,
            terminal_position: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Largest distance of the CoP outside its support polygon.
    pub max_hull_violation: f64,
    pub terminal_position_error: f64,
    pub terminal_velocity_error: f64,
    /// Largest mismatch when each polynomial is integrated on its own from the spline state.
    pub max_segment_defect: f64,
    pub max_rom_violation: f64,
    /// Smallest distance of the CoP to the support boundary, positive inside.
    pub min_boundary_distance: f64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// What the verifier needs besides the plan itself.
#[derive(Debug, Clone, Copy)]
pub struct VerifyInput<'a> {
    pub plan: &'a MotionPlan,
    pub schedule: &'a ContactSchedule,
    pub params: &'a PendulumParams,
    pub nominal_offsets: &'a [Vec2],
    pub range_of_motion: Option<Vec2>,
}

fn sample_times(horizon: f64, dt: f64) -> Vec<f64> {
    let n = (horizon / dt + 1e-9).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|i| (i as f64 * dt).min(horizon)).collect();
    if horizon - ts[n] > 1e-12 {
        ts.push(horizon);
    } else {
        ts[n] = horizon;
    }
    ts
}

/// CoP from the loads of node `node` and the foot poses at `t`.
fn cop_at(plan: &MotionPlan, node: usize, t: f64) -> Vec2 {
    let lambda = &plan.loads.values[node];
    let mut u = Vec2::zeros();
    for (f, traj) in plan.feet.feet.iter().enumerate() {
        let (p, alpha) = traj.pose(t);
        for (j, v) in plan.loads.index.range(f).zip(world_vertices(&p, alpha, &traj.geometry)) {
            u += v * lambda[j];
        }
    }
    u
}

pub fn check_solution(input: &VerifyInput, tol: &Tolerances) -> Result<VerificationReport> {
    let VerifyInput {
        plan,
        schedule,
        params,
        nominal_offsets,
        range_of_motion,
    } = *input;
    let horizon = plan.horizon();
    if (horizon - schedule.horizon()).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "plan horizon {horizon} does not match schedule horizon {}",
            schedule.horizon()
        )));
    }
    if plan.feet.n_feet() != schedule.n_feet() || nominal_offsets.len() != schedule.n_feet() {
        return Err(Error::DimensionMismatch {
            expected: schedule.n_feet(),
            got: plan.feet.n_feet(),
        });
    }

    let mut max_hull = 0.0_f64;
    let mut min_boundary = f64::INFINITY;
    let mut max_rom = 0.0_f64;
    for t in sample_times(horizon, tol.sample_dt) {
        let flags = schedule.contact_flags(t)?;
        let node = plan.loads.node_index(t)?;
        let u = cop_at(plan, node, t);
        let mut support = Vec::new();
        for (f, traj) in plan.feet.feet.iter().enumerate() {
            if flags[f] {
                let (p, alpha) = traj.pose(t);
                support.extend(world_vertices(&p, alpha, &traj.geometry));
            }
        }
        let d = hull_containment(&u, &support)?;
        max_hull = max_hull.max(d);
        min_boundary = min_boundary.min(-d);

        if let Some(r) = range_of_motion {
            let c = plan.spline.eval(t)?.position;
            for (f, traj) in plan.feet.feet.iter().enumerate() {
                let rel = traj.pose(t).0 - c - nominal_offsets[f];
                max_rom = max_rom.max(rel.x.abs() - r.x).max(rel.y.abs() - r.y);
            }
        }
    }

    let times = &plan.loads.times;
    let start = plan.spline.eval(0.0)?;
    let x0 = PendulumState::new(start.position, start.velocity);
    let traj = simulate_piecewise(&x0, times, |k, t| cop_at(plan, k, t), tol.integration_dt, params)?;
    let end_sim = traj.last().unwrap().state;
    let end = plan.spline.eval(horizon)?;
    let terminal_position_error = (end_sim.position - end.position).norm();
    let terminal_velocity_error = (end_sim.velocity - end.velocity).norm();

    let mut max_segment_defect = 0.0_f64;
    for (k, poly) in plan.spline.polys().iter().enumerate() {
        let s0 = poly.eval_local(0.0);
        let s1 = poly.eval_local(poly.duration);
        let x = PendulumState::new(s0.position, s0.velocity);
        let bp = [times[k], times[k + 1]];
        let seg = simulate_piecewise(&x, &bp, |_, t| cop_at(plan, k, t), tol.integration_dt, params)?;
        let e = seg.last().unwrap().state;
        max_segment_defect = max_segment_defect.max((e.position - s1.position).norm());
    }

    let mut checks = vec![
        Check {
            name: "support_hull".into(),
            value: max_hull,
            tolerance: tol.hull,
            passed: max_hull <= tol.hull,
        },
        Check {
            name: "terminal_integration".into(),
            value: terminal_position_error,
            tolerance: tol.terminal_position,
            passed: terminal_position_error <= tol.terminal_position,
        },
    ];
    if range_of_motion.is_some() {
        checks.push(Check {
            name: "range_of_motion".into(),
            value: max_rom,
            tolerance: tol.range_of_motion,
            passed: max_rom <= tol.range_of_motion,
        });
    }
    Ok(VerificationReport {
        max_hull_violation: max_hull,
        terminal_position_error,
        terminal_velocity_error,
        max_segment_defect,
        max_rom_violation: max_rom.max(0.0),
        min_boundary_distance: min_boundary,
        checks,
    })
}

/// Central-difference check of one group of constraint rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub name: String,
    /// Largest `|fd - analytic| / max(1, |analytic|)` over the block.
    pub max_rel_error: f64,
}

/// Compares the analytic Jacobian of `nlp` against central differences, per
/// named row range, and the cost gradient as a final entry named `cost`.
pub fn finite_diff_jacobian<P: Nlp + ?Sized>(
    nlp: &P,
    w: &[f64],
    step: f64,
    blocks: &[(String, Range<usize>)],
) -> Result<Vec<DerivativeCheck>> {
    let n = nlp.n_variables();
    let m = nlp.n_constraints();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.len(),
        });
    }
    if !(step > 0.0) {
        return Err(Error::InvalidInput("finite difference step must be positive".into()));
    }
    let (rows, cols) = nlp.jacobian_structure();
    let mut vals = vec![0.0; rows.len()];
    nlp.jacobian_values(w, &mut vals);
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for ((&r, &c), &v) in rows.iter().zip(&cols).zip(&vals) {
        by_col[c].push((r, v));
    }
    let mut grad = vec![0.0; n];
    nlp.cost_gradient(w, &mut grad);

    let mut row_err = vec![0.0_f64; m];
    let mut cost_err = 0.0_f64;
    let mut wp = w.to_vec();
    let (mut gp, mut gm) = (vec![0.0; m], vec![0.0; m]);
    let mut analytic = vec![0.0; m];
    for j in 0..n {
        wp[j] = w[j] + step;
        nlp.constraints(&wp, &mut gp);
        let fp = nlp.cost(&wp);
        wp[j] = w[j] - step;
        nlp.constraints(&wp, &mut gm);
        let fm = nlp.cost(&wp);
        wp[j] = w[j];
        analytic.fill(0.0);
        for &(r, v) in &by_col[j] {
            analytic[r] += v;
        }
        for i in 0..m {
            let fd = (gp[i] - gm[i]) / (2.0 * step);
            row_err[i] = row_err[i].max((fd - analytic[i]).abs() / analytic[i].abs().max(1.0));
        }
        let fd = (fp - fm) / (2.0 * step);
        cost_err = cost_err.max((fd - grad[j]).abs() / grad[j].abs().max(1.0));
    }
    let mut out: Vec<DerivativeCheck> = blocks
        .iter()
        .map(|(name, range)| DerivativeCheck {
            name: name.clone(),
            max_rel_error: row_err[range.clone()].iter().copied().fold(0.0, f64::max),
        })
        .collect();
    out.push(DerivativeCheck {
        name: "cost".into(),
        max_rel_error: cost_err,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn hull_examples() {
        let p = v(0.3, -0.2);
        assert_eq!(hull_containment(&p, &[p]).unwrap(), 0.0);
        let (a, b) = (v(0.0, 0.0), v(1.0, 0.0));
        assert_abs_diff_eq!(hull_containment(&v(0.5, 0.0), &[a, b]).unwrap(), 0.0);
        assert_abs_diff_eq!(hull_containment(&v(0.5, 0.03), &[a, b]).unwrap(), 0.03, epsilon = 1e-15);
        let square = [v(0.0, 0.0), v(1.0, 0.0), v(1.0, 1.0), v(0.0, 1.0)];
        assert_abs_diff_eq!(hull_containment(&v(0.5, 0.5), &square).unwrap(), -0.5);
        assert_abs_diff_eq!(hull_containment(&v(2.0, 0.5), &square).unwrap(), 1.0);
        assert!(hull_containment(&p, &[]).is_err());
    }

    #[test]
    fn collinear_and_duplicate_points_reduce_to_a_segment() {
        let pts = [v(0.0, 0.0), v(0.5, 0.5), v(1.0, 1.0), v(1.0, 1.0), v(0.25, 0.25)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 2);
        let d = hull_containment(&v(2.0, 2.0), &pts).unwrap();
        assert_abs_diff_eq!(d, 2f64.sqrt(), epsilon = 1e-14);
    }

    /// Signed distance of `u` to a convex polygon given in counter-clockwise
    /// order, from the edge half-planes without building a hull.
    fn half_plane_distance(u: &Vec2, poly: &[Vec2]) -> f64 {
        let n = poly.len();
        let mut inside = true;
        let mut line = f64::INFINITY;
        let mut seg = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let e = b - a;
            let normal = v(e.y, -e.x) / e.norm();
            let outward = (u - a).dot(&normal);
            if outward > 0.0 {
                inside = false;
            }
            line = line.min(-outward);
            seg = seg.min(segment_distance(u, &a, &b));
        }
        if inside {
            -line
        } else {
            seg
        }
    }

    #[test]
    fn hull_matches_half_plane_brute_force() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(3..9);
            let cx = rng.gen_range(-1.0..1.0);
            let cy = rng.gen_range(-1.0..1.0);
            let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            if angles.len() < 3 {
                continue;
            }
            let r = rng.gen_range(0.05..1.0);
            let poly: Vec<Vec2> = angles.iter().map(|a| v(cx + r * a.cos(), cy + r * a.sin())).collect();
            let mut cloud = poly.clone();
            cloud.push(poly.iter().sum::<Vec2>() / poly.len() as f64);
            cloud.shuffle(&mut rng);
            let u = v(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let d = hull_containment(&u, &cloud).unwrap();
            let brute = half_plane_distance(&u, &poly);
            assert!((d - brute).abs() < 1e-12, "{d} vs {brute} for {u:?} in {poly:?}");
        }
    }
}
