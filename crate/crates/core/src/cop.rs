//! Center of pressure as a convex combination of foot corners.
//!
//! Each load node holds one weight per (foot, vertex) pair over a time
//! interval. Weights are piecewise constant and right-continuous, and node
//! boundaries coincide with contact changes so a node never spans two phases.

use serde::{Deserialize, Serialize};

use crate::foot::{world_vertices, FootGeometry, FootPlan};
use crate::schedule::ContactSchedule;
use crate::{Error, Result, Vec2};

/// Offsets of each foot's first vertex in a flat per-node load vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexIndex {
    offsets: Vec<usize>,
}

impl VertexIndex {
    pub fn new(vertex_counts: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(vertex_counts.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &n in vertex_counts {
            acc += n;
            offsets.push(acc);
        }
        Self { offsets }
    }

    pub fn from_geometries(geometries: &[FootGeometry]) -> Self {
        let counts: Vec<usize> = geometries.iter().map(FootGeometry::n_vertices).collect();
        Self::new(&counts)
    }

    pub fn n_feet(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Total number of vertices over all feet.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self, foot: usize) -> std::ops::Range<usize> {
        self.offsets[foot]..self.offsets[foot + 1]
    }
}

/// Piecewise-constant vertex loads over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    /// Node boundaries, `n_nodes + 1` increasing values from 0 to the horizon.
    pub times: Vec<f64>,
    pub index: VertexIndex,
    /// One load vector per node, each of length `index.len()`.
    pub values: Vec<Vec<f64>>,
}

impl LoadProfile {
    pub fn new(times: Vec<f64>, index: VertexIndex, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("load node times must be increasing".into()));
        }
        if values.len() + 1 != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len() - 1,
                got: values.len(),
            });
        }
        for v in &values {
            if v.len() != index.len() {
                return Err(Error::DimensionMismatch {
                    expected: index.len(),
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("vertex load".into()));
            }
        }
        Ok(Self { times, index, values })
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Node whose interval contains `t`; the horizon maps to the last node.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let horizon = self.horizon();
        if !(t >= -1e-12 && t <= horizon + 1e-12) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        Ok(k.min(self.n_nodes() - 1))
    }

    pub fn at(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.values[self.node_index(t)?])
    }
}

/// Weighted sum of world vertices at fixed foot poses.
pub fn weighted_vertices(loads: &[f64], poses: &[(Vec2, f64)], geometries: &[&FootGeometry]) -> Vec2 {
    let mut u = Vec2::zeros();
    let mut j = 0;
    for ((p, alpha), g) in poses.iter().zip(geometries) {
        for v in world_vertices(p, *alpha, g) {
            u += v * loads[j];
            j += 1;
        }
    }
    u
}

/// Center of pressure `u(t) = Σ λ (p + R(α) p_v)`.
pub fn cop(loads: &LoadProfile, plan: &FootPlan, t: f64) -> Result<Vec2> {
    if loads.index.n_feet() != plan.n_feet() {
        return Err(Error::DimensionMismatch {
            expected: plan.n_feet(),
            got: loads.index.n_feet(),
        });
    }
    let lambda = loads.at(t)?;
    let poses: Vec<(Vec2, f64)> = plan.feet.iter().map(|f| f.pose(t)).collect();
    let geometries: Vec<&FootGeometry> = plan.feet.iter().map(|f| &f.geometry).collect();
    Ok(weighted_vertices(lambda, &poses, &geometries))
}

/// Convexity check of one load node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeConvexity {
    /// `Σ λ - 1`.
    pub sum_residual: f64,
    /// Largest amount by which an entry leaves `[0, c̄]`, zero when all are inside.
    pub bound_violation: f64,
}

/// Upper load bound of every vertex: 1 for feet in contact, 0 otherwise.
pub fn load_upper_bounds(flags: &[bool], index: &VertexIndex) -> Vec<f64> {
    let mut hi = vec![0.0; index.len()];
    for (f, &c) in flags.iter().enumerate() {
        if c {
            hi[index.range(f)].fill(1.0);
        }
    }
    hi
}

pub fn convexity_residuals(loads: &LoadProfile, schedule: &ContactSchedule) -> Result<Vec<NodeConvexity>> {
    if loads.index.n_feet() != schedule.n_feet() {
        return Err(Error::DimensionMismatch {
            expected: schedule.n_feet(),
            got: loads.index.n_feet(),
        });
    }
    loads
        .values
        .iter()
        .zip(&loads.times)
        .map(|(lambda, &t0)| {
            let hi = load_upper_bounds(schedule.contact_flags(t0)?, &loads.index);
            let sum: f64 = lambda.iter().sum();
            let bound_violation = lambda
                .iter()
                .zip(&hi)
                .map(|(&l, &h)| (-l).max(l - h).max(0.0))
                .fold(0.0, f64::max);
            Ok(NodeConvexity {
                sum_residual: sum - 1.0,
                bound_violation,
            })
        })
        .collect()
}

/// Equal share of load for every vertex of every foot in contact at `t`.
pub fn lambda_target(schedule: &ContactSchedule, geometries: &[FootGeometry], t: f64) -> Result<Vec<f64>> {
    let flags = schedule.contact_flags(t)?;
    let index = VertexIndex::from_geometries(geometries);
    target_from_flags(flags, &index)
}

pub fn target_from_flags(flags: &[bool], index: &VertexIndex) -> Result<Vec<f64>> {
    let n_active: usize = flags
        .iter()
        .enumerate()
        .filter(|(_, &c)| c)
        .map(|(f, _)| index.range(f).len())
        .sum();
    if n_active == 0 {
        return Err(Error::InvalidSchedule("no foot in contact".into()));
    }
    let mut target = load_upper_bounds(flags, index);
    let share = 1.0 / n_active as f64;
    target.iter_mut().for_each(|x| *x *= share);
    Ok(target)
}

/// Target loads for every node of a profile layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadTarget {
    pub values: Vec<Vec<f64>>,
}

impl LoadTarget {
    pub fn for_nodes(schedule: &ContactSchedule, geometries: &[FootGeometry], times: &[f64]) -> Result<Self> {
        let index = VertexIndex::from_geometries(geometries);
        let values = times[..times.len() - 1]
            .iter()
            .map(|&t| target_from_flags(schedule.contact_flags(t)?, &index))
            .collect::<Result<_>>()?;
        Ok(Self { values })
    }
}

/// `J = Σ ‖λ_i - λ*_i‖²` and its gradient `2(λ - λ*)`, flattened node by node.
pub fn robustness_cost(loads: &LoadProfile, target: &LoadTarget) -> Result<(f64, Vec<f64>)> {
    if loads.values.len() != target.values.len() {
        return Err(Error::DimensionMismatch {
            expected: target.values.len(),
            got: loads.values.len(),
        });
    }
    let mut cost = 0.0;
    let mut grad = Vec::with_capacity(loads.n_nodes() * loads.index.len());
    for (l, s) in loads.values.iter().zip(&target.values) {
        if l.len() != s.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                got: l.len(),
            });
        }
        for (a, b) in l.iter().zip(s) {
            let d = a - b;
            cost += d * d;
            grad.push(2.0 * d);
        }
    }
    Ok((cost, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foot::{stance_intervals, FootPlan};
    use crate::schedule::{build_gait, FootId, GaitKind, GaitTimings, Phase, QUADRUPED_FEET};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn standing_plan(geometries: Vec<FootGeometry>, positions: &[Vec2]) -> (ContactSchedule, FootPlan) {
        let labels: Vec<String> = (0..positions.len()).map(|i| format!("F{i}")).collect();
        let s = ContactSchedule::new(labels, vec![Phase::all_stance(1.0, positions.len())]).unwrap();
        let poses: Vec<Vec<(Vec2, f64)>> = positions.iter().map(|&p| vec![(p, 0.0)]).collect();
        let plan = FootPlan::from_schedule(&s, &geometries, &poses).unwrap();
        (s, plan)
    }

    fn single_node(index: VertexIndex, lambda: Vec<f64>) -> LoadProfile {
        LoadProfile::new(vec![0.0, 1.0], index, vec![lambda]).unwrap()
    }

    #[test]
    fn cop_examples() {
        let a = Vec2::new(0.3, 0.2);
        let b = Vec2::new(-0.3, -0.2);
        let (_, plan) = standing_plan(vec![FootGeometry::point(); 2], &[a, b]);
        let idx = VertexIndex::new(&[1, 1]);
        assert_eq!(cop(&single_node(idx.clone(), vec![1.0, 0.0]), &plan, 0.5).unwrap(), a);
        assert!((cop(&single_node(idx, vec![0.5, 0.5]), &plan, 0.5).unwrap() - (a + b) / 2.0).norm() < 1e-15);

        let sq = FootGeometry::square(0.05).unwrap();
        let r = Vec2::new(0.0, -0.12);
        let (_, plan) = standing_plan(vec![sq.clone(), sq.clone()], &[Vec2::new(0.0, 0.12), r]);
        let mut lambda = vec![0.0; 8];
        lambda[4] = 1.0;
        let u = cop(&single_node(VertexIndex::new(&[4, 4]), lambda), &plan, 0.3).unwrap();
        assert!((u - (r + sq.vertices()[0])).norm() < 1e-15);
    }

    #[test]
    fn node_lookup_is_right_continuous() {
        let p = LoadProfile::new(vec![0.0, 0.5, 1.0], VertexIndex::new(&[1]), vec![vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(p.node_index(0.0).unwrap(), 0);
        assert_eq!(p.node_index(0.5).unwrap(), 1);
        assert_eq!(p.node_index(1.0).unwrap(), 1);
        assert!(p.node_index(1.1).is_err());
        assert!(LoadProfile::new(vec![0.0, 1.0], VertexIndex::new(&[2]), vec![vec![1.0]]).is_err());
    }

    #[test]
    fn convexity_examples() {
        let s = build_gait(GaitKind::Trot, 2, &GaitTimings::default()).unwrap();
        let geometries = vec![FootGeometry::point(); 4];
        let times: Vec<f64> = (0..=s.phases().len())
            .map(|i| if i == 0 { 0.0 } else { s.phase_end(i - 1) })
            .collect();
        let target = LoadTarget::for_nodes(&s, &geometries, &times).unwrap();
        let idx = VertexIndex::new(&[1; 4]);
        let at_target = LoadProfile::new(times.clone(), idx.clone(), target.values.clone()).unwrap();
        for r in convexity_residuals(&at_target, &s).unwrap() {
            assert_abs_diff_eq!(r.sum_residual, 0.0, epsilon = 1e-15);
            assert_eq!(r.bound_violation, 0.0);
        }

        let mut loaded_swing = target.values.clone();
        let rf = s.foot_id("RF").unwrap().0;
        loaded_swing[1][rf] = 0.2;
        let p = LoadProfile::new(times.clone(), idx.clone(), loaded_swing).unwrap();
        assert_abs_diff_eq!(convexity_residuals(&p, &s).unwrap()[1].bound_violation, 0.2);

        let zeros = LoadProfile::new(times.clone(), idx, vec![vec![0.0; 4]; times.len() - 1]).unwrap();
        assert_eq!(convexity_residuals(&zeros, &s).unwrap()[0].sum_residual, -1.0);
    }

    #[test]
    fn target_examples() {
        let s = build_gait(GaitKind::Walk, 4, &GaitTimings::default()).unwrap();
        let points = vec![FootGeometry::point(); 4];
        assert_eq!(lambda_target(&s, &points, 0.0).unwrap(), vec![0.25; 4]);
        let swing = lambda_target(&s, &points, s.phase_start(1) + 0.01).unwrap();
        let lh = s.foot_id("LH").unwrap().0;
        for (f, &v) in swing.iter().enumerate() {
            assert_abs_diff_eq!(v, if f == lh { 0.0 } else { 1.0 / 3.0 });
        }
        let trot = build_gait(GaitKind::Trot, 2, &GaitTimings::default()).unwrap();
        let t = lambda_target(&trot, &points, trot.phase_start(1)).unwrap();
        assert_eq!(t.iter().filter(|&&x| x == 0.5).count(), 2);
        assert_eq!(QUADRUPED_FEET.len(), t.len());
    }

    #[test]
    fn cost_examples() {
        let idx = VertexIndex::new(&[1, 1]);
        let loads = single_node(idx, vec![1.0, 0.0]);
        let target = LoadTarget {
            values: vec![vec![0.5, 0.5]],
        };
        let (c, g) = robustness_cost(&loads, &target).unwrap();
        assert_abs_diff_eq!(c, 0.5);
        assert_eq!(g, vec![1.0, -1.0]);
        let (c0, g0) = robustness_cost(&single_node(VertexIndex::new(&[1, 1]), vec![0.5, 0.5]), &target).unwrap();
        assert_eq!((c0, g0), (0.0, vec![0.0, 0.0]));
        let (c2, _) = robustness_cost(&single_node(VertexIndex::new(&[1, 1]), vec![1.5, -0.5]), &target).unwrap();
        assert_abs_diff_eq!(c2, 4.0 * c, epsilon = 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let idx = VertexIndex::new(&[4, 4]);
        let base: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 - 0.2).collect();
        let target = LoadTarget {
            values: vec![vec![0.125; 8]],
        };
        let (_, g) = robustness_cost(&single_node(idx.clone(), base.clone()), &target).unwrap();
        let h = 1e-6;
        for j in 0..8 {
            let mut hi = base.clone();
            let mut lo = base.clone();
            hi[j] += h;
            lo[j] -= h;
            let fd = (robustness_cost(&single_node(idx.clone(), hi), &target).unwrap().0
                - robustness_cost(&single_node(idx.clone(), lo), &target).unwrap().0)
                / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-7 * g[j].abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn cop_is_affine_in_loads(
            a in 0.0f64..1.0,
            l1 in proptest::collection::vec(0.0f64..1.0, 8),
            l2 in proptest::collection::vec(0.0f64..1.0, 8),
            alpha in -1.0f64..1.0,
        ) {
            let sq = FootGeometry::square(0.05).unwrap();
            let s = ContactSchedule::from_labels(&["L", "R"], vec![Phase::all_stance(1.0, 2)]).unwrap();
            let poses = vec![vec![(Vec2::new(0.1, 0.1), alpha)], vec![(Vec2::new(-0.1, -0.2), -alpha)]];
            let plan = FootPlan::from_schedule(&s, &[sq.clone(), sq], &poses).unwrap();
            let normalize = |v: Vec<f64>| { let s: f64 = v.iter().sum::<f64>().max(1e-9); v.into_iter().map(|x| x / s).collect::<Vec<_>>() };
            let (l1, l2) = (normalize(l1), normalize(l2));
            let mix: Vec<f64> = l1.iter().zip(&l2).map(|(x, y)| a * x + (1.0 - a) * y).collect();
            let idx = VertexIndex::new(&[4, 4]);
            let u1 = cop(&single_node(idx.clone(), l1), &plan, 0.5).unwrap();
            let u2 = cop(&single_node(idx.clone(), l2), &plan, 0.5).unwrap();
            let um = cop(&single_node(idx, mix), &plan, 0.5).unwrap();
            prop_assert!((um - (u1 * a + u2 * (1.0 - a))).norm() < 1e-12);
            prop_assert_eq!(stance_intervals(&s, FootId(0)).unwrap().len(), 1);
        }
    }
}
