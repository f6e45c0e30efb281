use serde::{Deserialize, Serialize};

use crate::foot::{stance_intervals, FootGeometry};
use crate::schedule::{ContactSchedule, FootId};
use crate::spline::Segmentation;
use crate::Result;

/// One load variable: vertex `vertex` of foot `foot` at some node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSlot {
    pub foot: usize,
    pub vertex: usize,
    pub var: usize,
}

/// Index map of the decision vector `w = (spline coefficients, footholds, loads)`.
///
/// Spline coefficients come first, ten per polynomial ordered as
/// `(a0x, a0y, a1x, a1y, ..., a4y)`. Each stance then contributes `x, y` and an
/// orientation when the foot has more than one vertex. Loads exist only for
/// feet in contact at a node; a swinging foot carries none by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionLayout {
    pub n_polys: usize,
    /// First variable of every stance, per foot.
    pub stances: Vec<Vec<usize>>,
    pub oriented: Vec<bool>,
    /// Load variables per node.
    pub loads: Vec<Vec<LoadSlot>>,
    pub n_vars: usize,
}

impl DecisionLayout {
    pub fn new(schedule: &ContactSchedule, segmentation: &Segmentation, geometries: &[FootGeometry]) -> Result<Self> {
        let n_polys = segmentation.n_polys();
        let mut next = 10 * n_polys;
        let mut stances = Vec::with_capacity(schedule.n_feet());
        let oriented: Vec<bool> = geometries.iter().map(FootGeometry::has_orientation).collect();
        for (f, &o) in oriented.iter().enumerate() {
            let n = stance_intervals(schedule, FootId(f))?.len();
            let width = if o { 3 } else { 2 };
            stances.push((0..n).map(|s| next + width * s).collect());
            next += width * n;
        }
        let mut loads = Vec::with_capacity(n_polys);
        for k in 0..n_polys {
            let flags = &schedule.phases()[segmentation.phase_of[k]].contact;
            let mut node = Vec::new();
            for (foot, g) in geometries.iter().enumerate() {
                if flags[foot] {
                    for vertex in 0..g.n_vertices() {
                        node.push(LoadSlot {
                            foot,
                            vertex,
                            var: next,
                        });
                        next += 1;
                    }
                }
            }
            loads.push(node);
        }
        Ok(Self {
            n_polys,
            stances,
            oriented,
            loads,
            n_vars: next,
        })
    }

    /// Coefficient `a_{k,i}` along `axis`.
    pub fn coeff(&self, k: usize, i: usize, axis: usize) -> usize {
        10 * k + 2 * i + axis
    }

    pub fn stance_x(&self, foot: usize, s: usize) -> usize {
        self.stances[foot][s]
    }

    pub fn stance_orientation(&self, foot: usize, s: usize) -> Option<usize> {
        self.oriented[foot].then(|| self.stances[foot][s] + 2)
    }

    pub fn n_com_vars(&self) -> usize {
        10 * self.n_polys
    }

    pub fn n_foot_vars(&self) -> usize {
        self.stances
            .iter()
            .zip(&self.oriented)
            .map(|(s, &o)| s.len() * if o { 3 } else { 2 })
            .sum()
    }

    pub fn n_load_vars(&self) -> usize {
        self.loads.iter().map(Vec::len).sum()
    }

    pub fn com_range(&self) -> std::ops::Range<usize> {
        0..self.n_com_vars()
    }

    pub fn foot_range(&self) -> std::ops::Range<usize> {
        let start = self.n_com_vars();
        start..start + self.n_foot_vars()
    }

    pub fn load_range(&self) -> std::ops::Range<usize> {
        let start = self.n_com_vars() + self.n_foot_vars();
        start..self.n_vars
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{build_gait, GaitKind, GaitTimings};
    use crate::spline::build_segmentation;

    #[test]
    fn ranges_are_disjoint_and_contiguous() {
        let s = build_gait(GaitKind::Trot, 4, &GaitTimings::default()).unwrap();
        let seg = build_segmentation(&s, 0.05).unwrap();
        let geoms = vec![FootGeometry::point(); 4];
        let l = DecisionLayout::new(&s, &seg, &geoms).unwrap();
        assert_eq!(l.com_range().end, l.foot_range().start);
        assert_eq!(l.foot_range().end, l.load_range().start);
        assert_eq!(l.load_range().end, l.n_vars);
        assert_eq!(l.n_foot_vars(), 4 * 3 * 2);
        let mut seen = vec![false; l.n_vars];
        for node in &l.loads {
            for slot in node {
                assert!(!seen[slot.var]);
                seen[slot.var] = true;
            }
        }
        assert!(seen[l.load_range()].iter().all(|&b| b));
        assert_eq!(l, DecisionLayout::new(&s, &seg, &geoms).unwrap());
    }

    #[test]
    fn oriented_feet_get_a_third_variable() {
        let s = build_gait(GaitKind::BipedWalk, 2, &GaitTimings::default()).unwrap();
        let seg = build_segmentation(&s, 0.05).unwrap();
        let sq = FootGeometry::square(0.05).unwrap();
        let l = DecisionLayout::new(&s, &seg, &[sq.clone(), sq]).unwrap();
        assert_eq!(l.stance_orientation(0, 0), Some(l.stance_x(0, 0) + 2));
        assert_eq!(l.n_foot_vars(), 2 * 2 * 3);
        let n_all_stance = l.loads.iter().filter(|n| n.len() == 8).count();
        assert!(n_all_stance > 0 && l.loads.iter().all(|n| n.len() == 8 || n.len() == 4));
    }
}
