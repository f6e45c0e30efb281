//! CoM motion as a spline of quartic polynomials in the ground plane.

use serde::{Deserialize, Serialize};

use crate::schedule::ContactSchedule;
use crate::{Error, Result, Vec2};

/// Position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SplinePoint {
    pub position: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
}

/// `a0 + a1 t + a2 t² + a3 t³ + a4 t⁴` in local time `t = time - start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarticPoly2D {
    pub coeffs: [Vec2; 5],
    pub start: f64,
    pub duration: f64,
}

impl QuarticPoly2D {
    pub fn new(coeffs: [Vec2; 5], start: f64, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "polynomial duration must be positive, got {duration}"
            )));
        }
        if coeffs.iter().any(|c| !(c.x.is_finite() && c.y.is_finite())) {
            return Err(Error::NonFinite("polynomial coefficient".into()));
        }
        Ok(Self {
            coeffs,
            start,
            duration,
        })
    }

    pub fn constant(position: Vec2, start: f64, duration: f64) -> Result<Self> {
        let z = Vec2::zeros();
        Self::new([position, z, z, z, z], start, duration)
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    /// Evaluates at local time `tau` (not clamped).
    pub fn eval_local(&self, tau: f64) -> SplinePoint {
        let a = &self.coeffs;
        let position = a[0] + (a[1] + (a[2] + (a[3] + a[4] * tau) * tau) * tau) * tau;
        let velocity = a[1] + (a[2] * 2.0 + (a[3] * 3.0 + a[4] * (4.0 * tau)) * tau) * tau;
        let acceleration = a[2] * 2.0 + (a[3] * 6.0 + a[4] * (12.0 * tau)) * tau;
        SplinePoint {
            position,
            velocity,
            acceleration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComSpline {
    polys: Vec<QuarticPoly2D>,
}

impl ComSpline {
    /// Polynomials must be contiguous and start at t = 0.
    pub fn new(polys: Vec<QuarticPoly2D>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::InvalidInput("spline needs at least one polynomial".into()));
        }
        if polys[0].start != 0.0 {
            return Err(Error::InvalidInput("spline must start at t = 0".into()));
        }
        for (k, w) in polys.windows(2).enumerate() {
            if (w[0].end() - w[1].start).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "gap between polynomials {k} and {}",
                    k + 1
                )));
            }
        }
        Ok(Self { polys })
    }

    pub fn polys(&self) -> &[QuarticPoly2D] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.polys.last().unwrap().end()
    }

    /// Index of the polynomial evaluated at `t`; the incoming one at junctions.
    pub fn poly_index(&self, t: f64) -> Result<usize> {
        let horizon = self.horizon();
        if !(t >= -1e-12 && t <= horizon + 1e-12) {
            return Err(Error::OutOfHorizon { t, horizon });
        }
        let idx = self.polys.partition_point(|p| p.start <= t);
        Ok(idx.saturating_sub(1))
    }

    pub fn eval(&self, t: f64) -> Result<SplinePoint> {
        let k = self.poly_index(t)?;
        let poly = &self.polys[k];
        Ok(poly.eval_local(t - poly.start))
    }

    /// Position and velocity mismatch at junction `j`, which joins polynomial
    /// `j - 1` (evaluated at its end) and polynomial `j` (at its start).
    pub fn continuity_residual(&self, junction: usize) -> Result<[f64; 4]> {
        if junction == 0 || junction >= self.polys.len() {
            return Err(Error::IndexOutOfRange {
                what: "junction",
                index: junction,
                len: self.polys.len(),
            });
        }
        let prev = &self.polys[junction - 1];
        let next = &self.polys[junction];
        let end = prev.eval_local(prev.duration);
        let dp = end.position - next.coeffs[0];
        let dv = end.velocity - next.coeffs[1];
        Ok([dp.x, dp.y, dv.x, dv.y])
    }
}

/// Junction times of the CoM spline and the phase each polynomial lies in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// `n_p + 1` increasing times from 0 to the horizon.
    pub times: Vec<f64>,
    /// Phase index of each polynomial.
    pub phase_of: Vec<usize>,
}

impl Segmentation {
    pub fn n_polys(&self) -> usize {
        self.phase_of.len()
    }

    pub fn duration(&self, k: usize) -> f64 {
        self.times[k + 1] - self.times[k]
    }

    pub fn max_duration(&self) -> f64 {
        (0..self.n_polys()).map(|k| self.duration(k)).fold(0.0, f64::max)
    }
}

/// Splits every phase uniformly into the fewest polynomials not longer than
/// `max_poly_duration`. Phase boundaries are always junctions.
pub fn build_segmentation(schedule: &ContactSchedule, max_poly_duration: f64) -> Result<Segmentation> {
    if !(max_poly_duration > 0.0 && max_poly_duration.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "max polynomial duration must be positive, got {max_poly_duration}"
        )));
    }
    let mut times = vec![0.0];
    let mut phase_of = Vec::new();
    for (i, phase) in schedule.phases().iter().enumerate() {
        let n = ((phase.duration / max_poly_duration) - 1e-9).ceil().max(1.0) as usize;
        let start = schedule.phase_start(i);
        let step = phase.duration / n as f64;
        for j in 1..n {
            times.push(start + j as f64 * step);
        }
        times.push(schedule.phase_end(i));
        phase_of.extend(std::iter::repeat_n(i, n));
    }
    Ok(Segmentation { times, phase_of })
}
