//! Linear inverted pendulum: a point mass at constant height whose horizontal
//! acceleration is `(g/h) (c - u)`, with `u` the center of pressure.
//!
//! Besides the dynamics this module carries the closed-form solution for a
//! constant input, the one-step capture point and a fixed-step RK4 integrator.
//! The last two are used as oracles for the optimizer output.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec2};

/// Default gravitational acceleration in m/s².
pub const DEFAULT_GRAVITY: f64 = 9.81;
/// Default CoM height in m.
pub const DEFAULT_HEIGHT: f64 = 0.6;
/// Default integration step of the oracle in s.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub gravity: f64,
    pub height: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            gravity: DEFAULT_GRAVITY,
            height: DEFAULT_HEIGHT,
        }
    }
}

impl PendulumParams {
    pub fn new(gravity: f64, height: f64) -> Result<Self> {
        let params = Self { gravity, height };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gravity must be positive, got {}",
                self.gravity
            )));
        }
        if !(self.height.is_finite() && self.height > 0.0) {
            return Err(Error::InvalidInput(format!(
                "height must be positive, got {}",
                self.height
            )));
        }
        Ok(())
    }

    /// `g/h`, the squared natural frequency of the pendulum.
    pub fn omega_sq(&self) -> f64 {
        self.gravity / self.height
    }

    /// `sqrt(g/h)`.
    pub fn omega(&self) -> f64 {
        self.omega_sq().sqrt()
    }
}

/// Horizontal CoM position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PendulumState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl PendulumState {
    pub fn new(position: Vec2, velocity: Vec2) -> Self {
        Self { position, velocity }
    }

    pub fn at_rest(position: Vec2) -> Self {
        Self::new(position, Vec2::zeros())
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite())
    }
}

/// CoM acceleration for the given state and center of pressure.
pub fn com_acceleration(state: &PendulumState, cop: &Vec2, params: &PendulumParams) -> Vec2 {
    (state.position - cop) * params.omega_sq()
}

/// Exact solution for a constant center of pressure `cop`, evaluated at `t`.
pub fn analytic_solution(x0: &PendulumState, cop: &Vec2, t: f64, params: &PendulumParams) -> PendulumState {
    let omega = params.omega();
    let grow = (omega * t).exp_m1();
    let decay = (-omega * t).exp_m1();
    let mut out = *x0;
    for axis in 0..2 {
        let offset = x0.position[axis] - cop[axis];
        let rate = x0.velocity[axis] / omega;
        let b1 = 0.5 * (offset + rate);
        let b2 = 0.5 * (offset - rate);
        // written relative to x0 so that t = 0 reproduces the initial state exactly
        out.position[axis] = x0.position[axis] + b1 * grow + b2 * decay;
        out.velocity[axis] = x0.velocity[axis] + omega * (b1 * grow - b2 * decay);
    }
    out
}

/// One-step capture point `c + ċ / ω`: the constant CoP that cancels the
/// diverging mode and brings the pendulum to rest.
pub fn capture_point(x0: &PendulumState, params: &PendulumParams) -> Vec2 {
    x0.position + x0.velocity / params.omega()
}

/// A state sample produced by [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub state: PendulumState,
}

/// RK4 integration with a CoP given as a function of time.
///
/// Samples are returned at multiples of `dt` plus a final sample at `duration`
/// when it is not a multiple of `dt`.
pub fn simulate<F>(x0: &PendulumState, cop: F, duration: f64, dt: f64, params: &PendulumParams) -> Result<Vec<Sample>>
where
    F: Fn(f64) -> Vec2,
{
    simulate_piecewise(x0, &[0.0, duration], |_, t| cop(t), dt, params)
}

/// RK4 integration with a CoP that is smooth inside each interval
/// `[breakpoints[k], breakpoints[k + 1]]`.
///
/// `cop(k, t)` is only queried with `t` inside interval `k` (both ends
/// included), so a discontinuous input is never smeared across a breakpoint.
/// Integration steps are cut at every breakpoint. The horizon is
/// `[breakpoints[0], breakpoints[last]]`.
pub fn simulate_piecewise<F>(
    x0: &PendulumState,
    breakpoints: &[f64],
    cop: F,
    dt: f64,
    params: &PendulumParams,
) -> Result<Vec<Sample>>
where
    F: Fn(usize, f64) -> Vec2,
{
    params.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "integration step must be positive, got {dt}"
        )));
    }
    if breakpoints.len() < 2 || breakpoints.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidInput(
            "breakpoints must be non-decreasing with at least two entries".into(),
        ));
    }
    let t0 = breakpoints[0];
    let t_end = *breakpoints.last().unwrap();

    let n_full = ((t_end - t0) / dt + 1e-9).floor() as usize;
    let mut sample_times: Vec<f64> = (1..=n_full).map(|i| (t0 + i as f64 * dt).min(t_end)).collect();
    match sample_times.last_mut() {
        Some(last) if (t_end - *last).abs() < 1e-9 => *last = t_end,
        _ => sample_times.push(t_end),
    }
    if t_end == t0 {
        sample_times.clear();
    }

    let omega_sq = params.omega_sq();
    let deriv = |c: &Vec2, v: &Vec2, u: &Vec2| (*v, (c - u) * omega_sq);

    let mut samples = Vec::with_capacity(sample_times.len() + 1);
    samples.push(Sample { time: t0, state: *x0 });
    let mut state = *x0;
    let mut t = t0;
    let mut segment = 0;
    for &sample_time in &sample_times {
        while t < sample_time {
            while segment + 2 < breakpoints.len() && breakpoints[segment + 1] <= t {
                segment += 1;
            }
            let seg_end = breakpoints[segment + 1];
            let t_next = if seg_end < sample_time - 1e-12 {
                seg_end
            } else {
                sample_time
            };
            let h = t_next - t;
            let u0 = cop(segment, t);
            let um = cop(segment, t + 0.5 * h);
            let u1 = cop(segment, t_next);
            if !(u0.iter().chain(um.iter()).chain(u1.iter()).all(|x| x.is_finite())) {
                return Err(Error::NonFinite(format!("center of pressure at t = {t}")));
            }
            let (k1c, k1v) = deriv(&state.position, &state.velocity, &u0);
            let (k2c, k2v) = deriv(
                &(state.position + k1c * (0.5 * h)),
                &(state.velocity + k1v * (0.5 * h)),
                &um,
            );
            let (k3c, k3v) = deriv(
                &(state.position + k2c * (0.5 * h)),
                &(state.velocity + k2v * (0.5 * h)),
                &um,
            );
            let (k4c, k4v) = deriv(&(state.position + k3c * h), &(state.velocity + k3v * h), &u1);
            state.position += (k1c + k2c * 2.0 + k3c * 2.0 + k4c) * (h / 6.0);
            state.velocity += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            t = t_next;
        }
        samples.push(Sample {
            time: sample_time,
            state,
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(h: f64) -> PendulumParams {
        PendulumParams::new(9.81, h).unwrap()
    }

    #[test]
    fn acceleration_examples() {
        let p = params(0.6);
        let s = PendulumState::at_rest(Vec2::new(0.3, -0.2));
        assert_eq!(com_acceleration(&s, &Vec2::new(0.3, -0.2), &p), Vec2::zeros());

        let s = PendulumState::at_rest(Vec2::new(0.1, 0.0));
        let a = com_acceleration(&s, &Vec2::zeros(), &p);
        assert_abs_diff_eq!(a.x, 1.635, epsilon = 1e-12);
        assert_eq!(a.y, 0.0);

        let p = params(0.58);
        let s = PendulumState::at_rest(Vec2::new(0.5, 0.2));
        let a = com_acceleration(&s, &Vec2::new(0.4, 0.25), &p);
        assert_abs_diff_eq!(a.x, 1.691_379_310_344_827_6, epsilon = 1e-12);
        assert_abs_diff_eq!(a.y, -0.845_689_655_172_413_8, epsilon = 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(PendulumParams::new(9.81, 0.0).is_err());
        assert!(PendulumParams::new(-1.0, 0.6).is_err());
        assert!(PendulumParams::new(f64::NAN, 0.6).is_err());
    }

    #[test]
    fn analytic_solution_examples() {
        let p = params(0.6);
        let x0 = PendulumState::new(Vec2::new(0.12, -0.3), Vec2::new(0.4, 0.7));
        assert_eq!(analytic_solution(&x0, &Vec2::new(1.0, 2.0), 0.0, &p), x0);

        let rest = PendulumState::at_rest(Vec2::new(0.2, 0.1));
        let out = analytic_solution(&rest, &Vec2::new(0.2, 0.1), 1.7, &p);
        assert_eq!(out, rest);

        let x0 = PendulumState::new(Vec2::zeros(), Vec2::new(1.0, 0.0));
        let alpha = (9.81f64 / 0.6).sqrt();
        assert_abs_diff_eq!(alpha, 4.043_513_323_831_146, epsilon = 1e-12);
        let expected = ((0.1 * alpha).exp() - (-0.1 * alpha).exp()) / (2.0 * alpha);
        let out = analytic_solution(&x0, &Vec2::zeros(), 0.1, &p);
        assert_abs_diff_eq!(out.position.x, expected, epsilon = 1e-15);
        assert_eq!(out.position.y, 0.0);
    }

    #[test]
    fn capture_point_examples() {
        let p = params(0.6);
        let s = PendulumState::at_rest(Vec2::new(0.4, -0.1));
        assert_eq!(capture_point(&s, &p), s.position);
        let s = PendulumState::new(Vec2::zeros(), Vec2::new(1.0, 0.0));
        let cp = capture_point(&s, &p);
        assert_abs_diff_eq!(cp.x, 0.247_309_683_414_748_96, epsilon = 1e-15);
        assert_eq!(cp.y, 0.0);
    }

    #[test]
    fn equilibrium_stays_put() {
        let p = params(0.6);
        let c = Vec2::new(0.3, 0.4);
        let out = simulate(&PendulumState::at_rest(c), |_| c, 0.73, 0.01, &p).unwrap();
        assert!(out.iter().all(|s| s.state == PendulumState::at_rest(c)));
        assert_abs_diff_eq!(out.last().unwrap().time, 0.73, epsilon = 1e-12);
        assert_eq!(out.len(), 73 + 1);
    }

    #[test]
    fn sample_grid_with_partial_step() {
        let p = params(0.6);
        let out = simulate(&PendulumState::default(), |_| Vec2::zeros(), 0.25, 0.1, &p).unwrap();
        let times: Vec<f64> = out.iter().map(|s| s.time).collect();
        assert_eq!(times.len(), 4);
        assert_abs_diff_eq!(times[2], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(times[3], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite_cop() {
        let p = params(0.6);
        let err = simulate(
            &PendulumState::default(),
            |t| {
                if t > 0.05 {
                    Vec2::new(f64::NAN, 0.0)
                } else {
                    Vec2::zeros()
                }
            },
            0.1,
            0.01,
            &p,
        );
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert!(simulate(&PendulumState::default(), |_| Vec2::zeros(), 0.1, 0.0, &p).is_err());
    }

    #[test]
    fn rk4_matches_closed_form() {
        let p = params(0.6);
        let x0 = PendulumState::new(Vec2::new(0.05, -0.02), Vec2::new(0.3, 0.1));
        let u0 = Vec2::new(0.01, 0.02);
        let out = simulate(&x0, |_| u0, 0.3, 1e-4, &p).unwrap();
        let exact = analytic_solution(&x0, &u0, 0.3, &p);
        let last = out.last().unwrap();
        assert_abs_diff_eq!(last.time, 0.3, epsilon = 1e-12);
        assert!((last.state.position - exact.position).norm() < 1e-8);
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let p = params(0.6);
        let x0 = PendulumState::new(Vec2::new(0.05, -0.02), Vec2::new(0.3, 0.1));
        let u0 = Vec2::new(0.01, 0.02);
        let max_err = |dt: f64| {
            simulate(&x0, |_| u0, 0.3, dt, &p)
                .unwrap()
                .iter()
                .map(|s| (s.state.position - analytic_solution(&x0, &u0, s.time, &p).position).norm())
                .fold(0.0, f64::max)
        };
        let coarse = max_err(0.02);
        let fine = max_err(0.01);
        assert!(coarse / fine >= 8.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn capture_point_brings_pendulum_to_rest() {
        let p = params(0.6);
        let x0 = PendulumState::new(Vec2::zeros(), Vec2::new(1.0, 0.0));
        let cp = capture_point(&x0, &p);
        let out = simulate(&x0, |_| cp, 5.0, 1e-3, &p).unwrap();
        assert!(out.last().unwrap().state.velocity.norm() < 1e-4);
        let out = simulate(&x0, |_| cp, 4.0, 1e-3, &p).unwrap();
        let last = out.last().unwrap().state;
        assert!(last.velocity.norm() < 1e-6);
        assert!((last.position - cp).norm() < 1e-6);
        for w in out.windows(2).skip(1) {
            assert!(w[1].state.velocity.norm() < w[0].state.velocity.norm());
        }
    }

    #[test]
    fn piecewise_input_is_not_smeared() {
        let p = params(0.6);
        let x0 = PendulumState::new(Vec2::new(0.0, 0.0), Vec2::new(0.2, 0.0));
        let u = [Vec2::new(-0.02, 0.0), Vec2::new(0.05, 0.01)];
        let out = simulate_piecewise(&x0, &[0.0, 0.137, 0.3], |k, _| u[k], 0.01, &p).unwrap();
        let mid = analytic_solution(&x0, &u[0], 0.137, &p);
        let exact = analytic_solution(&mid, &u[1], 0.3 - 0.137, &p);
        let aligned = (out.last().unwrap().state.position - exact.position).norm();
        let smeared = simulate(&x0, |t| if t < 0.137 { u[0] } else { u[1] }, 0.3, 0.01, &p).unwrap();
        let smeared = (smeared.last().unwrap().state.position - exact.position).norm();
        assert!(aligned < 1e-8, "{aligned}");
        assert!(smeared > 100.0 * aligned, "{smeared} vs {aligned}");
    }
}
