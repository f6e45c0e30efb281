//! RK4 rollout of the pendulum against its exact solution, and the step size
//! at which the integrator stops mattering.

use gaitopt::lip::{analytic_solution, simulate};
use gaitopt::{PendulumParams, PendulumState, Vec2};

fn main() -> gaitopt::Result<()> {
    let params = PendulumParams::new(9.81, 0.6)?;
    let x0 = PendulumState::new(Vec2::new(0.05, -0.02), Vec2::new(0.1, 0.2));
    let cop = Vec2::new(0.02, 0.01);
    let horizon = 1.0;
    let exact = analytic_solution(&x0, &cop, horizon, &params);

    println!("omega = {:.4} 1/s", params.omega());
    println!("{:>8} {:>12}", "dt", "error (m)");
    for dt in [0.02, 0.01, 0.005, 0.0025, 0.001] {
        let end = simulate(&x0, |_| cop, horizon, dt, &params)?.last().unwrap().state;
        println!("{dt:>8} {:>12.3e}", (end.position - exact.position).norm());
    }
    Ok(())
}
