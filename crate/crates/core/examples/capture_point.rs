//! Solves the one-foothold stopping problem as an NLP and compares the
//! foothold with the closed-form capture point.

use gaitopt::lip::{capture_point, simulate};
use gaitopt::nlp::solve_gait;
use gaitopt::{PendulumParams, PendulumState, ProblemConfig, SolverOptions, Vec2};

fn main() -> gaitopt::Result<()> {
    let params = PendulumParams::new(9.81, 0.6)?;
    let x0 = PendulumState::new(Vec2::new(0.0, 0.0), Vec2::new(0.6, -0.3));

    let config = ProblemConfig::capture_point(params, x0, 2.0, 0.05)?;
    let gs = solve_gait(&config, &SolverOptions::default())?;
    let plan = gs.problem.decode(&gs.solution.w)?;
    let u = plan.cop(0.0)?;
    let closed = capture_point(&x0, &params);

    println!("status          {}", gs.solution.status);
    println!("NLP foothold    ({:.6}, {:.6})", u.x, u.y);
    println!("capture point   ({:.6}, {:.6})", closed.x, closed.y);
    println!("difference      {:.2e} m", (u - closed).norm());

    let traj = simulate(&x0, |_| closed, 3.0, 1e-3, &params)?;
    let end = traj.last().unwrap().state;
    println!(
        "after 3 s       position ({:.4}, {:.4}), speed {:.2e} m/s",
        end.position.x,
        end.position.y,
        end.velocity.norm()
    );
    Ok(())
}
