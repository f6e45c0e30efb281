//! A quadruped standing still is pushed; with the final position left free,
//! the optimizer picks footholds that bring it to rest.

use std::path::Path;

use gaitopt::lip::capture_point;
use gaitopt::scenario::Scenario;
use gaitopt::{PendulumParams, PendulumState};

fn main() -> gaitopt::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/push_recovery.toml");
    let scenario = Scenario::load(&path)?;
    let dump = scenario.solve()?;

    let params = PendulumParams::new(scenario.robot.gravity, scenario.robot.height)?;
    let pushed = PendulumState::new(scenario.initial.position, scenario.initial.velocity);
    let cp = capture_point(&pushed, &params);
    let end = dump.plan.com(dump.plan.horizon())?;

    println!("status             {}", dump.status);
    println!(
        "push velocity      ({:.2}, {:.2}) m/s",
        pushed.velocity.x, pushed.velocity.y
    );
    println!("capture point      ({:.3}, {:.3})", cp.x, cp.y);
    println!("final CoM          ({:.3}, {:.3})", end.position.x, end.position.y);
    println!("final speed        {:.1e} m/s", end.velocity.norm());
    Ok(())
}
