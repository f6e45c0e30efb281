//! A biped with square soles walks forward; the foot orientation is free, so
//! each stance also carries a yaw variable.

use std::path::Path;

use gaitopt::scenario::Scenario;

fn main() -> gaitopt::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/biped_walk.toml");
    let dump = Scenario::load(&path)?.solve()?;
    println!("{}", dump.summary());
    for (label, traj) in dump.scenario.schedule()?.feet().iter().zip(&dump.plan.feet.feet) {
        let steps: Vec<String> = traj
            .stances
            .iter()
            .map(|s| {
                format!(
                    "({:.3}, {:.3}, {:+.1} deg)",
                    s.position.x,
                    s.position.y,
                    s.orientation.to_degrees()
                )
            })
            .collect();
        println!("{label}: {}", steps.join(" -> "));
    }
    Ok(())
}
