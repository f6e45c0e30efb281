//! Solves the four standard quadruped gaits over four steps and prints a
//! one-line summary for each.

use gaitopt::scenario::Scenario;
use gaitopt::{GaitKind, Vec2};

fn main() -> gaitopt::Result<()> {
    println!(
        "{:<6} {:>8} {:>6} {:>6} {:>6} {:>9} {:>10} {:>9}",
        "gait", "status", "iters", "vars", "rows", "time (s)", "margin (m)", "verified"
    );
    for kind in [GaitKind::Walk, GaitKind::Trot, GaitKind::Pace, GaitKind::Bound] {
        let dump = Scenario::standard(kind, 4, Vec2::new(0.2, 0.0)).solve()?;
        println!(
            "{:<6} {:>8} {:>6} {:>6} {:>6} {:>9.2} {:>10.2e} {:>9}",
            kind.to_string(),
            dump.status.to_string(),
            dump.iterations,
            dump.n_free_variables,
            dump.n_constraints,
            dump.wall_time,
            dump.report.min_boundary_distance,
            dump.report.passed()
        );
    }
    Ok(())
}
