//! Two trot steps followed by four walk steps in one optimization: the
//! schedules are concatenated and solved as a single problem.

use gaitopt::nlp::solve_gait;
use gaitopt::scenario::{reference_timings, Scenario};
use gaitopt::schedule::concat;
use gaitopt::verify::{check_solution, Tolerances, VerifyInput};
use gaitopt::{build_gait, GaitKind, GaitTimings, SolverOptions, Vec2};

fn main() -> gaitopt::Result<()> {
    let trot = build_gait(
        GaitKind::Trot,
        2,
        &GaitTimings {
            lead_out: 0.1,
            ..reference_timings(GaitKind::Trot, 2)
        },
    )?;
    let walk = build_gait(
        GaitKind::Walk,
        4,
        &GaitTimings {
            lead_in: 0.1,
            ..reference_timings(GaitKind::Walk, 4)
        },
    )?;
    let schedule = concat(&trot, &walk)?;

    let mut config = Scenario::standard(GaitKind::Walk, 4, Vec2::new(0.3, 0.0)).problem_config()?;
    config.schedule = schedule;
    config.max_poly_duration = 0.05;

    let gs = solve_gait(&config, &SolverOptions::default())?;
    let plan = gs.problem.decode(&gs.solution.w)?;
    let report = check_solution(
        &VerifyInput {
            plan: &plan,
            schedule: &config.schedule,
            params: &config.params,
            nominal_offsets: &config.nominal_offsets,
            range_of_motion: config.range_of_motion,
        },
        &Tolerances::default(),
    )?;
    println!("phases      {}", config.schedule.phases().len());
    println!("horizon     {:.2} s", config.schedule.horizon());
    println!(
        "status      {} after {} iterations",
        gs.solution.status, gs.total_iterations
    );
    for c in &report.checks {
        println!(
            "{:<22} {:.2e} ({})",
            c.name,
            c.value,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
