//! Trajectory CSV, solution JSON, SVG plot and the run summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::foot::world_vertices;
use crate::plan::MotionPlan;
use crate::scenario::Scenario;
use crate::schedule::ContactSchedule;
use crate::solver::Status;
use crate::verify::{check_solution, convex_hull, Tolerances, VerificationReport, VerifyInput};
use crate::{Error, Result, Vec2};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SOLUTION_FILE: &str = "solution.json";
pub const PLOT_FILE: &str = "plot.svg";

/// Uniformly sampled trajectory with one named column per quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDump {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TrajectoryDump {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(&self.header).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
        let header = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record.map_err(csv_error)?;
            let row = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("bad number '{s}': {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}

/// Sample times `0, dt, 2dt, ...` up to the horizon.
pub fn sample_times(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput("sample interval must be positive".into()));
    }
    let n = (horizon / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| (i as f64 * dt).min(horizon)).collect())
}

/// Samples CoM state, CoP, foot poses with contact flags, and the vertex
/// loads of the active node.
pub fn sample_trajectory(plan: &MotionPlan, schedule: &ContactSchedule, dt: f64) -> Result<TrajectoryDump> {
    let mut header: Vec<String> = [
        "t", "com_x", "com_y", "com_vx", "com_vy", "com_ax", "com_ay", "cop_x", "cop_y",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for label in schedule.feet() {
        for q in ["x", "y", "yaw", "contact"] {
            header.push(format!("{label}_{q}"));
        }
    }
    for (f, label) in schedule.feet().iter().enumerate() {
        for v in 0..plan.loads.index.range(f).len() {
            header.push(format!("lambda_{label}_{v}"));
        }
    }
    let mut rows = Vec::new();
    for t in sample_times(plan.horizon(), dt)? {
        let c = plan.com(t)?;
        let u = plan.cop(t)?;
        let mut row = vec![
            t,
            c.position.x,
            c.position.y,
            c.velocity.x,
            c.velocity.y,
            c.acceleration.x,
            c.acceleration.y,
            u.x,
            u.y,
        ];
        let flags = schedule.contact_flags(t)?;
        for (traj, &on) in plan.feet.feet.iter().zip(flags) {
            let (p, alpha) = traj.pose(t);
            row.extend([p.x, p.y, alpha, if on { 1.0 } else { 0.0 }]);
        }
        row.extend_from_slice(plan.loads.at(t)?);
        rows.push(row);
    }
    Ok(TrajectoryDump { header, rows })
}

/// Everything needed to inspect or re-verify a run without re-solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDump {
    pub scenario: Scenario,
    pub status: Status,
    pub cost: f64,
    pub constraint_violation: f64,
    pub optimality: f64,
    pub iterations: usize,
    pub refinements: usize,
    pub wall_time: f64,
    pub n_variables: usize,
    pub n_free_variables: usize,
    pub n_constraints: usize,
    pub w: Vec<f64>,
    pub plan: MotionPlan,
    pub report: VerificationReport,
}

impl SolutionDump {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    /// Verifies the stored plan again from the stored scenario.
    pub fn reverify(&self, tol: &Tolerances) -> Result<VerificationReport> {
        let config = self.scenario.problem_config()?;
        check_solution(
            &VerifyInput {
                plan: &self.plan,
                schedule: &config.schedule,
                params: &config.params,
                nominal_offsets: &config.nominal_offsets,
                range_of_motion: config.range_of_motion,
            },
            tol,
        )
    }

    pub fn summary(&self) -> String {
        let horizon = self.plan.horizon();
        let mut s = String::new();
        let _ = writeln!(s, "scenario     {}", self.scenario.name);
        let _ = writeln!(s, "status       {}", self.status);
        let _ = writeln!(s, "horizon      {horizon:.3} s");
        let _ = writeln!(s, "variables    {} ({} free)", self.n_variables, self.n_free_variables);
        let _ = writeln!(s, "constraints  {}", self.n_constraints);
        let _ = writeln!(
            s,
            "iterations   {} ({} refinement{})",
            self.iterations,
            self.refinements,
            if self.refinements == 1 { "" } else { "s" }
        );
        let _ = writeln!(s, "wall time    {:.3} s", self.wall_time);
        let _ = writeln!(s, "cost         {:.6e}", self.cost);
        let _ = writeln!(s, "violation    {:.3e}", self.constraint_violation);
        let _ = writeln!(s, "optimality   {:.3e}", self.optimality);
        for c in &self.report.checks {
            let _ = writeln!(
                s,
                "check        {:<22} {:>11.3e} <= {:<9.1e} {}",
                c.name,
                c.value,
                c.tolerance,
                if c.passed { "ok" } else { "FAIL" }
            );
        }
        let _ = write!(s, "min CoP margin {:.4} m", self.report.min_boundary_distance);
        s
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];
const STANCE_COLOR: &str = "#444444";

/// Top-down view: support polygons per phase, CoM path colored by the
/// swinging feet, CoP samples, footholds and the initial stance.
pub fn render_svg(plan: &MotionPlan, schedule: &ContactSchedule, dt: f64) -> Result<String> {
    let times = sample_times(plan.horizon(), dt)?;
    let com: Vec<Vec2> = times
        .iter()
        .map(|&t| plan.com(t).map(|p| p.position))
        .collect::<Result<_>>()?;
    let cop: Vec<Vec2> = times.iter().map(|&t| plan.cop(t)).collect::<Result<_>>()?;

    let mut polygons = Vec::new();
    let mut swing_sets: Vec<Vec<bool>> = Vec::new();
    let mut phase_color = Vec::new();
    for (i, phase) in schedule.phases().iter().enumerate() {
        let t = 0.5 * (schedule.phase_start(i) + schedule.phase_end(i));
        let mut pts = Vec::new();
        for (traj, &on) in plan.feet.feet.iter().zip(&phase.contact) {
            if on {
                let (p, a) = traj.pose(t);
                pts.extend(world_vertices(&p, a, &traj.geometry));
            }
        }
        polygons.push(convex_hull(&pts));
        let color = if phase.contact.iter().all(|&c| c) {
            STANCE_COLOR
        } else {
            let pos = swing_sets.iter().position(|s| *s == phase.contact).unwrap_or_else(|| {
                swing_sets.push(phase.contact.clone());
                swing_sets.len() - 1
            });
            PALETTE[pos % PALETTE.len()]
        };
        phase_color.push(color);
    }

    let mut footholds = Vec::new();
    for traj in &plan.feet.feet {
        for (k, s) in traj.stances.iter().enumerate() {
            footholds.push((s.position, k == 0));
        }
    }

    let all = com
        .iter()
        .chain(&cop)
        .chain(polygons.iter().flatten())
        .chain(footholds.iter().map(|(p, _)| p));
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in all {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let margin = 0.05 + 0.05 * (hi - lo).max();
    lo -= Vec2::repeat(margin);
    hi += Vec2::repeat(margin);
    let width_px = 900.0;
    let scale = width_px / (hi.x - lo.x);
    let height_px = (hi.y - lo.y) * scale;
    let px = |p: &Vec2| ((p.x - lo.x) * scale, (hi.y - p.y) * scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width_px:.0}" height="{:.0}" viewBox="0 0 {width_px:.1} {:.1}">"#,
        height_px + 48.0,
        height_px + 48.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (poly, color) in polygons.iter().zip(&phase_color) {
        if poly.len() < 3 {
            continue;
        }
        let pts: Vec<String> = poly.iter().map(&px).map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.08" stroke="{color}" stroke-opacity="0.3"/>"#,
            pts.join(" ")
        );
    }
    for (p, initial) in &footholds {
        let (x, y) = px(p);
        if *initial {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="none" stroke="black" stroke-width="1.5"/>"#,
                x - 5.0,
                y - 5.0
            );
        } else {
            let _ = writeln!(
                s,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="none" stroke="black" stroke-width="1.5"/>"#
            );
        }
    }
    for (i, _) in schedule.phases().iter().enumerate() {
        let (a, b) = (schedule.phase_start(i), schedule.phase_end(i));
        let pts: Vec<(f64, f64)> = times
            .iter()
            .zip(&com)
            .filter(|(&t, _)| t >= a - 1e-12 && t <= b + dt)
            .map(|(_, p)| px(p))
            .collect();
        match pts.as_slice() {
            [] => {}
            [(x, y)] => {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}"/>"#,
                    phase_color[i]
                );
            }
            _ => {
                let joined: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2.5"/>"#,
                    joined.join(" "),
                    phase_color[i]
                );
            }
        }
    }
    for p in &cop {
        let (x, y) = px(p);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.6" fill="red"/>"#);
    }
    let _ = writeln!(
        s,
        r#"<text x="10" y="{:.0}" font-family="sans-serif" font-size="13">CoM path (colored by swing phase), CoP (red), footholds (circles), initial stance (squares), support areas (shaded)</text>"#,
        height_px + 25.0
    );
    let mut x = 10.0;
    for (i, set) in swing_sets.iter().enumerate() {
        let swinging: Vec<&str> = schedule
            .feet()
            .iter()
            .zip(set)
            .filter(|(_, &on)| !on)
            .map(|(l, _)| l.as_str())
            .collect();
        let label = format!("swing {}", swinging.join("+"));
        let y = height_px + 34.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.0}" y="{:.0}" width="12" height="4" fill="{}"/><text x="{:.0}" y="{y:.0}" font-family="sans-serif" font-size="11">{label}</text>"#,
            y - 5.0,
            PALETTE[i % PALETTE.len()],
            x + 16.0
        );
        x += 24.0 + 7.0 * label.len() as f64;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes `trajectory.csv`, `solution.json` and optionally `plot.svg` into `dir`.
pub fn write_outputs(dir: &Path, dump: &SolutionDump, plot: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let config = dump.scenario.problem_config()?;
    let dt = dump.scenario.output.sample_dt;
    sample_trajectory(&dump.plan, &config.schedule, dt)?.write_csv(&dir.join(TRAJECTORY_FILE))?;
    dump.write_json(&dir.join(SOLUTION_FILE))?;
    if plot {
        std::fs::write(dir.join(PLOT_FILE), render_svg(&dump.plan, &config.schedule, dt)?)?;
    }
    Ok(())
}
