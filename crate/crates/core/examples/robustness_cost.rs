//! The same walk with and without the vertex-load robustness cost: the cost
//! keeps the CoP further from the support boundary at the price of body sway.

use std::path::Path;

use gaitopt::scenario::Scenario;

fn main() -> gaitopt::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/walk_4step.toml");
    let base = Scenario::load(&path)?;
    for robust in [true, false] {
        let dump = Scenario {
            robust_cost: robust,
            ..base.clone()
        }
        .solve()?;
        let h = dump.plan.horizon();
        let sway = (0..=1000)
            .map(|i| dump.plan.com(h * i as f64 / 1000.0).map(|p| p.position.y.abs()))
            .collect::<gaitopt::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!(
            "robust cost {:<5}  min CoP margin {:.4} m  max lateral sway {:.4} m",
            robust, dump.report.min_boundary_distance, sway
        );
    }
    Ok(())
}
