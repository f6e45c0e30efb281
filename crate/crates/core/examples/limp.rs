//! A limping gait defined phase by phase in TOML, written out as CSV, JSON and
//! an SVG plot.

use std::path::Path;

use gaitopt::output::write_outputs;
use gaitopt::scenario::Scenario;

fn main() -> gaitopt::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/limp.toml");
    let scenario = Scenario::load(&path)?;
    let dump = scenario.solve()?;
    println!("{}", dump.summary());

    let out = std::env::temp_dir().join("gaitopt_limp");
    write_outputs(&out, &dump, true)?;
    println!("written to {}", out.display());
    Ok(())
}
