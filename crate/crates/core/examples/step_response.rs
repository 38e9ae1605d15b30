//! Two-bus step response under automatic load control, with and without the
//! controller.
use std::path::PathBuf;

use alc::scenario::{run_scenario, ScenarioConfig};

fn main() -> alc::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios");
    for name in ["two_bus_step.json", "two_bus_no_alc.json"] {
        let cfg = ScenarioConfig::from_file(&dir.join(name))?;
        let out = run_scenario(&cfg)?;
        let s = &out.summary;
        println!("{name}");
        println!("  final |omega|   {:.3e} pu", s.final_omega_inf);
        println!("  final loads     {:?}", s.final_d);
        println!("  optimal loads   {:?}", s.oracle_d);
        println!("  settled at      {:?} s", s.steady_state_time);
        for f in &s.flags {
            println!("  flag: {f}");
        }
    }
    Ok(())
}
