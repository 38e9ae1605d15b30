//! Two control areas: a disturbance in one area is absorbed inside it and
//! the tie-line schedule is restored.
use std::path::PathBuf;

use alc::scenario::{run_scenario, ScenarioConfig};

fn main() -> alc::Result<()> {
    let cfg = ScenarioConfig::from_file(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios/two_area_step.json"),
    )?;
    let out = run_scenario(&cfg)?;
    let s = &out.summary;
    println!("per-area imbalance {:?}", s.final_area_imbalance);
    println!("loads   {:?}", s.final_d);
    println!("optimum {:?}", s.oracle_d);
    let t = &out.trajectory;
    let flows = &t.final_state()[t.layout().flow()];
    for (k, f) in flows.iter().enumerate() {
        let kind = if t.internal_line_ids.contains(&(k + 1)) { "internal" } else { "tie" };
        println!("line {} ({kind}): {f:+.5}", k + 1);
    }
    Ok(())
}
