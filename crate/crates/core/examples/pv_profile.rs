//! Synthetic PV injections on the 39-bus case.
use std::path::PathBuf;

use alc::scenario::{run_scenario, Disturbance, ScenarioConfig};

fn main() -> alc::Result<()> {
    let cfg = ScenarioConfig::from_file(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios/ieee39_pv.json"),
    )?;
    for d in &cfg.disturbance {
        if let Disturbance::Pv { bus, profile } = d {
            let s = profile.generate();
            let min = s.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
            println!("bus {bus}: {} samples, deepest dip {min:.3} pu", s.len());
        }
    }
    let out = run_scenario(&cfg)?;
    let t = &out.trajectory;
    for k in (0..t.len()).step_by(t.len() / 10) {
        let w = t.omega[k].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        println!("t = {:>5.1} s  max |omega| {:.3e}  cost {:.4}", t.times[k], w, t.cost[k]);
    }
    Ok(())
}
