//! Controller damping estimate `D~ = k D` swept in stationary mode, plus the
//! admissible additive offset interval.
use std::path::PathBuf;

use alc::certify::damping_interval;
use alc::scenario::{load_case, run_sweep, ScenarioConfig, SweepAxis};

fn main() -> alc::Result<()> {
    let cfg = ScenarioConfig::from_file(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios/two_bus_damping.json"),
    )?;
    let prob = load_case(&cfg.case)?;
    let d_min = prob.network.damping().iter().copied().fold(f64::INFINITY, f64::min);
    let (lo, hi) = damping_interval(prob.costs.smoothness(), d_min)?;
    println!("admissible uniform offset: ({lo:.4}, {hi:.4})");
    for run in run_sweep(&cfg, &SweepAxis::DampingScale(vec![0.0, 0.5, 1.0, 2.0, 3.0]))? {
        match (run.summary, run.error) {
            (Some(s), _) => println!(
                "k = {:>3}: |omega| {:.3e}, cost gap {:.2e} {:?}",
                run.value, s.final_omega_inf, s.cost_gap, s.flags
            ),
            (None, e) => println!("k = {:>3}: failed: {}", run.value, e.unwrap_or_default()),
        }
    }
    Ok(())
}
