//! Frequency measurement noise: larger noise, larger load oscillations.
use std::path::PathBuf;

use alc::scenario::{run_scenario, ScenarioConfig};

fn main() -> alc::Result<()> {
    let base = ScenarioConfig::from_file(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios/two_bus_noise.json"),
    )?;
    for sigma in [0.0, 0.001, 0.003, 0.01] {
        let mut cfg = base.clone();
        cfg.noise.sigma_omega = sigma;
        let out = run_scenario(&cfg)?;
        let t = &out.trajectory;
        let tail: Vec<f64> = t
            .times
            .iter()
            .zip(&t.applied)
            .filter(|(time, _)| **time >= 0.8 * cfg.duration)
            .map(|(_, d)| d[1])
            .collect();
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let sd = (tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (tail.len() - 1) as f64).sqrt();
        println!("sigma_omega {sigma:<6}: load 2 mean {mean:+.5}, std {sd:.3e}");
    }
    Ok(())
}
