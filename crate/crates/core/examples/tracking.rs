//! Tracking a sinusoidal injection: measured error against the drift bound.
use std::path::PathBuf;

use alc::certify::{drift_bound, select_alpha_beta, tracking_bound, ReducedDynamics, SearchOptions, TrackingBoundParams};
use alc::scenario::{load_case, ScenarioConfig, ScenarioInjection};

fn main() -> alc::Result<()> {
    let cfg = ScenarioConfig::from_file(
        &PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/scenarios/two_bus_sinusoid.json"),
    )?;
    let prob = load_case(&cfg.case)?;
    let sel = select_alpha_beta(&prob.incidence, &prob.costs, &prob.network.damping(), &SearchOptions::default())?;
    let cert = &sel.certificate;
    let sys = ReducedDynamics::from_problem(&prob)?;
    let inj = ScenarioInjection::new(&prob, &cfg.disturbance)?;
    let z0 = sys.equilibrium(&inj.at(0.0))?.z_star;
    let traj = sys.simulate(&z0, &inj, 1e-3, cfg.duration, 100)?;
    let drift = drift_bound(&sys, cert, &inj, &traj.times)?;
    let params = TrackingBoundParams {
        b_z: drift.sup,
        b_g: 0.0,
        rho: cert.rho,
        initial: 0.0,
    };
    println!("drift bound b_z = {:.3e}, rho = {:.3e}", drift.sup, cert.rho);
    for k in (0..traj.times.len()).step_by(150) {
        let dz: Vec<f64> = traj.states[k].iter().zip(&drift.optima[k]).map(|(a, b)| a - b).collect();
        let t = traj.times[k];
        println!(
            "t = {t:>6.1} s  error {:.3e}  bound {:.3e}",
            cert.q_norm(&dz),
            tracking_bound(&params, t)
        );
    }
    Ok(())
}
