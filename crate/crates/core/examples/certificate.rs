//! Lyapunov certificate search and the exponential decay it predicts along
//! the limit-free closed loop.
use std::path::PathBuf;

use alc::certify::{fit_exponential_rate, lyapunov_value, select_alpha_beta, ReducedDynamics, SearchOptions};
use alc::dynamics::ConstantInjection;
use alc::scenario::load_case;

fn main() -> alc::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "five_bus.json".into());
    let prob = load_case(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(&name))?;
    let sel = select_alpha_beta(
        &prob.incidence,
        &prob.costs,
        &prob.network.damping(),
        &SearchOptions::default(),
    )?;
    let r = sel.report();
    println!("{name}: alpha {:.3e}, beta {:.3e}, rho {:.3e}", r.alpha, r.beta, r.rho);
    println!("  {} of {} grid pairs accepted, kernel dim {}", sel.accepted, sel.tried, r.kernel_dim);

    let sys = ReducedDynamics::from_problem(&prob)?;
    let mut p = vec![0.0; prob.bus_count()];
    p[0] = 0.4;
    let eq = sys.equilibrium(&p)?;
    let traj = sys.simulate(&vec![0.0; sys.layout.len()], &ConstantInjection(p), 1e-3, 20.0, 100)?;
    let dist: Vec<f64> = traj
        .states
        .iter()
        .zip(&traj.omega_load)
        .map(|(z, w)| eq.distance(z, w))
        .collect();
    let fit = fit_exponential_rate(&traj.times, &dist, Some((0.0, 10.0)))?;
    println!("  measured decay rate {:.3e} (certified lower bound {:.3e})", fit.rho0, r.rho / 2.0);
    for k in (0..traj.times.len()).step_by(40) {
        let v = lyapunov_value(&sel.certificate, &traj.states[k], &eq.z_star)?;
        println!("  t = {:>5.1} s  V = {:.3e}  distance = {:.3e}", traj.times[k], v, dist[k]);
    }
    Ok(())
}
