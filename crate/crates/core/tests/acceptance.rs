//! End-to-end acceptance gate. Each criterion prints one PASS/FAIL line to
//! stderr (bypassing the test harness capture) and the test fails if any
//! criterion fails.

mod common;

use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use alc::certify::{
    check_q_kernel, damping_interval, drift_bound, fit_exponential_rate, lyapunov_value, mismatch_bound,
    select_alpha_beta, tracking_bound, ReducedDynamics, SearchOptions, TrackingBoundParams, KERNEL_TOLERANCE,
    PSD_TOLERANCE,
};
use alc::dynamics::{ClosedLoop, ConstantInjection, ControlGains, Mode, SimOptions, Trajectory};
use alc::olc::{solve_olc, OlcProblem, DEFAULT_TOLERANCE};
use alc::scenario::{
    load_case, run_scenario, run_sweep, ScenarioConfig, ScenarioInjection, SweepAxis, NOT_RESTORED,
};
use rayon::prelude::*;

// C1
const RANDOM_NETWORKS: u64 = 25;
const C1_D_GAP: f64 = 1e-3;
const C1_OMEGA: f64 = 1e-4;
const C1_IMBALANCE: f64 = 1e-4;
const C1_CONSTRAINTS: f64 = 1e-4;
const C1_RUNTIME_S: f64 = 60.0;
const C1_DURATION: f64 = 150.0;
const C1_STEP: f64 = 2e-3;
// C2
const C2_OMEGA: f64 = 1e-3;
const C2_COST_REL: f64 = 0.01;
const C2_LOAD_BOUND: f64 = 0.4 + 1e-4;
const C2_NO_ALC_REL: f64 = 0.01;
const C2_RUNTIME_S: f64 = 120.0;
// C3
const C3_TOL: f64 = 1e-9;
const C3_STEP: f64 = 1e-4;
const C3_DURATION: f64 = 10.0;
// C4
const C4_V_SLACK: f64 = 1e-2;
const C4_SLOPE_SLACK: f64 = 0.05;
// C5
const C5_COST_GAP: f64 = 1e-3;
const C5_UNRESTORED_OMEGA: f64 = 1e-2;
// C6
const C6_ASYMPTOTE_SLACK: f64 = 0.05;
// C7
const C7_SIGMAS: [f64; 2] = [0.001, 0.01];
const C7_TAIL: f64 = 0.2;

static MIN_PROJECTED: Mutex<Vec<(String, f64)>> = Mutex::new(Vec::new());

fn record_projected(label: impl Into<String>, traj: &Trajectory) {
    MIN_PROJECTED.lock().unwrap().push((label.into(), traj.min_projected()));
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance C{id} {:<4} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn inf_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_file(&common::data(&format!("scenarios/{name}"))).unwrap()
}

struct NetworkOutcome {
    seed: u64,
    buses: usize,
    binding: usize,
    d_gap: f64,
    omega: f64,
    imbalance: f64,
    violation: f64,
}

fn random_network_run(k: u64) -> Result<NetworkOutcome, String> {
    let seed = 1000 + k;
    let net = common::random_network(seed, (4, 15), 3, k % 2 == 0);
    let prob = OlcProblem::from_network(net).map_err(|e| format!("seed {seed}: {e}"))?;
    let sol = solve_olc(&prob, DEFAULT_TOLERANCE).map_err(|e| format!("seed {seed}: oracle {e}"))?;
    let n = prob.bus_count();
    let binding = (0..n)
        .filter(|&i| (sol.d[i] - prob.d_max[i]).abs() < 1e-7 || (sol.d[i] - prob.d_min[i]).abs() < 1e-7)
        .count()
        + sol.sigma_plus.iter().chain(&sol.sigma_minus).filter(|&&s| s > 1e-7).count();

    let m = prob.incidence.internal.len();
    let mut g = ControlGains::uniform(&prob.network.damping(), m, 0.5, 0.5, 0.25);
    g.eps_d = vec![5.0; n];
    g.eps_mu = vec![5.0; n];
    g.eps_gamma_plus = vec![5.0; n];
    g.eps_gamma_minus = vec![5.0; n];
    g.eps_sigma_plus = vec![5.0; m];
    g.eps_sigma_minus = vec![5.0; m];
    let cl = ClosedLoop::new(&prob, g).map_err(|e| e.to_string())?;
    let opts = SimOptions {
        sampled: false,
        duration: C1_DURATION,
        step: C1_STEP,
        decimation: 500,
        ..Default::default()
    };
    let traj = cl
        .integrate(&vec![0.0; cl.layout.len()], &ConstantInjection(prob.p_in.clone()), &opts)
        .map_err(|e| format!("seed {seed}: {e}"))?;
    record_projected(format!("random network {seed}"), &traj);

    let x = traj.final_state();
    let d = &x[cl.layout.d()];
    let imbalance = prob
        .network
        .area_members()
        .iter()
        .map(|mem| mem.iter().map(|&i| d[i] - prob.p_in[i]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let mut violation: f64 = 0.0;
    for i in 0..n {
        violation = violation.max(d[i] - prob.d_max[i]).max(prob.d_min[i] - d[i]);
    }
    let mut vflow = vec![0.0; m];
    prob.incidence.virtual_flows(&x[cl.layout.psi()], &mut vflow);
    for (k, f) in vflow.iter().enumerate() {
        violation = violation.max(f - cl.p_max[k]).max(cl.p_min[k] - f);
    }
    Ok(NetworkOutcome {
        seed,
        buses: n,
        binding,
        d_gap: inf_gap(d, &sol.d),
        omega: inf_norm(traj.final_omega()),
        imbalance,
        violation,
    })
}

fn criterion_1() -> bool {
    let start = Instant::now();
    let results: Vec<Result<NetworkOutcome, String>> =
        (0..RANDOM_NETWORKS).into_par_iter().map(random_network_run).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let mut pass = elapsed <= C1_RUNTIME_S;
    let (mut d_gap, mut omega, mut imb, mut viol) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut with_binding = 0;
    let mut sizes = (usize::MAX, 0);
    for r in &results {
        match r {
            Ok(o) => {
                let ok = o.d_gap <= C1_D_GAP
                    && o.omega <= C1_OMEGA
                    && o.imbalance <= C1_IMBALANCE
                    && o.violation <= C1_CONSTRAINTS;
                if !ok {
                    eprintln!(
                        "seed {}: d gap {:.2e}, |omega| {:.2e}, imbalance {:.2e}, violation {:.2e}",
                        o.seed, o.d_gap, o.omega, o.imbalance, o.violation
                    );
                }
                pass &= ok;
                d_gap = d_gap.max(o.d_gap);
                omega = omega.max(o.omega);
                imb = imb.max(o.imbalance);
                viol = viol.max(o.violation);
                with_binding += usize::from(o.binding > 0);
                sizes = (sizes.0.min(o.buses), sizes.1.max(o.buses));
            }
            Err(e) => {
                eprintln!("{e}");
                pass = false;
            }
        }
    }
    report(
        1,
        "oracle equivalence on random networks",
        pass,
        &format!(
            "{} networks ({}-{} buses, {} with binding limits); max d gap {:.2e} (<= {C1_D_GAP:.0e}), \
             |omega| {:.2e} (<= {C1_OMEGA:.0e}), area imbalance {:.2e} (<= {C1_IMBALANCE:.0e}), \
             violation {:.2e} (<= {C1_CONSTRAINTS:.0e}); {elapsed:.1} s (<= {C1_RUNTIME_S} s)",
            results.len(),
            sizes.0,
            sizes.1,
            with_binding,
            d_gap,
            omega,
            imb,
            viol
        ),
    );
    pass
}

fn criterion_2() -> bool {
    let start = Instant::now();
    let with = run_scenario(&scenario("ieee39_step.json")).unwrap();
    record_projected("ieee39 step", &with.trajectory);
    let s = &with.summary;
    let rel_cost = (s.final_cost - s.oracle_cost).abs() / s.oracle_cost.abs();
    let max_load = inf_norm(&s.final_d);

    let cfg = scenario("ieee39_no_alc.json");
    let without = run_scenario(&cfg).unwrap();
    let prob = load_case(&cfg.case).unwrap();
    let total_step: f64 = cfg
        .disturbance
        .iter()
        .map(|d| match d {
            alc::scenario::Disturbance::Step { magnitude, .. } => *magnitude,
            _ => 0.0,
        })
        .sum();
    let expected = total_step.abs() / prob.network.damping().iter().sum::<f64>();
    let measured = without.summary.final_omega_inf;
    let rel_no_alc = (measured - expected).abs() / expected;
    let elapsed = start.elapsed().as_secs_f64();

    let pass = s.final_omega_inf <= C2_OMEGA
        && rel_cost <= C2_COST_REL
        && max_load <= C2_LOAD_BOUND
        && rel_no_alc <= C2_NO_ALC_REL
        && elapsed <= C2_RUNTIME_S;
    report(
        2,
        "39-bus frequency restoration",
        pass,
        &format!(
            "|omega| {:.2e} (<= {C2_OMEGA:.0e}), cost {:.6} vs optimum {:.6} (rel {:.2e} <= {C2_COST_REL}), \
             max |d| {:.4} (<= {C2_LOAD_BOUND}); without control |omega| {:.5} vs {:.5} (rel {:.2e} <= \
             {C2_NO_ALC_REL}); {elapsed:.1} s (<= {C2_RUNTIME_S} s)",
            s.final_omega_inf, s.final_cost, s.oracle_cost, rel_cost, max_load, measured, expected, rel_no_alc
        ),
    );
    pass
}

fn criterion_3() -> bool {
    let cfg = scenario("two_bus_step.json");
    let prob = load_case(&cfg.case).unwrap();
    let gains = cfg.gains.build(&prob.network.damping(), prob.incidence.internal.len());
    let cl = ClosedLoop::new(&prob, gains).unwrap();
    let inj = ScenarioInjection::new(&prob, &cfg.disturbance).unwrap();
    let run = |mode| {
        let opts = SimOptions {
            mode,
            sampled: false,
            step: C3_STEP,
            duration: C3_DURATION,
            decimation: 10,
            ..Default::default()
        };
        cl.integrate(&vec![0.0; cl.layout.len()], &inj, &opts).unwrap()
    };
    let alc = run(Mode::Alc);
    let grad = run(Mode::Gradient);
    record_projected("two-bus alc", &alc);
    record_projected("two-bus gradient", &grad);
    let mut worst: f64 = 0.0;
    for (x, y) in alc.states.iter().zip(&grad.states) {
        worst = worst.max(inf_gap(&cl.alc_to_gradient(x), y));
    }
    let pass = alc.len() == grad.len() && worst <= C3_TOL;
    report(
        3,
        "gradient and alc trajectories coincide",
        pass,
        &format!(
            "{} samples over {C3_DURATION} s at h = {C3_STEP:.0e}; max deviation {worst:.2e} (<= {C3_TOL:.0e})",
            alc.len()
        ),
    );
    pass
}

fn certificate_case(name: &str, steps: &[(usize, f64)]) -> (bool, String) {
    let prob = load_case(&common::data(name)).unwrap();
    let damping = prob.network.damping();
    let sel = match select_alpha_beta(&prob.incidence, &prob.costs, &damping, &SearchOptions::default()) {
        Ok(s) => s,
        Err(e) => return (false, format!("{name}: {e}")),
    };
    let kernel = check_q_kernel(&sel.certificate, &prob.incidence);
    let cert = &sel.certificate;

    let sys = ReducedDynamics::from_problem(&prob).unwrap();
    let mut p = vec![0.0; prob.bus_count()];
    for &(id, v) in steps {
        p[prob.network.index_of(id).unwrap()] = v;
    }
    let eq = sys.equilibrium(&p).unwrap();
    let traj = sys
        .simulate(&vec![0.0; sys.layout.len()], &ConstantInjection(p.clone()), 1e-3, 20.0, 50)
        .unwrap();
    let v: Vec<f64> = traj
        .states
        .iter()
        .map(|z| lyapunov_value(cert, z, &eq.z_star).unwrap())
        .collect();
    let v_ok = traj
        .times
        .iter()
        .zip(&v)
        .all(|(t, vt)| *vt <= v[0] * (-cert.rho * t).exp() * (1.0 + C4_V_SLACK));
    let dist: Vec<f64> = traj
        .states
        .iter()
        .zip(&traj.omega_load)
        .map(|(z, w)| eq.distance(z, w))
        .collect();
    // fit while the distance is well above round-off
    let floor = dist[0] * 1e-9;
    let t_end = traj
        .times
        .iter()
        .zip(&dist)
        .find(|(_, d)| **d < floor)
        .map_or(f64::INFINITY, |(t, _)| *t);
    let fit = fit_exponential_rate(&traj.times, &dist, Some((0.0, t_end))).unwrap();
    let slope_limit = -cert.rho / 2.0 * (1.0 - C4_SLOPE_SLACK);
    let pass = sel.certificate.psd_margin >= -PSD_TOLERANCE
        && sel.r_min_eig >= -PSD_TOLERANCE
        && kernel.pass
        && kernel.eigen_residual <= KERNEL_TOLERANCE
        && kernel.basis_residual <= KERNEL_TOLERANCE
        && v_ok
        && -fit.rho0 <= slope_limit;
    (
        pass,
        format!(
            "{name}: alpha {:.3e}, beta {:.3e}, rho {:.3e}, min eig Q {:.1e}, min eig R {:.1e} over {} samples, \
             kernel dim {} (residuals {:.1e}, {:.1e}), V bound {}, slope {:.3e} (<= {:.3e})",
            cert.alpha,
            cert.beta,
            cert.rho,
            cert.psd_margin,
            sel.r_min_eig,
            sel.samples,
            kernel.kernel_dim,
            kernel.eigen_residual,
            kernel.basis_residual,
            if v_ok { "holds" } else { "violated" },
            -fit.rho0,
            slope_limit
        ),
    )
}

fn criterion_4() -> bool {
    let cases = [
        certificate_case("two_bus.json", &[(1, 0.4)]),
        certificate_case("five_bus.json", &[(1, 0.4), (4, -0.2)]),
    ];
    let pass = cases.iter().all(|c| c.0);
    let detail: Vec<&str> = cases.iter().map(|c| c.1.as_str()).collect();
    report(4, "Lyapunov certificate suite", pass, &detail.join("; "));
    pass
}

fn criterion_5() -> bool {
    let base = scenario("two_bus_damping.json");
    let prob = load_case(&base.case).unwrap();
    let d_min = prob.network.damping().iter().copied().fold(f64::INFINITY, f64::min);
    let (lo, hi) = damping_interval(prob.costs.smoothness(), d_min).unwrap();
    let offsets: Vec<f64> = [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|f| lo + f * (hi - lo)).collect();
    let runs: Vec<_> = offsets
        .par_iter()
        .map(|&delta| {
            let mut cfg = base.clone();
            cfg.damping.offset = Some(delta);
            run_scenario(&cfg).map(|r| (delta, r))
        })
        .collect();
    let mut pass = true;
    let mut worst_gap: f64 = 0.0;
    for r in runs {
        match r {
            Ok((delta, out)) => {
                record_projected(format!("stationary offset {delta}"), &out.trajectory);
                if out.summary.cost_gap > C5_COST_GAP {
                    eprintln!("offset {delta:.3}: cost gap {:.2e}", out.summary.cost_gap);
                    pass = false;
                }
                worst_gap = worst_gap.max(out.summary.cost_gap);
            }
            Err(e) => {
                eprintln!("{e}");
                pass = false;
            }
        }
    }

    let mut k0 = scenario("two_bus_step.json");
    k0.damping.scale = Some(0.0);
    let out = run_scenario(&k0).unwrap();
    record_projected("k = 0", &out.trajectory);
    let s = &out.summary;
    let flagged = s.flags.iter().any(|f| f == NOT_RESTORED);
    let settled = s.steady_state_time.is_some();
    pass &= settled && flagged && s.final_omega_inf > C5_UNRESTORED_OMEGA;
    report(
        5,
        "damping robustness",
        pass,
        &format!(
            "offsets {:?} inside ({lo:.4}, {hi:.4}): max cost gap {worst_gap:.2e} (<= {C5_COST_GAP:.0e}); \
             k = 0: settled {settled}, |omega| {:.4} (> {C5_UNRESTORED_OMEGA:.0e}), flag {flagged}",
            offsets.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>(),
            s.final_omega_inf
        ),
    );
    pass
}

fn criterion_6() -> bool {
    let cfg = scenario("two_bus_sinusoid.json");
    let prob = load_case(&cfg.case).unwrap();
    let sel = select_alpha_beta(&prob.incidence, &prob.costs, &prob.network.damping(), &SearchOptions::default())
        .unwrap();
    let cert = &sel.certificate;
    let sys = ReducedDynamics::from_problem(&prob).unwrap();
    let inj = ScenarioInjection::new(&prob, &cfg.disturbance).unwrap();
    let z0 = sys.equilibrium(&inj.at(0.0)).unwrap().z_star;
    let traj = sys.simulate(&z0, &inj, 1e-3, cfg.duration, 100).unwrap();
    let drift = drift_bound(&sys, cert, &inj, &traj.times).unwrap();
    let b_g = mismatch_bound(&sys, cert, &traj.times, &traj.states, &traj.injections).unwrap();
    let errors: Vec<f64> = traj
        .states
        .iter()
        .zip(&drift.optima)
        .map(|(z, zs)| {
            let dz: Vec<f64> = z.iter().zip(zs).map(|(a, b)| a - b).collect();
            cert.q_norm(&dz)
        })
        .collect();
    let params = TrackingBoundParams {
        b_z: drift.sup,
        b_g: 0.0,
        rho: cert.rho,
        initial: errors[0],
    };
    let bound_ok = traj.times.iter().zip(&errors).all(|(t, e)| *e <= tracking_bound(&params, *t));
    let tail_start = 2.0 * cfg.duration / 3.0;
    let tail = traj
        .times
        .iter()
        .zip(&errors)
        .filter(|(t, _)| **t >= tail_start)
        .fold(0.0_f64, |m, (_, e)| m.max(*e));
    let asym_ok = tail <= params.asymptote() * (1.0 + C6_ASYMPTOTE_SLACK);
    let pass = bound_ok && asym_ok;
    report(
        6,
        "tracking bound under sinusoidal injection",
        pass,
        &format!(
            "b_z {:.3e}, rho {:.3e}, integration mismatch {:.1e}; error <= bound at all {} samples: {bound_ok}; \
             late error {tail:.3e} vs 2 b_z / rho = {:.3e}",
            drift.sup,
            cert.rho,
            b_g,
            errors.len(),
            params.asymptote()
        ),
    );
    pass
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn criterion_7() -> bool {
    let base = scenario("two_bus_noise.json");
    let runs = run_sweep(&base, &SweepAxis::SigmaOmega(C7_SIGMAS.to_vec())).unwrap();
    // the sweep keeps only summaries; re-run each point for its trajectory
    let mut pass = runs.iter().all(|r| r.summary.is_some());
    let mut spreads = Vec::new();
    let mut details = Vec::new();
    for &sigma in &C7_SIGMAS {
        let mut cfg = base.clone();
        cfg.noise.sigma_omega = sigma;
        let out = run_scenario(&cfg).unwrap();
        let traj = &out.trajectory;
        record_projected(format!("noise {sigma}"), traj);
        let t0 = cfg.duration * (1.0 - C7_TAIL);
        let idx: Vec<usize> = (0..traj.len()).filter(|&k| traj.times[k] >= t0).collect();
        let n = idx.len() as f64;
        let limit = 3.0 * sigma / n.sqrt();
        let buses = traj.bus_ids.len();
        let mut worst_mean: f64 = 0.0;
        let mut spread = 0.0;
        for i in 0..buses {
            let w: f64 = idx.iter().map(|&k| traj.omega[k][i]).sum::<f64>() / n;
            worst_mean = worst_mean.max(w.abs());
            let d: Vec<f64> = idx.iter().map(|&k| traj.applied[k][i]).collect();
            spread += std_dev(&d) / buses as f64;
        }
        pass &= worst_mean <= limit;
        spreads.push(spread);
        details.push(format!(
            "sigma {sigma}: |mean omega| {worst_mean:.2e} (<= {limit:.2e}, n = {}), std d {spread:.3e}",
            idx.len()
        ));
    }
    let monotone = spreads.windows(2).all(|w| w[1] > w[0]);
    pass &= monotone;
    report(
        7,
        "noise behaviour",
        pass,
        &format!("{}; std of d increasing: {monotone}", details.join("; ")),
    );
    pass
}

fn criterion_8() -> bool {
    let all = MIN_PROJECTED.lock().unwrap();
    let worst = all.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let pass = !all.is_empty() && worst >= 0.0;
    report(
        8,
        "projected multipliers stay nonnegative",
        pass,
        &format!("{} runs, min over time of every gamma and sigma {worst:.3e} (>= 0)", all.len()),
    );
    pass
}

#[test]
fn acceptance() {
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, p)| !**p)
        .map(|(k, _)| k + 1)
        .collect();
    assert!(failed.is_empty(), "acceptance criteria failed: {failed:?}");
}
