use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use alc::certify::{select_alpha_beta, SearchOptions};
use alc::dynamics::Mode;
use alc::netmodel::{read_case, validate_network, PowerNetwork};
use alc::olc::{solve_olc, OlcProblem, DEFAULT_TOLERANCE};
use alc::scenario::{export, export_sweep, run_scenario, run_sweep, ScenarioConfig, SweepAxis};
use alc::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "alc", version, about = "Distributed automatic load control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write trajectory.csv and summary.json.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Solve the optimal load control problem for a case.
    Solve {
        #[arg(long)]
        case: PathBuf,
        /// Injection override `bus=value` (pu), repeatable.
        #[arg(long = "p-in", value_name = "BUS=PU")]
        p_in: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search a Lyapunov certificate for the limit-free closed loop.
    Certify {
        #[arg(long)]
        case: PathBuf,
        /// Alpha search range `min,max`.
        #[arg(long, value_name = "MIN,MAX")]
        alpha: Option<String>,
        /// Beta search range `min,max`.
        #[arg(long, value_name = "MIN,MAX")]
        beta: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a scenario along one parameter axis.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// `damping_scale=..`, `sigma_omega=..` or `sigma_p=..` with comma-separated values.
        #[arg(long)]
        axis: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Check a case file against the network rules.
    Validate {
        #[arg(long)]
        case: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, conflicts_with = "continuous")]
    sampled: bool,
    #[arg(long)]
    continuous: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Alc,
    Gradient,
    Stationary,
}

impl RunFlags {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.noise.seed = s;
        }
        if let Some(h) = self.step {
            cfg.step = h;
        }
        if let Some(t) = self.duration {
            cfg.duration = t;
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::Alc => Mode::Alc,
                ModeArg::Gradient => Mode::Gradient,
                ModeArg::Stationary => Mode::Stationary,
            };
        }
        if self.sampled {
            cfg.sampled = true;
        }
        if self.continuous {
            cfg.sampled = false;
        }
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))? + "\n";
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn require_dir(p: &Path) -> Result<()> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(Error::Io {
            path: p.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        })
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("range `{s}` must be `min,max` with 0 < min <= max"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a > 0.0 && b >= a) {
        return Err(bad());
    }
    Ok((a.log10(), b.log10()))
}

fn apply_overrides(net: &mut PowerNetwork, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let bad = || Error::Config(format!("injection override `{o}` must be `bus=value`"));
        let (id, v) = o.split_once('=').ok_or_else(bad)?;
        let id: usize = id.trim().parse().map_err(|_| bad())?;
        let v: f64 = v.trim().parse().map_err(|_| bad())?;
        net.set_injection(id, v)?;
    }
    Ok(())
}

fn simulate(scenario: &Path, out: &Path, flags: &RunFlags) -> Result<()> {
    let out = absolute(out)?;
    require_dir(&out)?;
    let mut cfg = ScenarioConfig::from_file(&absolute(scenario)?)?;
    flags.apply(&mut cfg);
    eprintln!("simulating {} for {} s", cfg.case.display(), cfg.duration);
    let run = run_scenario(&cfg)?;
    let s = &run.summary;
    eprintln!(
        "final |omega| = {:.3e} pu, cost {:.6} (optimum {:.6}, gap {:.2e})",
        s.final_omega_inf, s.final_cost, s.oracle_cost, s.cost_gap
    );
    for f in &s.flags {
        eprintln!("flag: {f}");
    }
    for p in export(&run.trajectory, s, &out)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn solve(case: &Path, overrides: &[String], out: Option<&Path>) -> Result<()> {
    let out = out.map(absolute).transpose()?;
    if let Some(o) = &out {
        require_dir(o)?;
    }
    let mut net = read_case(&absolute(case)?)?;
    apply_overrides(&mut net, overrides)?;
    let prob = OlcProblem::from_network(net)?;
    prob.check_area_feasibility()?;
    let sol = solve_olc(&prob, DEFAULT_TOLERANCE)?;
    eprintln!("optimal cost {:.8} (KKT residual {:.2e})", sol.objective, sol.kkt.max());
    for (b, d) in prob.network.buses().iter().zip(&sol.d) {
        eprintln!("  bus {:>3}: d = {:+.6}", b.id, d);
    }
    if let Some(o) = out {
        #[derive(Serialize)]
        struct Solution<'a> {
            version: &'static str,
            bus_ids: Vec<usize>,
            p_in: &'a [f64],
            d: &'a [f64],
            psi: &'a [f64],
            mu: &'a [f64],
            objective: f64,
            kkt_residual: f64,
        }
        let path = o.join("solution.json");
        write_json(
            &path,
            &Solution {
                version: env!("CARGO_PKG_VERSION"),
                bus_ids: prob.network.buses().iter().map(|b| b.id).collect(),
                p_in: &prob.p_in,
                d: &sol.d,
                psi: &sol.psi,
                mu: &sol.mu,
                objective: sol.objective,
                kkt_residual: sol.kkt.max(),
            },
        )?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn certify(case: &Path, alpha: Option<&str>, beta: Option<&str>, out: Option<&Path>, seed: u64) -> Result<()> {
    let out = out.map(absolute).transpose()?;
    if let Some(o) = &out {
        require_dir(o)?;
    }
    let prob = OlcProblem::from_network(read_case(&absolute(case)?)?)?;
    let mut opts = SearchOptions {
        seed,
        ..SearchOptions::default()
    };
    if let Some(a) = alpha {
        opts.alpha_exponents = parse_range(a)?;
    }
    if let Some(b) = beta {
        opts.beta_exponents = parse_range(b)?;
    }
    eprintln!(
        "searching {} x {} (alpha, beta) pairs",
        opts.alpha_points, opts.beta_points
    );
    let sel = select_alpha_beta(&prob.incidence, &prob.costs, &prob.network.damping(), &opts)?;
    let report = sel.report();
    eprintln!(
        "alpha = {:.4e}, beta = {:.4e}, rho = {:.4e}; min eig Q = {:.2e}, min eig R = {:.2e}, kernel dim {}",
        report.alpha, report.beta, report.rho, report.q_min_eig, report.r_min_eig_over_samples, report.kernel_dim
    );
    if let Some(o) = out {
        let path = o.join("certificate.json");
        write_json(&path, &report)?;
        eprintln!("wrote {}", path.display());
    }
    if report.pass {
        Ok(())
    } else {
        Err(Error::Certificate("selected pair failed verification".into()))
    }
}

fn sweep(scenario: &Path, axis: &str, out: &Path, flags: &RunFlags) -> Result<()> {
    let out = absolute(out)?;
    require_dir(&out)?;
    let mut cfg = ScenarioConfig::from_file(&absolute(scenario)?)?;
    flags.apply(&mut cfg);
    let axis = SweepAxis::parse(axis)?;
    eprintln!("sweeping {} over {} values", axis.name(), axis.values().len());
    let runs = run_sweep(&cfg, &axis)?;
    for r in &runs {
        match (&r.summary, &r.error) {
            (Some(s), _) => eprintln!(
                "  {} = {}: |omega| = {:.3e}, cost gap {:.2e}{}",
                axis.name(),
                r.value,
                s.final_omega_inf,
                s.cost_gap,
                if s.flags.is_empty() { String::new() } else { format!(" [{}]", s.flags.join("; ")) }
            ),
            (None, Some(e)) => eprintln!("  {} = {}: failed: {e}", axis.name(), r.value),
            _ => {}
        }
    }
    let path = export_sweep(&runs, &axis, &out)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn validate(case: &Path) -> Result<()> {
    let path = absolute(case)?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let net = PowerNetwork::from_json_str(&text, &path)?;
    let violations = validate_network(&net);
    if violations.is_empty() {
        eprintln!(
            "{}: valid ({} buses, {} lines, {} areas)",
            path.display(),
            net.bus_count(),
            net.line_count(),
            net.areas().len()
        );
        Ok(())
    } else {
        Err(Error::InvalidNetwork(violations))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate { scenario, out, run } => simulate(scenario, out, run),
        Command::Solve { case, p_in, out } => solve(case, p_in, out.as_deref()),
        Command::Certify {
            case,
            alpha,
            beta,
            out,
            seed,
        } => certify(case, alpha.as_deref(), beta.as_deref(), out.as_deref(), *seed),
        Command::Sweep {
            scenario,
            axis,
            out,
            run,
        } => sweep(scenario, axis, out, run),
        Command::Validate { case } => validate(case),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_domain() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
