//! Declarative experiments: a case, a disturbance, controller settings and
//! the metrics reported after a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{
    fit_exponential_rate, lyapunov_value, reduced_state, select_alpha_beta, CertificateReport, RateFit,
    ReducedDynamics, SearchOptions,
};
use crate::dynamics::{ClosedLoop, ControlGains, Mode, NoiseModel, Scheme, SimOptions, Trajectory};
use crate::error::{Error, Result};
use crate::netmodel::read_case;
use crate::olc::{solve_olc, OlcProblem, OlcSolution, DEFAULT_TOLERANCE};

pub const NOT_RESTORED: &str = "nominal frequency not restored";
/// Final `|omega|` above which [`NOT_RESTORED`] is raised.
pub const RESTORATION_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Linear,
}

/// One additive component of the injection deviation `P_in(t)`; magnitudes
/// are changes of injection, so a load increase is negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Disturbance {
    Step {
        bus: usize,
        magnitude: f64,
        #[serde(default)]
        at: f64,
    },
    Timeseries {
        bus: usize,
        samples: Vec<(f64, f64)>,
        #[serde(default)]
        interpolation: Interpolation,
    },
    Sinusoid {
        bus: usize,
        amplitude: f64,
        /// Hz.
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Synthetic photovoltaic output, expanded to a time series at load time.
    Pv {
        bus: usize,
        #[serde(flatten)]
        profile: PvProfile,
    },
}

impl Disturbance {
    pub fn bus(&self) -> usize {
        match self {
            Disturbance::Step { bus, .. }
            | Disturbance::Timeseries { bus, .. }
            | Disturbance::Sinusoid { bus, .. }
            | Disturbance::Pv { bus, .. } => *bus,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Disturbance::Timeseries { samples, .. } => {
                if samples.is_empty() {
                    return Err(Error::Config("time series needs at least one sample".into()));
                }
                if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::Config("time series sample times must be strictly increasing".into()));
                }
                if samples.iter().any(|s| !s.0.is_finite() || !s.1.is_finite()) {
                    return Err(Error::Config("time series samples must be finite".into()));
                }
            }
            Disturbance::Sinusoid { frequency, .. } if !(frequency.is_finite() && *frequency >= 0.0) => {
                return Err(Error::Config("sinusoid frequency must be finite and nonnegative".into()));
            }
            Disturbance::Pv { profile, .. } => profile.validate()?,
            _ => {}
        }
        Ok(())
    }

    /// Value at time `t` (PV must have been expanded first).
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Disturbance::Step { magnitude, at, .. } => {
                if t >= *at {
                    *magnitude
                } else {
                    0.0
                }
            }
            Disturbance::Timeseries { samples, .. } => interpolate(samples, t),
            Disturbance::Sinusoid {
                amplitude,
                frequency,
                phase,
                ..
            } => amplitude * (2.0 * std::f64::consts::PI * frequency * t + phase).sin(),
            Disturbance::Pv { profile, .. } => interpolate(&profile.generate(), t),
        }
    }

    fn expanded(&self) -> Disturbance {
        match self {
            Disturbance::Pv { bus, profile } => Disturbance::Timeseries {
                bus: *bus,
                samples: profile.generate(),
                interpolation: Interpolation::Linear,
            },
            other => other.clone(),
        }
    }
}

/// Piecewise linear, held constant outside the sample range.
pub fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let k = samples.partition_point(|s| s.0 <= t);
    let (a, b) = (samples[k - 1], samples[k]);
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// Sum of seeded ramps plus first-order low-pass filtered Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvProfile {
    pub duration: f64,
    #[serde(default = "PvProfile::default_dt")]
    pub dt: f64,
    /// Nominal output in pu.
    pub peak: f64,
    #[serde(default = "PvProfile::default_ramps")]
    pub ramps: usize,
    /// Standard deviation of the filtered fluctuation, pu.
    #[serde(default)]
    pub noise: f64,
    /// Noise correlation time, s.
    #[serde(default = "PvProfile::default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PvProfile {
    fn default_dt() -> f64 {
        0.5
    }
    fn default_ramps() -> usize {
        3
    }
    fn default_tau() -> f64 {
        5.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.dt > 0.0 && self.tau > 0.0 && self.noise >= 0.0) {
            return Err(Error::Config(
                "pv profile needs duration, dt, tau > 0 and noise >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Samples on `[0, duration]` starting from zero output deviation.
    pub fn generate(&self) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        // cloud events: (start, length, depth as a fraction of peak)
        let ramps: Vec<(f64, f64, f64)> = (0..self.ramps)
            .map(|_| {
                let u: [f64; 3] = [
                    rand::Rng::random(&mut rng),
                    rand::Rng::random(&mut rng),
                    rand::Rng::random(&mut rng),
                ];
                (u[0] * self.duration, (0.05 + 0.2 * u[1]) * self.duration, 0.2 + 0.6 * u[2])
            })
            .collect();
        let n = (self.duration / self.dt).ceil() as usize;
        let a = (-self.dt / self.tau).exp();
        let kick = self.noise * (1.0 - a * a).sqrt();
        let mut fluct = 0.0;
        (0..=n)
            .map(|k| {
                let t = (k as f64 * self.dt).min(self.duration);
                let mut level = 0.0;
                for &(start, len, depth) in &ramps {
                    // trapezoid: ramp down, hold, ramp up
                    let x = (t - start) / len;
                    let shape = if !(0.0..=1.0).contains(&x) {
                        0.0
                    } else if x < 0.25 {
                        x / 0.25
                    } else if x > 0.75 {
                        (1.0 - x) / 0.25
                    } else {
                        1.0
                    };
                    level -= depth * shape;
                }
                if k > 0 {
                    fluct = a * fluct + kick * unit.sample(&mut rng);
                }
                (t, self.peak * level.max(-1.0) + fluct)
            })
            .collect()
    }
}

/// Scalar controller gains applied uniformly; each specific field
/// overrides `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainsConfig {
    pub eps: f64,
    pub eps_d: Option<f64>,
    pub eps_psi: Option<f64>,
    pub eps_gamma: Option<f64>,
    pub eps_mu: Option<f64>,
    pub eps_sigma: Option<f64>,
    pub k: f64,
    pub control_period: f64,
}

impl Default for GainsConfig {
    fn default() -> Self {
        GainsConfig {
            eps: 0.5,
            eps_d: None,
            eps_psi: None,
            eps_gamma: None,
            eps_mu: None,
            eps_sigma: None,
            k: 0.5,
            control_period: 0.25,
        }
    }
}

impl GainsConfig {
    pub fn build(&self, damping: &[f64], internal_lines: usize) -> ControlGains {
        let mut g = ControlGains::uniform(damping, internal_lines, self.eps, self.k, self.control_period);
        let n = damping.len();
        let eg = self.eps_gamma.unwrap_or(self.eps);
        let es = self.eps_sigma.unwrap_or(self.eps);
        g.eps_d = vec![self.eps_d.unwrap_or(self.eps); n];
        g.eps_psi = vec![self.eps_psi.unwrap_or(self.eps); n];
        g.eps_mu = vec![self.eps_mu.unwrap_or(self.eps); n];
        g.eps_gamma_plus = vec![eg; n];
        g.eps_gamma_minus = vec![eg; n];
        g.eps_sigma_plus = vec![es; internal_lines];
        g.eps_sigma_minus = vec![es; internal_lines];
        g
    }
}

/// Damping believed by the controller: `D~ = scale * D + offset + offsets[bus]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DampingConfig {
    pub scale: Option<f64>,
    pub offset: Option<f64>,
    pub offsets: BTreeMap<usize, f64>,
}

impl DampingConfig {
    pub fn apply(&self, bus_ids: &[usize], damping: &[f64]) -> Vec<f64> {
        bus_ids
            .iter()
            .zip(damping)
            .map(|(id, d)| {
                self.scale.unwrap_or(1.0) * d + self.offset.unwrap_or(0.0) + self.offsets.get(id).copied().unwrap_or(0.0)
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub sigma_omega: f64,
    pub sigma_p: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Relative paths are resolved against the scenario file's directory.
    pub case: PathBuf,
    #[serde(default)]
    pub gains: GainsConfig,
    #[serde(default)]
    pub disturbance: Vec<Disturbance>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub damping: DampingConfig,
    #[serde(default = "ScenarioConfig::default_duration")]
    pub duration: f64,
    #[serde(default = "ScenarioConfig::default_step")]
    pub step: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "ScenarioConfig::default_true")]
    pub sampled: bool,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "ScenarioConfig::default_decimation")]
    pub decimation: usize,
    #[serde(default = "ScenarioConfig::default_true")]
    pub alc_enabled: bool,
    /// Window (s) and derivative tolerance for steady-state detection.
    #[serde(default = "ScenarioConfig::default_window")]
    pub steady_window: f64,
    #[serde(default = "ScenarioConfig::default_steady_tol")]
    pub steady_tol: f64,
    /// Fit an exponential rate to the distance-to-optimum series.
    #[serde(default)]
    pub fit_rate: bool,
    /// Search a Lyapunov certificate for the case and record `V` along the run.
    #[serde(default)]
    pub certify: bool,
}

impl ScenarioConfig {
    fn default_duration() -> f64 {
        60.0
    }
    fn default_step() -> f64 {
        1e-3
    }
    fn default_true() -> bool {
        true
    }
    fn default_decimation() -> usize {
        100
    }
    fn default_window() -> f64 {
        5.0
    }
    fn default_steady_tol() -> f64 {
        1e-6
    }

    /// Defaults for everything but the case.
    pub fn new(case: impl Into<PathBuf>) -> Self {
        ScenarioConfig {
            case: case.into(),
            gains: GainsConfig::default(),
            disturbance: Vec::new(),
            noise: NoiseConfig::default(),
            damping: DampingConfig::default(),
            duration: Self::default_duration(),
            step: Self::default_step(),
            mode: Mode::Alc,
            sampled: true,
            scheme: Scheme::Rk4,
            decimation: Self::default_decimation(),
            alc_enabled: true,
            steady_window: Self::default_window(),
            steady_tol: Self::default_steady_tol(),
            fit_rate: false,
            certify: false,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {}, column {}: {e}", e.line(), e.column()),
        })?;
        if cfg.case.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.case = dir.join(&cfg.case);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("duration", self.duration),
            ("step", self.step),
            ("control_period", self.gains.control_period),
            ("k", self.gains.k),
            ("eps", self.gains.eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.duration <= self.step {
            return Err(Error::Config("duration must exceed the integration step".into()));
        }
        if !(self.noise.sigma_omega >= 0.0 && self.noise.sigma_p >= 0.0) {
            return Err(Error::Config("noise standard deviations must be nonnegative".into()));
        }
        if self.decimation == 0 {
            return Err(Error::Config("decimation must be at least 1".into()));
        }
        for d in &self.disturbance {
            d.validate()?;
        }
        Ok(())
    }
}

/// Reads, validates and prepares a case file as an optimisation problem with
/// the per-bus cost and limit parameters it carries.
pub fn load_case(path: &Path) -> Result<OlcProblem> {
    OlcProblem::from_network(read_case(path)?)
}

/// Base injections plus every disturbance component.
#[derive(Clone, Debug)]
pub struct ScenarioInjection {
    base: Vec<f64>,
    parts: Vec<(usize, Disturbance)>,
}

impl ScenarioInjection {
    pub fn new(prob: &OlcProblem, disturbances: &[Disturbance]) -> Result<Self> {
        let parts = disturbances
            .iter()
            .map(|d| {
                let idx = prob
                    .network
                    .index_of(d.bus())
                    .ok_or_else(|| Error::Config(format!("disturbance refers to unknown bus {}", d.bus())))?;
                Ok((idx, d.expanded()))
            })
            .collect::<Result<_>>()?;
        Ok(ScenarioInjection {
            base: prob.p_in.clone(),
            parts,
        })
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut out = self.base.clone();
        self.fill(t, &mut out);
        out
    }

    fn fill(&self, t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.base);
        for (idx, d) in &self.parts {
            out[*idx] += d.value(t);
        }
    }
}

impl crate::dynamics::InjectionProfile for ScenarioInjection {
    fn injection(&self, t: f64, out: &mut [f64]) {
        self.fill(t, out)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunSummary {
    pub version: String,
    pub steady_state_time: Option<f64>,
    pub final_omega_inf: f64,
    /// Per area, `sum (d_i - P_in_i)` at the final time.
    pub final_area_imbalance: Vec<f64>,
    pub final_cost: f64,
    pub oracle_cost: f64,
    pub cost_gap: f64,
    pub final_d: Vec<f64>,
    pub oracle_d: Vec<f64>,
    pub d_gap_inf: f64,
    /// Largest excursion beyond load limits and internal virtual-flow limits.
    pub constraint_violation: f64,
    pub min_projected: f64,
    pub rate_fit: Option<RateFit>,
    pub certificate: Option<CertificateReport>,
    pub flags: Vec<String>,
    pub config: ScenarioConfig,
}

pub struct RunOutput {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
    pub oracle: OlcSolution,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    run_scenario_with_stream(cfg, 0)
}

fn run_scenario_with_stream(cfg: &ScenarioConfig, stream: u64) -> Result<RunOutput> {
    cfg.validate()?;
    let prob = load_case(&cfg.case)?;
    let net = &prob.network;
    let ids: Vec<usize> = net.buses().iter().map(|b| b.id).collect();
    let damping = net.damping();
    let mut gains = cfg.gains.build(&damping, prob.incidence.internal.len());
    gains.damping_used = cfg.damping.apply(&ids, &damping);
    let cl = ClosedLoop::new(&prob, gains)?;
    let injection = ScenarioInjection::new(&prob, &cfg.disturbance)?;
    let opts = SimOptions {
        mode: cfg.mode,
        step: cfg.step,
        duration: cfg.duration,
        sampled: cfg.sampled,
        scheme: cfg.scheme,
        decimation: cfg.decimation,
        noise: NoiseModel {
            sigma_omega: cfg.noise.sigma_omega,
            sigma_p: cfg.noise.sigma_p,
        },
        seed: cfg.noise.seed,
        stream,
        alc_enabled: cfg.alc_enabled,
    };
    let x0 = vec![0.0; cl.layout.len()];
    let mut traj = cl.integrate(&x0, &injection, &opts)?;

    let p_final = injection.at(cfg.duration);
    let oracle_prob = prob.clone().with_injections(p_final.clone())?;
    let oracle = solve_olc(&oracle_prob, DEFAULT_TOLERANCE)?;

    // distance to the optimum, in reduced coordinates
    let reduced = ReducedDynamics::from_problem(&oracle_prob)?;
    let eq = reduced.equilibrium_from_solution(&p_final, &oracle)?;
    let g = cl.layout.generators;
    let zs: Vec<Vec<f64>> = traj.states.iter().map(|x| reduced_state(&cl, x, cfg.mode)).collect();
    traj.distance = zs
        .iter()
        .zip(&traj.omega)
        .map(|(z, w)| eq.distance(z, &w[g..]))
        .collect();

    let certificate = if cfg.certify {
        let sel = select_alpha_beta(&prob.incidence, &prob.costs, &damping, &SearchOptions::default())?;
        traj.lyapunov = zs
            .iter()
            .map(|z| lyapunov_value(&sel.certificate, z, &eq.z_star))
            .collect::<Result<_>>()?;
        Some(sel.report())
    } else {
        None
    };

    let rate_fit = if cfg.fit_rate {
        Some(fit_exponential_rate(&traj.times, &traj.distance, None)?)
    } else {
        None
    };

    let final_d = traj.applied.last().cloned().unwrap_or_default();
    let final_omega_inf = traj
        .final_omega()
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let final_area_imbalance = net
        .area_members()
        .iter()
        .map(|m| m.iter().map(|&i| final_d[i] - p_final[i]).sum())
        .collect();
    let final_cost = prob.costs.total(&final_d);
    let mut violation: f64 = 0.0;
    for i in 0..final_d.len() {
        violation = violation.max(final_d[i] - prob.d_max[i]).max(prob.d_min[i] - final_d[i]);
    }
    let psi = &traj.final_state()[cl.layout.psi()];
    let mut vflow = vec![0.0; cl.layout.internal];
    prob.incidence.virtual_flows(psi, &mut vflow);
    for (k, f) in vflow.iter().enumerate() {
        violation = violation.max(f - cl.p_max[k]).max(cl.p_min[k] - f);
    }
    let d_gap_inf = final_d
        .iter()
        .zip(&oracle.d)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));

    let mut flags = traj.flags.clone();
    if final_omega_inf > RESTORATION_THRESHOLD {
        flags.push(NOT_RESTORED.to_string());
    }
    let summary = RunSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        steady_state_time: traj.detect_steady_state(cfg.steady_window, cfg.steady_tol),
        final_omega_inf,
        final_area_imbalance,
        final_cost,
        oracle_cost: oracle.objective,
        cost_gap: (final_cost - oracle.objective).abs(),
        final_d,
        oracle_d: oracle.d.clone(),
        d_gap_inf,
        constraint_violation: violation.max(0.0),
        min_projected: traj.min_projected(),
        rate_fit,
        certificate,
        flags,
        config: cfg.clone(),
    };
    Ok(RunOutput {
        trajectory: traj,
        summary,
        oracle,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "snake_case")]
pub enum SweepAxis {
    DampingScale(Vec<f64>),
    SigmaOmega(Vec<f64>),
    SigmaP(Vec<f64>),
}

impl SweepAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            SweepAxis::DampingScale(v) | SweepAxis::SigmaOmega(v) | SweepAxis::SigmaP(v) => v,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::DampingScale(_) => "damping_scale",
            SweepAxis::SigmaOmega(_) => "sigma_omega",
            SweepAxis::SigmaP(_) => "sigma_p",
        }
    }

    /// Parses `name=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, list) = text
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("axis `{text}` must look like name=v1,v2")))?;
        let values = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("axis value `{s}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match name.trim() {
            "damping_scale" | "k" => Ok(SweepAxis::DampingScale(values)),
            "sigma_omega" => Ok(SweepAxis::SigmaOmega(values)),
            "sigma_p" => Ok(SweepAxis::SigmaP(values)),
            other => Err(Error::Config(format!(
                "unknown axis `{other}` (expected damping_scale, sigma_omega or sigma_p)"
            ))),
        }
    }

    fn apply(&self, cfg: &mut ScenarioConfig, v: f64) {
        match self {
            SweepAxis::DampingScale(_) => cfg.damping.scale = Some(v),
            SweepAxis::SigmaOmega(_) => cfg.noise.sigma_omega = v,
            SweepAxis::SigmaP(_) => cfg.noise.sigma_p = v,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SweepRun {
    pub value: f64,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

/// Independent runs along one axis, in axis order. Run `k` draws noise from
/// stream `k + 1` of the base seed; a failing run is recorded and the rest
/// continue.
pub fn run_sweep(base: &ScenarioConfig, axis: &SweepAxis) -> Result<Vec<SweepRun>> {
    if axis.values().is_empty() {
        return Err(Error::Config(format!("sweep axis `{}` has no values", axis.name())));
    }
    base.validate()?;
    Ok(axis
        .values()
        .par_iter()
        .enumerate()
        .map(|(k, &v)| {
            let mut cfg = base.clone();
            axis.apply(&mut cfg, v);
            match run_scenario_with_stream(&cfg, k as u64 + 1) {
                Ok(out) => SweepRun {
                    value: v,
                    summary: Some(out.summary),
                    error: None,
                },
                Err(e) => SweepRun {
                    value: v,
                    summary: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `trajectory.csv`, `summary.json` and, when present,
/// `certificate.json` into an existing directory.
pub fn export(traj: &Trajectory, summary: &RunSummary, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if !out_dir.is_dir() {
        return Err(Error::io(
            out_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    let mut written = Vec::new();
    let csv = out_dir.join("trajectory.csv");
    traj.write_csv_file(&csv)?;
    written.push(csv);
    let json = out_dir.join("summary.json");
    write_json(&json, summary)?;
    written.push(json);
    if let Some(cert) = &summary.certificate {
        let path = out_dir.join("certificate.json");
        write_json(&path, cert)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes a sweep's summaries as `sweep.json`.
pub fn export_sweep(runs: &[SweepRun], axis: &SweepAxis, out_dir: &Path) -> Result<PathBuf> {
    if !out_dir.is_dir() {
        return Err(Error::io(
            out_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    #[derive(Serialize)]
    struct Sweep<'a> {
        axis: &'static str,
        runs: &'a [SweepRun],
    }
    let path = out_dir.join("sweep.json");
    write_json(
        &path,
        &Sweep {
            axis: axis.name(),
            runs,
        },
    )?;
    Ok(path)
}
