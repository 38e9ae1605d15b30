//! Closed-loop integration: swing dynamics plus the distributed load
//! controller, in its algorithmic form (`Alc`), the primal-dual gradient form
//! it is derived from (`Gradient`), and the form with algebraic load
//! commands (`Stationary`).

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::netmodel::IncidenceSet;
use crate::olc::{CostModel, OlcProblem, OlcSolution};

/// Any state entry beyond this magnitude counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Alc,
    Gradient,
    Stationary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    #[default]
    Rk4,
}

/// `x` if `x > 0` or `y > 0`, else 0.
pub fn positive_projection(x: f64, y: f64) -> f64 {
    debug_assert!(y >= 0.0, "projection anchor must be nonnegative");
    if x > 0.0 || y > 0.0 {
        x
    } else {
        0.0
    }
}

/// Same gate, tolerant of anchors that dipped below zero inside a step.
fn project(x: f64, y: f64) -> f64 {
    if x > 0.0 || y > 0.0 {
        x
    } else {
        0.0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControlGains {
    pub eps_d: Vec<f64>,
    pub eps_psi: Vec<f64>,
    pub eps_gamma_plus: Vec<f64>,
    pub eps_gamma_minus: Vec<f64>,
    pub eps_mu: Vec<f64>,
    /// Indexed by internal line.
    pub eps_sigma_plus: Vec<f64>,
    pub eps_sigma_minus: Vec<f64>,
    pub k: Vec<f64>,
    pub control_period: f64,
    /// Damping the controller believes in; the plant always uses the true one.
    pub damping_used: Vec<f64>,
}

impl ControlGains {
    /// Every step size equal to `eps`, every `K_i` equal to `k`.
    pub fn uniform(damping: &[f64], internal_lines: usize, eps: f64, k: f64, control_period: f64) -> Self {
        let n = damping.len();
        ControlGains {
            eps_d: vec![eps; n],
            eps_psi: vec![eps; n],
            eps_gamma_plus: vec![eps; n],
            eps_gamma_minus: vec![eps; n],
            eps_mu: vec![eps; n],
            eps_sigma_plus: vec![eps; internal_lines],
            eps_sigma_minus: vec![eps; internal_lines],
            k: vec![k; n],
            control_period,
            damping_used: damping.to_vec(),
        }
    }

    /// `D~ = k D`.
    pub fn with_damping_scale(mut self, damping: &[f64], k: f64) -> Self {
        self.damping_used = damping.iter().map(|d| k * d).collect();
        self
    }

    /// `D~ = D + delta`.
    pub fn with_damping_offsets(mut self, damping: &[f64], delta: &[f64]) -> Self {
        self.damping_used = damping.iter().zip(delta).map(|(d, a)| d + a).collect();
        self
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        for (what, v, len) in [
            ("eps_d", &self.eps_d, n),
            ("eps_psi", &self.eps_psi, n),
            ("eps_gamma_plus", &self.eps_gamma_plus, n),
            ("eps_gamma_minus", &self.eps_gamma_minus, n),
            ("eps_mu", &self.eps_mu, n),
            ("eps_sigma_plus", &self.eps_sigma_plus, m),
            ("eps_sigma_minus", &self.eps_sigma_minus, m),
            ("k", &self.k, n),
        ] {
            check_len(what, len, v.len())?;
            if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::Config(format!("{what} must be positive and finite")));
            }
        }
        check_len("damping_used", n, self.damping_used.len())?;
        if self.damping_used.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("damping_used must be finite".into()));
        }
        if !(self.control_period > 0.0) {
            return Err(Error::Config("control_period must be positive".into()));
        }
        Ok(())
    }
}

/// Offsets of each block in the flat state vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub generators: usize,
    pub lines: usize,
    pub buses: usize,
    pub internal: usize,
}

impl Layout {
    pub fn omega(&self) -> std::ops::Range<usize> {
        0..self.generators
    }
    pub fn flow(&self) -> std::ops::Range<usize> {
        let s = self.generators;
        s..s + self.lines
    }
    pub fn d(&self) -> std::ops::Range<usize> {
        let s = self.generators + self.lines;
        s..s + self.buses
    }
    pub fn psi(&self) -> std::ops::Range<usize> {
        let s = self.d().end;
        s..s + self.buses
    }
    pub fn gamma_plus(&self) -> std::ops::Range<usize> {
        let s = self.psi().end;
        s..s + self.buses
    }
    pub fn gamma_minus(&self) -> std::ops::Range<usize> {
        let s = self.gamma_plus().end;
        s..s + self.buses
    }
    /// `r` in the algorithmic and stationary modes, `mu` in gradient mode.
    pub fn r(&self) -> std::ops::Range<usize> {
        let s = self.gamma_minus().end;
        s..s + self.buses
    }
    pub fn sigma_plus(&self) -> std::ops::Range<usize> {
        let s = self.r().end;
        s..s + self.internal
    }
    pub fn sigma_minus(&self) -> std::ops::Range<usize> {
        let s = self.sigma_plus().end;
        s..s + self.internal
    }
    pub fn len(&self) -> usize {
        self.sigma_minus().end
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Time-varying uncontrollable injection.
pub trait InjectionProfile: Sync {
    fn injection(&self, t: f64, out: &mut [f64]);
}

#[derive(Clone, Debug)]
pub struct ConstantInjection(pub Vec<f64>);

impl InjectionProfile for ConstantInjection {
    fn injection(&self, _t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

impl<F: Fn(f64, &mut [f64]) + Sync> InjectionProfile for F {
    fn injection(&self, t: f64, out: &mut [f64]) {
        self(t, out)
    }
}

/// `omega_L = D_L^{-1} (-d_L - (A P)_L + P_in_L)`.
pub fn omega_load(d: &[f64], outflow: &[f64], p_in: &[f64], damping: &[f64]) -> Vec<f64> {
    d.iter()
        .zip(outflow)
        .zip(p_in.iter().zip(damping))
        .map(|((d, a), (p, dd))| (p - d - a) / dd)
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_omega: f64,
    pub sigma_p: f64,
}

impl NoiseModel {
    pub fn is_zero(&self) -> bool {
        self.sigma_omega == 0.0 && self.sigma_p == 0.0
    }
}

/// Independent stream per run, derived from the master seed.
pub fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Adds i.i.d. Gaussian measurement noise to frequencies and flows.
pub fn apply_noise(omega: &[f64], flows: &[f64], noise: &NoiseModel, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut w = omega.to_vec();
    let mut p = flows.to_vec();
    add_noise(&mut w, noise.sigma_omega, rng);
    add_noise(&mut p, noise.sigma_p, rng);
    (w, p)
}

fn add_noise(v: &mut [f64], sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
        for x in v.iter_mut() {
            *x += normal.sample(rng);
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimOptions {
    pub mode: Mode,
    pub step: f64,
    pub duration: f64,
    /// Zero-order-hold measurements and load commands per control period.
    pub sampled: bool,
    pub scheme: Scheme,
    /// Store every `decimation`-th step (the final state is always stored).
    pub decimation: usize,
    pub noise: NoiseModel,
    pub seed: u64,
    pub stream: u64,
    /// When false the controller is frozen and loads stay at zero.
    pub alc_enabled: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            mode: Mode::Alc,
            step: 1e-3,
            duration: 60.0,
            sampled: true,
            scheme: Scheme::Rk4,
            decimation: 100,
            noise: NoiseModel::default(),
            seed: 0,
            stream: 0,
            alc_enabled: true,
        }
    }
}

/// Plant and controller parameters with preallocated scratch space.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub inc: Arc<IncidenceSet>,
    pub layout: Layout,
    pub inertia: Vec<f64>,
    pub damping: Vec<f64>,
    pub costs: CostModel,
    pub d_min: Vec<f64>,
    pub d_max: Vec<f64>,
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
    pub gains: ControlGains,
    pub bus_ids: Vec<usize>,
}

/// What the controller sees and what the plant receives during one stage.
struct Inputs<'a> {
    p_in: &'a [f64],
    held: Option<&'a Held>,
    noise_omega: Option<&'a [f64]>,
    noise_p: Option<&'a [f64]>,
    mode: Mode,
    enabled: bool,
}

#[derive(Clone, Debug)]
struct Held {
    omega: Vec<f64>,
    flows: Vec<f64>,
    d: Vec<f64>,
}

#[derive(Default, Clone, Debug)]
struct Scratch {
    omega: Vec<f64>,
    outflow: Vec<f64>,
    meas_outflow: Vec<f64>,
    mu: Vec<f64>,
    s_mu: Vec<f64>,
    s_psi: Vec<f64>,
    vflow: Vec<f64>,
    d_ctrl: Vec<f64>,
    meas_omega: Vec<f64>,
    meas_flow: Vec<f64>,
}

impl ClosedLoop {
    pub fn new(prob: &OlcProblem, gains: ControlGains) -> Result<Self> {
        let inc = prob.incidence.clone();
        let net = &prob.network;
        let n = net.bus_count();
        let m = inc.internal.len();
        gains.validate(n, m)?;
        let inertia: Vec<f64> = net
            .buses()
            .iter()
            .take(inc.gen_count)
            .map(|b| b.inertia.expect("validated generator inertia"))
            .collect();
        let lines = net.lines();
        let layout = Layout {
            generators: inc.gen_count,
            lines: inc.line_count(),
            buses: n,
            internal: m,
        };
        Ok(ClosedLoop {
            p_min: inc.internal.iter().map(|&k| lines[k].lower()).collect(),
            p_max: inc.internal.iter().map(|&k| lines[k].upper()).collect(),
            inc,
            layout,
            inertia,
            damping: net.damping(),
            costs: prob.costs.clone(),
            d_min: prob.d_min.clone(),
            d_max: prob.d_max.clone(),
            gains,
            bus_ids: net.buses().iter().map(|b| b.id).collect(),
        })
    }

    fn gen_count(&self) -> usize {
        self.layout.generators
    }

    /// Step-size ratio `eps_mu / eps_omega = eps_mu * M` for generator `i`.
    fn mu_omega_ratio(&self, i: usize) -> f64 {
        self.gains.eps_mu[i] * self.inertia[i]
    }

    /// `mu` reconstructed from measured frequency and `r`.
    pub fn mu_from_r(&self, omega: &[f64], r: &[f64], out: &mut [f64]) {
        let g = self.gen_count();
        for i in 0..r.len() {
            let base = self.gains.eps_mu[i] / self.gains.k[i] * r[i];
            out[i] = if i < g { self.mu_omega_ratio(i) * omega[i] + base } else { base };
        }
    }

    /// Inverse of [`Self::mu_from_r`].
    pub fn r_from_mu(&self, omega: &[f64], mu: &[f64]) -> Vec<f64> {
        let g = self.gen_count();
        (0..mu.len())
            .map(|i| {
                let k = self.gains.k[i];
                let mut r = k / self.gains.eps_mu[i] * mu[i];
                if i < g {
                    r -= k * self.inertia[i] * omega[i];
                }
                r
            })
            .collect()
    }

    /// Swing and flow derivatives for a given applied load vector.
    pub fn plant_derivative(&self, omega_g: &[f64], flows: &[f64], d: &[f64], p_in: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.layout.buses;
        let g = self.gen_count();
        let mut outflow = vec![0.0; n];
        self.inc.outflow(flows, &mut outflow);
        let mut omega = omega_g.to_vec();
        omega.extend(omega_load(&d[g..], &outflow[g..], &p_in[g..], &self.damping[g..]));
        let domega = (0..g)
            .map(|i| (p_in[i] - self.damping[i] * omega[i] - d[i] - outflow[i]) / self.inertia[i])
            .collect();
        let dflow = (0..flows.len())
            .map(|k| self.inc.susceptance[k] * (omega[self.inc.from[k]] - omega[self.inc.to[k]]))
            .collect();
        (domega, dflow)
    }

    /// Frequencies at every bus given the plant state and applied loads.
    pub fn bus_frequencies(&self, x: &[f64], d_applied: &[f64], p_in: &[f64]) -> Vec<f64> {
        let g = self.gen_count();
        let mut outflow = vec![0.0; self.layout.buses];
        self.inc.outflow(&x[self.layout.flow()], &mut outflow);
        let mut omega = x[self.layout.omega()].to_vec();
        omega.extend(omega_load(&d_applied[g..], &outflow[g..], &p_in[g..], &self.damping[g..]));
        omega
    }

    /// Algorithmic controller derivative (d, psi, gamma, r, sigma) given
    /// measured frequencies and flows; `dx` must have the full state length,
    /// only controller slots are written.
    pub fn controller_derivative(&self, x: &[f64], meas_omega: &[f64], meas_flow: &[f64], dx: &mut [f64]) {
        let mut scratch = Scratch::default();
        self.prepare(&mut scratch);
        scratch.meas_omega.copy_from_slice(meas_omega);
        scratch.meas_flow.copy_from_slice(meas_flow);
        let d = x[self.layout.d()].to_vec();
        scratch.d_ctrl.copy_from_slice(&d);
        self.controller_part(x, Mode::Alc, None, &mut scratch, dx);
    }

    /// Reference primal-dual gradient derivative of the full state, with
    /// `mu` stored in the `r` slots.
    pub fn gradient_derivative(&self, x: &[f64], p_in: &[f64], dx: &mut [f64]) {
        let mut scratch = Scratch::default();
        self.prepare(&mut scratch);
        let inputs = Inputs {
            p_in,
            held: None,
            noise_omega: None,
            noise_p: None,
            mode: Mode::Gradient,
            enabled: true,
        };
        self.eval(x, &inputs, &mut scratch, dx);
    }

    /// Stationary-form derivative; returns the algebraic load vector.
    pub fn stationary_derivative(&self, x: &[f64], p_in: &[f64], dx: &mut [f64]) -> Vec<f64> {
        let mut scratch = Scratch::default();
        self.prepare(&mut scratch);
        let inputs = Inputs {
            p_in,
            held: None,
            noise_omega: None,
            noise_p: None,
            mode: Mode::Stationary,
            enabled: true,
        };
        self.eval(x, &inputs, &mut scratch, dx);
        scratch.d_ctrl
    }

    /// Full derivative for the algorithmic mode with exact measurements.
    pub fn alc_derivative(&self, x: &[f64], p_in: &[f64], dx: &mut [f64]) {
        let mut scratch = Scratch::default();
        self.prepare(&mut scratch);
        let inputs = Inputs {
            p_in,
            held: None,
            noise_omega: None,
            noise_p: None,
            mode: Mode::Alc,
            enabled: true,
        };
        self.eval(x, &inputs, &mut scratch, dx);
    }

    fn prepare(&self, s: &mut Scratch) {
        let n = self.layout.buses;
        let e = self.layout.lines;
        let m = self.layout.internal;
        for v in [
            &mut s.omega,
            &mut s.outflow,
            &mut s.meas_outflow,
            &mut s.mu,
            &mut s.s_mu,
            &mut s.s_psi,
            &mut s.d_ctrl,
            &mut s.meas_omega,
        ] {
            v.resize(n, 0.0);
        }
        s.meas_flow.resize(e, 0.0);
        s.vflow.resize(m, 0.0);
    }

    /// Algebraic load command of the stationary form.
    fn stationary_loads(&self, x: &[f64], inputs: &Inputs, s: &mut Scratch) {
        let l = self.layout;
        let g = l.generators;
        let r = &x[l.r()];
        match inputs.held {
            Some(h) => {
                self.mu_from_r(&h.omega, r, &mut s.mu);
                for i in 0..l.buses {
                    s.d_ctrl[i] = self.costs.bus(i).inverse_derivative(h.omega[i] + s.mu[i]);
                }
            }
            None => {
                self.inc.outflow(&x[l.flow()], &mut s.outflow);
                for i in 0..l.buses {
                    let xi = inputs.noise_omega.map_or(0.0, |v| v[i]);
                    let cost = self.costs.bus(i);
                    if i < g {
                        let w = x[i] + xi;
                        let mu = self.mu_omega_ratio(i) * w + self.gains.eps_mu[i] / self.gains.k[i] * r[i];
                        s.d_ctrl[i] = cost.inverse_derivative(w + mu);
                    } else {
                        // measured omega_L depends on d itself
                        let dd = self.damping[i];
                        let p = inputs.p_in[i] - s.outflow[i];
                        let mu = self.gains.eps_mu[i] / self.gains.k[i] * r[i];
                        s.d_ctrl[i] = cost.solve_with_damping(dd, p / dd + xi + mu);
                    }
                }
            }
        }
    }

    fn eval(&self, x: &[f64], inputs: &Inputs, s: &mut Scratch, dx: &mut [f64]) {
        let l = self.layout;
        let g = l.generators;
        let n = l.buses;

        if !inputs.enabled {
            s.d_ctrl.iter_mut().for_each(|v| *v = 0.0);
        } else if inputs.mode == Mode::Stationary {
            self.stationary_loads(x, inputs, s);
        } else {
            s.d_ctrl.copy_from_slice(&x[l.d()]);
        }
        let d_plant: &[f64] = match (inputs.held, inputs.enabled) {
            (Some(h), true) => &h.d,
            _ => &s.d_ctrl,
        };

        let flows = &x[l.flow()];
        self.inc.outflow(flows, &mut s.outflow);
        for i in 0..n {
            s.omega[i] = if i < g {
                x[i]
            } else {
                (inputs.p_in[i] - d_plant[i] - s.outflow[i]) / self.damping[i]
            };
        }
        for i in 0..g {
            dx[i] = (inputs.p_in[i] - self.damping[i] * s.omega[i] - d_plant[i] - s.outflow[i]) / self.inertia[i];
        }
        for k in 0..l.lines {
            dx[l.generators + k] = self.inc.susceptance[k] * (s.omega[self.inc.from[k]] - s.omega[self.inc.to[k]]);
        }

        if !inputs.enabled {
            dx[l.d().start..].iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        match inputs.held {
            Some(h) => {
                s.meas_omega.copy_from_slice(&h.omega);
                s.meas_flow.copy_from_slice(&h.flows);
            }
            None => {
                s.meas_omega.copy_from_slice(&s.omega);
                s.meas_flow.copy_from_slice(flows);
                if let Some(xi) = inputs.noise_omega {
                    s.meas_omega.iter_mut().zip(xi).for_each(|(a, b)| *a += b);
                }
                if let Some(xi) = inputs.noise_p {
                    s.meas_flow.iter_mut().zip(xi).for_each(|(a, b)| *a += b);
                }
            }
        }
        self.controller_part(x, inputs.mode, Some(inputs.p_in), s, dx);
    }

    /// Controller derivatives from `s.meas_*` and `s.d_ctrl`.
    fn controller_part(&self, x: &[f64], mode: Mode, p_in: Option<&[f64]>, s: &mut Scratch, dx: &mut [f64]) {
        let l = self.layout;
        let g = l.generators;
        let n = l.buses;
        let gains = &self.gains;
        let psi = &x[l.psi()];
        let gp = &x[l.gamma_plus()];
        let gm = &x[l.gamma_minus()];
        let r = &x[l.r()];
        let sp = &x[l.sigma_plus()];
        let sm = &x[l.sigma_minus()];

        match mode {
            Mode::Gradient => s.mu.copy_from_slice(r),
            _ => self.mu_from_r(&s.meas_omega, r, &mut s.mu),
        }

        let dd = l.d().start;
        for i in 0..n {
            dx[dd + i] = match mode {
                Mode::Stationary => 0.0,
                Mode::Alc => {
                    let eta = if i < g { 1.0 + self.mu_omega_ratio(i) } else { 1.0 };
                    gains.eps_d[i]
                        * (-self.costs.bus(i).derivative(s.d_ctrl[i]) + eta * s.meas_omega[i]
                            + gains.eps_mu[i] / gains.k[i] * r[i]
                            - gp[i]
                            + gm[i])
                }
                Mode::Gradient => {
                    gains.eps_d[i]
                        * (-self.costs.bus(i).derivative(s.d_ctrl[i]) + s.meas_omega[i] + s.mu[i] - gp[i] + gm[i])
                }
            };
        }

        self.inc.virtual_outflow(&s.mu, &mut s.s_mu);
        let mut sigma_net = vec![0.0; n];
        for (slot, &k) in self.inc.internal.iter().enumerate() {
            let f = self.inc.susceptance[k] * (sp[slot] - sm[slot]);
            sigma_net[self.inc.from[k]] += f;
            sigma_net[self.inc.to[k]] -= f;
        }
        let dp = l.psi().start;
        for i in 0..n {
            dx[dp + i] = gains.eps_psi[i] * (s.s_mu[i] - sigma_net[i]);
        }

        let (dgp, dgm) = (l.gamma_plus().start, l.gamma_minus().start);
        for i in 0..n {
            if mode == Mode::Stationary {
                dx[dgp + i] = 0.0;
                dx[dgm + i] = 0.0;
                continue;
            }
            let up = s.d_ctrl[i] - self.d_max[i];
            let down = self.d_min[i] - s.d_ctrl[i];
            dx[dgp + i] = if up.is_finite() { gains.eps_gamma_plus[i] * project(up, gp[i]) } else { 0.0 };
            dx[dgm + i] = if down.is_finite() { gains.eps_gamma_minus[i] * project(down, gm[i]) } else { 0.0 };
        }

        self.inc.virtual_outflow(psi, &mut s.s_psi);
        self.inc.outflow(&s.meas_flow, &mut s.meas_outflow);
        let dr = l.r().start;
        for i in 0..n {
            dx[dr + i] = match mode {
                Mode::Gradient => {
                    let p = p_in.map_or(0.0, |p| p[i]);
                    gains.eps_mu[i]
                        * (p - s.d_ctrl[i] - s.s_psi[i] + (gains.damping_used[i] - self.damping[i]) * s.meas_omega[i])
                }
                _ => gains.k[i] * (gains.damping_used[i] * s.meas_omega[i] + s.meas_outflow[i] - s.s_psi[i]),
            };
        }

        self.inc.virtual_flows(psi, &mut s.vflow);
        let (dsp, dsm) = (l.sigma_plus().start, l.sigma_minus().start);
        for j in 0..l.internal {
            let up = s.vflow[j] - self.p_max[j];
            let down = self.p_min[j] - s.vflow[j];
            dx[dsp + j] = if up.is_finite() { gains.eps_sigma_plus[j] * project(up, sp[j]) } else { 0.0 };
            dx[dsm + j] = if down.is_finite() { gains.eps_sigma_minus[j] * project(down, sm[j]) } else { 0.0 };
        }
    }

    /// Closed-loop equilibrium built from an oracle solution: zero frequency,
    /// minimum-norm physical flows, and `r = K mu / eps_mu` (or `mu` itself in
    /// gradient mode).
    pub fn equilibrium_state(&self, prob: &OlcProblem, sol: &OlcSolution, mode: Mode) -> Vec<f64> {
        let l = self.layout;
        let mut x = vec![0.0; l.len()];
        let balance: Vec<f64> = prob.p_in.iter().zip(&sol.d).map(|(p, d)| p - d).collect();
        let flows = self.inc.min_norm_flows(&balance);
        x[l.flow()].copy_from_slice(flows.as_slice());
        x[l.d()].copy_from_slice(&sol.d);
        x[l.psi()].copy_from_slice(&sol.psi);
        x[l.gamma_plus()].copy_from_slice(&sol.gamma_plus);
        x[l.gamma_minus()].copy_from_slice(&sol.gamma_minus);
        let r = match mode {
            Mode::Gradient => sol.mu.clone(),
            _ => self.r_from_mu(&vec![0.0; l.buses], &sol.mu),
        };
        x[l.r()].copy_from_slice(&r);
        x[l.sigma_plus()].copy_from_slice(&sol.sigma_plus);
        x[l.sigma_minus()].copy_from_slice(&sol.sigma_minus);
        x
    }

    /// Converts an algorithmic-mode state to the matching gradient-mode state.
    pub fn alc_to_gradient(&self, x: &[f64]) -> Vec<f64> {
        let l = self.layout;
        let mut y = x.to_vec();
        let mut omega = vec![0.0; l.buses];
        omega[..l.generators].copy_from_slice(&x[l.omega()]);
        let mut mu = vec![0.0; l.buses];
        self.mu_from_r(&omega, &x[l.r()], &mut mu);
        y[l.r()].copy_from_slice(&mu);
        y
    }

    pub fn gradient_to_alc(&self, y: &[f64]) -> Vec<f64> {
        let l = self.layout;
        let mut x = y.to_vec();
        let mut omega = vec![0.0; l.buses];
        omega[..l.generators].copy_from_slice(&y[l.omega()]);
        let r = self.r_from_mu(&omega, &y[l.r()]);
        x[l.r()].copy_from_slice(&r);
        x
    }

    pub fn integrate(&self, x0: &[f64], profile: &dyn InjectionProfile, opts: &SimOptions) -> Result<Trajectory> {
        let l = self.layout;
        check_len("initial state", l.len(), x0.len())?;
        if !(opts.step > 0.0) || !(opts.duration > opts.step) {
            return Err(Error::Config("need step > 0 and duration > step".into()));
        }
        if opts.decimation == 0 {
            return Err(Error::Config("decimation must be at least 1".into()));
        }
        if !(opts.noise.sigma_omega >= 0.0 && opts.noise.sigma_p >= 0.0) {
            return Err(Error::Config("noise standard deviations must be nonnegative".into()));
        }
        let n = l.buses;
        let h = opts.step;
        let steps = (opts.duration / h).round() as usize;
        let period_steps = ((self.gains.control_period / h).round() as usize).max(1);
        let mut rng = noise_rng(opts.seed, opts.stream);
        let noisy = !opts.noise.is_zero();

        let mut x = x0.to_vec();
        let mut p_in = vec![0.0; n];
        let mut scratch = Scratch::default();
        self.prepare(&mut scratch);
        let mut held: Option<Held> = None;
        let mut xi_omega = vec![0.0; n];
        let mut xi_p = vec![0.0; l.lines];
        let mut k1 = vec![0.0; l.len()];
        let mut k2 = vec![0.0; l.len()];
        let mut k3 = vec![0.0; l.len()];
        let mut k4 = vec![0.0; l.len()];
        let mut tmp = vec![0.0; l.len()];

        let mut traj = Trajectory::new(self, opts.mode);
        let mut stationary_flagged = false;

        for step in 0..=steps {
            let t = step as f64 * h;

            if opts.sampled && opts.alc_enabled && step % period_steps == 0 {
                profile.injection(t, &mut p_in);
                let d_applied = match &held {
                    Some(hd) => hd.d.clone(),
                    None => self.current_loads(&x, &p_in, opts.mode, &mut scratch),
                };
                let omega = self.bus_frequencies(&x, &d_applied, &p_in);
                let (w, p) = if noisy {
                    apply_noise(&omega, &x[l.flow()], &opts.noise, &mut rng)
                } else {
                    (omega, x[l.flow()].to_vec())
                };
                let mut hd = Held {
                    omega: w,
                    flows: p,
                    d: d_applied,
                };
                hd.d = if opts.mode == Mode::Stationary {
                    let inputs = Inputs {
                        p_in: &p_in,
                        held: Some(&hd),
                        noise_omega: None,
                        noise_p: None,
                        mode: opts.mode,
                        enabled: true,
                    };
                    self.stationary_loads(&x, &inputs, &mut scratch);
                    scratch.d_ctrl.clone()
                } else {
                    x[l.d()].to_vec()
                };
                held = Some(hd);
            }
            if opts.mode == Mode::Stationary && opts.alc_enabled {
                let d = match &held {
                    Some(hd) => hd.d.clone(),
                    None => {
                        profile.injection(t, &mut p_in);
                        self.current_loads(&x, &p_in, opts.mode, &mut scratch)
                    }
                };
                x[l.d()].copy_from_slice(&d);
                if !stationary_flagged
                    && d.iter().enumerate().any(|(i, &v)| !(v > self.d_min[i] && v < self.d_max[i]))
                {
                    stationary_flagged = true;
                    traj.flags.push(format!("load command left its limits at t = {t:.3} s"));
                }
            }
            if !opts.alc_enabled {
                x[l.d()].iter_mut().for_each(|v| *v = 0.0);
            }

            if step % opts.decimation == 0 || step == steps {
                profile.injection(t, &mut p_in);
                let d_applied = match (&held, opts.alc_enabled) {
                    (Some(hd), true) => hd.d.clone(),
                    _ => x[l.d()].to_vec(),
                };
                traj.push(self, t, &x, &d_applied, &p_in);
            }
            if step == steps {
                break;
            }

            if noisy && !opts.sampled {
                add_noise_into(&mut xi_omega, opts.noise.sigma_omega, &mut rng);
                add_noise_into(&mut xi_p, opts.noise.sigma_p, &mut rng);
            }
            let stage = |tt: f64, state: &[f64], out: &mut [f64], p_buf: &mut Vec<f64>, sc: &mut Scratch| {
                profile.injection(tt, p_buf);
                let inputs = Inputs {
                    p_in: p_buf,
                    held: if opts.alc_enabled { held.as_ref() } else { None },
                    noise_omega: if noisy && !opts.sampled { Some(&xi_omega) } else { None },
                    noise_p: if noisy && !opts.sampled { Some(&xi_p) } else { None },
                    mode: opts.mode,
                    enabled: opts.alc_enabled,
                };
                self.eval(state, &inputs, sc, out);
            };

            match opts.scheme {
                Scheme::Euler => {
                    stage(t, &x, &mut k1, &mut p_in, &mut scratch);
                    for i in 0..x.len() {
                        x[i] += h * k1[i];
                    }
                }
                Scheme::Rk4 => {
                    stage(t, &x, &mut k1, &mut p_in, &mut scratch);
                    for i in 0..x.len() {
                        tmp[i] = x[i] + 0.5 * h * k1[i];
                    }
                    stage(t + 0.5 * h, &tmp, &mut k2, &mut p_in, &mut scratch);
                    for i in 0..x.len() {
                        tmp[i] = x[i] + 0.5 * h * k2[i];
                    }
                    stage(t + 0.5 * h, &tmp, &mut k3, &mut p_in, &mut scratch);
                    for i in 0..x.len() {
                        tmp[i] = x[i] + h * k3[i];
                    }
                    stage(t + h, &tmp, &mut k4, &mut p_in, &mut scratch);
                    for i in 0..x.len() {
                        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                }
            }
            for range in [l.gamma_plus(), l.gamma_minus(), l.sigma_plus(), l.sigma_minus()] {
                for v in &mut x[range] {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
                return Err(Error::Diverged { time: t + h });
            }
        }
        Ok(traj)
    }

    /// Load vector the controller would command right now.
    fn current_loads(&self, x: &[f64], p_in: &[f64], mode: Mode, s: &mut Scratch) -> Vec<f64> {
        if mode == Mode::Stationary {
            let inputs = Inputs {
                p_in,
                held: None,
                noise_omega: None,
                noise_p: None,
                mode,
                enabled: true,
            };
            self.stationary_loads(x, &inputs, s);
            s.d_ctrl.clone()
        } else {
            x[self.layout.d()].to_vec()
        }
    }
}

fn add_noise_into(v: &mut [f64], sigma: f64, rng: &mut ChaCha8Rng) {
    v.iter_mut().for_each(|x| *x = 0.0);
    add_noise(v, sigma, rng);
}

/// Stored samples of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub mode: Mode,
    pub bus_ids: Vec<usize>,
    /// Line numbers (1-based, in case order) of all lines and internal lines.
    pub line_ids: Vec<usize>,
    pub internal_line_ids: Vec<usize>,
    pub generators: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Frequencies at all buses, generators first.
    pub omega: Vec<Vec<f64>>,
    /// Loads actually applied to the plant.
    pub applied: Vec<Vec<f64>>,
    pub injections: Vec<Vec<f64>>,
    pub cost: Vec<f64>,
    pub distance: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub flags: Vec<String>,
    #[serde(skip)]
    layout: Option<Layout>,
}

impl Trajectory {
    fn new(sys: &ClosedLoop, mode: Mode) -> Self {
        Trajectory {
            mode,
            bus_ids: sys.bus_ids.clone(),
            line_ids: (1..=sys.layout.lines).collect(),
            internal_line_ids: sys.inc.internal.iter().map(|k| k + 1).collect(),
            generators: sys.layout.generators,
            times: Vec::new(),
            states: Vec::new(),
            omega: Vec::new(),
            applied: Vec::new(),
            injections: Vec::new(),
            cost: Vec::new(),
            distance: Vec::new(),
            lyapunov: Vec::new(),
            flags: Vec::new(),
            layout: Some(sys.layout),
        }
    }

    fn push(&mut self, sys: &ClosedLoop, t: f64, x: &[f64], d_applied: &[f64], p_in: &[f64]) {
        self.times.push(t);
        self.states.push(x.to_vec());
        self.omega.push(sys.bus_frequencies(x, d_applied, p_in));
        self.applied.push(d_applied.to_vec());
        self.injections.push(p_in.to_vec());
        self.cost.push(sys.costs.total(&x[sys.layout.d()]));
    }

    pub fn layout(&self) -> Layout {
        self.layout.expect("trajectory built by integrate")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_omega(&self) -> &[f64] {
        self.omega.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_loads(&self) -> &[f64] {
        let l = self.layout();
        &self.final_state()[l.d()]
    }

    /// Minimum over all samples of every gamma and sigma entry.
    pub fn min_projected(&self) -> f64 {
        let l = self.layout();
        self.states
            .iter()
            .flat_map(|x| x[l.gamma_plus().start..l.r().start].iter().chain(&x[l.sigma_plus().start..]))
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn detect_steady_state(&self, window: f64, tol: f64) -> Option<f64> {
        detect_steady_state(&self.times, &self.states, window, tol)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let r = if self.mode == Mode::Gradient { "mu" } else { "r" };
        let mut h = vec!["time".to_string()];
        h.extend(self.bus_ids.iter().map(|b| format!("omega_{b}")));
        h.extend(self.line_ids.iter().map(|k| format!("P_{k}")));
        h.extend(self.bus_ids.iter().map(|b| format!("d_{b}")));
        h.extend(self.bus_ids.iter().map(|b| format!("psi_{b}")));
        h.extend(self.bus_ids.iter().map(|b| format!("{r}_{b}")));
        h.extend(self.bus_ids.iter().map(|b| format!("gammaP_{b}")));
        h.extend(self.bus_ids.iter().map(|b| format!("gammaM_{b}")));
        h.extend(self.internal_line_ids.iter().map(|k| format!("sigmaP_{k}")));
        h.extend(self.internal_line_ids.iter().map(|k| format!("sigmaM_{k}")));
        h
    }

    /// One row per stored sample, in header order.
    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        let l = self.layout();
        (0..self.len())
            .map(|k| {
                let x = &self.states[k];
                let mut row = vec![self.times[k]];
                row.extend(&self.omega[k]);
                row.extend(&x[l.flow()]);
                row.extend(&x[l.d()]);
                row.extend(&x[l.psi()]);
                row.extend(&x[l.r()]);
                row.extend(&x[l.gamma_plus()]);
                row.extend(&x[l.gamma_minus()]);
                row.extend(&x[l.sigma_plus()]);
                row.extend(&x[l.sigma_minus()]);
                row
            })
            .collect()
    }

    /// Writes the CSV with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::Config(format!("csv write failed: {e}"));
        w.write_record(self.csv_header()).map_err(to_err)?;
        for row in self.csv_rows() {
            w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::Config(format!("csv flush failed: {e}")))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Reads a trajectory CSV back as (header, rows).
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let parse_err = |m: String| Error::Parse {
        path: path.to_path_buf(),
        message: m,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| parse_err(e.to_string()))?;
    let header = r
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| parse_err(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Earliest stored time after which the finite-difference rate of every
/// state entry stays at or below `tol`, provided at least `window` seconds
/// of trajectory follow it.
pub fn detect_steady_state(times: &[f64], states: &[Vec<f64>], window: f64, tol: f64) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let end = *times.last().expect("nonempty");
    let rates: Vec<f64> = (1..times.len())
        .map(|k| {
            let dt = times[k] - times[k - 1];
            states[k]
                .iter()
                .zip(&states[k - 1])
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs() / dt))
        })
        .collect();
    let mut first_quiet = None;
    for k in (0..rates.len()).rev() {
        if rates[k] <= tol {
            first_quiet = Some(k);
        } else {
            break;
        }
    }
    let k = first_quiet?;
    let t = times[k];
    (end - t >= window).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Bus, Line, PowerNetwork};
    use crate::olc::{solve_olc, DEFAULT_TOLERANCE};

    fn two_bus_problem(p_in: (f64, f64)) -> OlcProblem {
        let net = PowerNetwork::new(
            vec![
                Bus::generator(1, 1, 1.0, 1.0).with_cost(1.0, -1.0, 1.0),
                Bus::load(2, 1, 1.0).with_cost(1.0, -1.0, 1.0),
            ],
            vec![Line::new(1, 2, 5.0)],
            vec![],
            100.0,
        );
        OlcProblem::from_network(net)
            .unwrap()
            .with_injections(vec![p_in.0, p_in.1])
            .unwrap()
    }

    fn system(prob: &OlcProblem) -> ClosedLoop {
        let gains = ControlGains::uniform(&prob.network.damping(), prob.incidence.internal.len(), 0.5, 0.5, 0.25);
        ClosedLoop::new(prob, gains).unwrap()
    }

    #[test]
    fn projection_definition() {
        assert_eq!(positive_projection(-2.0, 0.0), 0.0);
        assert_eq!(positive_projection(-2.0, 1.0), -2.0);
        assert_eq!(positive_projection(3.0, 0.0), 3.0);
    }

    #[test]
    fn omega_load_formula() {
        let w = omega_load(&[0.2], &[0.1], &[0.5], &[1.0]);
        assert!((w[0] - 0.2).abs() < 1e-15);
        assert_eq!(omega_load(&[0.0], &[0.0], &[0.0], &[2.0]), vec![0.0]);
    }

    #[test]
    fn plant_single_generator_imbalance() {
        let net = PowerNetwork::new(
            vec![Bus::generator(1, 1, 2.0, 1.0), Bus::load(2, 1, 1.0)],
            vec![Line::new(1, 2, 1.0)],
            vec![],
            100.0,
        );
        let prob = OlcProblem::from_network(net).unwrap();
        let sys = system(&prob);
        // imbalance at the generator: p_in - D w - d - outflow = -0.4
        let (dw, _) = sys.plant_derivative(&[0.0], &[0.0], &[0.4, 0.0], &[0.0, 0.0]);
        assert!((dw[0] + 0.2).abs() < 1e-15);
        let (dw, dp) = sys.plant_derivative(&[0.3], &[0.0], &[0.0, -0.3], &[0.0, 0.0]);
        assert!(dp[0].abs() < 1e-15, "uniform frequency moves no flow: {dw:?} {dp:?}");
    }

    #[test]
    fn equilibrium_is_fixed_point_in_every_mode() {
        let prob = two_bus_problem((0.4, 0.0));
        let sol = solve_olc(&prob, DEFAULT_TOLERANCE).unwrap();
        let sys = system(&prob);
        let mut dx = vec![0.0; sys.layout.len()];
        for mode in [Mode::Alc, Mode::Gradient] {
            let x = sys.equilibrium_state(&prob, &sol, mode);
            match mode {
                Mode::Alc => sys.alc_derivative(&x, &prob.p_in, &mut dx),
                _ => sys.gradient_derivative(&x, &prob.p_in, &mut dx),
            }
            assert!(dx.iter().all(|v| v.abs() <= 1e-9), "{mode:?}: {dx:?}");
        }
        let x = sys.equilibrium_state(&prob, &sol, Mode::Stationary);
        let d = sys.stationary_derivative(&x, &prob.p_in, &mut dx);
        assert!(dx.iter().all(|v| v.abs() <= 1e-9));
        assert!((d[0] - 0.2).abs() < 1e-9 && (d[1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn gamma_projection_inactive_below_limit() {
        let prob = two_bus_problem((0.4, 0.0));
        let sys = system(&prob);
        let l = sys.layout;
        let mut x = vec![0.0; l.len()];
        x[l.d()].copy_from_slice(&[0.5, -0.5]);
        let mut dx = vec![0.0; l.len()];
        sys.alc_derivative(&x, &prob.p_in, &mut dx);
        assert_eq!(&dx[l.gamma_plus()], &[0.0, 0.0]);
        assert_eq!(&dx[l.gamma_minus()], &[0.0, 0.0]);
    }

    #[test]
    fn r_still_when_balanced_and_at_nominal_frequency() {
        let prob = two_bus_problem((0.0, 0.0));
        let sys = system(&prob);
        let l = sys.layout;
        let x = vec![0.0; l.len()];
        let mut dx = vec![1.0; l.len()];
        sys.controller_derivative(&x, &[0.0, 0.0], &[0.0], &mut dx);
        assert_eq!(&dx[l.r()], &[0.0, 0.0]);
    }

    #[test]
    fn gradient_mu_rate_tracks_overshoot() {
        let prob = two_bus_problem((0.4, 0.0));
        let sys = system(&prob);
        let l = sys.layout;
        let mut x = vec![0.0; l.len()];
        // bus 2 virtual balance: p_in - d - S psi = -delta with delta = 0.05
        x[l.d()].copy_from_slice(&[0.4, 0.05]);
        let mut dx = vec![0.0; l.len()];
        sys.gradient_derivative(&x, &prob.p_in, &mut dx);
        assert!((dx[l.r().start + 1] + 0.5 * 0.05).abs() < 1e-15);
    }

    #[test]
    fn stationary_quadratic_inverse() {
        let c = crate::olc::LoadCost::Quadratic { theta: 1.0 };
        assert!((c.inverse_derivative(0.4) - 0.2).abs() < 1e-15);
        assert_eq!(c.inverse_derivative(0.0), 0.0);
    }

    #[test]
    fn energy_bookkeeping() {
        let prob = two_bus_problem((0.3, -0.1));
        let sys = system(&prob);
        let l = sys.layout;
        let x: Vec<f64> = (0..l.len()).map(|i| 0.01 * (i as f64 + 1.0).sin()).collect();
        let mut dx = vec![0.0; l.len()];
        sys.alc_derivative(&x, &prob.p_in, &mut dx);
        let omega = sys.bus_frequencies(&x, &x[l.d()], &prob.p_in);
        let mut total = 0.0;
        for i in 0..l.generators {
            total += sys.inertia[i] * dx[i];
        }
        for i in 0..l.buses {
            total += sys.damping[i] * omega[i] + x[l.d()][i] - prob.p_in[i];
        }
        assert!(total.abs() < 1e-14, "{total}");
    }

    #[test]
    fn zero_disturbance_stays_zero() {
        let prob = two_bus_problem((0.0, 0.0));
        let sys = system(&prob);
        let x0 = vec![0.0; sys.layout.len()];
        let opts = SimOptions {
            duration: 2.0,
            ..SimOptions::default()
        };
        let traj = sys.integrate(&x0, &ConstantInjection(vec![0.0, 0.0]), &opts).unwrap();
        assert!(traj.states.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_is_reproducible_and_calibrated() {
        let noise = NoiseModel {
            sigma_omega: 0.0,
            sigma_p: 0.0,
        };
        let (w, p) = apply_noise(&[0.1, 0.2], &[0.3], &noise, &mut noise_rng(1, 0));
        assert_eq!((w, p), (vec![0.1, 0.2], vec![0.3]));

        let noise = NoiseModel {
            sigma_omega: 0.1,
            sigma_p: 0.0,
        };
        let a = apply_noise(&[0.0; 5], &[0.0], &noise, &mut noise_rng(7, 3));
        let b = apply_noise(&[0.0; 5], &[0.0], &noise, &mut noise_rng(7, 3));
        assert_eq!(a, b);
        let c = apply_noise(&[0.0; 5], &[0.0], &noise, &mut noise_rng(7, 4));
        assert_ne!(a, c);

        let (draws, _) = apply_noise(&vec![0.0; 100_000], &[], &noise, &mut noise_rng(11, 0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((var / 0.01 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn steady_state_detection() {
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.1).collect();
        let constant: Vec<Vec<f64>> = times.iter().map(|_| vec![1.0]).collect();
        assert_eq!(detect_steady_state(&times, &constant, 1.0, 1e-9), Some(0.0));

        let times: Vec<f64> = (0..=40_000).map(|k| k as f64 * 1e-3).collect();
        let decay: Vec<Vec<f64>> = times.iter().map(|t| vec![(-t).exp()]).collect();
        let t = detect_steady_state(&times, &decay, 1.0, 1e-6).unwrap();
        assert!((t - 1e6_f64.ln()).abs() < 1e-2, "{t}");

        let grow: Vec<Vec<f64>> = times.iter().map(|t| vec![t.exp()]).collect();
        assert_eq!(detect_steady_state(&times, &grow, 1.0, 1e-6), None);
    }
}
