//! Quadratic Lyapunov certificates for the limit-free closed loop.
//!
//! The certified system is the reduced dynamics over
//! `z = (d, P, psi, omega_G, mu)` with unit step sizes:
//!
//! ```text
//! d'       = -c'(d) + omega + mu
//! P'       = A^T omega
//! psi'     = S mu
//! omega_G' = P_in_G - d_G - D_G omega_G - (A P)_G
//! mu'      = P_in - d - S psi
//! ```
//!
//! with `omega_L` eliminated algebraically. Linearising `c'` around an
//! equilibrium gives `z' = W(d) (z - z*)`; a certificate is a pair
//! `(alpha, beta)` for which `Q` and `R(d) = -W^T Q - Q W - rho Q` are
//! positive semidefinite, `rho = beta^2 / alpha`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{ClosedLoop, ControlGains, InjectionProfile, Mode};
use crate::error::{check_len, Error, Result};
use crate::netmodel::IncidenceSet;
use crate::olc::{invert_monotone, CostModel, OlcProblem, OlcSolution};

pub const PSD_TOLERANCE: f64 = 1e-9;
pub const KERNEL_TOLERANCE: f64 = 1e-8;

/// Block offsets in `z = (d, P, psi, omega_G, mu)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ZLayout {
    pub buses: usize,
    pub lines: usize,
    pub generators: usize,
}

impl ZLayout {
    pub fn of(inc: &IncidenceSet) -> Self {
        ZLayout {
            buses: inc.bus_count(),
            lines: inc.line_count(),
            generators: inc.gen_count,
        }
    }
    pub fn d(&self) -> std::ops::Range<usize> {
        0..self.buses
    }
    pub fn flow(&self) -> std::ops::Range<usize> {
        let s = self.buses;
        s..s + self.lines
    }
    pub fn psi(&self) -> std::ops::Range<usize> {
        let s = self.flow().end;
        s..s + self.buses
    }
    pub fn omega(&self) -> std::ops::Range<usize> {
        let s = self.psi().end;
        s..s + self.generators
    }
    pub fn mu(&self) -> std::ops::Range<usize> {
        let s = self.omega().end;
        s..s + self.buses
    }
    pub fn len(&self) -> usize {
        self.mu().end
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Diagonal of the step-size matrix `Xi`, block by block.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSizes {
    pub d: Vec<f64>,
    pub flow: Vec<f64>,
    pub psi: Vec<f64>,
    pub omega: Vec<f64>,
    pub mu: Vec<f64>,
}

impl StepSizes {
    pub fn identity(layout: ZLayout) -> Self {
        StepSizes {
            d: vec![1.0; layout.buses],
            flow: vec![1.0; layout.lines],
            psi: vec![1.0; layout.buses],
            omega: vec![1.0; layout.generators],
            mu: vec![1.0; layout.buses],
        }
    }

    /// Step sizes the algorithmic controller runs with on a given plant:
    /// `eps_omega = 1/M`, `eps_P = B`.
    pub fn of_closed_loop(prob: &OlcProblem, gains: &ControlGains) -> Self {
        let inc = &prob.incidence;
        StepSizes {
            d: gains.eps_d.clone(),
            flow: inc.susceptance.clone(),
            psi: gains.eps_psi.clone(),
            omega: prob
                .network
                .buses()
                .iter()
                .take(inc.gen_count)
                .map(|b| 1.0 / b.inertia.unwrap_or(1.0))
                .collect(),
            mu: gains.eps_mu.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        [&self.d, &self.flow, &self.psi, &self.omega, &self.mu]
            .iter()
            .all(|v| v.iter().all(|&x| x == 1.0))
    }

    pub fn require_identity(&self) -> Result<()> {
        if self.is_identity() {
            Ok(())
        } else {
            Err(Error::Certificate(
                "only unit step sizes (Xi = I) can be certified; rescale the configuration or certify the reduced system"
                    .into(),
            ))
        }
    }
}

#[derive(Clone, Debug)]
pub struct LyapunovCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub q: DMatrix<f64>,
    /// Smallest eigenvalue of `Q`.
    pub psd_margin: f64,
    /// Orthonormal columns spanning the numerical kernel of `Q`.
    pub kernel_basis: DMatrix<f64>,
    /// Smallest eigenvalue of `Q` above the kernel threshold.
    pub min_positive_eig: f64,
    pub layout: ZLayout,
}

impl LyapunovCertificate {
    /// `sqrt(v^T Q v)`, with tiny negative rounding clipped to zero.
    pub fn q_norm(&self, v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        v.dot(&(&self.q * &v)).max(0.0).sqrt()
    }
}

fn identity_block(q: &mut DMatrix<f64>, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, scale: f64) {
    for (i, j) in rows.zip(cols) {
        q[(i, j)] += scale;
    }
}

fn set_block(q: &mut DMatrix<f64>, r0: usize, c0: usize, block: &DMatrix<f64>, scale: f64) {
    for i in 0..block.nrows() {
        for j in 0..block.ncols() {
            q[(r0 + i, c0 + j)] += scale * block[(i, j)];
        }
    }
}

/// Assembles `Q` for the pair `(alpha, beta)`.
///
/// The `mu` coordinate enters with the sign that makes `V` decrease along
/// the dynamics above: `Q[d, mu] = -I` and `Q[psi, mu] = beta S`.
pub fn build_q(inc: &IncidenceSet, alpha: f64, beta: f64) -> Result<LyapunovCertificate> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::Precondition(format!(
            "alpha and beta must be positive and finite, got {alpha}, {beta}"
        )));
    }
    let lay = ZLayout::of(inc);
    let mut q = DMatrix::zeros(lay.len(), lay.len());
    let a_gen = inc.a_gen();
    let proj_a = &inc.u_a * inc.u_a.transpose();
    let proj_s = &inc.u_s * inc.u_s.transpose();

    identity_block(&mut q, lay.d(), lay.d(), alpha);
    identity_block(&mut q, lay.d(), lay.mu(), -1.0);
    identity_block(&mut q, lay.mu(), lay.d(), -1.0);
    set_block(&mut q, lay.flow().start, lay.flow().start, &proj_a, alpha);
    set_block(&mut q, lay.flow().start, lay.omega().start, &a_gen.transpose(), 1.0);
    set_block(&mut q, lay.omega().start, lay.flow().start, &a_gen, 1.0);
    set_block(&mut q, lay.psi().start, lay.psi().start, &proj_s, alpha);
    set_block(&mut q, lay.psi().start, lay.mu().start, &inc.s, beta);
    set_block(&mut q, lay.mu().start, lay.psi().start, &inc.s, beta);
    identity_block(&mut q, lay.omega(), lay.omega(), alpha);
    identity_block(&mut q, lay.mu(), lay.mu(), alpha);

    let eig = SymmetricEigen::new(q.clone());
    let psd_margin = eig.eigenvalues.min();
    let kernel_cols: Vec<usize> = (0..lay.len()).filter(|&k| eig.eigenvalues[k] < PSD_TOLERANCE).collect();
    let kernel_basis = DMatrix::from_fn(lay.len(), kernel_cols.len(), |i, j| eig.eigenvectors[(i, kernel_cols[j])]);
    let min_positive_eig = eig
        .eigenvalues
        .iter()
        .copied()
        .filter(|&x| x >= PSD_TOLERANCE)
        .fold(f64::INFINITY, f64::min);
    Ok(LyapunovCertificate {
        alpha,
        beta,
        rho: beta * beta / alpha,
        q,
        psd_margin,
        kernel_basis,
        min_positive_eig,
        layout: lay,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub pass: bool,
    pub kernel_dim: usize,
    /// `dim ker A + dim ker S`.
    pub expected_dim: usize,
    /// Worst violation of the characterisation by a numerical kernel vector.
    pub eigen_residual: f64,
    /// Worst `|Q v| / |v|` over the constructed kernel basis.
    pub basis_residual: f64,
}

/// Largest of `|dd|, |d omega|, |d mu|, |A dP|, |S dpsi|` for a unit vector.
fn kernel_violation(inc: &IncidenceSet, lay: ZLayout, v: &[f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let block = |r: std::ops::Range<usize>| v[r].iter().map(|x| x * x).sum::<f64>().sqrt();
    let ap = &inc.a * DVector::from_column_slice(&v[lay.flow()]);
    let sp = &inc.s * DVector::from_column_slice(&v[lay.psi()]);
    [block(lay.d()), block(lay.omega()), block(lay.mu()), ap.norm(), sp.norm()]
        .iter()
        .fold(0.0_f64, |m, &x| m.max(x))
        / norm
}

/// Checks that the numerical kernel of `Q` is exactly
/// `{dd = 0, d omega_G = 0, d mu = 0, A dP = 0, S dpsi = 0}`.
pub fn check_q_kernel(cert: &LyapunovCertificate, inc: &IncidenceSet) -> KernelReport {
    let lay = cert.layout;
    let mut eigen_residual: f64 = 0.0;
    for j in 0..cert.kernel_basis.ncols() {
        let v: Vec<f64> = cert.kernel_basis.column(j).iter().copied().collect();
        eigen_residual = eigen_residual.max(kernel_violation(inc, lay, &v));
    }
    let mut basis_residual: f64 = 0.0;
    let embed = |col: nalgebra::DVectorView<f64>, offset: usize| {
        let mut v = DVector::zeros(lay.len());
        for (i, x) in col.iter().enumerate() {
            v[offset + i] = *x;
        }
        v
    };
    let mut basis = Vec::new();
    for j in 0..inc.null_a.ncols() {
        basis.push(embed(inc.null_a.column(j), lay.flow().start));
    }
    for j in 0..inc.null_s.ncols() {
        basis.push(embed(inc.null_s.column(j), lay.psi().start));
    }
    for v in &basis {
        basis_residual = basis_residual.max((&cert.q * v).norm() / v.norm());
    }
    let expected_dim = basis.len();
    let kernel_dim = cert.kernel_basis.ncols();
    KernelReport {
        pass: kernel_dim == expected_dim
            && eigen_residual <= KERNEL_TOLERANCE
            && basis_residual <= KERNEL_TOLERANCE,
        kernel_dim,
        expected_dim,
        eigen_residual,
        basis_residual,
    }
}

/// Linearised reduced dynamics `W(d)` for cost curvatures `C = diag(curvature)`.
pub fn build_w(inc: &IncidenceSet, curvature: &[f64], damping: &[f64]) -> Result<DMatrix<f64>> {
    let lay = ZLayout::of(inc);
    let (n, g) = (lay.buses, lay.generators);
    check_len("curvature", n, curvature.len())?;
    check_len("damping", n, damping.len())?;
    let mut w = DMatrix::zeros(lay.len(), lay.len());
    let (d0, p0, s0, w0, m0) = (lay.d().start, lay.flow().start, lay.psi().start, lay.omega().start, lay.mu().start);

    // omega as an affine map of (d, P, omega_G): generators read their own
    // state, loads follow the algebraic balance.
    let omega_row = |i: usize, w: &mut DMatrix<f64>, row: usize, scale: f64| {
        if i < g {
            w[(row, w0 + i)] += scale;
        } else {
            let inv = scale / damping[i];
            w[(row, d0 + i)] -= inv;
            for k in 0..lay.lines {
                let a = inc.a[(i, k)];
                if a != 0.0 {
                    w[(row, p0 + k)] -= inv * a;
                }
            }
        }
    };

    for i in 0..n {
        let row = d0 + i;
        w[(row, d0 + i)] -= curvature[i];
        omega_row(i, &mut w, row, 1.0);
        w[(row, m0 + i)] += 1.0;
    }
    for k in 0..lay.lines {
        let row = p0 + k;
        for i in 0..n {
            let a = inc.a[(i, k)];
            if a != 0.0 {
                omega_row(i, &mut w, row, a);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let s = inc.s[(i, j)];
            if s != 0.0 {
                w[(s0 + i, m0 + j)] += s;
                w[(m0 + i, s0 + j)] -= s;
            }
        }
        w[(m0 + i, d0 + i)] -= 1.0;
    }
    for i in 0..g {
        let row = w0 + i;
        w[(row, d0 + i)] -= 1.0;
        w[(row, w0 + i)] -= damping[i];
        for k in 0..lay.lines {
            w[(row, p0 + k)] -= inc.a[(i, k)];
        }
    }
    Ok(w)
}

fn r_from_w(w: &DMatrix<f64>, cert: &LyapunovCertificate) -> DMatrix<f64> {
    let qw = &cert.q * w;
    let mut r = -(qw.transpose() + qw) - cert.rho * &cert.q;
    // symmetrise against rounding
    let rt = r.transpose();
    r = 0.5 * (r + rt);
    r
}

#[derive(Clone, Debug)]
pub struct RMatrix {
    pub r: DMatrix<f64>,
    pub min_eig: f64,
}

/// `R(d) = -W(d)^T Q - Q W(d) - rho Q` at the given cost curvatures.
pub fn build_r(
    inc: &IncidenceSet,
    curvature: &[f64],
    damping: &[f64],
    cert: &LyapunovCertificate,
    steps: &StepSizes,
) -> Result<RMatrix> {
    steps.require_identity()?;
    let w = build_w(inc, curvature, damping)?;
    let r = r_from_w(&w, cert);
    let min_eig = SymmetricEigen::new(r.clone()).eigenvalues.min();
    Ok(RMatrix { r, min_eig })
}

/// Per-bus interval of `c''`.
pub fn curvature_intervals(costs: &CostModel) -> Vec<(f64, f64)> {
    (0..costs.len())
        .map(|i| {
            costs
                .bus(i)
                .known_bounds()
                .unwrap_or((costs.strong_convexity(), costs.smoothness()))
        })
        .collect()
}

/// Vertices of the curvature box (all of them for up to ten non-degenerate
/// buses, `max_vertices` random ones beyond) plus its centre.
pub fn curvature_samples(costs: &CostModel, max_vertices: usize, seed: u64) -> Vec<Vec<f64>> {
    let iv = curvature_intervals(costs);
    let free: Vec<usize> = (0..iv.len())
        .filter(|&i| iv[i].1 - iv[i].0 > 1e-12 * iv[i].1.abs().max(1.0))
        .collect();
    let corner = |mask: &dyn Fn(usize) -> bool| -> Vec<f64> {
        let mut c: Vec<f64> = iv.iter().map(|x| x.0).collect();
        for (k, &i) in free.iter().enumerate() {
            if mask(k) {
                c[i] = iv[i].1;
            }
        }
        c
    };
    let mut out = Vec::new();
    if free.len() <= 10 {
        for m in 0..(1usize << free.len()) {
            out.push(corner(&|k| m >> k & 1 == 1));
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..max_vertices.max(1) {
            let bits: Vec<bool> = (0..free.len()).map(|_| rng.random()).collect();
            out.push(corner(&|k| bits[k]));
        }
    }
    if !free.is_empty() {
        out.push(iv.iter().map(|x| 0.5 * (x.0 + x.1)).collect());
    }
    out
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// `log10` bounds of the alpha grid.
    pub alpha_exponents: (f64, f64),
    pub beta_exponents: (f64, f64),
    pub alpha_points: usize,
    pub beta_points: usize,
    pub max_vertices: usize,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            alpha_exponents: (0.0, 5.0),
            beta_exponents: (-4.0, 0.0),
            alpha_points: 51,
            beta_points: 41,
            max_vertices: 1024,
            seed: 0,
        }
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![10f64.powf(lo)];
    }
    (0..n)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    alpha: f64,
    beta: f64,
    q_min: f64,
    r_min: f64,
}

impl Candidate {
    fn accepted(&self) -> bool {
        self.q_min >= -PSD_TOLERANCE && self.r_min >= -PSD_TOLERANCE
    }
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub certificate: LyapunovCertificate,
    pub r_min_eig: f64,
    pub kernel: KernelReport,
    pub samples: usize,
    /// Number of grid pairs that passed both checks.
    pub accepted: usize,
    pub tried: usize,
}

impl Selection {
    pub fn report(&self) -> CertificateReport {
        CertificateReport {
            alpha: self.certificate.alpha,
            beta: self.certificate.beta,
            rho: self.certificate.rho,
            q_min_eig: self.certificate.psd_margin,
            r_min_eig_over_samples: self.r_min_eig,
            kernel_dim: self.kernel.kernel_dim,
            pass: self.certificate.psd_margin >= -PSD_TOLERANCE
                && self.r_min_eig >= -PSD_TOLERANCE
                && self.kernel.pass,
        }
    }
}

#[derive(Clone, Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct CertificateReport {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub q_min_eig: f64,
    pub r_min_eig_over_samples: f64,
    pub kernel_dim: usize,
    pub pass: bool,
}

/// Smallest eigenvalue of `R` over the curvature samples, stopping at the
/// first sample that is clearly indefinite.
fn min_r_over(inc: &IncidenceSet, damping: &[f64], cert: &LyapunovCertificate, samples: &[Vec<f64>]) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for c in samples {
        let w = build_w(inc, c, damping)?;
        let e = SymmetricEigen::new(r_from_w(&w, cert)).eigenvalues.min();
        worst = worst.min(e);
        if worst < -PSD_TOLERANCE {
            break;
        }
    }
    Ok(worst)
}

/// Grid search over `(alpha, beta)`; among the pairs with `Q` and every
/// sampled `R(d)` PSD, returns the one with the largest `rho = beta^2/alpha`.
pub fn select_alpha_beta(
    inc: &IncidenceSet,
    costs: &CostModel,
    damping: &[f64],
    opts: &SearchOptions,
) -> Result<Selection> {
    check_len("damping", inc.bus_count(), damping.len())?;
    check_len("cost vector", inc.bus_count(), costs.len())?;
    if !(costs.strong_convexity() > 0.0) {
        return Err(Error::Precondition("costs must be strongly convex (u > 0)".into()));
    }
    if damping.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Precondition("damping must be positive at every bus".into()));
    }
    let samples = curvature_samples(costs, opts.max_vertices, opts.seed);
    let alphas = logspace(opts.alpha_exponents.0, opts.alpha_exponents.1, opts.alpha_points);
    let betas = logspace(opts.beta_exponents.0, opts.beta_exponents.1, opts.beta_points);
    let pairs: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();

    let results: Vec<Candidate> = pairs
        .par_iter()
        .map(|&(alpha, beta)| -> Result<Candidate> {
            let cert = build_q(inc, alpha, beta)?;
            let r_min = if cert.psd_margin >= -PSD_TOLERANCE {
                min_r_over(inc, damping, &cert, &samples)?
            } else {
                f64::NEG_INFINITY
            };
            Ok(Candidate {
                alpha,
                beta,
                q_min: cert.psd_margin,
                r_min,
            })
        })
        .collect::<Result<_>>()?;

    let accepted: Vec<&Candidate> = results.iter().filter(|c| c.accepted()).collect();
    let best = accepted.iter().copied().fold(None::<&Candidate>, |acc, c| match acc {
        Some(b) if b.beta * b.beta / b.alpha >= c.beta * c.beta / c.alpha => Some(b),
        _ => Some(c),
    });
    let Some(best) = best else {
        let closest = results
            .iter()
            .max_by(|a, b| a.q_min.min(a.r_min).total_cmp(&b.q_min.min(b.r_min)))
            .expect("nonempty grid");
        return Err(Error::Certificate(format!(
            "no (alpha, beta) in the grid certifies the system; closest pair alpha = {:.4e}, beta = {:.4e} with min eig Q = {:.3e}, min eig R = {:.3e}",
            closest.alpha, closest.beta, closest.q_min, closest.r_min
        )));
    };
    let certificate = build_q(inc, best.alpha, best.beta)?;
    // full sweep for the reported margin
    let mut r_min_eig = f64::INFINITY;
    for c in &samples {
        let w = build_w(inc, c, damping)?;
        r_min_eig = r_min_eig.min(SymmetricEigen::new(r_from_w(&w, &certificate)).eigenvalues.min());
    }
    let kernel = check_q_kernel(&certificate, inc);
    Ok(Selection {
        certificate,
        r_min_eig,
        kernel,
        samples: samples.len(),
        accepted: accepted.len(),
        tried: results.len(),
    })
}

/// `V(z) = (z - z*)^T Q (z - z*)`.
pub fn lyapunov_value(cert: &LyapunovCertificate, z: &[f64], z_star: &[f64]) -> Result<f64> {
    check_len("state", cert.layout.len(), z.len())?;
    check_len("reference state", cert.layout.len(), z_star.len())?;
    let dz = DVector::from_iterator(z.len(), z.iter().zip(z_star).map(|(a, b)| a - b));
    Ok(dz.dot(&(&cert.q * &dz)))
}

/// Reduced limit-free dynamics with unit step sizes.
#[derive(Clone, Debug)]
pub struct ReducedDynamics {
    pub inc: Arc<IncidenceSet>,
    pub areas: Vec<Vec<usize>>,
    pub costs: CostModel,
    pub damping: Vec<f64>,
    pub layout: ZLayout,
}

impl ReducedDynamics {
    pub fn new(inc: Arc<IncidenceSet>, areas: Vec<Vec<usize>>, costs: CostModel, damping: Vec<f64>) -> Result<Self> {
        check_len("damping", inc.bus_count(), damping.len())?;
        check_len("cost vector", inc.bus_count(), costs.len())?;
        let layout = ZLayout::of(&inc);
        Ok(ReducedDynamics {
            inc,
            areas,
            costs,
            damping,
            layout,
        })
    }

    pub fn from_problem(prob: &OlcProblem) -> Result<Self> {
        Self::new(
            prob.incidence.clone(),
            prob.network.area_members(),
            prob.costs.clone(),
            prob.network.damping(),
        )
    }

    pub fn omega_load(&self, z: &[f64], p_in: &[f64]) -> Vec<f64> {
        let lay = self.layout;
        let g = lay.generators;
        let mut outflow = vec![0.0; lay.buses];
        self.inc.outflow(&z[lay.flow()], &mut outflow);
        (g..lay.buses)
            .map(|i| (p_in[i] - z[i] - outflow[i]) / self.damping[i])
            .collect()
    }

    pub fn derivative(&self, z: &[f64], p_in: &[f64], dz: &mut [f64]) {
        let lay = self.layout;
        let (n, g) = (lay.buses, lay.generators);
        let d = &z[lay.d()];
        let psi = &z[lay.psi()];
        let mu = &z[lay.mu()];
        let mut outflow = vec![0.0; n];
        self.inc.outflow(&z[lay.flow()], &mut outflow);
        let mut omega = z[lay.omega()].to_vec();
        omega.extend((g..n).map(|i| (p_in[i] - d[i] - outflow[i]) / self.damping[i]));
        let mut s_mu = vec![0.0; n];
        self.inc.virtual_outflow(mu, &mut s_mu);
        let mut s_psi = vec![0.0; n];
        self.inc.virtual_outflow(psi, &mut s_psi);
        for i in 0..n {
            dz[lay.d().start + i] = -self.costs.bus(i).derivative(d[i]) + omega[i] + mu[i];
            dz[lay.psi().start + i] = s_mu[i];
            dz[lay.mu().start + i] = p_in[i] - d[i] - s_psi[i];
        }
        for k in 0..lay.lines {
            dz[lay.flow().start + k] = omega[self.inc.from[k]] - omega[self.inc.to[k]];
        }
        for i in 0..g {
            dz[lay.omega().start + i] = p_in[i] - d[i] - self.damping[i] * omega[i] - outflow[i];
        }
    }

    /// Limit-free optimum for the given injection.
    pub fn equilibrium(&self, p_in: &[f64]) -> Result<EquilibriumSet> {
        check_len("injection vector", self.layout.buses, p_in.len())?;
        let n = self.layout.buses;
        let mut d = vec![0.0; n];
        let mut mu = vec![0.0; n];
        for members in &self.areas {
            let target: f64 = members.iter().map(|&i| p_in[i]).sum();
            let total = |lambda: f64| -> f64 {
                members
                    .iter()
                    .map(|&i| self.costs.bus(i).inverse_derivative(lambda))
                    .sum()
            };
            let lambda = invert_monotone(total, target);
            for &i in members {
                d[i] = self.costs.bus(i).inverse_derivative(lambda);
                mu[i] = lambda;
            }
        }
        self.assemble(p_in, &d, &mu)
    }

    /// Equilibrium representative built from an optimum of the full problem.
    pub fn equilibrium_from_solution(&self, p_in: &[f64], sol: &OlcSolution) -> Result<EquilibriumSet> {
        check_len("injection vector", self.layout.buses, p_in.len())?;
        let mut eq = self.assemble(p_in, &sol.d, &sol.mu)?;
        // psi from the solver keeps binding virtual flows exact
        eq.z_star[self.layout.psi()].copy_from_slice(&sol.psi);
        Ok(eq)
    }

    fn assemble(&self, p_in: &[f64], d: &[f64], mu: &[f64]) -> Result<EquilibriumSet> {
        let lay = self.layout;
        let imbalance: Vec<f64> = p_in.iter().zip(d).map(|(p, x)| p - x).collect();
        let flows = self.inc.min_norm_flows(&imbalance);
        // min-norm psi with S psi = P_in - d
        let rhs = self.inc.u_s.transpose() * DVector::from_column_slice(&imbalance);
        let scaled = DVector::from_iterator(rhs.len(), rhs.iter().zip(self.inc.sigma_s.iter()).map(|(x, s)| x / s));
        let psi = &self.inc.u_s * scaled;
        let mut z = vec![0.0; lay.len()];
        z[lay.d()].copy_from_slice(d);
        z[lay.flow()].copy_from_slice(flows.as_slice());
        z[lay.psi()].copy_from_slice(psi.as_slice());
        z[lay.mu()].copy_from_slice(mu);
        let mut dz = vec![0.0; lay.len()];
        self.derivative(&z, p_in, &mut dz);
        let scale = 1.0 + p_in.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let residual = dz.iter().fold(0.0_f64, |m, x| m.max(x.abs())) / scale;
        Ok(EquilibriumSet {
            omega_load_star: self.omega_load(&z, p_in),
            z_star: z,
            residual,
            layout: lay,
            u_a: self.inc.u_a.clone(),
            u_s: self.inc.u_s.clone(),
        })
    }

    /// Fixed-step RK4 from `z0`; stores every `decimation`-th step and the end.
    pub fn simulate(
        &self,
        z0: &[f64],
        profile: &dyn InjectionProfile,
        step: f64,
        duration: f64,
        decimation: usize,
    ) -> Result<ReducedTrajectory> {
        check_len("initial state", self.layout.len(), z0.len())?;
        if !(step > 0.0 && duration > step) {
            return Err(Error::Config("require step > 0 and duration > step".into()));
        }
        let n = self.layout.buses;
        let len = self.layout.len();
        let steps = (duration / step).round() as usize;
        let decimation = decimation.max(1);
        let mut traj = ReducedTrajectory::default();
        let mut z = z0.to_vec();
        let mut p = vec![0.0; n];
        let record = |t: f64, z: &[f64], traj: &mut ReducedTrajectory, p: &mut [f64]| {
            profile.injection(t, p);
            traj.times.push(t);
            traj.states.push(z.to_vec());
            traj.omega_load.push(self.omega_load(z, p));
            traj.injections.push(p.to_vec());
        };
        record(0.0, &z, &mut traj, &mut p);
        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        let mut tmp = vec![0.0; len];
        let (mut p_mid, mut p_end) = (vec![0.0; n], vec![0.0; n]);
        for s in 0..steps {
            let t = s as f64 * step;
            profile.injection(t, &mut p);
            profile.injection(t + 0.5 * step, &mut p_mid);
            profile.injection(t + step, &mut p_end);
            self.derivative(&z, &p, &mut k1);
            for i in 0..len {
                tmp[i] = z[i] + 0.5 * step * k1[i];
            }
            self.derivative(&tmp, &p_mid, &mut k2);
            for i in 0..len {
                tmp[i] = z[i] + 0.5 * step * k2[i];
            }
            self.derivative(&tmp, &p_mid, &mut k3);
            for i in 0..len {
                tmp[i] = z[i] + step * k3[i];
            }
            self.derivative(&tmp, &p_end, &mut k4);
            for i in 0..len {
                z[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let t_next = (s + 1) as f64 * step;
            if z.iter().any(|x| !x.is_finite() || x.abs() > 1e6) {
                return Err(Error::Diverged { time: t_next });
            }
            if (s + 1) % decimation == 0 || s + 1 == steps {
                record(t_next, &z, &mut traj, &mut p);
            }
        }
        Ok(traj)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub omega_load: Vec<Vec<f64>>,
    pub injections: Vec<Vec<f64>>,
}

/// An equilibrium representative together with what is needed to measure
/// distance to the whole equilibrium set (shifts along `ker A`, `ker S`).
#[derive(Clone, Debug)]
pub struct EquilibriumSet {
    pub z_star: Vec<f64>,
    pub omega_load_star: Vec<f64>,
    /// Scaled infinity norm of the reduced derivative at `z_star`.
    pub residual: f64,
    pub layout: ZLayout,
    u_a: DMatrix<f64>,
    u_s: DMatrix<f64>,
}

impl EquilibriumSet {
    /// Euclidean distance to the set: `d, omega, mu` compared directly, flows
    /// and virtual angles only through their components outside `ker A`
    /// and `ker S`.
    pub fn distance(&self, z: &[f64], omega_load: &[f64]) -> f64 {
        let lay = self.layout;
        let sq = |r: std::ops::Range<usize>| {
            z[r.clone()]
                .iter()
                .zip(&self.z_star[r])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let dp = DVector::from_iterator(
            lay.lines,
            z[lay.flow()].iter().zip(&self.z_star[lay.flow()]).map(|(a, b)| a - b),
        );
        let dpsi = DVector::from_iterator(
            lay.buses,
            z[lay.psi()].iter().zip(&self.z_star[lay.psi()]).map(|(a, b)| a - b),
        );
        let wl: f64 = omega_load
            .iter()
            .zip(&self.omega_load_star)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (sq(lay.d())
            + sq(lay.omega())
            + sq(lay.mu())
            + wl
            + (self.u_a.transpose() * dp).norm_squared()
            + (self.u_s.transpose() * dpsi).norm_squared())
        .sqrt()
    }
}

pub fn distance_to_set(eq: &EquilibriumSet, z: &[f64], omega_load: &[f64]) -> f64 {
    eq.distance(z, omega_load)
}

/// Reduced coordinates of a closed-loop state (`mu` rebuilt from `r` unless
/// the state is in gradient form).
pub fn reduced_state(cl: &ClosedLoop, x: &[f64], mode: Mode) -> Vec<f64> {
    let l = cl.layout;
    let mut z = Vec::with_capacity(ZLayout::of(&cl.inc).len());
    z.extend_from_slice(&x[l.d()]);
    z.extend_from_slice(&x[l.flow()]);
    z.extend_from_slice(&x[l.psi()]);
    z.extend_from_slice(&x[l.omega()]);
    match mode {
        Mode::Gradient => z.extend_from_slice(&x[l.r()]),
        _ => {
            let mut mu = vec![0.0; l.buses];
            cl.mu_from_r(&x[l.omega()], &x[l.r()], &mut mu);
            z.extend(mu);
        }
    }
    z
}

#[derive(Clone, Copy, Debug, Serialize, serde::Deserialize, PartialEq)]
pub struct RateFit {
    pub c0: f64,
    pub rho0: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares line through `(t, ln value)`; nonpositive values are
/// skipped, `window` restricts the time range.
pub fn fit_exponential_rate(times: &[f64], values: &[f64], window: Option<(f64, f64)>) -> Result<RateFit> {
    check_len("series", times.len(), values.len())?;
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= lo && **t <= hi && **v > 0.0 && v.is_finite())
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Precondition(format!(
            "rate fit needs at least 10 positive samples, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let tx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ty = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tx) * (p.1 - ty)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ty).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Precondition("rate fit needs distinct times".into()));
    }
    let slope = sxy / sxx;
    let intercept = ty - slope * tx;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(RateFit {
        c0: intercept.exp(),
        rho0: -slope,
        r_squared,
        samples: pts.len(),
    })
}

/// Admissible controller damping offsets `delta_a` for smoothness `l` and
/// smallest damping `D_min`: `2 (a -+ sqrt(a^2 + a D_min))` with `a = 1/l`.
pub fn damping_interval(ell: f64, d_min: f64) -> Result<(f64, f64)> {
    if !(ell > 0.0 && d_min > 0.0) {
        return Err(Error::Precondition(format!(
            "damping interval needs l > 0 and D_min > 0, got {ell}, {d_min}"
        )));
    }
    let a = 1.0 / ell;
    let root = (a * a + a * d_min).sqrt();
    Ok((2.0 * (a - root), 2.0 * (a + root)))
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct TrackingBoundParams {
    pub b_z: f64,
    pub b_g: f64,
    pub rho: f64,
    pub initial: f64,
}

impl TrackingBoundParams {
    pub fn validate(&self) -> Result<()> {
        if [self.b_z, self.b_g, self.initial].iter().any(|x| !(*x >= 0.0)) || !(self.rho > 0.0) {
            return Err(Error::Precondition(
                "tracking bound needs b_z, b_g, initial >= 0 and rho > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn asymptote(&self) -> f64 {
        2.0 * (self.b_z + self.b_g) / self.rho
    }
}

pub fn tracking_bound(p: &TrackingBoundParams, t: f64) -> f64 {
    let decay = (-0.5 * p.rho * t).exp();
    decay * p.initial + (1.0 - decay) * p.asymptote()
}

#[derive(Clone, Debug)]
pub struct DriftEstimate {
    pub times: Vec<f64>,
    pub optima: Vec<Vec<f64>>,
    /// `|dz*/dt|_Q` per interval.
    pub rates: Vec<f64>,
    pub sup: f64,
}

/// Finite-difference drift of the limit-free optimum in the `Q` norm.
pub fn drift_bound(
    sys: &ReducedDynamics,
    cert: &LyapunovCertificate,
    profile: &dyn InjectionProfile,
    times: &[f64],
) -> Result<DriftEstimate> {
    if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("drift grid must be strictly increasing with two or more points".into()));
    }
    let mut p = vec![0.0; sys.layout.buses];
    let mut optima = Vec::with_capacity(times.len());
    for &t in times {
        profile.injection(t, &mut p);
        optima.push(sys.equilibrium(&p)?.z_star);
    }
    let rates: Vec<f64> = (1..times.len())
        .map(|k| {
            let dt = times[k] - times[k - 1];
            let v: Vec<f64> = optima[k].iter().zip(&optima[k - 1]).map(|(a, b)| (a - b) / dt).collect();
            cert.q_norm(&v)
        })
        .collect();
    let sup = rates.iter().copied().fold(0.0, f64::max);
    Ok(DriftEstimate {
        times: times.to_vec(),
        optima,
        rates,
        sup,
    })
}

/// Sup over sample intervals of `|z' - f(z) - H P_in|_Q`, with `z'` taken
/// by central difference of the recorded states. Estimates the mismatch
/// bound of a run whose states were not produced by the reduced dynamics
/// (sampled control, noise).
pub fn mismatch_bound(
    sys: &ReducedDynamics,
    cert: &LyapunovCertificate,
    times: &[f64],
    states: &[Vec<f64>],
    injections: &[Vec<f64>],
) -> Result<f64> {
    check_len("state series", times.len(), states.len())?;
    check_len("injection series", times.len(), injections.len())?;
    let len = sys.layout.len();
    let mut worst: f64 = 0.0;
    let mut f = vec![0.0; len];
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        let mid: Vec<f64> = states[k].iter().zip(&states[k - 1]).map(|(a, b)| 0.5 * (a + b)).collect();
        let p: Vec<f64> = injections[k].iter().zip(&injections[k - 1]).map(|(a, b)| 0.5 * (a + b)).collect();
        sys.derivative(&mid, &p, &mut f);
        let g: Vec<f64> = (0..len).map(|i| (states[k][i] - states[k - 1][i]) / dt - f[i]).collect();
        worst = worst.max(cert.q_norm(&g));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{build_incidence, Bus, Line, PowerNetwork};

    fn two_bus(b: f64) -> OlcProblem {
        let net = PowerNetwork::new(
            vec![
                Bus::generator(1, 1, 1.0, 1.0).with_cost(1.0, -1.0, 1.0),
                Bus::load(2, 1, 1.0).with_cost(1.0, -1.0, 1.0),
            ],
            vec![Line::new(1, 2, b)],
            vec![],
            100.0,
        );
        OlcProblem::from_network(net).unwrap()
    }

    fn ring() -> IncidenceSet {
        let net = PowerNetwork::new(
            vec![
                Bus::generator(1, 1, 1.0, 1.0),
                Bus::load(2, 1, 1.0),
                Bus::load(3, 1, 1.0),
            ],
            vec![Line::new(1, 2, 1.0), Line::new(2, 3, 1.0), Line::new(3, 1, 1.0)],
            vec![],
            100.0,
        );
        build_incidence(&net).unwrap()
    }

    #[test]
    fn q_is_symmetric_and_psd_for_two_bus() {
        let prob = two_bus(5.0);
        let cert = build_q(&prob.incidence, 10.0, 0.1).unwrap();
        assert_eq!(cert.q, cert.q.transpose());
        assert!(cert.psd_margin >= -PSD_TOLERANCE);
        assert!((cert.rho - 0.001).abs() < 1e-15);
    }

    #[test]
    fn quadratic_form_matches_sum_of_squares() {
        // V = |dd - dmu|^2 + |dw + A_G dP|^2 + |dmu + b S dpsi|^2
        //   + (a-1)|dd|^2 + (a-2)|dmu|^2 + (a-1)|dw|^2
        //   + dpsi^T (a P_S - b^2 S^2) dpsi + dP^T (a P_A - A_G^T A_G) dP
        let prob = two_bus(5.0);
        let inc = &prob.incidence;
        let (a, b) = (10.0, 0.1);
        let cert = build_q(inc, a, b).unwrap();
        let z = [0.3, -0.2, 0.7, 0.1, -0.4, 0.25, -0.6, 0.05];
        let (dd, dp, dpsi, dw, dmu) = (&z[0..2], &z[2..3], &z[3..5], &z[5..6], &z[6..8]);
        let dpsi_v = DVector::from_column_slice(dpsi);
        let s_dpsi = &inc.s * &dpsi_v;
        let agp = inc.a_gen() * DVector::from_column_slice(dp);
        let mut v = 0.0;
        for i in 0..2 {
            v += (dd[i] - dmu[i]).powi(2) + (dmu[i] + b * s_dpsi[i]).powi(2);
            v += (a - 1.0) * dd[i] * dd[i] + (a - 2.0) * dmu[i] * dmu[i];
        }
        v += (dw[0] + agp[0]).powi(2) + (a - 1.0) * dw[0] * dw[0];
        let ps = &inc.u_s * inc.u_s.transpose();
        let s2 = &inc.s * &inc.s;
        v += dpsi_v.dot(&((a * ps - b * b * s2) * &dpsi_v));
        let pa = &inc.u_a * inc.u_a.transpose();
        let ag = inc.a_gen();
        let dp_v = DVector::from_column_slice(dp);
        v += dp_v.dot(&((a * pa - ag.transpose() * ag) * &dp_v));
        let direct = lyapunov_value(&cert, &z, &[0.0; 8]).unwrap();
        assert!((v - direct).abs() < 1e-12, "{v} vs {direct}");
    }

    #[test]
    fn kernel_two_bus_is_one_dimensional() {
        let prob = two_bus(5.0);
        let cert = build_q(&prob.incidence, 10.0, 0.1).unwrap();
        let rep = check_q_kernel(&cert, &prob.incidence);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.kernel_dim, 1);
        assert_eq!(rep.expected_dim, 1);
    }

    #[test]
    fn kernel_of_ring_gains_cycle_flow() {
        let inc = ring();
        let cert = build_q(&inc, 20.0, 0.05).unwrap();
        let rep = check_q_kernel(&cert, &inc);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.kernel_dim, 2);
    }

    #[test]
    fn removing_angle_projector_breaks_kernel() {
        let prob = two_bus(5.0);
        let inc = &prob.incidence;
        let mut cert = build_q(inc, 10.0, 0.1).unwrap();
        let lay = cert.layout;
        let ps = &inc.u_s * inc.u_s.transpose();
        for i in 0..lay.buses {
            for j in 0..lay.buses {
                cert.q[(lay.psi().start + i, lay.psi().start + j)] -= 10.0 * ps[(i, j)];
            }
        }
        let eig = SymmetricEigen::new(cert.q.clone());
        let cols: Vec<usize> = (0..lay.len()).filter(|&k| eig.eigenvalues[k] < PSD_TOLERANCE).collect();
        cert.kernel_basis = DMatrix::from_fn(lay.len(), cols.len(), |i, j| eig.eigenvectors[(i, cols[j])]);
        assert!(!check_q_kernel(&cert, inc).pass);
    }

    #[test]
    fn r_is_psd_on_unit_susceptance_pair() {
        let prob = two_bus(1.0);
        let cert = build_q(&prob.incidence, 10.0, 0.05).unwrap();
        let steps = StepSizes::identity(cert.layout);
        for k in 0..100 {
            // curvature is constant for quadratic costs; sweep d anyway
            let d = -1.0 + 2.0 * k as f64 / 99.0;
            let c = prob.costs.curvature(&[d, d]);
            let r = build_r(&prob.incidence, &c, &[1.0, 1.0], &cert, &steps).unwrap();
            assert!(r.min_eig >= -PSD_TOLERANCE, "{}", r.min_eig);
        }
    }

    #[test]
    fn large_beta_is_rejected() {
        let prob = two_bus(1.0);
        let cert = build_q(&prob.incidence, 10.0, 10.0).unwrap();
        let steps = StepSizes::identity(cert.layout);
        let r = build_r(&prob.incidence, &[2.0, 2.0], &[1.0, 1.0], &cert, &steps);
        let bad = cert.psd_margin < -PSD_TOLERANCE || r.unwrap().min_eig < -PSD_TOLERANCE;
        assert!(bad);
    }

    #[test]
    fn r_is_affine_in_curvature() {
        let prob = two_bus(5.0);
        let inc = &prob.incidence;
        let cert = build_q(inc, 20.0, 0.01).unwrap();
        let steps = StepSizes::identity(cert.layout);
        let r = |c: f64| build_r(inc, &[c, 2.0], &[1.0, 1.0], &cert, &steps).unwrap().r;
        let (r0, r1, rh) = (r(1.0), r(3.0), r(2.0));
        let gap = (0.5 * (r0 + r1) - rh).abs().max();
        assert!(gap < 1e-10);
    }

    #[test]
    fn non_unit_steps_are_refused() {
        let prob = two_bus(5.0);
        let cert = build_q(&prob.incidence, 10.0, 0.1).unwrap();
        let mut steps = StepSizes::identity(cert.layout);
        steps.mu[0] = 0.5;
        let err = build_r(&prob.incidence, &[2.0, 2.0], &[1.0, 1.0], &cert, &steps).unwrap_err();
        assert!(matches!(err, Error::Certificate(_)));
    }

    #[test]
    fn search_succeeds_on_two_bus() {
        let prob = two_bus(5.0);
        let sel = select_alpha_beta(&prob.incidence, &prob.costs, &[1.0, 1.0], &SearchOptions::default()).unwrap();
        let rep = sel.report();
        assert!(rep.pass, "{rep:?}");
        assert!(sel.accepted > 0);
    }

    #[test]
    fn w_matches_reduced_derivative() {
        let prob = two_bus(5.0);
        let sys = ReducedDynamics::from_problem(&prob).unwrap();
        let p_in = [0.4, -0.1];
        let eq = sys.equilibrium(&p_in).unwrap();
        assert!(eq.residual < 1e-12);
        let w = build_w(&prob.incidence, &[2.0, 2.0], &[1.0, 1.0]).unwrap();
        let dz = [0.1, -0.2, 0.05, 0.3, -0.1, 0.2, 0.15, -0.05];
        let z: Vec<f64> = eq.z_star.iter().zip(&dz).map(|(a, b)| a + b).collect();
        let mut f = vec![0.0; 8];
        sys.derivative(&z, &p_in, &mut f);
        let lin = &w * DVector::from_column_slice(&dz);
        for i in 0..8 {
            assert!((f[i] - lin[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_ignores_kernel_shifts() {
        let prob = two_bus(5.0);
        let sys = ReducedDynamics::from_problem(&prob).unwrap();
        let p_in = [0.4, 0.0];
        let eq = sys.equilibrium(&p_in).unwrap();
        let wl = eq.omega_load_star.clone();
        assert!(eq.distance(&eq.z_star, &wl) < 1e-14);
        let mut z = eq.z_star.clone();
        for i in sys.layout.psi() {
            z[i] += 3.0;
        }
        assert!(eq.distance(&z, &wl) < 1e-12);
    }

    #[test]
    fn damping_interval_example() {
        let (lo, hi) = damping_interval(2.0, 1.0).unwrap();
        assert!((lo - 2.0 * (0.5 - 0.75f64.sqrt())).abs() < 1e-15);
        assert!((hi - 2.0 * (0.5 + 0.75f64.sqrt())).abs() < 1e-15);
        assert!((lo + 0.7321).abs() < 1e-4 && (hi - 2.7321).abs() < 1e-4);
    }

    #[test]
    fn tracking_bound_limits() {
        let p = TrackingBoundParams {
            b_z: 0.004,
            b_g: 0.006,
            rho: 0.2,
            initial: 1.0,
        };
        assert_eq!(tracking_bound(&p, 0.0), 1.0);
        assert!((tracking_bound(&p, 1e4) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_on_exact_exponential() {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.2).collect();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-0.5 * t).exp()).collect();
        let fit = fit_exponential_rate(&t, &v, None).unwrap();
        assert!((fit.rho0 - 0.5).abs() < 1e-12);
        assert!((fit.c0 - 3.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_exponential_rate(&t[..9], &v[..9], None).is_err());
    }
}
