//! Optimal load control program and its KKT-certified solution.
//!
//! The oracle is deliberately unrelated to the closed-loop dynamics: a
//! per-area dual bisection handles the case where no thermal limit binds,
//! and a primal-dual interior-point method takes over otherwise.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::netmodel::{build_incidence, IncidenceSet, PowerNetwork};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// A strictly convex, twice differentiable disutility.
pub trait ConvexCost: Send + Sync + fmt::Debug {
    fn value(&self, d: f64) -> f64;
    fn derivative(&self, d: f64) -> f64;
    fn second_derivative(&self, d: f64) -> f64;

    /// Global bounds `(u, l)` on the second derivative, if known.
    fn curvature_bounds(&self) -> Option<(f64, f64)> {
        None
    }

    /// Solves `c'(d) = y`.
    fn inverse_derivative(&self, y: f64) -> f64 {
        invert_monotone(|d| self.derivative(d), y)
    }
}

/// Bisection on an increasing function, with an expanding bracket.
pub(crate) fn invert_monotone(f: impl Fn(f64) -> f64, y: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut guard = 0;
    while f(lo) > y && guard < 200 {
        lo *= 2.0;
        guard += 1;
    }
    while f(hi) < y && guard < 400 {
        hi *= 2.0;
        guard += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `theta * d^2 + kappa * ln cosh d`, a smooth non-quadratic cost with
/// curvature in `[2 theta, 2 theta + kappa]`.
#[derive(Clone, Copy, Debug)]
pub struct LogCoshCost {
    pub theta: f64,
    pub kappa: f64,
}

impl ConvexCost for LogCoshCost {
    fn value(&self, d: f64) -> f64 {
        // ln cosh d = |d| + ln(1 + e^{-2|d|}) - ln 2, stable for large |d|
        let a = d.abs();
        self.theta * d * d + self.kappa * (a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
    }

    fn derivative(&self, d: f64) -> f64 {
        2.0 * self.theta * d + self.kappa * d.tanh()
    }

    fn second_derivative(&self, d: f64) -> f64 {
        let sech = 1.0 / d.cosh();
        2.0 * self.theta + self.kappa * sech * sech
    }

    fn curvature_bounds(&self) -> Option<(f64, f64)> {
        let a = 2.0 * self.theta;
        let b = 2.0 * self.theta + self.kappa;
        Some((a.min(b), a.max(b)))
    }
}

#[derive(Clone, Debug)]
pub enum LoadCost {
    /// `theta * d^2`.
    Quadratic { theta: f64 },
    Custom(Arc<dyn ConvexCost>),
}

impl LoadCost {
    pub fn value(&self, d: f64) -> f64 {
        match self {
            LoadCost::Quadratic { theta } => theta * d * d,
            LoadCost::Custom(c) => c.value(d),
        }
    }

    pub fn derivative(&self, d: f64) -> f64 {
        match self {
            LoadCost::Quadratic { theta } => 2.0 * theta * d,
            LoadCost::Custom(c) => c.derivative(d),
        }
    }

    pub fn second_derivative(&self, d: f64) -> f64 {
        match self {
            LoadCost::Quadratic { theta } => 2.0 * theta,
            LoadCost::Custom(c) => c.second_derivative(d),
        }
    }

    pub fn inverse_derivative(&self, y: f64) -> f64 {
        match self {
            LoadCost::Quadratic { theta } => y / (2.0 * theta),
            LoadCost::Custom(c) => c.inverse_derivative(y),
        }
    }

    pub(crate) fn known_bounds(&self) -> Option<(f64, f64)> {
        match self {
            LoadCost::Quadratic { theta } => Some((2.0 * theta, 2.0 * theta)),
            LoadCost::Custom(c) => c.curvature_bounds(),
        }
    }

    /// Solves `c'(d) + d / damping = rhs`, the load-bus algebraic loop of the
    /// stationary controller.
    pub fn solve_with_damping(&self, damping: f64, rhs: f64) -> f64 {
        match self {
            LoadCost::Quadratic { theta } => rhs / (2.0 * theta + 1.0 / damping),
            LoadCost::Custom(c) => invert_monotone(|d| c.derivative(d) + d / damping, rhs),
        }
    }
}

/// Per-bus costs together with global curvature bounds `u <= c'' <= l`.
#[derive(Clone, Debug)]
pub struct CostModel {
    costs: Vec<LoadCost>,
    u: f64,
    ell: f64,
}

impl CostModel {
    pub fn quadratic(thetas: &[f64]) -> Result<Self> {
        Self::new(thetas.iter().map(|&theta| LoadCost::Quadratic { theta }).collect(), None)
    }

    /// `bounds` overrides the per-cost curvature bounds and is mandatory when
    /// any cost cannot report its own.
    pub fn new(costs: Vec<LoadCost>, bounds: Option<(f64, f64)>) -> Result<Self> {
        let (u, ell) = match bounds {
            Some(b) => b,
            None => {
                let mut u = f64::INFINITY;
                let mut ell: f64 = 0.0;
                for (i, c) in costs.iter().enumerate() {
                    let (a, b) = c.known_bounds().ok_or_else(|| {
                        Error::Precondition(format!(
                            "cost {} has no curvature bounds; supply the smoothness bound explicitly",
                            i + 1
                        ))
                    })?;
                    u = u.min(a);
                    ell = ell.max(b);
                }
                if costs.is_empty() {
                    (1.0, 1.0)
                } else {
                    (u, ell)
                }
            }
        };
        if !(u > 0.0 && u <= ell && ell.is_finite()) {
            return Err(Error::Precondition(format!(
                "cost curvature bounds must satisfy 0 < u <= l < inf, got u = {u}, l = {ell}"
            )));
        }
        Ok(CostModel { costs, u, ell })
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn bus(&self, i: usize) -> &LoadCost {
        &self.costs[i]
    }

    pub fn strong_convexity(&self) -> f64 {
        self.u
    }

    pub fn smoothness(&self) -> f64 {
        self.ell
    }

    pub fn total(&self, d: &[f64]) -> f64 {
        self.costs.iter().zip(d).map(|(c, &x)| c.value(x)).sum()
    }

    pub fn gradient(&self, d: &[f64]) -> Vec<f64> {
        self.costs.iter().zip(d).map(|(c, &x)| c.derivative(x)).collect()
    }

    pub fn curvature(&self, d: &[f64]) -> Vec<f64> {
        self.costs.iter().zip(d).map(|(c, &x)| c.second_derivative(x)).collect()
    }

    /// Multiplies every cost by `k > 0`.
    pub fn scaled(&self, k: f64) -> Self {
        let costs = self
            .costs
            .iter()
            .map(|c| match c {
                LoadCost::Quadratic { theta } => LoadCost::Quadratic { theta: theta * k },
                LoadCost::Custom(inner) => LoadCost::Custom(Arc::new(Scaled {
                    inner: inner.clone(),
                    k,
                })),
            })
            .collect();
        CostModel {
            costs,
            u: self.u * k,
            ell: self.ell * k,
        }
    }
}

#[derive(Debug)]
struct Scaled {
    inner: Arc<dyn ConvexCost>,
    k: f64,
}

impl ConvexCost for Scaled {
    fn value(&self, d: f64) -> f64 {
        self.k * self.inner.value(d)
    }
    fn derivative(&self, d: f64) -> f64 {
        self.k * self.inner.derivative(d)
    }
    fn second_derivative(&self, d: f64) -> f64 {
        self.k * self.inner.second_derivative(d)
    }
    fn curvature_bounds(&self) -> Option<(f64, f64)> {
        self.inner.curvature_bounds().map(|(a, b)| (a * self.k, b * self.k))
    }
    fn inverse_derivative(&self, y: f64) -> f64 {
        self.inner.inverse_derivative(y / self.k)
    }
}

#[derive(Clone, Debug)]
pub struct OlcProblem {
    pub network: PowerNetwork,
    pub incidence: Arc<IncidenceSet>,
    pub costs: CostModel,
    pub d_min: Vec<f64>,
    pub d_max: Vec<f64>,
    pub p_in: Vec<f64>,
}

impl OlcProblem {
    /// Uses each bus's `theta` (default 1), `d_min`/`d_max` (default
    /// unbounded) and `p_in`.
    pub fn from_network(network: PowerNetwork) -> Result<Self> {
        let incidence = Arc::new(build_incidence(&network)?);
        let thetas: Vec<f64> = network.buses().iter().map(|b| b.theta.unwrap_or(1.0)).collect();
        let costs = CostModel::quadratic(&thetas)?;
        Self::with_costs(network, incidence, costs)
    }

    pub fn with_costs(network: PowerNetwork, incidence: Arc<IncidenceSet>, costs: CostModel) -> Result<Self> {
        check_len("cost vector", network.bus_count(), costs.len())?;
        let d_min = network.buses().iter().map(|b| b.d_min.unwrap_or(f64::NEG_INFINITY)).collect();
        let d_max = network.buses().iter().map(|b| b.d_max.unwrap_or(f64::INFINITY)).collect();
        let p_in = network.injections();
        let prob = OlcProblem {
            network,
            incidence,
            costs,
            d_min,
            d_max,
            p_in,
        };
        prob.check()?;
        Ok(prob)
    }

    pub fn with_injections(mut self, p_in: Vec<f64>) -> Result<Self> {
        check_len("injection vector", self.network.bus_count(), p_in.len())?;
        self.p_in = p_in;
        Ok(self)
    }

    pub fn bus_count(&self) -> usize {
        self.p_in.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.network.bus_count();
        check_len("lower load limits", n, self.d_min.len())?;
        check_len("upper load limits", n, self.d_max.len())?;
        check_len("injection vector", n, self.p_in.len())?;
        for i in 0..n {
            if self.d_min[i] > self.d_max[i] || self.d_min[i].is_nan() || self.d_max[i].is_nan() {
                return Err(Error::Precondition(format!(
                    "bus {}: load limits [{}, {}] are inverted",
                    self.network.buses()[i].id,
                    self.d_min[i],
                    self.d_max[i]
                )));
            }
        }
        Ok(())
    }

    /// Per-area necessary feasibility: the area's total disturbance must fit
    /// within its total load capacity.
    pub fn check_area_feasibility(&self) -> Result<()> {
        for (area, members) in self.network.areas().iter().zip(self.network.area_members()) {
            let required: f64 = members.iter().map(|&i| self.p_in[i]).sum();
            let lower: f64 = members.iter().map(|&i| self.d_min[i]).sum();
            let upper: f64 = members.iter().map(|&i| self.d_max[i]).sum();
            let slack = 1e-12 * (1.0 + required.abs());
            if required < lower - slack || required > upper + slack {
                return Err(Error::InfeasibleArea {
                    area: area.id,
                    required,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    fn line_limits(&self) -> (Vec<f64>, Vec<f64>) {
        let inc = &self.incidence;
        let lines = self.network.lines();
        (
            inc.internal.iter().map(|&k| lines[k].lower()).collect(),
            inc.internal.iter().map(|&k| lines[k].upper()).collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual).max(self.complementarity)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OlcSolution {
    pub d: Vec<f64>,
    /// Virtual angles with the lowest-id bus of each area pinned to zero.
    pub psi: Vec<f64>,
    pub mu: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    /// Indexed by internal line.
    pub sigma_plus: Vec<f64>,
    pub sigma_minus: Vec<f64>,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub iterations: usize,
}

/// Recomputes all four KKT residuals (infinity norms) from scratch.
pub fn check_kkt(prob: &OlcProblem, sol: &OlcSolution) -> KktResiduals {
    let inc = &prob.incidence;
    let n = prob.bus_count();
    let m = inc.internal.len();
    let (p_lo, p_hi) = prob.line_limits();

    let mut stat: f64 = 0.0;
    for i in 0..n {
        let g = prob.costs.bus(i).derivative(sol.d[i]) - sol.mu[i] + sol.gamma_plus[i] - sol.gamma_minus[i];
        stat = stat.max(g.abs());
    }
    let mut s_mu = vec![0.0; n];
    inc.virtual_outflow(&sol.mu, &mut s_mu);
    let mut g_sigma = vec![0.0; n];
    for (slot, &k) in inc.internal.iter().enumerate() {
        let f = inc.susceptance[k] * (sol.sigma_plus[slot] - sol.sigma_minus[slot]);
        g_sigma[inc.from[k]] += f;
        g_sigma[inc.to[k]] -= f;
    }
    for i in 0..n {
        stat = stat.max((g_sigma[i] - s_mu[i]).abs());
    }

    let mut s_psi = vec![0.0; n];
    inc.virtual_outflow(&sol.psi, &mut s_psi);
    let mut flows = vec![0.0; m];
    inc.virtual_flows(&sol.psi, &mut flows);
    let mut primal: f64 = 0.0;
    for i in 0..n {
        primal = primal
            .max((prob.p_in[i] - sol.d[i] - s_psi[i]).abs())
            .max(sol.d[i] - prob.d_max[i])
            .max(prob.d_min[i] - sol.d[i]);
    }
    for j in 0..m {
        primal = primal.max(flows[j] - p_hi[j]).max(p_lo[j] - flows[j]);
    }

    let dual = sol
        .gamma_plus
        .iter()
        .chain(&sol.gamma_minus)
        .chain(&sol.sigma_plus)
        .chain(&sol.sigma_minus)
        .fold(0.0_f64, |acc, &x| acc.max(-x));

    let product = |mult: f64, gap: f64| if mult == 0.0 { 0.0 } else { (mult * gap).abs() };
    let mut comp: f64 = 0.0;
    for i in 0..n {
        comp = comp
            .max(product(sol.gamma_plus[i], sol.d[i] - prob.d_max[i]))
            .max(product(sol.gamma_minus[i], prob.d_min[i] - sol.d[i]));
    }
    for j in 0..m {
        comp = comp
            .max(product(sol.sigma_plus[j], flows[j] - p_hi[j]))
            .max(product(sol.sigma_minus[j], p_lo[j] - flows[j]));
    }

    KktResiduals {
        stationarity: stat,
        primal,
        dual,
        complementarity: comp,
    }
}

pub fn solve_olc(prob: &OlcProblem, tol: f64) -> Result<OlcSolution> {
    prob.check()?;
    prob.check_area_feasibility()?;
    let members = prob.network.area_members();
    let n = prob.bus_count();

    let mut d = vec![0.0; n];
    let mut mu = vec![0.0; n];
    for group in &members {
        let target: f64 = group.iter().map(|&i| prob.p_in[i]).sum();
        let lambda = area_price(prob, group, target);
        for &i in group {
            mu[i] = lambda;
            d[i] = clamp_demand(prob, i, lambda);
        }
    }
    let pinned: Vec<usize> = members.iter().filter_map(|g| g.first().copied()).collect();
    let rhs: Vec<f64> = (0..n).map(|i| prob.p_in[i] - d[i]).collect();
    let psi = solve_virtual_angles(&prob.incidence, &pinned, &rhs)?;

    let (p_lo, p_hi) = prob.line_limits();
    let mut flows = vec![0.0; prob.incidence.internal.len()];
    prob.incidence.virtual_flows(&psi, &mut flows);
    let within = flows
        .iter()
        .zip(p_lo.iter().zip(&p_hi))
        .all(|(&f, (&lo, &hi))| f >= lo && f <= hi);

    let mut sol = if within {
        let mut gamma_plus = vec![0.0; n];
        let mut gamma_minus = vec![0.0; n];
        for i in 0..n {
            let excess = mu[i] - prob.costs.bus(i).derivative(d[i]);
            if excess > 0.0 {
                gamma_plus[i] = excess;
            } else {
                gamma_minus[i] = -excess;
            }
        }
        let m = flows.len();
        OlcSolution {
            d,
            psi,
            mu,
            gamma_plus,
            gamma_minus,
            sigma_plus: vec![0.0; m],
            sigma_minus: vec![0.0; m],
            objective: 0.0,
            kkt: KktResiduals::default(),
            iterations: 0,
        }
    } else {
        interior_point(prob, &pinned, &d, &psi, tol)?
    };
    sol.objective = prob.costs.total(&sol.d);
    sol.kkt = check_kkt(prob, &sol);
    let residual = sol.kkt.max();
    if !(residual <= tol * (1.0 + max_abs(&prob.p_in))) {
        return Err(Error::NoConvergence {
            solver: "olc oracle",
            iterations: sol.iterations,
            residual,
        });
    }
    Ok(sol)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn clamp_demand(prob: &OlcProblem, i: usize, price: f64) -> f64 {
    prob.costs
        .bus(i)
        .inverse_derivative(price)
        .clamp(prob.d_min[i], prob.d_max[i])
}

/// Marginal price at which the area's clamped demand meets `target`.
fn area_price(prob: &OlcProblem, group: &[usize], target: f64) -> f64 {
    let total = |p: f64| group.iter().map(|&i| clamp_demand(prob, i, p)).sum::<f64>();
    let (mut lo, mut hi) = (-1.0, 1.0);
    for _ in 0..200 {
        if total(lo) <= target {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..200 {
        if total(hi) >= target {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // When several prices clear the area (all members at a limit) the
    // smallest-magnitude one keeps the multipliers minimal.
    let mid = 0.5 * (lo + hi);
    if (total(0.0) - target).abs() <= 1e-14 * (1.0 + target.abs()) {
        0.0
    } else {
        mid
    }
}

/// Solves `S psi = rhs` with `psi[p] = 0` for each pinned bus.
fn solve_virtual_angles(inc: &IncidenceSet, pinned: &[usize], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = inc.bus_count();
    let free: Vec<usize> = (0..n).filter(|i| !pinned.contains(i)).collect();
    let mut psi = vec![0.0; n];
    if free.is_empty() {
        return Ok(psi);
    }
    let reduced = inc.s.select_rows(free.iter()).select_columns(free.iter());
    let b = DVector::from_iterator(free.len(), free.iter().map(|&i| rhs[i]));
    let x = reduced
        .cholesky()
        .ok_or_else(|| Error::Infeasible("reduced internal laplacian is singular".into()))?
        .solve(&b);
    for (k, &i) in free.iter().enumerate() {
        psi[i] = x[k];
    }
    Ok(psi)
}

/// Inequality row `coef . x <= bound`, tagged by its origin.
struct Row {
    coef: Vec<(usize, f64)>,
    bound: f64,
    kind: RowKind,
}

#[derive(Clone, Copy)]
enum RowKind {
    LoadUpper(usize),
    LoadLower(usize),
    FlowUpper(usize),
    FlowLower(usize),
}

fn interior_point(
    prob: &OlcProblem,
    pinned: &[usize],
    d0: &[f64],
    psi0: &[f64],
    tol: f64,
) -> Result<OlcSolution> {
    let inc = &prob.incidence;
    let n = prob.bus_count();
    let members = prob.network.area_members();
    let fixed: Vec<bool> = (0..n).map(|i| prob.d_min[i] == prob.d_max[i]).collect();
    let free_d: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let free_psi: Vec<usize> = (0..n).filter(|i| !pinned.contains(i)).collect();
    let nd = free_d.len();
    let nx = nd + free_psi.len();
    let mut psi_col = vec![usize::MAX; n];
    for (k, &i) in free_psi.iter().enumerate() {
        psi_col[i] = nd + k;
    }

    // Equality rows: one per bus, except the pinned bus of areas whose loads
    // are all fixed (that row is implied by the others).
    let eq_rows: Vec<usize> = (0..n)
        .filter(|&i| {
            !members
                .iter()
                .any(|g| g.first() == Some(&i) && g.iter().all(|&j| fixed[j]))
        })
        .collect();
    let ne = eq_rows.len();
    let mut a_eq = DMatrix::zeros(ne, nx);
    let mut b_eq = DVector::zeros(ne);
    for (r, &i) in eq_rows.iter().enumerate() {
        if let Some(k) = free_d.iter().position(|&j| j == i) {
            a_eq[(r, k)] = 1.0;
            b_eq[r] = prob.p_in[i];
        } else {
            b_eq[r] = prob.p_in[i] - prob.d_max[i];
        }
        for &j in &free_psi {
            a_eq[(r, psi_col[j])] = inc.s[(i, j)];
        }
    }

    let mut rows = Vec::new();
    for (k, &i) in free_d.iter().enumerate() {
        if prob.d_max[i].is_finite() {
            rows.push(Row {
                coef: vec![(k, 1.0)],
                bound: prob.d_max[i],
                kind: RowKind::LoadUpper(i),
            });
        }
        if prob.d_min[i].is_finite() {
            rows.push(Row {
                coef: vec![(k, -1.0)],
                bound: -prob.d_min[i],
                kind: RowKind::LoadLower(i),
            });
        }
    }
    let (p_lo, p_hi) = prob.line_limits();
    for (slot, &line) in inc.internal.iter().enumerate() {
        let b = inc.susceptance[line];
        let mut coef = Vec::new();
        if psi_col[inc.from[line]] != usize::MAX {
            coef.push((psi_col[inc.from[line]], b));
        }
        if psi_col[inc.to[line]] != usize::MAX {
            coef.push((psi_col[inc.to[line]], -b));
        }
        if p_hi[slot].is_finite() {
            rows.push(Row {
                coef: coef.clone(),
                bound: p_hi[slot],
                kind: RowKind::FlowUpper(slot),
            });
        }
        if p_lo[slot].is_finite() {
            rows.push(Row {
                coef: coef.iter().map(|&(c, v)| (c, -v)).collect(),
                bound: -p_lo[slot],
                kind: RowKind::FlowLower(slot),
            });
        }
    }
    let ni = rows.len();

    let mut x = DVector::zeros(nx);
    for (k, &i) in free_d.iter().enumerate() {
        let (lo, hi) = (prob.d_min[i], prob.d_max[i]);
        let mut v = d0[i];
        if lo.is_finite() && hi.is_finite() {
            let margin = 0.05 * (hi - lo);
            v = v.clamp(lo + margin, hi - margin);
        }
        x[k] = v;
    }
    for &i in &free_psi {
        x[psi_col[i]] = psi0[i];
    }
    let row_value = |row: &Row, x: &DVector<f64>| row.coef.iter().map(|&(c, v)| v * x[c]).sum::<f64>();
    let mut s = DVector::from_iterator(ni, rows.iter().map(|r| (r.bound - row_value(r, &x)).max(1e-2)));
    let mut z = DVector::from_element(ni, 1.0);
    let mut y = DVector::zeros(ne);

    let scale = 1.0 + max_abs(&prob.p_in);
    let max_iter = 200;
    let mut iterations = 0;
    let mut last_residual;
    loop {
        let d_full: Vec<f64> = (0..n)
            .map(|i| match free_d.iter().position(|&j| j == i) {
                Some(k) => x[k],
                None => prob.d_max[i],
            })
            .collect();
        let mut grad = DVector::zeros(nx);
        let mut hess = DVector::zeros(nx);
        for (k, &i) in free_d.iter().enumerate() {
            grad[k] = prob.costs.bus(i).derivative(d_full[i]);
            hess[k] = prob.costs.bus(i).second_derivative(d_full[i]);
        }
        let mut r_d = &grad + a_eq.transpose() * &y;
        for (j, row) in rows.iter().enumerate() {
            for &(c, v) in &row.coef {
                r_d[c] += v * z[j];
            }
        }
        let r_p = &a_eq * &x - &b_eq;
        let r_c = DVector::from_iterator(ni, rows.iter().enumerate().map(|(j, r)| row_value(r, &x) + s[j] - r.bound));
        let gap = if ni > 0 { s.dot(&z) / ni as f64 } else { 0.0 };
        let worst_pair = if ni > 0 { s.component_mul(&z).amax() } else { 0.0 };
        let residual = r_d.amax().max(r_p.amax()).max(r_c.amax()).max(worst_pair);
        last_residual = residual;
        if !residual.is_finite() || z.amax() > 1e12 {
            return Err(Error::Infeasible(
                "limits admit no balanced load adjustment (dual variables diverged)".into(),
            ));
        }
        if residual <= 0.01 * tol * scale || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let tau = 0.1 * gap;
        let mut h = DMatrix::from_diagonal(&hess);
        let mut rhs_x = -&r_d;
        for (j, row) in rows.iter().enumerate() {
            let w = z[j] / s[j];
            for &(c1, v1) in &row.coef {
                for &(c2, v2) in &row.coef {
                    h[(c1, c2)] += w * v1 * v2;
                }
            }
            let r_s = s[j] * z[j] - tau;
            let t = (-r_s + z[j] * r_c[j]) / s[j];
            for &(c, v) in &row.coef {
                rhs_x[c] -= v * t;
            }
        }
        let dim = nx + ne;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (nx, nx)).copy_from(&h);
        kkt.view_mut((0, nx), (nx, ne)).copy_from(&a_eq.transpose());
        kkt.view_mut((nx, 0), (ne, nx)).copy_from(&a_eq);
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, nx).copy_from(&rhs_x);
        rhs.rows_mut(nx, ne).copy_from(&(-&r_p));
        let step = kkt.lu().solve(&rhs).ok_or_else(|| Error::NoConvergence {
            solver: "olc interior point",
            iterations,
            residual,
        })?;
        let dx = step.rows(0, nx).into_owned();
        let dy = step.rows(nx, ne).into_owned();
        let mut ds = DVector::zeros(ni);
        let mut dz = DVector::zeros(ni);
        for (j, row) in rows.iter().enumerate() {
            ds[j] = -r_c[j] - row_value(row, &dx);
            dz[j] = (-(s[j] * z[j] - tau) - z[j] * ds[j]) / s[j];
        }
        let mut alpha: f64 = 1.0;
        for j in 0..ni {
            if ds[j] < 0.0 {
                alpha = alpha.min(-0.995 * s[j] / ds[j]);
            }
            if dz[j] < 0.0 {
                alpha = alpha.min(-0.995 * z[j] / dz[j]);
            }
        }
        x += alpha * dx;
        y += alpha * dy;
        s += alpha * ds;
        z += alpha * dz;
    }
    if !(last_residual <= tol * scale) {
        return Err(Error::NoConvergence {
            solver: "olc interior point",
            iterations,
            residual: last_residual,
        });
    }

    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = match free_d.iter().position(|&j| j == i) {
            Some(k) => x[k],
            None => prob.d_max[i],
        };
    }
    let mut psi = vec![0.0; n];
    for &i in &free_psi {
        psi[i] = x[psi_col[i]];
    }
    let mut mu = vec![0.0; n];
    for (r, &i) in eq_rows.iter().enumerate() {
        mu[i] = -y[r];
    }
    let m = inc.internal.len();
    let mut gamma_plus = vec![0.0; n];
    let mut gamma_minus = vec![0.0; n];
    let mut sigma_plus = vec![0.0; m];
    let mut sigma_minus = vec![0.0; m];
    for (j, row) in rows.iter().enumerate() {
        match row.kind {
            RowKind::LoadUpper(i) => gamma_plus[i] = z[j],
            RowKind::LoadLower(i) => gamma_minus[i] = z[j],
            RowKind::FlowUpper(l) => sigma_plus[l] = z[j],
            RowKind::FlowLower(l) => sigma_minus[l] = z[j],
        }
    }
    for i in (0..n).filter(|&i| fixed[i]) {
        let excess = mu[i] - prob.costs.bus(i).derivative(d[i]);
        if excess > 0.0 {
            gamma_plus[i] = excess;
        } else {
            gamma_minus[i] = -excess;
        }
    }
    Ok(OlcSolution {
        d,
        psi,
        mu,
        gamma_plus,
        gamma_minus,
        sigma_plus,
        sigma_minus,
        objective: 0.0,
        kkt: KktResiduals::default(),
        iterations,
    })
}

#[derive(Clone, Debug)]
pub struct DriftReport {
    pub times: Vec<f64>,
    pub solutions: Vec<OlcSolution>,
    /// Quotient-metric rate on each interval `[t_k, t_{k+1}]`.
    pub rates: Vec<f64>,
    /// Infinity-norm rate of `d*` alone on each interval.
    pub d_rates: Vec<f64>,
    pub sup: f64,
}

/// Finite-difference drift of the optimum along a time-varying problem,
/// measured on `(d, mu, A P, S psi)`.
pub fn equilibrium_drift<F>(prob_at: F, times: &[f64], tol: f64) -> Result<DriftReport>
where
    F: Fn(f64) -> Result<OlcProblem>,
{
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("drift grid must be strictly increasing".into()));
    }
    let mut solutions = Vec::with_capacity(times.len());
    let mut balances = Vec::with_capacity(times.len());
    for &t in times {
        let prob = prob_at(t)?;
        let sol = solve_olc(&prob, tol)?;
        // At an optimum A P* = S psi* = P_in - d*.
        balances.push(prob.p_in.iter().zip(&sol.d).map(|(p, d)| p - d).collect::<Vec<f64>>());
        solutions.push(sol);
    }
    let mut rates = Vec::new();
    let mut d_rates = Vec::new();
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        let (a, b) = (&solutions[k - 1], &solutions[k]);
        let sq = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
        let dist = sq(&a.d, &b.d) + sq(&a.mu, &b.mu) + 2.0 * sq(&balances[k - 1], &balances[k]);
        rates.push(dist.sqrt() / dt);
        d_rates.push(a.d.iter().zip(&b.d).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs())) / dt);
    }
    let sup = rates.iter().copied().fold(0.0, f64::max);
    Ok(DriftReport {
        times: times.to_vec(),
        solutions,
        rates,
        d_rates,
        sup,
    })
}
