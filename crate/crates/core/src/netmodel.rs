//! Network topology, per-unit parameters and the incidence / Laplacian algebra.
//!
//! All bus-indexed vectors use the canonical ordering: generator buses first,
//! then load buses, each class by ascending id. Line-indexed vectors follow
//! the order in which lines were supplied.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Singular values / eigenvalues below `RANK_TOLERANCE * largest` are dropped
/// from the compact factorizations.
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Generator,
    Load,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    pub area: usize,
    /// Inertia constant, generator buses only.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
    #[serde(rename = "D")]
    pub damping: f64,
    /// Time-zero uncontrollable injection deviation.
    pub p_in: f64,
    /// Quadratic disutility coefficient used when building default costs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<f64>,
}

impl Bus {
    pub fn generator(id: usize, area: usize, inertia: f64, damping: f64) -> Self {
        Bus {
            id,
            kind: BusKind::Generator,
            area,
            inertia: Some(inertia),
            damping,
            p_in: 0.0,
            theta: None,
            d_min: None,
            d_max: None,
        }
    }

    pub fn load(id: usize, area: usize, damping: f64) -> Self {
        Bus {
            id,
            kind: BusKind::Load,
            area,
            inertia: None,
            damping,
            p_in: 0.0,
            theta: None,
            d_min: None,
            d_max: None,
        }
    }

    pub fn with_injection(mut self, p_in: f64) -> Self {
        self.p_in = p_in;
        self
    }

    pub fn with_cost(mut self, theta: f64, d_min: f64, d_max: f64) -> Self {
        self.theta = Some(theta);
        self.d_min = Some(d_min);
        self.d_max = Some(d_max);
        self
    }

    pub fn is_generator(&self) -> bool {
        self.kind == BusKind::Generator
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Susceptance.
    pub b: f64,
    /// Thermal upper limit; `None` means unbounded.
    #[serde(default, with = "opt_limit")]
    pub p_max: Option<f64>,
    #[serde(default, with = "opt_limit")]
    pub p_min: Option<f64>,
    /// Both endpoints in the same area. Derived, never read from a case file.
    #[serde(skip)]
    pub internal: bool,
}

impl Line {
    pub fn new(from: usize, to: usize, b: f64) -> Self {
        Line {
            from,
            to,
            b,
            p_max: None,
            p_min: None,
            internal: false,
        }
    }

    pub fn with_limits(mut self, p_min: f64, p_max: f64) -> Self {
        self.p_min = Some(p_min);
        self.p_max = Some(p_max);
        self
    }

    pub fn upper(&self) -> f64 {
        self.p_max.unwrap_or(f64::INFINITY)
    }

    pub fn lower(&self) -> f64 {
        self.p_min.unwrap_or(f64::NEG_INFINITY)
    }
}

mod opt_limit {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_finite() => s.serialize_some(x),
            _ => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub id: usize,
    pub buses: Vec<usize>,
}

/// On-disk case layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseFile {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    #[serde(default)]
    pub areas: Vec<Area>,
    pub base_mva: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct PowerNetwork {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    areas: Vec<Area>,
    base_mva: f64,
    notes: Vec<String>,
    index: HashMap<usize, usize>,
    endpoints: Vec<(Option<usize>, Option<usize>)>,
}

impl PowerNetwork {
    /// Builds a network, reordering buses into the canonical order. Never
    /// fails; call [`validate_network`] to check the invariants. When `areas`
    /// is empty the partition is derived from each bus's `area` field.
    pub fn new(mut buses: Vec<Bus>, mut lines: Vec<Line>, areas: Vec<Area>, base_mva: f64) -> Self {
        buses.sort_by_key(|b| (b.kind == BusKind::Load, b.id));
        let mut index = HashMap::new();
        for (i, b) in buses.iter().enumerate() {
            index.entry(b.id).or_insert(i);
        }
        let areas = if areas.is_empty() {
            let mut by_area: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for b in &buses {
                by_area.entry(b.area).or_default().push(b.id);
            }
            by_area
                .into_iter()
                .map(|(id, mut buses)| {
                    buses.sort_unstable();
                    Area { id, buses }
                })
                .collect()
        } else {
            areas
        };
        let endpoints: Vec<_> = lines
            .iter()
            .map(|l| (index.get(&l.from).copied(), index.get(&l.to).copied()))
            .collect();
        for (l, &(f, t)) in lines.iter_mut().zip(&endpoints) {
            l.internal = match (f, t) {
                (Some(f), Some(t)) => buses[f].area == buses[t].area,
                _ => false,
            };
        }
        PowerNetwork {
            buses,
            lines,
            areas,
            base_mva,
            notes: Vec::new(),
            index,
            endpoints,
        }
    }

    pub fn from_case(case: CaseFile) -> Self {
        let notes = case.notes;
        let mut net = PowerNetwork::new(case.buses, case.lines, case.areas, case.base_mva);
        net.notes = notes;
        net
    }

    pub fn to_case(&self) -> CaseFile {
        CaseFile {
            buses: self.buses.clone(),
            lines: self.lines.clone(),
            areas: self.areas.clone(),
            base_mva: self.base_mva,
            notes: self.notes.clone(),
        }
    }

    /// Parses a JSON case. Does not validate.
    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self> {
        let case: CaseFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: format!("line {} column {}: {}", e.line(), e.column(), e),
        })?;
        Ok(PowerNetwork::from_case(case))
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn generator_count(&self) -> usize {
        self.buses.iter().filter(|b| b.is_generator()).count()
    }

    /// Canonical index of a bus id.
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn bus_by_id(&self, id: usize) -> Option<&Bus> {
        self.index_of(id).map(|i| &self.buses[i])
    }

    pub fn damping(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.damping).collect()
    }

    pub fn injections(&self) -> Vec<f64> {
        self.buses.iter().map(|b| b.p_in).collect()
    }

    /// Canonical bus indices of every area, in area order.
    pub fn area_members(&self) -> Vec<Vec<usize>> {
        self.areas
            .iter()
            .map(|a| {
                let mut m: Vec<usize> = (0..self.buses.len())
                    .filter(|&i| self.buses[i].area == a.id)
                    .collect();
                m.sort_unstable();
                m
            })
            .collect()
    }

    fn endpoints(&self, line: usize) -> Option<(usize, usize)> {
        match self.endpoints[line] {
            (Some(f), Some(t)) => Some((f, t)),
            _ => None,
        }
    }

    pub fn with_injections(mut self, p_in: &[f64]) -> Result<Self> {
        check_len("injection vector", self.buses.len(), p_in.len())?;
        for (b, &p) in self.buses.iter_mut().zip(p_in) {
            b.p_in = p;
        }
        Ok(self)
    }

    pub fn set_injection(&mut self, id: usize, p_in: f64) -> Result<()> {
        let i = self
            .index_of(id)
            .ok_or_else(|| Error::Config(format!("unknown bus id {id}")))?;
        self.buses[i].p_in = p_in;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    NonPositiveDamping,
    InvalidInertia,
    NonFiniteParameter,
    DuplicateBusId,
    NonContiguousIds,
    SelfLoop,
    UnknownEndpoint,
    AntiparallelLine,
    DuplicateLine,
    NonPositiveSusceptance,
    InvertedThermalLimits,
    AreaMismatch,
    GraphNotConnected,
    AreaNotConnected,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::NonPositiveDamping => "non-positive damping",
            Rule::InvalidInertia => "generator inertia missing or non-positive",
            Rule::NonFiniteParameter => "non-finite parameter",
            Rule::DuplicateBusId => "duplicate bus id",
            Rule::NonContiguousIds => "bus ids not contiguous from 1",
            Rule::SelfLoop => "self loop",
            Rule::UnknownEndpoint => "unknown endpoint bus",
            Rule::AntiparallelLine => "antiparallel line",
            Rule::DuplicateLine => "duplicate line",
            Rule::NonPositiveSusceptance => "non-positive susceptance",
            Rule::InvertedThermalLimits => "thermal lower limit not below upper limit",
            Rule::AreaMismatch => "area partition inconsistent with bus areas",
            Rule::GraphNotConnected => "graph not connected",
            Rule::AreaNotConnected => "area internal subgraph not connected",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

fn violation(entity: impl Into<String>, rule: Rule) -> Violation {
    Violation {
        entity: entity.into(),
        rule,
    }
}

/// Checks every bus, line and network invariant. Violations are data.
pub fn validate_network(net: &PowerNetwork) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = net.bus_count();

    let mut seen = HashSet::new();
    for b in net.buses() {
        let who = format!("bus {}", b.id);
        if !seen.insert(b.id) {
            out.push(violation(&who, Rule::DuplicateBusId));
        }
        if !b.damping.is_finite() || !b.p_in.is_finite() {
            out.push(violation(&who, Rule::NonFiniteParameter));
        } else if b.damping <= 0.0 {
            out.push(violation(&who, Rule::NonPositiveDamping));
        }
        if b.is_generator() && !matches!(b.inertia, Some(m) if m > 0.0 && m.is_finite()) {
            out.push(violation(&who, Rule::InvalidInertia));
        }
    }
    let contiguous = seen.len() == n && (1..=n).all(|id| seen.contains(&id));
    if !contiguous {
        out.push(violation("buses", Rule::NonContiguousIds));
    }

    let mut directed = HashSet::new();
    for (k, l) in net.lines().iter().enumerate() {
        let who = format!("line {} ({}->{})", k + 1, l.from, l.to);
        if l.from == l.to {
            out.push(violation(&who, Rule::SelfLoop));
        }
        if net.endpoints(k).is_none() {
            out.push(violation(&who, Rule::UnknownEndpoint));
        }
        if !l.b.is_finite() {
            out.push(violation(&who, Rule::NonFiniteParameter));
        } else if l.b <= 0.0 {
            out.push(violation(&who, Rule::NonPositiveSusceptance));
        }
        if l.lower() >= l.upper() {
            out.push(violation(&who, Rule::InvertedThermalLimits));
        }
        if !directed.insert((l.from, l.to)) {
            out.push(violation(&who, Rule::DuplicateLine));
        }
    }
    for (k, l) in net.lines().iter().enumerate() {
        if l.from < l.to && directed.contains(&(l.to, l.from)) {
            out.push(violation(
                format!("line {} ({}->{})", k + 1, l.from, l.to),
                Rule::AntiparallelLine,
            ));
        }
    }

    let mut listed: HashMap<usize, usize> = HashMap::new();
    for a in net.areas() {
        for &id in &a.buses {
            if listed.insert(id, a.id).is_some() {
                out.push(violation(format!("area {}", a.id), Rule::AreaMismatch));
            }
        }
    }
    for b in net.buses() {
        if listed.get(&b.id) != Some(&b.area) {
            out.push(violation(format!("bus {}", b.id), Rule::AreaMismatch));
        }
    }
    if listed.len() != n {
        out.push(violation("areas", Rule::AreaMismatch));
    }

    if n > 0 {
        let all: Vec<usize> = (0..n).collect();
        if !connected(net, &all, false) {
            out.push(violation("network", Rule::GraphNotConnected));
        }
        for (a, members) in net.areas().iter().zip(net.area_members()) {
            if !members.is_empty() && !connected(net, &members, true) {
                out.push(violation(format!("area {}", a.id), Rule::AreaNotConnected));
            }
        }
    }
    out
}

fn connected(net: &PowerNetwork, members: &[usize], internal_only: bool) -> bool {
    let set: HashSet<usize> = members.iter().copied().collect();
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, l) in net.lines().iter().enumerate() {
        if internal_only && !l.internal {
            continue;
        }
        if let Some((f, t)) = net.endpoints(k) {
            if set.contains(&f) && set.contains(&t) {
                adj.entry(f).or_default().push(t);
                adj.entry(t).or_default().push(f);
            }
        }
    }
    let mut visited = HashSet::new();
    let mut queue = VecDeque::from([members[0]]);
    visited.insert(members[0]);
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if visited.insert(w) {
                queue.push_back(w);
            }
        }
    }
    visited.len() == set.len()
}

/// Incidence matrices, the internal Laplacian and their compact factors.
#[derive(Clone, Debug)]
pub struct IncidenceSet {
    /// Number of generator buses; the first `gen_count` rows are generators.
    pub gen_count: usize,
    pub from: Vec<usize>,
    pub to: Vec<usize>,
    pub susceptance: Vec<f64>,
    /// Indices (into the line list) of lines inside an area.
    pub internal: Vec<usize>,
    /// Signed node-branch incidence, `|N| x |E|`.
    pub a: DMatrix<f64>,
    /// Columns of `a` for internal lines.
    pub a_bar: DMatrix<f64>,
    pub b_bar: DVector<f64>,
    /// `a_bar * diag(b_bar) * a_bar^T`.
    pub s: DMatrix<f64>,
    /// Compact SVD `A = V_A Σ_A U_A^T`.
    pub u_a: DMatrix<f64>,
    pub sigma_a: DVector<f64>,
    pub v_a: DMatrix<f64>,
    /// Compact eigendecomposition `S = U_S Σ_S U_S^T`.
    pub u_s: DMatrix<f64>,
    pub sigma_s: DVector<f64>,
    /// Orthonormal bases of ker A and ker S.
    pub null_a: DMatrix<f64>,
    pub null_s: DMatrix<f64>,
    pub warnings: Vec<String>,
}

pub fn build_incidence(net: &PowerNetwork) -> Result<IncidenceSet> {
    let violations = validate_network(net);
    if !violations.is_empty() {
        return Err(Error::InvalidNetwork(violations));
    }
    let n = net.bus_count();
    let e = net.line_count();
    let mut from = Vec::with_capacity(e);
    let mut to = Vec::with_capacity(e);
    let mut a = DMatrix::zeros(n, e);
    for k in 0..e {
        let (f, t) = net.endpoints(k).expect("validated");
        a[(f, k)] = 1.0;
        a[(t, k)] = -1.0;
        from.push(f);
        to.push(t);
    }
    let susceptance: Vec<f64> = net.lines().iter().map(|l| l.b).collect();
    let internal: Vec<usize> = (0..e).filter(|&k| net.lines()[k].internal).collect();
    let a_bar = a.select_columns(internal.iter());
    let b_bar = DVector::from_iterator(internal.len(), internal.iter().map(|&k| susceptance[k]));
    let s = &a_bar * DMatrix::from_diagonal(&b_bar) * a_bar.transpose();

    let mut warnings = Vec::new();
    let (u_a, sigma_a, v_a) = compact_svd(&a, &mut warnings);
    let (u_s, sigma_s) = compact_eigen(&s, &mut warnings);
    let null_a = orthogonal_complement(&u_a, e);
    let null_s = orthogonal_complement(&u_s, n);

    Ok(IncidenceSet {
        gen_count: net.generator_count(),
        from,
        to,
        susceptance,
        internal,
        a,
        a_bar,
        b_bar,
        s,
        u_a,
        sigma_a,
        v_a,
        u_s,
        sigma_s,
        null_a,
        null_s,
        warnings,
    })
}

fn near_tolerance(x: f64, cutoff: f64) -> bool {
    x > cutoff / 10.0 && x < cutoff * 10.0
}

/// Compact SVD `A = V_A Σ_A U_A^T` through the eigendecomposition of the
/// Gram matrix `A A^T` (the dense SVD is unreliable on wide incidence
/// matrices). The rank cutoff is relative to the largest Gram eigenvalue.
fn compact_svd(
    a: &DMatrix<f64>,
    warnings: &mut Vec<String>,
) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (n, e) = a.shape();
    if n == 0 || e == 0 {
        return (DMatrix::zeros(e, 0), DVector::zeros(0), DMatrix::zeros(n, 0));
    }
    let gram = a * a.transpose();
    let eig = gram.symmetric_eigen();
    let largest = eig.eigenvalues.max();
    let cutoff = RANK_TOLERANCE * largest;
    let mut keep: Vec<usize> = Vec::new();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if near_tolerance(ev.abs(), cutoff) {
            warnings.push(format!("incidence gram eigenvalue {ev:.3e} within 10x of rank tolerance"));
        }
        if ev > cutoff {
            keep.push(i);
        }
    }
    keep.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let sigma = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.eigenvalues[i].sqrt()));
    let v_a = eig.eigenvectors.select_columns(keep.iter());
    let mut u_a = a.transpose() * &v_a;
    for (mut col, s) in u_a.column_iter_mut().zip(sigma.iter()) {
        col /= *s;
    }
    (u_a, sigma, v_a)
}

fn compact_eigen(s: &DMatrix<f64>, warnings: &mut Vec<String>) -> (DMatrix<f64>, DVector<f64>) {
    let n = s.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), DVector::zeros(0));
    }
    let eig = s.clone().symmetric_eigen();
    let largest = eig.eigenvalues.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let cutoff = RANK_TOLERANCE * largest;
    let mut keep: Vec<usize> = Vec::new();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if near_tolerance(ev.abs(), cutoff) {
            warnings.push(format!("laplacian eigenvalue {ev:.3e} within 10x of rank tolerance"));
        }
        if ev > cutoff {
            keep.push(i);
        }
    }
    keep.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let sigma = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.eigenvalues[i]));
    (eig.eigenvectors.select_columns(keep.iter()), sigma)
}

/// Orthonormal basis of the complement of the column span of `basis` in R^dim.
fn orthogonal_complement(basis: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if dim == 0 {
        return DMatrix::zeros(0, 0);
    }
    let projector = DMatrix::<f64>::identity(dim, dim) - basis * basis.transpose();
    let eig = projector.symmetric_eigen();
    let keep: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    eig.eigenvectors.select_columns(keep.iter())
}

impl IncidenceSet {
    pub fn bus_count(&self) -> usize {
        self.a.nrows()
    }

    pub fn line_count(&self) -> usize {
        self.a.ncols()
    }

    pub fn load_count(&self) -> usize {
        self.bus_count() - self.gen_count
    }

    /// Rows of `A` for generator buses.
    pub fn a_gen(&self) -> DMatrix<f64> {
        self.a.rows(0, self.gen_count).into_owned()
    }

    pub fn a_load(&self) -> DMatrix<f64> {
        self.a.rows(self.gen_count, self.load_count()).into_owned()
    }

    /// Net outflow `A P` at every bus.
    pub fn outflow(&self, flows: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (k, &p) in flows.iter().enumerate() {
            out[self.from[k]] += p;
            out[self.to[k]] -= p;
        }
    }

    /// Minimum-norm `P` with `A P = outflow` (least squares if inconsistent).
    pub fn min_norm_flows(&self, outflow: &[f64]) -> DVector<f64> {
        let b = DVector::from_column_slice(outflow);
        let mut coeff = self.v_a.transpose() * b;
        for (c, s) in coeff.iter_mut().zip(self.sigma_a.iter()) {
            *c /= s;
        }
        &self.u_a * coeff
    }

    /// Virtual flows `B_ij (psi_i - psi_j)` on internal lines.
    pub fn virtual_flows(&self, psi: &[f64], out: &mut [f64]) {
        for (slot, &k) in out.iter_mut().zip(&self.internal) {
            *slot = self.susceptance[k] * (psi[self.from[k]] - psi[self.to[k]]);
        }
    }

    /// `S psi`, the net virtual outflow at every bus.
    pub fn virtual_outflow(&self, psi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &k in &self.internal {
            let f = self.susceptance[k] * (psi[self.from[k]] - psi[self.to[k]]);
            out[self.from[k]] += f;
            out[self.to[k]] -= f;
        }
    }
}

/// DC line flows `B_ij (theta_i - theta_j)`.
pub fn line_flow(inc: &IncidenceSet, theta: &[f64]) -> Result<DVector<f64>> {
    check_len("phase angle vector", inc.bus_count(), theta.len())?;
    Ok(DVector::from_iterator(
        inc.line_count(),
        (0..inc.line_count()).map(|k| inc.susceptance[k] * (theta[inc.from[k]] - theta[inc.to[k]])),
    ))
}

/// Reads and validates a JSON case file.
pub fn read_case(path: &Path) -> Result<PowerNetwork> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let net = PowerNetwork::from_json_str(&text, path)?;
    let violations = validate_network(&net);
    if violations.is_empty() {
        Ok(net)
    } else {
        Err(Error::InvalidNetwork(violations))
    }
}
