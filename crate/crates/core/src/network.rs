//! Admittance matrix, Newton power flow, Kron reduction, the algebraic
//! network solve used during dynamics, and topology events.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::sysmodel::{Branch, Bus, BusKind, ModelError, NetworkModel, Shunt};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid network model: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Model(Vec<ModelError>),
    #[error("network is disconnected: bus {0} is not reachable")]
    Disconnected(usize),
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    #[error("power flow diverged after {iterations} iterations (mismatch {mismatch:e} pu)")]
    Divergence { iterations: usize, mismatch: f64 },
    #[error("unknown reference: {0}")]
    Reference(String),
    #[error("invalid setpoint: {0}")]
    Setpoint(String),
}

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Bus admittance matrix in system per-unit, indexed like `ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub ids: Vec<usize>,
    pub y: DMatrix<Complex64>,
}

impl AdmittanceMatrix {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&b| b == id)
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.y[(i, j)].re
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.y[(i, j)].im
    }

    /// Add a shunt admittance at bus index `i`.
    pub fn add_shunt(&mut self, i: usize, y: Complex64) {
        self.y[(i, i)] += y;
    }
}

fn check_connected(model: &NetworkModel) -> Result<(), NetworkError> {
    let n = model.n_bus();
    if n == 0 {
        return Ok(());
    }
    let mut adj = vec![Vec::new(); n];
    for br in model.branches.iter().filter(|b| b.in_service) {
        let (a, b) = (
            model.bus_index(br.from).unwrap(),
            model.bus_index(br.to).unwrap(),
        );
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = q.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                q.push_back(j);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(NetworkError::Disconnected(model.buses[i].id)),
        None => Ok(()),
    }
}

/// Standard π-model Y-bus with off-nominal taps on the `from` side.
/// Loads are not included; fixed shunts are.
pub fn build_ybus(model: &NetworkModel) -> Result<AdmittanceMatrix, NetworkError> {
    model.validate().map_err(NetworkError::Model)?;
    check_connected(model)?;
    let n = model.n_bus();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for br in model.branches.iter().filter(|b| b.in_service) {
        let f = model.bus_index(br.from).unwrap();
        let t = model.bus_index(br.to).unwrap();
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let yc = J * (br.b_shunt / 2.0);
        let a = br.tap;
        y[(f, f)] += (ys + yc) / (a * a);
        y[(t, t)] += ys + yc;
        y[(f, t)] -= ys / a;
        y[(t, f)] -= ys / a;
    }
    for s in &model.shunts {
        let i = model.bus_index(s.bus).unwrap();
        y[(i, i)] += Complex64::new(s.g, s.b);
    }
    Ok(AdmittanceMatrix {
        ids: model.buses.iter().map(|b| b.id).collect(),
        y,
    })
}

/// Generator setpoint for the power flow, system per-unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSetpoint {
    pub bus: usize,
    pub p: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub ids: Vec<usize>,
    pub v: Vec<Complex64>,
    /// Per setpoint, in the order given: injected P and Q, system pu.
    pub p_gen: Vec<f64>,
    pub q_gen: Vec<f64>,
    pub mismatch: f64,
    pub iterations: usize,
}

impl PowerFlowSolution {
    pub fn voltage(&self, id: usize) -> Option<Complex64> {
        self.ids.iter().position(|&b| b == id).map(|i| self.v[i])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PowerFlowOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 30,
        }
    }
}

fn injections(y: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let vv = DVector::from_column_slice(v);
    let i = y * &vv;
    v.iter().zip(i.iter()).map(|(a, b)| a * b.conj()).collect()
}

/// Newton–Raphson in polar coordinates with constant-power loads.
pub fn solve_powerflow(
    model: &NetworkModel,
    gens: &[GenSetpoint],
    slack: usize,
    opts: PowerFlowOptions,
) -> Result<PowerFlowSolution, NetworkError> {
    let ybus = build_ybus(model)?;
    let n = ybus.n();
    let s_base = model.bases.s_system;
    let slack_i = ybus
        .index_of(slack)
        .ok_or_else(|| NetworkError::Reference(format!("slack bus {slack}")))?;
    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];
    for l in &model.loads {
        let i = ybus.index_of(l.bus).unwrap();
        p_spec[i] -= l.p / s_base;
        q_spec[i] -= l.q / s_base;
    }
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    let mut is_pv = vec![false; n];
    let mut gen_idx = Vec::with_capacity(gens.len());
    for g in gens {
        let i = ybus
            .index_of(g.bus)
            .ok_or_else(|| NetworkError::Reference(format!("generator bus {}", g.bus)))?;
        if !(g.v > 0.0) {
            return Err(NetworkError::Setpoint(format!(
                "bus {} voltage {}",
                g.bus, g.v
            )));
        }
        if is_pv[i] {
            return Err(NetworkError::Setpoint(format!(
                "bus {} has two generators",
                g.bus
            )));
        }
        is_pv[i] = true;
        vm[i] = g.v;
        if i != slack_i {
            p_spec[i] += g.p;
        }
        gen_idx.push(i);
    }
    if !is_pv[slack_i] {
        return Err(NetworkError::Setpoint(format!(
            "slack bus {slack} has no generator"
        )));
    }
    let ang: Vec<usize> = (0..n).filter(|&i| i != slack_i).collect();
    let mag: Vec<usize> = (0..n).filter(|&i| !is_pv[i]).collect();
    let na = ang.len();
    let dim = na + mag.len();
    let g = ybus.y.map(|c| c.re);
    let b = ybus.y.map(|c| c.im);

    let mismatch = |vm: &[f64], va: &[f64]| {
        let v: Vec<Complex64> = vm
            .iter()
            .zip(va)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect();
        let s = injections(&ybus.y, &v);
        let mut f = DVector::zeros(dim);
        for (k, &i) in ang.iter().enumerate() {
            f[k] = p_spec[i] - s[i].re;
        }
        for (k, &i) in mag.iter().enumerate() {
            f[na + k] = q_spec[i] - s[i].im;
        }
        (f, s)
    };

    let mut iterations = 0;
    loop {
        let (f, s) = mismatch(&vm, &va);
        let norm = f.amax();
        if !norm.is_finite() {
            return Err(NetworkError::Divergence {
                iterations,
                mismatch: norm,
            });
        }
        if norm < opts.tolerance {
            let v: Vec<Complex64> = vm
                .iter()
                .zip(&va)
                .map(|(&m, &a)| Complex64::from_polar(m, a))
                .collect();
            let mut p_gen = Vec::new();
            let mut q_gen = Vec::new();
            for &i in &gen_idx {
                let load_p: f64 = model
                    .loads
                    .iter()
                    .filter(|l| l.bus == ybus.ids[i])
                    .map(|l| l.p / s_base)
                    .sum();
                let load_q: f64 = model
                    .loads
                    .iter()
                    .filter(|l| l.bus == ybus.ids[i])
                    .map(|l| l.q / s_base)
                    .sum();
                p_gen.push(s[i].re + load_p);
                q_gen.push(s[i].im + load_q);
            }
            return Ok(PowerFlowSolution {
                ids: ybus.ids.clone(),
                v,
                p_gen,
                q_gen,
                mismatch: norm,
                iterations,
            });
        }
        if iterations == opts.max_iterations {
            return Err(NetworkError::Divergence {
                iterations,
                mismatch: norm,
            });
        }
        iterations += 1;
        let jac = powerflow_jacobian(&g, &b, &vm, &va, &s, &ang, &mag);
        let dx = jac
            .lu()
            .solve(&f)
            .ok_or(NetworkError::Singular("power-flow Jacobian"))?;
        for (k, &i) in ang.iter().enumerate() {
            va[i] += dx[k];
        }
        for (k, &i) in mag.iter().enumerate() {
            vm[i] += dx[na + k];
        }
    }
}

/// Jacobian of `[P; Q]` with respect to `[θ; |V|]` over the given index sets.
pub fn powerflow_jacobian(
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    vm: &[f64],
    va: &[f64],
    s: &[Complex64],
    ang: &[usize],
    mag: &[usize],
) -> DMatrix<f64> {
    let na = ang.len();
    let dim = na + mag.len();
    let mut jac = DMatrix::zeros(dim, dim);
    let dp_dth = |i: usize, j: usize| {
        if i == j {
            -s[i].im - b[(i, i)] * vm[i] * vm[i]
        } else {
            let t = va[i] - va[j];
            vm[i] * vm[j] * (g[(i, j)] * t.sin() - b[(i, j)] * t.cos())
        }
    };
    let dp_dv = |i: usize, j: usize| {
        if i == j {
            s[i].re / vm[i] + g[(i, i)] * vm[i]
        } else {
            let t = va[i] - va[j];
            vm[i] * (g[(i, j)] * t.cos() + b[(i, j)] * t.sin())
        }
    };
    let dq_dth = |i: usize, j: usize| {
        if i == j {
            s[i].re - g[(i, i)] * vm[i] * vm[i]
        } else {
            let t = va[i] - va[j];
            -vm[i] * vm[j] * (g[(i, j)] * t.cos() + b[(i, j)] * t.sin())
        }
    };
    let dq_dv = |i: usize, j: usize| {
        if i == j {
            s[i].im / vm[i] - b[(i, i)] * vm[i]
        } else {
            let t = va[i] - va[j];
            vm[i] * (g[(i, j)] * t.sin() - b[(i, j)] * t.cos())
        }
    };
    for (r, &i) in ang.iter().enumerate() {
        for (c, &j) in ang.iter().enumerate() {
            jac[(r, c)] = dp_dth(i, j);
        }
        for (c, &j) in mag.iter().enumerate() {
            jac[(r, na + c)] = dp_dv(i, j);
        }
    }
    for (r, &i) in mag.iter().enumerate() {
        for (c, &j) in ang.iter().enumerate() {
            jac[(na + r, c)] = dq_dth(i, j);
        }
        for (c, &j) in mag.iter().enumerate() {
            jac[(na + r, na + c)] = dq_dv(i, j);
        }
    }
    jac
}

/// Eliminate every bus not in `keep`: `Y_kk − Y_ke·Y_ee⁻¹·Y_ek`.
pub fn kron_reduce(
    y: &DMatrix<Complex64>,
    keep: &[usize],
) -> Result<DMatrix<Complex64>, NetworkError> {
    let n = y.nrows();
    let elim: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let nk = keep.len();
    let ykk = DMatrix::from_fn(nk, nk, |i, j| y[(keep[i], keep[j])]);
    if elim.is_empty() {
        return Ok(ykk);
    }
    let ne = elim.len();
    let yee = DMatrix::from_fn(ne, ne, |i, j| y[(elim[i], elim[j])]);
    let yek = DMatrix::from_fn(ne, nk, |i, j| y[(elim[i], keep[j])]);
    let yke = DMatrix::from_fn(nk, ne, |i, j| y[(keep[i], elim[j])]);
    let x = yee
        .lu()
        .solve(&yek)
        .ok_or(NetworkError::Singular("Kron reduction"))?;
    if x.iter().any(|c| !c.is_finite()) {
        return Err(NetworkError::Singular("Kron reduction"));
    }
    Ok(ykk - yke * x)
}

/// Voltage source behind a series impedance, on the system base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    /// Bus index (not id) of the terminal.
    pub bus: usize,
    pub e: Complex64,
    pub z: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub v: Vec<Complex64>,
    /// Per source: power leaving the internal node, system pu.
    pub s_e: Vec<Complex64>,
    pub v_t: Vec<f64>,
}

/// Solve `Y·V = I(E)` with sources folded in as Norton equivalents.
/// `y` must already contain load admittances.
pub fn network_algebraic_solve(
    y: &AdmittanceMatrix,
    sources: &[Source],
) -> Result<NetworkSolution, NetworkError> {
    let mut ya = y.y.clone();
    let mut inj = DVector::<Complex64>::zeros(y.n());
    for s in sources {
        let ys = Complex64::new(1.0, 0.0) / s.z;
        ya[(s.bus, s.bus)] += ys;
        inj[s.bus] += s.e * ys;
    }
    let v = ya
        .lu()
        .solve(&inj)
        .ok_or(NetworkError::Singular("network solve"))?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err(NetworkError::Singular("network solve"));
    }
    let mut s_e = Vec::with_capacity(sources.len());
    let mut v_t = Vec::with_capacity(sources.len());
    for s in sources {
        let i = (s.e - v[s.bus]) / s.z;
        s_e.push(s.e * i.conj());
        v_t.push(v[s.bus].norm());
    }
    Ok(NetworkSolution {
        v: v.iter().copied().collect(),
        s_e,
        v_t,
    })
}

/// Total active loss in branches and fixed shunts for a voltage profile.
pub fn network_losses(model: &NetworkModel, v: &[Complex64]) -> f64 {
    let mut loss = 0.0;
    for br in model.branches.iter().filter(|b| b.in_service) {
        let f = model.bus_index(br.from).unwrap();
        let t = model.bus_index(br.to).unwrap();
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let i = (v[f] / br.tap - v[t]) * ys;
        loss += i.norm_sqr() * br.r;
    }
    for s in &model.shunts {
        loss += v[model.bus_index(s.bus).unwrap()].norm_sqr() * s.g;
    }
    loss
}

/// Sources reduced onto their internal nodes, factorized once per topology.
///
/// `y_red` maps internal voltages to internal-node currents; `w` maps them
/// to every bus voltage.
#[derive(Debug, Clone)]
pub struct SourceNetwork {
    pub y_red: DMatrix<Complex64>,
    pub w: DMatrix<Complex64>,
    pub source_bus: Vec<usize>,
}

impl SourceNetwork {
    /// `y_aug` includes loads; `z` holds each source's series impedance.
    pub fn new(
        y_aug: &DMatrix<Complex64>,
        source_bus: &[usize],
        z: &[Complex64],
    ) -> Result<Self, NetworkError> {
        let nb = y_aug.nrows();
        let ns = source_bus.len();
        let mut full = DMatrix::<Complex64>::zeros(ns + nb, ns + nb);
        full.view_mut((ns, ns), (nb, nb)).copy_from(y_aug);
        for (k, (&b, &zk)) in source_bus.iter().zip(z).enumerate() {
            let ys = Complex64::new(1.0, 0.0) / zk;
            full[(k, k)] += ys;
            full[(ns + b, ns + b)] += ys;
            full[(k, ns + b)] -= ys;
            full[(ns + b, k)] -= ys;
        }
        let keep: Vec<usize> = (0..ns).collect();
        let y_red = kron_reduce(&full, &keep)?;
        let ybb = full.view((ns, ns), (nb, nb)).into_owned();
        let ybs = full.view((ns, 0), (nb, ns)).into_owned();
        let w = -ybb
            .lu()
            .solve(&ybs)
            .ok_or(NetworkError::Singular("network factorization"))?;
        Ok(Self {
            y_red,
            w,
            source_bus: source_bus.to_vec(),
        })
    }

    /// Internal-node currents for internal voltages `e`.
    pub fn currents(&self, e: &[Complex64]) -> Vec<Complex64> {
        let n = e.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.y_red[(i, j)] * e[j]).sum())
            .collect()
    }

    pub fn bus_voltage(&self, bus: usize, e: &[Complex64]) -> Complex64 {
        e.iter()
            .enumerate()
            .map(|(j, &ej)| self.w[(bus, j)] * ej)
            .sum()
    }

    pub fn bus_voltages(&self, e: &[Complex64]) -> Vec<Complex64> {
        (0..self.w.nrows())
            .map(|b| self.bus_voltage(b, e))
            .collect()
    }
}

/// Branch reference: endpoints plus 1-based circuit number among parallels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchRef {
    pub from: usize,
    pub to: usize,
    pub circuit: usize,
}

impl BranchRef {
    pub fn resolve(&self, model: &NetworkModel) -> Result<usize, NetworkError> {
        model
            .branches
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                (b.from == self.from && b.to == self.to) || (b.from == self.to && b.to == self.from)
            })
            .nth(self.circuit.saturating_sub(1))
            .map(|(i, _)| i)
            .ok_or_else(|| {
                NetworkError::Reference(format!(
                    "branch {}-{} circuit {}",
                    self.from, self.to, self.circuit
                ))
            })
    }
}

/// Parses `from-to` or `from-to#circuit`.
impl std::str::FromStr for BranchRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad branch reference '{s}', expected from-to#circuit");
        let (ends, circuit) = match s.split_once('#') {
            Some((e, c)) => (e, c.parse().map_err(|_| bad())?),
            None => (s, 1),
        };
        let (a, b) = ends.split_once('-').ok_or_else(bad)?;
        if circuit == 0 {
            return Err(bad());
        }
        Ok(Self {
            from: a.parse().map_err(|_| bad())?,
            to: b.parse().map_err(|_| bad())?,
            circuit,
        })
    }
}

impl std::fmt::Display for BranchRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}#{}", self.from, self.to, self.circuit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkEvent {
    /// Shunt `(P − jQ)/|V_nom|²`, P in W and Q in var, `|V_nom| = 1`.
    LoadStep { bus: usize, p: f64, q: f64 },
    /// Fault shunt `y_fault` at fraction `location` along a branch; 0 or 1
    /// put it on the terminal bus.
    Fault {
        branch: BranchRef,
        location: f64,
        y_fault: f64,
    },
    /// Open the faulted branch and drop the fault.
    Clear { branch: BranchRef },
    /// Return the branch to service.
    Reclose { branch: BranchRef },
}

#[derive(Debug, Clone, PartialEq)]
struct ActiveFault {
    branch: usize,
    location: f64,
    y_fault: f64,
}

/// A base network plus the events applied to it. The materialized model is
/// rebuilt from scratch on every event so inverse events restore the
/// admittance matrix bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    base: NetworkModel,
    open: Vec<bool>,
    extra: Vec<Shunt>,
    faults: Vec<ActiveFault>,
}

/// Where a fault sits in the materialized model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultPoint {
    pub bus_id: usize,
}

impl Topology {
    pub fn new(base: NetworkModel) -> Self {
        let open = base.branches.iter().map(|b| !b.in_service).collect();
        Self {
            base,
            open,
            extra: Vec::new(),
            faults: Vec::new(),
        }
    }

    pub fn base(&self) -> &NetworkModel {
        &self.base
    }

    fn next_id(&self) -> usize {
        self.base.buses.iter().map(|b| b.id).max().unwrap_or(0) + 1
    }

    /// Network with the current switching state; fault nodes are appended
    /// after the base buses.
    pub fn materialize(&self) -> (NetworkModel, Vec<FaultPoint>) {
        let mut m = self.base.clone();
        for (b, &open) in m.branches.iter_mut().zip(&self.open) {
            b.in_service = !open;
        }
        m.shunts.extend(self.extra.iter().cloned());
        let mut points = Vec::new();
        let mut next = self.next_id();
        for f in &self.faults {
            let br = self.base.branches[f.branch].clone();
            let y = Shunt {
                bus: 0,
                g: f.y_fault,
                b: 0.0,
            };
            if f.location <= 0.0 || f.location >= 1.0 {
                let bus = if f.location <= 0.0 { br.from } else { br.to };
                m.shunts.push(Shunt { bus, ..y });
                points.push(FaultPoint { bus_id: bus });
                continue;
            }
            let id = next;
            next += 1;
            let v_base = m.buses[m.bus_index(br.from).unwrap()].v_base;
            m.buses.push(Bus {
                id,
                v_base,
                kind: BusKind::Junction,
            });
            m.branches[f.branch].in_service = false;
            let a = f.location;
            m.branches.push(Branch {
                to: id,
                r: br.r * a,
                x: br.x * a,
                b_shunt: 0.0,
                ..br.clone()
            });
            m.branches.push(Branch {
                from: id,
                to: br.to,
                r: br.r * (1.0 - a),
                x: br.x * (1.0 - a),
                b_shunt: 0.0,
                tap: 1.0,
                in_service: true,
            });
            m.shunts.push(Shunt {
                bus: br.from,
                g: 0.0,
                b: br.b_shunt / 2.0,
            });
            m.shunts.push(Shunt {
                bus: br.to,
                g: 0.0,
                b: br.b_shunt / 2.0,
            });
            m.shunts.push(Shunt { bus: id, ..y });
            points.push(FaultPoint { bus_id: id });
        }
        (m, points)
    }

    pub fn ybus(&self) -> Result<AdmittanceMatrix, NetworkError> {
        build_ybus(&self.materialize().0)
    }

    /// Shunts added by load steps so far.
    pub fn extra_shunt_count(&self) -> usize {
        self.extra.len()
    }

    pub fn is_open(&self, branch: usize) -> bool {
        self.open[branch]
    }

    pub fn apply(&self, event: &NetworkEvent) -> Result<Topology, NetworkError> {
        let mut t = self.clone();
        match event {
            NetworkEvent::LoadStep { bus, p, q } => {
                if self.base.bus_index(*bus).is_none() {
                    return Err(NetworkError::Reference(format!("bus {bus}")));
                }
                let s = self.base.bases.s_system;
                t.extra.push(Shunt {
                    bus: *bus,
                    g: p / s,
                    b: -q / s,
                });
            }
            NetworkEvent::Fault {
                branch,
                location,
                y_fault,
            } => {
                let k = branch.resolve(&self.base)?;
                if self.open[k] {
                    return Err(NetworkError::Reference(format!(
                        "branch {branch} is out of service"
                    )));
                }
                if !(0.0..=1.0).contains(location) {
                    return Err(NetworkError::Reference(format!(
                        "fault location {location} outside [0, 1]"
                    )));
                }
                t.faults.push(ActiveFault {
                    branch: k,
                    location: *location,
                    y_fault: *y_fault,
                });
            }
            NetworkEvent::Clear { branch } => {
                let k = branch.resolve(&self.base)?;
                t.faults.retain(|f| f.branch != k);
                t.open[k] = true;
            }
            NetworkEvent::Reclose { branch } => {
                let k = branch.resolve(&self.base)?;
                t.open[k] = false;
            }
        }
        Ok(t)
    }
}

/// Apply one event and return the new topology with its admittance matrix.
pub fn apply_event(
    topology: &Topology,
    event: &NetworkEvent,
) -> Result<(Topology, AdmittanceMatrix), NetworkError> {
    let t = topology.apply(event)?;
    let y = t.ybus()?;
    Ok((t, y))
}
