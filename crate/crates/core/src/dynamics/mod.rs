//! Stacked device dynamics with an algebraic network, equilibrium trim,
//! implicit trapezoidal integration and the scenario engine.

mod integrator;
mod scenario;
mod trim;

pub use integrator::{
    integrate_step, FnSystem, Integrator, IntegratorOptions, OdeSystem, SimRhs, StepStats,
};
pub use scenario::{
    bus_phasor, run_scenario, summarize, Event, EventKind, RunOutcome, Scenario, ScenarioSummary,
    TimeSeries, UnitSummary, UNIT_CHANNELS,
};
pub use trim::{refine_equilibrium, trim_equilibrium, TrimOptions, TrimResult};

use num_complex::Complex64;
use thiserror::Error;

use crate::cvsc::CvscGains;
use crate::cvsc::{self, governor_update};
use crate::network::{
    self, GenSetpoint, NetworkError, PowerFlowOptions, PowerFlowSolution, SourceNetwork, Topology,
};
use crate::sysmodel::{
    ModelError, NetworkModel, Shunt, SystemModel, WpgExtState, WpgParameters, WpgState,
    CORE_STATES, CORE_STATE_NAMES, EXT_STATES, EXT_STATE_NAMES,
};
use crate::wpg::{self, DcLinkInputs, SgConstants, SgInputs, WpgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid model: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Model(Vec<ModelError>),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Wpg(#[from] WpgError),
    #[error("trim failed for wpg {unit}: {reason}")]
    TrimSetup { unit: usize, reason: String },
    #[error("trim Newton did not converge after {iterations} iterations (residual {residual:e})")]
    Trim { iterations: usize, residual: f64 },
    #[error("integration failed at t = {t} s: {reason}")]
    Integration { t: f64, reason: String },
    #[error("non-finite derivative in state {0}")]
    NonFinite(String),
}

/// Maps state names to positions in the stacked vector. The core block
/// (twelve per unit) comes first, controller integrators after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    pub n_units: usize,
}

impl StateLayout {
    pub fn len(&self) -> usize {
        self.n_units * (CORE_STATES + EXT_STATES)
    }

    pub fn is_empty(&self) -> bool {
        self.n_units == 0
    }

    pub fn n_core(&self) -> usize {
        self.n_units * CORE_STATES
    }

    pub fn core(&self, unit: usize, k: usize) -> usize {
        unit * CORE_STATES + k
    }

    pub fn ext(&self, unit: usize, k: usize) -> usize {
        self.n_core() + unit * EXT_STATES + k
    }

    pub fn is_core(&self, idx: usize) -> bool {
        idx < self.n_core()
    }

    /// `(unit, name)` for a stacked index; units are 1-based.
    pub fn describe(&self, idx: usize) -> (usize, &'static str) {
        if idx < self.n_core() {
            (idx / CORE_STATES + 1, CORE_STATE_NAMES[idx % CORE_STATES])
        } else {
            let j = idx - self.n_core();
            (j / EXT_STATES + 1, EXT_STATE_NAMES[j % EXT_STATES])
        }
    }

    pub fn label(&self, idx: usize) -> String {
        let (u, n) = self.describe(idx);
        format!("{n}_{u}")
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        (0..self.len()).find(|&i| self.label(i) == label)
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }
}

/// Per-unit constants and operating references.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub number: usize,
    /// Index of the terminal bus in the base network.
    pub bus: usize,
    pub params: WpgParameters,
    pub gains: CvscGains,
    pub sg: SgConstants,
    /// Filter impedance on the system base.
    pub z_f: Complex64,
    /// System base over machine base; multiplies system-pu power into machine pu.
    pub s_ratio: f64,
    /// Scheduled internal-node power, machine pu.
    pub p_schedule: f64,
    pub v_t_ref: f64,
    /// Air-gap flux reference for the field regulator.
    pub flux_ref: f64,
}

/// Algebraic network for one switching state.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub topology: Topology,
    pub model: NetworkModel,
    pub source: SourceNetwork,
    /// Bus ids of the materialized model, base buses first.
    pub fault_points: Vec<usize>,
}

/// Everything a simulation needs besides the state vector.
#[derive(Debug, Clone)]
pub struct SimSystem {
    pub model: SystemModel,
    pub pf: PowerFlowSolution,
    pub omega_b: f64,
    pub units: Vec<Unit>,
    pub layout: StateLayout,
    /// Base network with loads converted to constant-impedance shunts.
    pub dynamic_network: NetworkModel,
    /// Number of shunts in `dynamic_network` that came from loads.
    pub n_load_shunts: usize,
}

/// Instantaneous per-unit outputs, mostly SI.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnitOutputs {
    /// Internal-node active and reactive power, W and var.
    pub p_e: f64,
    pub q_e: f64,
    /// SG electrical power into the dc link, W.
    pub p_in: f64,
    /// Storage power `i_s·v_dc`, W.
    pub p_storage: f64,
    pub p_me: f64,
    pub v_t: f64,
    pub beta: f64,
    pub t_e: f64,
    pub t_mech: f64,
    pub e_f: f64,
    pub i_s_ref: f64,
    pub p_me_ref: f64,
}

/// Power flow setpoints implied by the model's dispatch.
pub fn dispatch(model: &SystemModel) -> (Vec<GenSetpoint>, usize) {
    let s = model.network.bases.s_system;
    let gens = model
        .wpgs
        .iter()
        .map(|u| GenSetpoint {
            bus: u.bus,
            p: u.p_dispatch / s,
            v: u.v_set,
        })
        .collect();
    let slack = model
        .wpgs
        .iter()
        .find(|u| u.slack)
        .map(|u| u.bus)
        .unwrap_or(0);
    (gens, slack)
}

pub fn solve_system_powerflow(model: &SystemModel) -> Result<PowerFlowSolution, DynamicsError> {
    model.validate().map_err(DynamicsError::Model)?;
    let (gens, slack) = dispatch(model);
    Ok(network::solve_powerflow(
        &model.network,
        &gens,
        slack,
        PowerFlowOptions::default(),
    )?)
}

impl SimSystem {
    /// Run the power flow and derive every reference the devices need.
    pub fn new(model: SystemModel) -> Result<Self, DynamicsError> {
        let pf = solve_system_powerflow(&model)?;
        Self::from_powerflow(model, pf)
    }

    pub fn from_powerflow(
        model: SystemModel,
        pf: PowerFlowSolution,
    ) -> Result<Self, DynamicsError> {
        let net = &model.network;
        let s_sys = net.bases.s_system;
        let omega_b = net.bases.omega_base();
        let mut dynamic_network = net.clone();
        dynamic_network.loads.clear();
        let mut load_shunts = Vec::new();
        for l in &net.loads {
            let v = pf
                .voltage(l.bus)
                .ok_or_else(|| NetworkError::Reference(format!("load bus {}", l.bus)))?;
            let v2 = v.norm_sqr();
            load_shunts.push(Shunt {
                bus: l.bus,
                g: l.p / s_sys / v2,
                b: -l.q / s_sys / v2,
            });
        }
        let n_load_shunts = load_shunts.len();
        let fixed = std::mem::take(&mut dynamic_network.shunts);
        dynamic_network.shunts = load_shunts;
        dynamic_network.shunts.extend(fixed);

        let mut units = Vec::new();
        for u in &model.wpgs {
            let bus = net.bus_index(u.bus).unwrap();
            let s_ratio = s_sys / u.params.p_n;
            let z_f = u.params.filter_impedance() * s_ratio;
            let mut gains = u.gains;
            gains.v_dc_nom = u.params.v_dc_nom;
            units.push(Unit {
                number: u.number,
                bus,
                params: u.params.clone(),
                gains,
                sg: SgConstants::new(&u.params, omega_b),
                z_f,
                s_ratio,
                p_schedule: 0.0,
                v_t_ref: pf.v[bus].norm(),
                flux_ref: 0.0,
            });
        }
        let layout = StateLayout {
            n_units: units.len(),
        };
        Ok(Self {
            model,
            pf,
            omega_b,
            units,
            layout,
            dynamic_network,
            n_load_shunts,
        })
    }

    pub fn initial_topology(&self) -> Topology {
        Topology::new(self.dynamic_network.clone())
    }

    pub fn network_state(&self, topology: Topology) -> Result<NetworkState, DynamicsError> {
        let (model, points) = topology.materialize();
        let y = network::build_ybus(&model)?;
        let buses: Vec<usize> = self.units.iter().map(|u| u.bus).collect();
        let z: Vec<Complex64> = self.units.iter().map(|u| u.z_f).collect();
        let source = SourceNetwork::new(&y.y, &buses, &z)?;
        Ok(NetworkState {
            topology,
            model,
            source,
            fault_points: points.iter().map(|p| p.bus_id).collect(),
        })
    }

    /// Internal voltages of every unit on the common per-unit voltage scale.
    pub fn internal_voltages(&self, x: &[f64]) -> Vec<Complex64> {
        self.units
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let l = &self.layout;
                wpg::inverter_terminal_phasor(
                    x[l.core(i, 10)],
                    x[l.core(i, 8)],
                    x[l.core(i, 9)],
                    &u.params,
                )
            })
            .collect()
    }

    pub fn unit_state(&self, x: &[f64], i: usize) -> (WpgState, WpgExtState) {
        let l = &self.layout;
        (
            WpgState::from_slice(&x[l.core(i, 0)..l.core(i, 0) + CORE_STATES]),
            WpgExtState::from_slice(&x[l.ext(i, 0)..l.ext(i, 0) + EXT_STATES]),
        )
    }

    /// Stacked derivative; `dx` may be empty when only outputs are wanted.
    pub fn evaluate(
        &self,
        net: &NetworkState,
        x: &[f64],
        dx: &mut [f64],
        outputs: Option<&mut Vec<UnitOutputs>>,
    ) -> Result<(), DynamicsError> {
        let e = self.internal_voltages(x);
        let cur = net.source.currents(&e);
        let want_dx = !dx.is_empty();
        let mut outs = outputs;
        if let Some(o) = outs.as_deref_mut() {
            o.clear();
        }
        let l = &self.layout;
        let wb = self.omega_b;
        for (i, u) in self.units.iter().enumerate() {
            let p = &u.params;
            let (s, xe) = self.unit_state(x, i);
            let s_m = p.p_n;
            let se = e[i] * cur[i].conj() * u.s_ratio;
            let vt = net.source.bus_voltage(u.bus, &e).norm();

            let (vd, vq) = wpg::sg_terminal_voltage(xe.delta_g, p);
            let c = wpg::sg_currents(&s, &u.sg);
            let p_in = vd * c.i_d + vq * c.i_q;
            let t_e = s.psi_d * c.i_q - s.psi_q * c.i_d;
            let (e_f, x_field_rate) =
                wpg::field_exciter(c.psi_md, c.psi_mq, u.flux_ref, xe.x_field, p);
            let tg = wpg::turbine_governor(s.omega_r, p_in, xe.x_pitch, xe.p_in_ref, p);

            let p_in_w = p_in * s_m;
            let p_e_w = se.re * s_m;
            let p_me = p_in_w + s.i_s * s.v_dc;
            let gov = governor_update(
                s.v_dc,
                p_me,
                u.p_schedule * s_m,
                xe.p_in_ref * s_m,
                s_m,
                &u.gains,
            );

            if want_dx {
                let fl = wpg::sg_electrical_derivatives(
                    &s,
                    &SgInputs {
                        e_f,
                        v_d: vd,
                        v_q: vq,
                        omega_r: s.omega_r,
                    },
                    &u.sg,
                );
                dx[l.core(i, 0)..l.core(i, 0) + 5].copy_from_slice(&fl);
                let (dwt, dwr, dth) = wpg::drive_train_derivatives(&s, tg.t_mech, t_e, p, wb);
                dx[l.core(i, 5)] = dwr;
                dx[l.core(i, 6)] = dwt;
                dx[l.core(i, 7)] = dth;
                dx[l.core(i, 8)] = wpg::dc_link_derivative(
                    s.v_dc,
                    &DcLinkInputs {
                        p_in: p_in_w,
                        i_s: s.i_s,
                        p_e: p_e_w,
                    },
                    p.c,
                )?;
                dx[l.core(i, 9)] = cvsc::phase_angle_derivative(s.v_dc, &u.gains);
                dx[l.core(i, 10)] =
                    cvsc::exciter_derivative(vt, u.v_t_ref, u.gains.k_e, s.m, p.m_max);
                dx[l.core(i, 11)] = wpg::storage_current_derivative(s.i_s, gov.i_s_ref, s.v_dc, p);
                dx[l.ext(i, 0)] = wb * (s.omega_r - 1.0);
                dx[l.ext(i, 1)] = tg.x_pitch_rate;
                dx[l.ext(i, 2)] = x_field_rate;
                dx[l.ext(i, 3)] = gov.p_in_ref_rate / s_m;
            }
            if let Some(o) = outs.as_deref_mut() {
                o.push(UnitOutputs {
                    p_e: p_e_w,
                    q_e: se.im * s_m,
                    p_in: p_in_w,
                    p_storage: s.i_s * s.v_dc,
                    p_me,
                    v_t: vt,
                    beta: tg.beta,
                    t_e,
                    t_mech: tg.t_mech,
                    e_f,
                    i_s_ref: wpg::clamp_storage_reference(gov.i_s_ref, s.v_dc, p),
                    p_me_ref: gov.p_me_ref,
                });
            }
        }
        if want_dx {
            if let Some(k) = dx.iter().position(|v| !v.is_finite()) {
                return Err(DynamicsError::NonFinite(l.label(k)));
            }
        }
        Ok(())
    }

    pub fn derivatives(&self, net: &NetworkState, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        let mut dx = vec![0.0; x.len()];
        self.evaluate(net, x, &mut dx, None)?;
        Ok(dx)
    }

    pub fn outputs(
        &self,
        net: &NetworkState,
        x: &[f64],
    ) -> Result<Vec<UnitOutputs>, DynamicsError> {
        let mut o = Vec::with_capacity(self.units.len());
        self.evaluate(net, x, &mut [], Some(&mut o))?;
        Ok(o)
    }

    /// Bus voltages of the materialized network, base buses first.
    pub fn bus_voltages(&self, net: &NetworkState, x: &[f64]) -> Vec<Complex64> {
        net.source.bus_voltages(&self.internal_voltages(x))
    }

    /// `(load consumption, network loss)` in W. Loss covers branches, non-load
    /// shunt conductance (faults) and the inverter filters.
    pub fn power_split(&self, net: &NetworkState, x: &[f64]) -> (f64, f64) {
        let e = self.internal_voltages(x);
        let v = net.source.bus_voltages(&e);
        let s_sys = self.model.network.bases.s_system;
        let mut model = net.model.clone();
        let n_base = self.dynamic_network.shunts.len();
        let n_steps = net.topology.extra_shunt_count();
        // Materialized shunt order: load shunts, fixed shunts, step loads, fault elements.
        let mut load = 0.0;
        let mut other = Vec::new();
        for (k, sh) in model.shunts.iter().enumerate() {
            let is_load = k < self.n_load_shunts || (k >= n_base && k < n_base + n_steps);
            if is_load {
                load += sh.g * v[model.bus_index(sh.bus).unwrap()].norm_sqr();
            } else {
                other.push(sh.clone());
            }
        }
        model.shunts = other;
        let mut loss = network::network_losses(&model, &v);
        let cur = net.source.currents(&e);
        for (u, i) in self.units.iter().zip(cur) {
            loss += i.norm_sqr() * u.z_f.re;
        }
        (load * s_sys, loss * s_sys)
    }
}
