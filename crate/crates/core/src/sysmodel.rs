//! Data model for the wind-supplied grid and per-unit bookkeeping.
//!
//! Device equations run in machine per-unit (base `P_n`, `V_n`), the network
//! runs on the system base. `v_dc` and `i_s` stay in volts and amperes.

use std::collections::HashSet;

use thiserror::Error;

use crate::cvsc::CvscGains;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid base {0}: bases must be strictly positive")]
    InvalidBase(f64),
    #[error("duplicate bus id {0}")]
    DuplicateBus(usize),
    #[error("branch {index} ({from}-{to}) references unknown bus {missing}")]
    UnknownBus {
        index: usize,
        from: usize,
        to: usize,
        missing: usize,
    },
    #[error("branch {index} ({from}-{to}) has zero series reactance")]
    ZeroReactance {
        index: usize,
        from: usize,
        to: usize,
    },
    #[error("branch {index} ({from}-{to}) has non-positive tap {tap}")]
    BadTap {
        index: usize,
        from: usize,
        to: usize,
        tap: f64,
    },
    #[error("load at bus {0} has negative active power")]
    NegativeLoad(usize),
    #[error("wpg {unit}: {reason}")]
    BadParameter { unit: usize, reason: String },
    #[error("{0}")]
    Layout(String),
}

/// Power and frequency bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSet {
    /// System power base, VA.
    pub s_system: f64,
    /// Device power base, VA.
    pub s_machine: f64,
    /// Transmission voltage base, V (line-to-line).
    pub v_base: f64,
    /// Nominal frequency, Hz.
    pub f_n: f64,
}

impl Default for BaseSet {
    fn default() -> Self {
        Self {
            s_system: 100e6,
            s_machine: 889e6,
            v_base: 230e3,
            f_n: 60.0,
        }
    }
}

impl BaseSet {
    pub fn validate(&self) -> Result<(), ModelError> {
        for v in [self.s_system, self.s_machine, self.v_base, self.f_n] {
            if !(v > 0.0) {
                return Err(ModelError::InvalidBase(v));
            }
        }
        Ok(())
    }

    /// Electrical base angular speed, rad/s.
    pub fn omega_base(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_n
    }
}

fn check_base(b: f64) -> Result<(), ModelError> {
    if b > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidBase(b))
    }
}

/// Convert a per-unit power from one power base to another.
pub fn rebase_power(value: f64, from_base: f64, to_base: f64) -> Result<f64, ModelError> {
    check_base(from_base)?;
    check_base(to_base)?;
    Ok(value * from_base / to_base)
}

/// Convert a per-unit impedance between `(S, V)` base pairs.
pub fn rebase_impedance(z: f64, from: (f64, f64), to: (f64, f64)) -> Result<f64, ModelError> {
    for b in [from.0, from.1, to.0, to.1] {
        check_base(b)?;
    }
    let z_from = from.1 * from.1 / from.0;
    let z_to = to.1 * to.1 / to.0;
    Ok(z * z_from / z_to)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BusKind {
    Generator,
    Load,
    Junction,
}

impl BusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BusKind::Generator => "generator",
            BusKind::Load => "load",
            BusKind::Junction => "junction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "generator" => Some(BusKind::Generator),
            "load" => Some(BusKind::Load),
            "junction" => Some(BusKind::Junction),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub v_base: f64,
    pub kind: BusKind,
}

/// Series branch on the system base. Transformers carry `tap != 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b_shunt: f64,
    pub tap: f64,
    pub in_service: bool,
}

impl Branch {
    pub fn line(from: usize, to: usize, r: f64, x: f64, b_shunt: f64) -> Self {
        Self {
            from,
            to,
            r,
            x,
            b_shunt,
            tap: 1.0,
            in_service: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadModel {
    /// Fixed P and Q regardless of voltage; used by the power flow.
    ConstantPower,
    /// Admittance frozen at the pre-disturbance voltage; used by dynamics.
    ConstantImpedance,
}

/// Load in SI units at nominal voltage.
#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub bus: usize,
    pub p: f64,
    pub q: f64,
}

/// Fixed shunt admittance in system per-unit (capacitor banks).
#[derive(Debug, Clone, PartialEq)]
pub struct Shunt {
    pub bus: usize,
    pub g: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub loads: Vec<Load>,
    pub shunts: Vec<Shunt>,
    pub bases: BaseSet,
}

impl NetworkModel {
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn validate(&self) -> Result<(), Vec<ModelError>> {
        let mut errs = Vec::new();
        if let Err(e) = self.bases.validate() {
            errs.push(e);
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                errs.push(ModelError::DuplicateBus(b.id));
            }
            if !(b.v_base > 0.0) {
                errs.push(ModelError::InvalidBase(b.v_base));
            }
        }
        for (i, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !seen.contains(&end) {
                    errs.push(ModelError::UnknownBus {
                        index: i + 1,
                        from: br.from,
                        to: br.to,
                        missing: end,
                    });
                }
            }
            if br.x == 0.0 {
                errs.push(ModelError::ZeroReactance {
                    index: i + 1,
                    from: br.from,
                    to: br.to,
                });
            }
            if !(br.tap > 0.0) {
                errs.push(ModelError::BadTap {
                    index: i + 1,
                    from: br.from,
                    to: br.to,
                    tap: br.tap,
                });
            }
        }
        for l in &self.loads {
            if !seen.contains(&l.bus) {
                errs.push(ModelError::UnknownBus {
                    index: 0,
                    from: l.bus,
                    to: l.bus,
                    missing: l.bus,
                });
            }
            if l.p < 0.0 {
                errs.push(ModelError::NegativeLoad(l.bus));
            }
        }
        for s in &self.shunts {
            if !seen.contains(&s.bus) {
                errs.push(ModelError::UnknownBus {
                    index: 0,
                    from: s.bus,
                    to: s.bus,
                    missing: s.bus,
                });
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// Per-generator constants. Reactances in machine pu, times in seconds,
/// everything else SI unless noted.
#[derive(Debug, Clone, PartialEq)]
pub struct WpgParameters {
    pub p_mn: f64,
    pub p_n: f64,
    pub v_n: f64,
    pub v_tn: f64,
    pub l_filter: f64,
    pub r_filter: f64,
    pub v_dc_nom: f64,
    pub c: f64,
    pub l_boost: f64,
    pub k_p_pitch: f64,
    pub k_p_comp: f64,
    pub k_i_comp: f64,
    pub k_p_field: f64,
    pub k_i_field: f64,
    pub pole_pairs: f64,
    pub d_duty: f64,
    pub x_d: f64,
    pub x_d1: f64,
    pub x_d2: f64,
    pub x_q: f64,
    pub x_q2: f64,
    pub x_l: f64,
    pub t_d01: f64,
    pub t_d02: f64,
    pub t_q02: f64,
    pub r_s: f64,
    // Calibration value.
    pub h_t: f64,
    pub h_g: f64,
    pub k_shaft: f64,
    pub d_shaft: f64,
    /// Storage current-loop gain, ohm.
    pub k_track: f64,
    /// Mechanical torque available at zero pitch, pu.
    pub t_avail: f64,
    pub omega_ref: f64,
    /// Degrees.
    pub beta_max: f64,
    pub m_max: f64,
    /// Storage power rating, W.
    pub storage_rating: f64,
}

impl Default for WpgParameters {
    fn default() -> Self {
        Self {
            p_mn: 800e6,
            p_n: 889e6,
            v_n: 730.0,
            v_tn: 575.0,
            l_filter: 0.15,
            r_filter: 0.003,
            v_dc_nom: 1110.0,
            c: 36.0,
            l_boost: 0.0012,
            k_p_pitch: 15.0,
            k_p_comp: 1.5,
            k_i_comp: 6.0,
            k_p_field: 10.0,
            k_i_field: 20.0,
            pole_pairs: 1.0,
            d_duty: 0.19,
            x_d: 1.305,
            x_d1: 0.296,
            x_d2: 0.252,
            x_q: 0.474,
            x_q2: 0.243,
            x_l: 0.18,
            t_d01: 4.49,
            t_d02: 0.0681,
            t_q02: 0.0513,
            r_s: 0.006,
            h_t: 4.8,
            h_g: 0.6,
            k_shaft: 0.3,
            d_shaft: 5.0,
            k_track: 0.24,
            t_avail: 1.0,
            omega_ref: 1.0,
            beta_max: 27.0,
            m_max: 1.0,
            storage_rating: 300e6,
        }
    }
}

impl WpgParameters {
    pub fn validate(&self, unit: usize) -> Result<(), Vec<ModelError>> {
        let mut errs = Vec::new();
        let mut bad = |reason: String| errs.push(ModelError::BadParameter { unit, reason });
        if !(self.x_d > self.x_d1 && self.x_d1 > self.x_d2 && self.x_d2 > 0.0) {
            bad(format!(
                "d-axis reactances must satisfy x_d > x'_d > x''_d > 0 (got {}, {}, {})",
                self.x_d, self.x_d1, self.x_d2
            ));
        }
        if !(self.x_q > self.x_q2 && self.x_q2 > 0.0) {
            bad(format!(
                "q-axis reactances must satisfy x_q > x''_q > 0 (got {}, {})",
                self.x_q, self.x_q2
            ));
        }
        if !(self.x_l > 0.0 && self.x_l < self.x_d2 && self.x_l < self.x_q2) {
            bad(format!(
                "leakage x_l = {} must lie in (0, x''_d) and (0, x''_q)",
                self.x_l
            ));
        }
        for (name, v) in [
            ("T'_d0", self.t_d01),
            ("T''_d0", self.t_d02),
            ("T''_q0", self.t_q02),
            ("C", self.c),
            ("V_dc_nom", self.v_dc_nom),
            ("P_n", self.p_n),
            ("V_n", self.v_n),
            ("V_tn", self.v_tn),
            ("L_boost", self.l_boost),
            ("H_t", self.h_t),
            ("H_g", self.h_g),
            ("K_shaft", self.k_shaft),
            ("k_track", self.k_track),
            ("m_max", self.m_max),
            ("beta_max", self.beta_max),
            ("storage_rating", self.storage_rating),
        ] {
            if !(v > 0.0) {
                bad(format!("{name} must be positive (got {v})"));
            }
        }
        if !(self.d_duty >= 0.0 && self.d_duty < 1.0) {
            bad(format!("D_duty = {} must lie in [0, 1)", self.d_duty));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Filter impedance on the machine base.
    pub fn filter_impedance(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.r_filter, self.l_filter)
    }
}

pub const CORE_STATES: usize = 12;
pub const EXT_STATES: usize = 4;

pub const CORE_STATE_NAMES: [&str; CORE_STATES] = [
    "psi_d",
    "psi_q",
    "psi_f",
    "psi_kd",
    "psi_kq",
    "omega_r",
    "omega_t",
    "theta_tw",
    "v_dc",
    "delta_theta",
    "m",
    "i_s",
];

pub const EXT_STATE_NAMES: [&str; EXT_STATES] = ["delta_g", "x_pitch", "x_field", "p_in_ref"];

/// The twelve dynamic entries of one generator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WpgState {
    pub psi_d: f64,
    pub psi_q: f64,
    pub psi_f: f64,
    pub psi_kd: f64,
    pub psi_kq: f64,
    pub omega_r: f64,
    pub omega_t: f64,
    pub theta_tw: f64,
    pub v_dc: f64,
    pub delta_theta: f64,
    pub m: f64,
    pub i_s: f64,
}

impl WpgState {
    pub fn to_array(&self) -> [f64; CORE_STATES] {
        [
            self.psi_d,
            self.psi_q,
            self.psi_f,
            self.psi_kd,
            self.psi_kq,
            self.omega_r,
            self.omega_t,
            self.theta_tw,
            self.v_dc,
            self.delta_theta,
            self.m,
            self.i_s,
        ]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            psi_d: s[0],
            psi_q: s[1],
            psi_f: s[2],
            psi_kd: s[3],
            psi_kq: s[4],
            omega_r: s[5],
            omega_t: s[6],
            theta_tw: s[7],
            v_dc: s[8],
            delta_theta: s[9],
            m: s[10],
            i_s: s[11],
        }
    }
}

/// Controller integrators that sit outside the twelve-state accounting.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WpgExtState {
    /// Machine-side converter phase relative to the synchronous frame, rad.
    pub delta_g: f64,
    /// Pitch-compensation integrator, degrees.
    pub x_pitch: f64,
    /// Field PI integrator, pu.
    pub x_field: f64,
    /// SG power reference, machine pu.
    pub p_in_ref: f64,
}

impl WpgExtState {
    pub fn to_array(&self) -> [f64; EXT_STATES] {
        [self.delta_g, self.x_pitch, self.x_field, self.p_in_ref]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            delta_g: s[0],
            x_pitch: s[1],
            x_field: s[2],
            p_in_ref: s[3],
        }
    }
}

/// One generator placed on the network.
#[derive(Debug, Clone, PartialEq)]
pub struct WpgUnit {
    /// 1-based unit number as it appears in `[wpg.N]`.
    pub number: usize,
    pub bus: usize,
    /// Dispatched active power, W. Ignored for the slack unit.
    pub p_dispatch: f64,
    /// Terminal voltage setpoint, pu.
    pub v_set: f64,
    pub slack: bool,
    pub params: WpgParameters,
    pub gains: CvscGains,
}

/// Network plus generators: everything a config file describes.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub network: NetworkModel,
    pub wpgs: Vec<WpgUnit>,
}

impl SystemModel {
    pub fn validate(&self) -> Result<(), Vec<ModelError>> {
        let mut errs = match self.network.validate() {
            Ok(()) => Vec::new(),
            Err(e) => e,
        };
        let mut slack = 0;
        for u in &self.wpgs {
            if let Err(mut e) = u.params.validate(u.number) {
                errs.append(&mut e);
            }
            if self.network.bus_index(u.bus).is_none() {
                errs.push(ModelError::BadParameter {
                    unit: u.number,
                    reason: format!("bus {} does not exist", u.bus),
                });
            }
            if u.slack {
                slack += 1;
                if u.gains.has_governor {
                    errs.push(ModelError::BadParameter {
                        unit: u.number,
                        reason: "the slack unit must not have a governor".into(),
                    });
                }
            }
            if u.gains.k_a < 0.0 {
                errs.push(ModelError::BadParameter {
                    unit: u.number,
                    reason: format!("k_a = {} must be non-negative", u.gains.k_a),
                });
            }
        }
        if !self.wpgs.is_empty() && slack != 1 {
            errs.push(ModelError::Layout(format!(
                "exactly one slack unit required, found {slack}"
            )));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}
