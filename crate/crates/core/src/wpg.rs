//! One full-scale wind generator: SG flux model, two-mass drive train,
//! turbine governor, dc link, storage boost path and inverter phasor.
//!
//! Machine quantities are in machine per-unit with generator current
//! convention; `v_dc` in volts, `i_s` in amperes, powers in watts where
//! the dc link is involved.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::sysmodel::{WpgParameters, WpgState};

/// Modulation constant linking `m·v_dc` to the line-to-line RMS of `E`.
pub const K_MOD: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WpgError {
    #[error("capacitor voltage must be positive, got {0} V")]
    NonPositiveVdc(f64),
    #[error("SG operating point did not converge for p = {p} pu (residual {residual:e})")]
    SteadyState { p: f64, residual: f64 },
}

/// Internal circuit constants of the flux model, derived from the
/// operational reactances and time constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgConstants {
    pub omega_b: f64,
    pub r_s: f64,
    pub x_l: f64,
    pub x_ad: f64,
    pub x_aq: f64,
    pub x_fd: f64,
    pub r_fd: f64,
    pub x_kd: f64,
    pub r_kd: f64,
    pub x_kq: f64,
    pub r_kq: f64,
    pub x_md: f64,
    pub x_mq: f64,
}

impl SgConstants {
    pub fn new(p: &WpgParameters, omega_b: f64) -> Self {
        let x_l = p.x_l;
        let x_ad = p.x_d - x_l;
        let x_aq = p.x_q - x_l;
        let x_fd = x_ad * (p.x_d1 - x_l) / (x_ad - (p.x_d1 - x_l));
        let x_kd = 1.0 / (1.0 / (p.x_d2 - x_l) - 1.0 / x_ad - 1.0 / x_fd);
        let (r_fd, r_kd) = d_axis_resistances(x_ad, x_fd, x_kd, p.t_d01, p.t_d02, omega_b);
        let x_kq = x_aq * (p.x_q2 - x_l) / (x_aq - (p.x_q2 - x_l));
        let r_kq = (x_aq + x_kq) / (omega_b * p.t_q02);
        let x_md = 1.0 / (1.0 / x_ad + 1.0 / x_l + 1.0 / x_fd + 1.0 / x_kd);
        let x_mq = 1.0 / (1.0 / x_aq + 1.0 / x_l + 1.0 / x_kq);
        Self {
            omega_b,
            r_s: p.r_s,
            x_l,
            x_ad,
            x_aq,
            x_fd,
            r_fd,
            x_kd,
            r_kd,
            x_kq,
            r_kq,
            x_md,
            x_mq,
        }
    }
}

/// Field and d-damper resistances whose open-circuit rotor time constants
/// are exactly `t1` and `t2`. With `L = [[x_ad+x_fd, x_ad], [x_ad, x_ad+x_kd]]`
/// the time constants are the roots of `det(L − T·ω_b·R) = 0`, so
/// `L_ff/a + L_kk/b = t1 + t2` and `det L/(a·b) = t1·t2` for `a = ω_b·r_fd`,
/// `b = ω_b·r_kd`. The damper takes the fast root. Falls back to the
/// decoupled estimate when no real solution exists.
fn d_axis_resistances(
    x_ad: f64,
    x_fd: f64,
    x_kd: f64,
    t1: f64,
    t2: f64,
    omega_b: f64,
) -> (f64, f64) {
    let (lff, lkk) = (x_ad + x_fd, x_ad + x_kd);
    let det = lff * lkk - x_ad * x_ad;
    let (sum, prod) = (t1 + t2, t1 * t2);
    // With u = 1/a, v = 1/b: lkk·v² − sum·v + lff·prod/det = 0.
    let disc = sum * sum - 4.0 * lkk * lff * prod / det;
    if disc < 0.0 {
        return (
            lff / (omega_b * t1),
            (x_kd + x_ad * x_fd / lff) / (omega_b * t2),
        );
    }
    let v = (sum - disc.sqrt()) / (2.0 * lkk);
    let u = (sum - lkk * v) / lff;
    (1.0 / (omega_b * u), 1.0 / (omega_b * v))
}

/// Winding currents and air-gap fluxes recovered from the flux state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgCurrents {
    pub i_d: f64,
    pub i_q: f64,
    pub i_fd: f64,
    pub i_kd: f64,
    pub i_kq: f64,
    pub psi_md: f64,
    pub psi_mq: f64,
}

pub fn sg_currents(s: &WpgState, k: &SgConstants) -> SgCurrents {
    let psi_md = k.x_md * (s.psi_d / k.x_l + s.psi_f / k.x_fd + s.psi_kd / k.x_kd);
    let psi_mq = k.x_mq * (s.psi_q / k.x_l + s.psi_kq / k.x_kq);
    SgCurrents {
        i_d: (psi_md - s.psi_d) / k.x_l,
        i_q: (psi_mq - s.psi_q) / k.x_l,
        i_fd: (s.psi_f - psi_md) / k.x_fd,
        i_kd: (s.psi_kd - psi_md) / k.x_kd,
        i_kq: (s.psi_kq - psi_mq) / k.x_kq,
        psi_md,
        psi_mq,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgInputs {
    pub e_f: f64,
    pub v_d: f64,
    pub v_q: f64,
    pub omega_r: f64,
}

/// Time derivatives of `[psi_d, psi_q, psi_f, psi_kd, psi_kq]`.
pub fn sg_electrical_derivatives(s: &WpgState, u: &SgInputs, k: &SgConstants) -> [f64; 5] {
    let c = sg_currents(s, k);
    let wb = k.omega_b;
    [
        wb * (u.v_d + k.r_s * c.i_d + u.omega_r * s.psi_q),
        wb * (u.v_q + k.r_s * c.i_q - u.omega_r * s.psi_d),
        wb * (k.r_fd / k.x_ad * u.e_f - k.r_fd * c.i_fd),
        -wb * k.r_kd * c.i_kd,
        -wb * k.r_kq * c.i_kq,
    ]
}

pub fn electromagnetic_torque(s: &WpgState, k: &SgConstants) -> f64 {
    let c = sg_currents(s, k);
    s.psi_d * c.i_q - s.psi_q * c.i_d
}

/// Stator voltage imposed by the machine-side converter at phase `delta_g`.
///
/// The magnitude is the boost/rectifier ratio at nominal capacitor voltage.
pub fn sg_terminal_voltage(delta_g: f64, p: &WpgParameters) -> (f64, f64) {
    let vs = converter_ratio(p) * p.v_dc_nom;
    (vs * delta_g.sin(), vs * delta_g.cos())
}

/// pu stator voltage per volt of dc link.
pub fn converter_ratio(p: &WpgParameters) -> f64 {
    (1.0 - p.d_duty) * PI / (3.0 * 2f64.sqrt()) / p.v_n
}

/// `(d omega_t, d omega_r, d theta_tw)`.
pub fn drive_train_derivatives(
    s: &WpgState,
    t_mech: f64,
    t_e: f64,
    p: &WpgParameters,
    omega_b: f64,
) -> (f64, f64, f64) {
    let t_sh = p.k_shaft * s.theta_tw + p.d_shaft * (s.omega_t - s.omega_r);
    (
        (t_mech - t_sh) / (2.0 * p.h_t),
        (t_sh - t_e) / (2.0 * p.h_g),
        omega_b * (s.omega_t - s.omega_r),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbineOutput {
    /// Pitch angle, degrees.
    pub beta: f64,
    /// Mechanical torque, pu.
    pub t_mech: f64,
    /// d(x_pitch)/dt, degrees/s.
    pub x_pitch_rate: f64,
}

/// Pitch controller with speed term and power-compensation PI. Pitch
/// trims available torque linearly from `t_avail` at 0° to zero at `beta_max`.
pub fn turbine_governor(
    omega_r: f64,
    p_in: f64,
    x_pitch: f64,
    p_in_ref: f64,
    p: &WpgParameters,
) -> TurbineOutput {
    let err = p_in - p_in_ref;
    let raw = p.k_p_pitch * (omega_r - p.omega_ref) + p.k_p_comp * err + x_pitch;
    let beta = raw.clamp(0.0, p.beta_max);
    let mut rate = p.k_i_comp * err;
    if (raw <= 0.0 && rate < 0.0) || (raw >= p.beta_max && rate > 0.0) {
        rate = 0.0;
    }
    TurbineOutput {
        beta,
        t_mech: p.t_avail * (1.0 - beta / p.beta_max),
        x_pitch_rate: rate,
    }
}

/// `(e_f, d x_field / dt)` for the air-gap flux regulator.
pub fn field_exciter(
    psi_md: f64,
    psi_mq: f64,
    flux_ref: f64,
    x_field: f64,
    p: &WpgParameters,
) -> (f64, f64) {
    let err = flux_ref - psi_md.hypot(psi_mq);
    (p.k_p_field * err + x_field, p.k_i_field * err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcLinkInputs {
    /// SG-side power, W.
    pub p_in: f64,
    /// Storage current, A.
    pub i_s: f64,
    /// Inverter active power, W.
    pub p_e: f64,
}

/// dV_dc/dt in V/s.
pub fn dc_link_derivative(v_dc: f64, u: &DcLinkInputs, c: f64) -> Result<f64, WpgError> {
    if !(v_dc > 0.0) {
        return Err(WpgError::NonPositiveVdc(v_dc));
    }
    let p_me = u.p_in + u.i_s * v_dc;
    Ok((p_me - u.p_e) / (c * v_dc))
}

/// Clamp a storage current reference to the converter power rating.
pub fn clamp_storage_reference(i_ref: f64, v_dc: f64, p: &WpgParameters) -> f64 {
    let lim = p.storage_rating / v_dc;
    i_ref.clamp(-lim, lim)
}

/// dI_s/dt in A/s: first-order tracking through the boost inductor.
pub fn storage_current_derivative(i_s: f64, i_s_ref: f64, v_dc: f64, p: &WpgParameters) -> f64 {
    let r = clamp_storage_reference(i_s_ref, v_dc, p);
    p.k_track * (r - i_s) / p.l_boost
}

/// Internal inverter voltage on the machine base, phase in the synchronous frame.
pub fn inverter_terminal_phasor(
    m: f64,
    v_dc: f64,
    delta_theta: f64,
    p: &WpgParameters,
) -> Complex64 {
    Complex64::from_polar(K_MOD * m * v_dc / p.v_tn, delta_theta)
}

/// Modulation index that produces `|e|` at `v_dc`.
pub fn modulation_for(e_mag: f64, v_dc: f64, p: &WpgParameters) -> f64 {
    e_mag * p.v_tn / (K_MOD * v_dc)
}

/// Steady SG operating point delivering `p_in` at unity power factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgOperatingPoint {
    pub delta_g: f64,
    pub e_f: f64,
    pub psi_d: f64,
    pub psi_q: f64,
    pub psi_f: f64,
    pub psi_kd: f64,
    pub psi_kq: f64,
    /// Air-gap flux magnitude, the field regulator reference.
    pub flux: f64,
    pub t_e: f64,
}

pub fn sg_steady_state(
    p_in: f64,
    p: &WpgParameters,
    k: &SgConstants,
) -> Result<SgOperatingPoint, WpgError> {
    let vs = converter_ratio(p) * p.v_dc_nom;
    let (rs, xd, xq) = (p.r_s, p.x_d, p.x_q);
    let det = rs * rs + xd * xq;
    // Stator currents with damper currents zero and speed 1.
    let eval = |dg: f64, ef: f64| {
        let (vd, vq) = (vs * dg.sin(), vs * dg.cos());
        let (b0, b1) = (-vd, ef - vq);
        let id = (rs * b0 + xq * b1) / det;
        let iq = (rs * b1 - xd * b0) / det;
        ([vd * id + vq * iq - p_in, vq * id - vd * iq], id, iq)
    };
    let mut z = [0.3, 1.0];
    let mut res = f64::INFINITY;
    for _ in 0..60 {
        let (f, _, _) = eval(z[0], z[1]);
        res = f[0].abs().max(f[1].abs());
        if res < 1e-15 {
            break;
        }
        let h = 1e-7;
        let mut j = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[c] += h;
            zm[c] -= h;
            let fp = eval(zp[0], zp[1]).0;
            let fm = eval(zm[0], zm[1]).0;
            j[0][c] = (fp[0] - fm[0]) / (2.0 * h);
            j[1][c] = (fp[1] - fm[1]) / (2.0 * h);
        }
        let d = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        z[0] -= (j[1][1] * f[0] - j[0][1] * f[1]) / d;
        z[1] -= (-j[1][0] * f[0] + j[0][0] * f[1]) / d;
    }
    if !(res < 1e-10) {
        return Err(WpgError::SteadyState {
            p: p_in,
            residual: res,
        });
    }
    let (_, id, iq) = eval(z[0], z[1]);
    let ef = z[1];
    let psi_d = -xd * id + ef;
    let psi_q = -xq * iq;
    let i_fd = ef / k.x_ad;
    let psi_md = psi_d + k.x_l * id;
    let psi_mq = psi_q + k.x_l * iq;
    Ok(SgOperatingPoint {
        delta_g: z[0],
        e_f: ef,
        psi_d,
        psi_q,
        psi_f: psi_md + k.x_fd * i_fd,
        psi_kd: psi_md,
        psi_kq: psi_mq,
        flux: psi_md.hypot(psi_mq),
        t_e: psi_d * iq - psi_q * id,
    })
}
