//! Capacitor voltage synchronizing control: the angle law, the integral
//! exciter on the modulation index and the droop governor.

/// Controller gains for one generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvscGains {
    /// Angle-loop gain, rad/s per pu of capacitor voltage deviation.
    pub k_a: f64,
    /// Exciter integral gain, 1/s per pu terminal voltage error.
    pub k_e: f64,
    /// Droop gain, pu power per pu capacitor voltage.
    pub k_pg1: f64,
    /// Storage tracking gain on the power error.
    pub k_pg2: f64,
    /// SG restoration rate, 1/s.
    pub k_pg3: f64,
    pub v_dc_nom: f64,
    pub has_governor: bool,
}

impl Default for CvscGains {
    fn default() -> Self {
        Self {
            k_a: 10.0,
            k_e: 0.2,
            k_pg1: 30.0,
            k_pg2: 15.0,
            k_pg3: 0.1,
            v_dc_nom: 1110.0,
            has_governor: true,
        }
    }
}

pub fn delta_vdc_star(v_dc: f64, v_dc_nom: f64) -> f64 {
    (v_dc - v_dc_nom) / v_dc_nom
}

/// dΔθ/dt in rad/s.
pub fn phase_angle_derivative(v_dc: f64, gains: &CvscGains) -> f64 {
    gains.k_a * delta_vdc_star(v_dc, gains.v_dc_nom)
}

/// dm/dt with conditional integration: the integrator holds while `m` sits on
/// a limit and the error pushes further into it.
pub fn exciter_derivative(v_t: f64, v_t_ref: f64, k_e: f64, m: f64, m_max: f64) -> f64 {
    let rate = k_e * (v_t_ref - v_t);
    if (m >= m_max && rate > 0.0) || (m <= 0.0 && rate < 0.0) {
        0.0
    } else {
        rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorOutput {
    /// W.
    pub p_me_ref: f64,
    /// Storage current reference before the rating clamp, A.
    pub i_s_ref: f64,
    /// d(p_in_ref)/dt, W/s.
    pub p_in_ref_rate: f64,
}

/// Droop governor. Powers in W; `s_machine` converts the per-unit droop gain.
///
/// Droop sets `p_me_ref`, storage closes the fast gap between `p_me_ref` and
/// `p_me`, and `p_in_ref` drifts toward `p_me_ref` so the SG takes over the
/// sustained share.
pub fn governor_update(
    v_dc: f64,
    p_me: f64,
    p_schedule: f64,
    p_in_ref: f64,
    s_machine: f64,
    gains: &CvscGains,
) -> GovernorOutput {
    if !gains.has_governor {
        return GovernorOutput {
            p_me_ref: p_schedule,
            i_s_ref: 0.0,
            p_in_ref_rate: gains.k_pg3 * (p_schedule - p_in_ref),
        };
    }
    let dv = delta_vdc_star(v_dc, gains.v_dc_nom);
    let p_me_ref = p_schedule - gains.k_pg1 * dv * s_machine;
    GovernorOutput {
        p_me_ref,
        i_s_ref: gains.k_pg2 * (p_me_ref - p_me) / gains.v_dc_nom,
        p_in_ref_rate: gains.k_pg3 * (p_me_ref - p_in_ref),
    }
}

/// Energy released into the capacitor relative to `v_dc0`, J.
pub fn capacitor_energy(v_dc: f64, v_dc0: f64, c: f64) -> f64 {
    0.5 * c * (v_dc * v_dc - v_dc0 * v_dc0)
}
