use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{DynamicsError, SimSystem};
use crate::wpg;

#[derive(Debug, Clone, Copy)]
pub struct TrimOptions {
    /// Scaled derivative norm to reach.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TrimOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrimResult {
    pub x: Vec<f64>,
    /// Scaled derivative norm at `x`.
    pub residual: f64,
    pub iterations: usize,
}

impl SimSystem {
    /// Per-state scale turning SI derivatives into per-unit ones.
    pub fn state_scale(&self, idx: usize) -> f64 {
        let l = &self.layout;
        if l.is_core(idx) {
            let u = &self.units[idx / crate::sysmodel::CORE_STATES];
            match idx % crate::sysmodel::CORE_STATES {
                8 => u.params.v_dc_nom,
                11 => u.params.p_n / u.params.v_dc_nom,
                _ => 1.0,
            }
        } else {
            1.0
        }
    }

    pub fn scaled_norm(&self, dx: &[f64]) -> f64 {
        dx.iter()
            .enumerate()
            .map(|(i, v)| (v / self.state_scale(i)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn slack_unit(&self) -> usize {
        self.model.wpgs.iter().position(|u| u.slack).unwrap_or(0)
    }
}

/// Back-solve device states from the power flow, then Newton-refine.
/// Sets each unit's schedule and flux reference.
pub fn trim_equilibrium(
    sys: &mut SimSystem,
    opts: TrimOptions,
) -> Result<TrimResult, DynamicsError> {
    let n = sys.layout.len();
    let mut x = vec![0.0; n];
    let l = sys.layout.clone();
    for i in 0..sys.units.len() {
        let u = &sys.units[i];
        let p = &u.params;
        let v = sys.pf.v[u.bus];
        let s = Complex64::new(sys.pf.p_gen[i], sys.pf.q_gen[i]);
        let cur = (s / v).conj();
        let e = v + u.z_f * cur;
        let pe = (e * cur.conj()).re * u.s_ratio;
        let op = wpg::sg_steady_state(pe, p, &u.sg)?;
        let m = wpg::modulation_for(e.norm(), p.v_dc_nom, p);
        if !(m > 0.0 && m <= p.m_max) {
            return Err(DynamicsError::TrimSetup {
                unit: u.number,
                reason: format!("modulation index {m} outside (0, m_max]"),
            });
        }
        let beta = p.beta_max * (1.0 - op.t_e / p.t_avail);
        if !(beta > 0.0 && beta < p.beta_max) {
            return Err(DynamicsError::TrimSetup {
                unit: u.number,
                reason: format!("torque {} needs pitch {beta} outside (0, beta_max)", op.t_e),
            });
        }
        let core = [
            op.psi_d,
            op.psi_q,
            op.psi_f,
            op.psi_kd,
            op.psi_kq,
            1.0,
            1.0,
            op.t_e / p.k_shaft,
            p.v_dc_nom,
            e.arg(),
            m,
            0.0,
        ];
        x[l.core(i, 0)..l.core(i, 0) + 12].copy_from_slice(&core);
        let ext = [op.delta_g, beta, op.e_f, pe];
        x[l.ext(i, 0)..l.ext(i, 0) + 4].copy_from_slice(&ext);
        let um = &mut sys.units[i];
        um.p_schedule = pe;
        um.flux_ref = op.flux;
    }
    let anchor = x[l.core(sys.slack_unit(), 9)];
    refine_equilibrium(sys, &x, anchor, opts)
}

/// Newton on the full derivative with the slack unit's inverter angle held
/// at `anchor` and its schedule freed, which removes the angle-reference
/// null direction.
pub fn refine_equilibrium(
    sys: &mut SimSystem,
    x0: &[f64],
    anchor: f64,
    opts: TrimOptions,
) -> Result<TrimResult, DynamicsError> {
    // Angle rows with zero gain carry no information; any positive gain
    // yields the same equilibrium because the deviation is zero there.
    let mut work = sys.clone();
    for u in &mut work.units {
        if u.gains.k_a == 0.0 {
            u.gains.k_a = 1.0;
        }
    }
    let net = work.network_state(work.initial_topology())?;
    let slack = work.slack_unit();
    let pin = work.layout.core(slack, 9);
    let n = x0.len();
    let mut x = x0.to_vec();
    x[pin] = anchor;
    let scale: Vec<f64> = (0..n).map(|i| work.state_scale(i)).collect();

    let resid = |w: &SimSystem, x: &[f64]| -> Result<DVector<f64>, DynamicsError> {
        let dx = w.derivatives(&net, x)?;
        Ok(DVector::from_iterator(
            n,
            dx.iter().zip(&scale).map(|(d, s)| d / s),
        ))
    };

    let mut f = resid(&work, &x)?;
    let mut iterations = 0;
    while f.norm() > opts.tolerance * 0.01 && iterations < opts.max_iterations {
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            if j == pin {
                // Column for the slack schedule instead of the pinned angle.
                let h = 1e-7;
                let mut wp = work.clone();
                wp.units[slack].p_schedule += h;
                let mut wm = work.clone();
                wm.units[slack].p_schedule -= h;
                let col = (resid(&wp, &x)? - resid(&wm, &x)?) / (2.0 * h);
                jac.set_column(j, &col);
                continue;
            }
            let h = 1e-7 * scale[j].max(x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = (resid(&work, &xp)? - resid(&work, &xm)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = jac.lu().solve(&f).ok_or_else(|| DynamicsError::Trim {
            iterations,
            residual: f.norm(),
        })?;
        let before = f.norm();
        let (x_prev, sched_prev, f_prev) = (x.clone(), work.units[slack].p_schedule, f.clone());
        for j in 0..n {
            if j == pin {
                work.units[slack].p_schedule -= step[j];
            } else {
                x[j] -= step[j];
            }
        }
        f = resid(&work, &x)?;
        if f.norm() >= before && before < opts.tolerance {
            // Roundoff floor reached; keep the better iterate.
            x = x_prev;
            work.units[slack].p_schedule = sched_prev;
            f = f_prev;
            break;
        }
    }
    let residual = f.norm();
    if !(residual < opts.tolerance) {
        return Err(DynamicsError::Trim {
            iterations,
            residual,
        });
    }
    sys.units[slack].p_schedule = work.units[slack].p_schedule;
    Ok(TrimResult {
        x,
        residual,
        iterations,
    })
}
