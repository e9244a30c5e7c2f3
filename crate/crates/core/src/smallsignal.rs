//! Numerical linearization about an equilibrium, modal analysis with
//! participation factors, and the angle-gain frequency-response sweep.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{trim_equilibrium, DynamicsError, SimSystem, TrimOptions};
use crate::linalg::{eigen_decompose, EigenError};
use crate::sysmodel::SystemModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearizeError {
    #[error("non-finite derivative while perturbing state {state}")]
    NonFinite { state: String },
    #[error("operating point is not an equilibrium (scaled residual {residual:e})")]
    NotEquilibrium { residual: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// A failed Jacobian column: the function errored or returned non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnFailure<E> {
    pub column: usize,
    pub error: Option<E>,
}

/// Perturbation used for state `x`.
pub fn fd_step(x: f64) -> f64 {
    1e-6_f64.max(1e-6 * x.abs())
}

/// Central-difference Jacobian of `f` at `x`, one column per state, columns in parallel.
pub fn finite_difference_jacobian<F, E>(f: F, x: &[f64]) -> Result<DMatrix<f64>, ColumnFailure<E>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E> + Sync,
    E: Send,
{
    let n = x.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let h = fd_step(x[j]);
            let mut xp = x.to_vec();
            xp[j] = x[j] + h;
            let fp = f(&xp).map_err(|e| ColumnFailure {
                column: j,
                error: Some(e),
            })?;
            xp[j] = x[j] - h;
            let fm = f(&xp).map_err(|e| ColumnFailure {
                column: j,
                error: Some(e),
            })?;
            let col: Vec<f64> = fp
                .iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            if col.iter().all(|v| v.is_finite()) {
                Ok(col)
            } else {
                Err(ColumnFailure {
                    column: j,
                    error: None,
                })
            }
        })
        .collect::<Result<_, _>>()?;
    let m = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(m, n, |i, j| cols[j][i]))
}

/// Linearized dynamics `dx' = A dx` about `x0`.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub labels: Vec<String>,
    pub x0: Vec<f64>,
    /// Leading states that belong to the twelve-per-unit core set.
    pub n_core: usize,
}

impl StateSpaceModel {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_extension(&self, idx: usize) -> bool {
        idx >= self.n_core
    }
}

fn column_error(sys: &SimSystem, f: ColumnFailure<DynamicsError>) -> LinearizeError {
    match f.error {
        None | Some(DynamicsError::NonFinite(_)) => LinearizeError::NonFinite {
            state: sys.layout.label(f.column),
        },
        Some(e) => LinearizeError::Dynamics(e),
    }
}

/// Jacobian of the full stacked system, network solved inside every evaluation.
pub fn linearize(sys: &SimSystem, x0: &[f64]) -> Result<StateSpaceModel, LinearizeError> {
    let net = sys.network_state(sys.initial_topology())?;
    let residual = sys.scaled_norm(&sys.derivatives(&net, x0)?);
    if !(residual < 1e-10) {
        return Err(LinearizeError::NotEquilibrium { residual });
    }
    let a = finite_difference_jacobian(|x| sys.derivatives(&net, x), x0)
        .map_err(|f| column_error(sys, f))?;
    Ok(StateSpaceModel {
        a,
        labels: sys.layout.labels(),
        x0: x0.to_vec(),
        n_core: sys.layout.n_core(),
    })
}

/// Normalized participation of each state in one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Participation {
    pub factors: Vec<f64>,
    pub dominant: usize,
    /// The eigenvector products vanished, so the factors are uniform placeholders.
    pub degenerate: bool,
}

/// `p_ki = |l_ki r_ki| / Σ_k |l_ki r_ki|` for each column pair.
pub fn participation_factors(
    right: &DMatrix<Complex64>,
    left: &DMatrix<Complex64>,
) -> Vec<Participation> {
    let n = right.nrows();
    (0..right.ncols())
        .map(|i| {
            let raw: Vec<f64> = (0..n)
                .map(|k| (left[(k, i)] * right[(k, i)]).norm())
                .collect();
            let sum: f64 = raw.iter().sum();
            let degenerate = !(sum > 0.0 && sum.is_finite());
            let factors = if degenerate {
                vec![1.0 / n as f64; n]
            } else {
                raw.iter().map(|v| v / sum).collect()
            };
            let dominant = argmax(&factors);
            Participation {
                factors,
                dominant,
                degenerate,
            }
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| {
            if x > bv {
                (i, x)
            } else {
                (bi, bv)
            }
        })
        .0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub eigenvalue: Complex64,
    pub participation: Vec<f64>,
    pub dominant: usize,
    pub dominant_label: String,
    /// Dominated by a state outside the core set.
    pub extension: bool,
    pub unreliable: bool,
}

impl Mode {
    pub fn is_real(&self) -> bool {
        self.eigenvalue.im.abs() <= 1e-12 * self.eigenvalue.norm().max(1.0)
    }

    pub fn freq_hz(&self) -> Option<f64> {
        (!self.is_real()).then(|| self.eigenvalue.im.abs() / (2.0 * std::f64::consts::PI))
    }

    pub fn damping_ratio(&self) -> Option<f64> {
        (!self.is_real()).then(|| -self.eigenvalue.re / self.eigenvalue.norm())
    }

    /// Up to `k` states by decreasing participation.
    pub fn top_states(&self, k: usize) -> Vec<(usize, f64)> {
        let mut idx: Vec<usize> = (0..self.participation.len()).collect();
        idx.sort_by(|&a, &b| {
            self.participation[b]
                .total_cmp(&self.participation[a])
                .then(a.cmp(&b))
        });
        idx.into_iter()
            .take(k)
            .map(|i| (i, self.participation[i]))
            .collect()
    }
}

/// Modes sorted by |Im| descending, then Re ascending; both members of a
/// conjugate pair appear, positive imaginary part first.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub modes: Vec<Mode>,
    pub labels: Vec<String>,
}

fn mode_order(a: &Mode, b: &Mode) -> std::cmp::Ordering {
    let (x, y) = (a.eigenvalue, b.eigenvalue);
    y.im.abs()
        .total_cmp(&x.im.abs())
        .then(x.re.total_cmp(&y.re))
        .then(y.im.total_cmp(&x.im))
}

impl ModeReport {
    pub fn new(mut modes: Vec<Mode>, labels: Vec<String>) -> Self {
        modes.sort_by(mode_order);
        Self { modes, labels }
    }

    pub fn core_modes(&self) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(|m| !m.extension)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "index,re,im,freq_hz,damping_ratio,dominant_state,participation_top3,extension\n",
        );
        for (i, m) in self.modes.iter().enumerate() {
            let f = m.freq_hz().map(|v| format!("{v:.16e}")).unwrap_or_default();
            let z = m
                .damping_ratio()
                .map(|v| format!("{v:.16e}"))
                .unwrap_or_default();
            let top = m
                .top_states(3)
                .iter()
                .map(|&(k, p)| format!("{}:{p:.16e}", self.labels[k]))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{f},{z},{},{top},{}",
                i + 1,
                m.eigenvalue.re,
                m.eigenvalue.im,
                m.dominant_label,
                u8::from(m.extension)
            );
        }
        s
    }

    /// Fixed-width listing with `-` for the frequency and damping of real modes.
    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:>4}  {:<28}  {:>10}  {:>8}  {}\n",
            "No.", "Eigenvalue", "Freq (Hz)", "Damping", "Dominant states"
        );
        for (i, m) in self.modes.iter().enumerate() {
            let l = m.eigenvalue;
            let eig = if m.is_real() {
                format!("{:.4}", l.re)
            } else {
                format!(
                    "{:.4} {} j{:.4}",
                    l.re,
                    if l.im < 0.0 { '-' } else { '+' },
                    l.im.abs()
                )
            };
            let f = m
                .freq_hz()
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into());
            let z = m
                .damping_ratio()
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".into());
            let dom = m
                .top_states(3)
                .iter()
                .filter(|&&(_, p)| p >= 0.5 * m.participation[m.dominant])
                .map(|&(k, _)| self.labels[k].as_str())
                .collect::<Vec<_>>()
                .join(", ");
            let flag = match (m.extension, m.unreliable) {
                (true, true) => "  [ext, unreliable]",
                (true, false) => "  [ext]",
                (false, true) => "  [unreliable]",
                _ => "",
            };
            let _ = writeln!(s, "{:>4}  {eig:<28}  {f:>10}  {z:>8}  {dom}{flag}", i + 1);
        }
        s
    }
}

/// Eigenvalues, participation factors and the sorted report for `model`.
pub fn analyze(model: &StateSpaceModel) -> Result<ModeReport, LinearizeError> {
    let dec = eigen_decompose(&model.a)?;
    let parts = participation_factors(&dec.right, &dec.left);
    let modes = dec
        .values
        .iter()
        .zip(parts)
        .zip(&dec.unreliable)
        .map(|((&eigenvalue, p), &unreliable)| Mode {
            eigenvalue,
            dominant_label: model.labels[p.dominant].clone(),
            extension: model.is_extension(p.dominant),
            unreliable: unreliable || p.degenerate,
            dominant: p.dominant,
            participation: p.factors,
        })
        .collect();
    Ok(ModeReport::new(modes, model.labels.clone()))
}

/// Single-input single-output realization `y = c x + d u`, `x' = A x + b u`.
#[derive(Debug, Clone)]
pub struct Siso {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl Siso {
    /// `c (jωI − A)⁻¹ b + d`.
    pub fn response(&self, omega: f64) -> Option<Complex64> {
        let n = self.a.nrows();
        let m = DMatrix::from_fn(n, n, |i, j| {
            let d = if i == j {
                Complex64::new(0.0, omega)
            } else {
                Complex64::new(0.0, 0.0)
            };
            d - self.a[(i, j)]
        });
        let rhs = self.b.map(|v| Complex64::new(v, 0.0));
        let y = m.lu().solve(&rhs)?;
        Some(
            self.c
                .iter()
                .zip(y.iter())
                .map(|(&c, &y)| y * c)
                .sum::<Complex64>()
                + self.d,
        )
    }

    /// Steady-state gain after dropping states whose rows of `A` and `b`
    /// are identically zero. `None` when the remaining `A` is singular.
    pub fn dc_gain(&self) -> Option<f64> {
        let n = self.a.nrows();
        let live: Vec<usize> = (0..n)
            .filter(|&i| self.b[i] != 0.0 || self.a.row(i).iter().any(|&v| v != 0.0))
            .collect();
        let k = live.len();
        let a = DMatrix::from_fn(k, k, |i, j| self.a[(live[i], live[j])]);
        let b = DVector::from_fn(k, |i, _| self.b[live[i]]);
        let lu = a.lu();
        if lu.is_invertible() {
            let y = lu.solve(&b)?;
            let g = self.d
                - live
                    .iter()
                    .zip(y.iter())
                    .map(|(&s, &y)| self.c[s] * y)
                    .sum::<f64>();
            g.is_finite().then_some(g)
        } else {
            None
        }
    }
}

/// Treat state `input` as an external signal and take `output` as the
/// measured quantity; `output` is differentiated numerically at `model.x0`.
pub fn siso_from_state<F>(
    model: &StateSpaceModel,
    input: usize,
    output: F,
) -> Result<Siso, LinearizeError>
where
    F: Fn(&[f64]) -> Result<f64, DynamicsError> + Sync,
{
    let row = finite_difference_jacobian(|x| output(x).map(|v| vec![v]), &model.x0).map_err(
        |f| match f.error {
            Some(e) => LinearizeError::Dynamics(e),
            None => LinearizeError::NonFinite {
                state: model.labels[f.column].clone(),
            },
        },
    )?;
    let keep: Vec<usize> = (0..model.a.nrows()).filter(|&i| i != input).collect();
    let n = keep.len();
    Ok(Siso {
        a: DMatrix::from_fn(n, n, |i, j| model.a[(keep[i], keep[j])]),
        b: DVector::from_fn(n, |i, _| model.a[(keep[i], input)]),
        c: DVector::from_fn(n, |i, _| row[(0, keep[i])]),
        d: row[(0, input)],
    })
}

/// `n` points spaced evenly in log between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KaCurve {
    pub k_a: f64,
    /// |G(jω)| on the sweep grid, machine pu power per volt.
    pub magnitude: Vec<f64>,
    pub dc_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KaSweep {
    pub omega: Vec<f64>,
    pub curves: Vec<KaCurve>,
    /// Gains that could not be analyzed, with the reason.
    pub skipped: Vec<(f64, String)>,
}

impl KaSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega_rad_s");
        for c in &self.curves {
            let _ = write!(s, ",k_a_{}", c.k_a);
        }
        s.push('\n');
        for (i, w) in self.omega.iter().enumerate() {
            let _ = write!(s, "{w:.16e}");
            for c in &self.curves {
                let _ = write!(s, ",{:.16e}", c.magnitude[i]);
            }
            s.push('\n');
        }
        s
    }
}

/// The `v_dc` to `P_e` channel of unit `unit` (0-based) at the trimmed point.
pub fn vdc_to_pe_channel(
    sys: &SimSystem,
    model: &StateSpaceModel,
    unit: usize,
) -> Result<Siso, LinearizeError> {
    let net = sys.network_state(sys.initial_topology())?;
    let p_n = sys.units[unit].params.p_n;
    let input = sys.layout.core(unit, 8);
    siso_from_state(model, input, |x| Ok(sys.outputs(&net, x)?[unit].p_e / p_n))
}

fn ka_curve(model: &SystemModel, k_a: f64, omega: &[f64]) -> Result<KaCurve, String> {
    let mut m = model.clone();
    for u in &mut m.wpgs {
        u.gains.k_a = k_a;
    }
    let mut sys = SimSystem::new(m).map_err(|e| e.to_string())?;
    let tr = trim_equilibrium(&mut sys, TrimOptions::default()).map_err(|e| e.to_string())?;
    let lin = linearize(&sys, &tr.x).map_err(|e| e.to_string())?;
    let ch = vdc_to_pe_channel(&sys, &lin, 0).map_err(|e| e.to_string())?;
    let magnitude = omega
        .iter()
        .map(|&w| {
            ch.response(w)
                .map(|g| g.norm())
                .ok_or_else(|| format!("singular resolvent at {w} rad/s"))
        })
        .collect::<Result<_, _>>()?;
    Ok(KaCurve {
        k_a,
        magnitude,
        dc_gain: ch.dc_gain(),
    })
}

/// Frequency response of the unit-1 `v_dc` to `P_e` channel for each angle
/// gain, applied to every unit. Gains that fail to trim are skipped.
pub fn ka_sweep(model: &SystemModel, ka_values: &[f64], omega: &[f64]) -> KaSweep {
    let results: Vec<_> = ka_values
        .par_iter()
        .map(|&k| (k, ka_curve(model, k, omega)))
        .collect();
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    for (k, r) in results {
        match r {
            Ok(c) => curves.push(c),
            Err(e) => skipped.push((k, e)),
        }
    }
    KaSweep {
        omega: omega.to_vec(),
        curves,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mode(l: Complex64, n: usize) -> Mode {
        let mut p = vec![0.0; n];
        p[0] = 1.0;
        Mode {
            eigenvalue: l,
            participation: p,
            dominant: 0,
            dominant_label: "x_1".into(),
            extension: false,
            unreliable: false,
        }
    }

    #[test]
    fn linear_system_recovered() {
        let m = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.5, 0.0, -3.0, 4.0, 7.0, 0.25, -0.1]);
        let x = [0.3, -2.0, 5.0];
        let j = finite_difference_jacobian(
            |x| Ok::<_, ()>((&m * DVector::from_column_slice(x)).as_slice().to_vec()),
            &x,
        )
        .unwrap();
        assert!((j - &m).abs().max() < 1e-8);
    }

    #[test]
    fn scalar_square() {
        let j = finite_difference_jacobian(|x| Ok::<_, ()>(vec![x[0] * x[0]]), &[3.0]).unwrap();
        assert!((j[(0, 0)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_column_reported() {
        let r = finite_difference_jacobian(
            |x| Ok::<_, ()>(vec![x[0], 1.0 / (x[1] - 1e-6)]),
            &[1.0, 0.0],
        );
        assert_eq!(r.unwrap_err().column, 1);
    }

    #[test]
    fn diagonal_participation() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0, -5.0]));
        let dec = eigen_decompose(&a).unwrap();
        let p = participation_factors(&dec.right, &dec.left);
        for (i, pi) in p.iter().enumerate() {
            let state = (0..3).find(|&k| a[(k, k)] == dec.values[i].re).unwrap();
            assert_eq!(pi.dominant, state);
            assert!((pi.factors[state] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let dec = eigen_decompose(&a).unwrap();
        for p in participation_factors(&dec.right, &dec.left) {
            assert!((p.factors[0] - 0.5).abs() < 1e-12 && (p.factors[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn report_rows() {
        let labels = vec!["x_1".to_string()];
        let r = ModeReport::new(
            vec![
                mode(Complex64::new(-52.961, 0.0), 1),
                mode(Complex64::new(-0.1282, -3.2972), 1),
                mode(Complex64::new(-9.0414, 376.06), 1),
                mode(Complex64::new(-9.0414, -376.06), 1),
                mode(Complex64::new(-0.1282, 3.2972), 1),
            ],
            labels,
        );
        let m = &r.modes;
        assert_eq!(m[0].eigenvalue.im, 376.06);
        assert_eq!(m[1].eigenvalue.im, -376.06);
        assert!((m[0].freq_hz().unwrap() - 59.852).abs() < 5e-4);
        assert!((m[0].damping_ratio().unwrap() - 0.0240).abs() < 5e-5);
        assert!((m[2].freq_hz().unwrap() - 0.5248).abs() < 5e-5);
        assert!((m[2].damping_ratio().unwrap() - 0.0388).abs() < 1e-4);
        assert!(m[4].freq_hz().is_none() && m[4].damping_ratio().is_none());
        let csv = r.to_csv();
        let last = csv.lines().last().unwrap();
        assert!(last.starts_with("5,-5.2960999999999999e1,0.0000000000000000e0,,,x_1,"));
        assert!(r.to_table().lines().last().unwrap().contains(" -  "));
    }

    #[test]
    fn siso_first_order() {
        let s = Siso {
            a: DMatrix::from_element(1, 1, -2.0),
            b: DVector::from_element(1, 4.0),
            c: DVector::from_element(1, 1.0),
            d: 0.5,
        };
        assert!((s.dc_gain().unwrap() - 2.5).abs() < 1e-14);
        let g = s.response(2.0).unwrap();
        assert!((g - (Complex64::new(4.0, 0.0) / Complex64::new(2.0, 2.0) + 0.5)).norm() < 1e-14);
    }

    #[test]
    fn frozen_states_dropped_from_dc_gain() {
        let s = Siso {
            a: DMatrix::from_row_slice(2, 2, &[-1.0, 3.0, 0.0, 0.0]),
            b: DVector::from_vec(vec![1.0, 0.0]),
            c: DVector::from_vec(vec![2.0, 1.0]),
            d: 0.0,
        };
        assert!((s.dc_gain().unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(0.1, 1000.0, 5);
        assert!(
            (g[0] - 0.1).abs() < 1e-15
                && (g[4] - 1000.0).abs() < 1e-9
                && (g[2] - 10.0).abs() < 1e-12
        );
    }

    fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-5.0..5.0f64, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    proptest! {
        #[test]
        fn similarity_invariance(a in matrix(6), t in matrix(6)) {
            let t = t + DMatrix::identity(6, 6) * 12.0;
            let ti = t.clone().try_inverse().unwrap();
            let b = &ti * &a * &t;
            let ea = sorted(crate::linalg::eigenvalues(&a).unwrap());
            let eb = crate::linalg::eigenvalues(&b).unwrap();
            // Match greedily to avoid ordering ties between near-equal real parts.
            let mut used = vec![false; eb.len()];
            for x in &ea {
                let (k, d) = eb.iter().enumerate().filter(|(k, _)| !used[*k])
                    .map(|(k, y)| (k, (x - y).norm())).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
                used[k] = true;
                prop_assert!(d < 1e-6, "{x} unmatched ({d:e})");
            }
        }

        #[test]
        fn trace_equals_eigen_sum(a in matrix(7)) {
            let s: Complex64 = crate::linalg::eigenvalues(&a).unwrap().iter().sum();
            let tol = 1e-6 * a.norm();
            prop_assert!((s.re - a.trace()).abs() < tol && s.im.abs() < tol);
        }

        #[test]
        fn participation_sums_to_one(a in matrix(6)) {
            let dec = eigen_decompose(&a).unwrap();
            for p in participation_factors(&dec.right, &dec.left) {
                prop_assert!((p.factors.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                prop_assert!(p.factors[p.dominant] >= p.factors.iter().cloned().fold(0.0, f64::max));
            }
        }

        #[test]
        fn conjugate_pairs_exact(a in matrix(6)) {
            let ev = crate::linalg::eigenvalues(&a).unwrap();
            for x in ev.iter().filter(|x| x.im != 0.0) {
                prop_assert!(ev.iter().any(|y| *y == x.conj()));
            }
        }
    }
}
