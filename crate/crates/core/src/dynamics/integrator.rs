//! Implicit trapezoidal rule with a modified-Newton inner loop.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::{DynamicsError, NetworkState, SimSystem};

/// Right-hand side the integrator can drive.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<(), DynamicsError>;
    /// Magnitude used to weigh residuals and difference steps.
    fn scale(&self, _i: usize) -> f64 {
        1.0
    }
}

/// A simulation system bound to one switching state.
pub struct SimRhs<'a> {
    pub sys: &'a SimSystem,
    pub net: &'a NetworkState,
}

impl OdeSystem for SimRhs<'_> {
    fn dim(&self) -> usize {
        self.sys.layout.len()
    }

    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<(), DynamicsError> {
        self.sys.evaluate(self.net, x, dx, None)
    }

    fn scale(&self, i: usize) -> f64 {
        self.sys.state_scale(i)
    }
}

/// Closure-backed system, mostly for tests and small fixtures.
pub struct FnSystem<F> {
    pub n: usize,
    pub f: F,
}

impl<F> OdeSystem for FnSystem<F>
where
    F: Fn(&[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64], dx: &mut [f64]) -> Result<(), DynamicsError> {
        (self.f)(x, dx);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub dt: f64,
    /// Scaled infinity-norm bound on the trapezoidal residual.
    pub tolerance: f64,
    pub max_newton: usize,
    /// Smallest step allowed when halving, as a fraction of `dt`.
    pub min_step_fraction: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            tolerance: 1e-11,
            max_newton: 12,
            min_step_fraction: 1.0 / 1024.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub jacobian_updates: usize,
    pub halvings: usize,
}

/// Accepted state and its derivative.
type StepPair = (Vec<f64>, Vec<f64>);

/// Stateful stepper that keeps the iteration matrix between steps.
pub struct Integrator {
    pub opts: IntegratorOptions,
    lu: Option<(LU<f64, Dyn, Dyn>, f64)>,
    pub stats: StepStats,
    /// Interior points `(t, x)` of halved steps, oldest first. Callers
    /// that record every accepted step drain this after `advance`.
    pub interior: Vec<(f64, Vec<f64>)>,
}

fn jacobian<S: OdeSystem + ?Sized>(
    sys: &S,
    x: &[f64],
    f0: &[f64],
) -> Result<DMatrix<f64>, DynamicsError> {
    let n = sys.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    for j in 0..n {
        let h = 1e-7 * sys.scale(j).max(x[j].abs());
        xp[j] = x[j] + h;
        sys.eval(&xp, &mut fp)?;
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - f0[i]) / h;
        }
    }
    Ok(jac)
}

impl Integrator {
    pub fn new(opts: IntegratorOptions) -> Self {
        Self {
            opts,
            lu: None,
            stats: StepStats::default(),
            interior: Vec::new(),
        }
    }

    /// Drop the stored iteration matrix (after a topology change).
    pub fn invalidate(&mut self) {
        self.lu = None;
    }

    fn refresh<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        y: &[f64],
        dt: f64,
    ) -> Result<(), DynamicsError> {
        let n = sys.dim();
        let mut fy = vec![0.0; n];
        sys.eval(y, &mut fy)?;
        let jf = jacobian(sys, y, &fy)?;
        let m = DMatrix::identity(n, n) - jf * (0.5 * dt);
        self.lu = Some((m.lu(), dt));
        self.stats.jacobian_updates += 1;
        Ok(())
    }

    fn newton<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        x: &[f64],
        fx: &[f64],
        dt: f64,
    ) -> Result<Option<StepPair>, DynamicsError> {
        let n = sys.dim();
        let scale: Vec<f64> = (0..n).map(|i| sys.scale(i)).collect();
        let mut y: Vec<f64> = x.iter().zip(fx).map(|(a, b)| a + dt * b).collect();
        let mut fy = vec![0.0; n];
        let mut fresh = false;
        // Grid steps differ from dt in the last bits; the stale matrix is fine.
        if self
            .lu
            .as_ref()
            .is_none_or(|(_, d)| (d - dt).abs() > 1e-9 * dt)
        {
            self.refresh(sys, x, dt)?;
            fresh = true;
        }
        let mut last = f64::INFINITY;
        for it in 0..self.opts.max_newton {
            sys.eval(&y, &mut fy)?;
            let g = DVector::from_fn(n, |i, _| y[i] - x[i] - 0.5 * dt * (fx[i] + fy[i]));
            let norm = (0..n).map(|i| (g[i] / scale[i]).abs()).fold(0.0, f64::max);
            self.stats.newton_iterations += 1;
            if norm < self.opts.tolerance {
                return Ok(Some((y, fy)));
            }
            let slow = it >= 4 && norm > 0.5 * last;
            if !norm.is_finite() || slow || norm > 1e3 * last {
                if fresh {
                    return Ok(None);
                }
                self.refresh(sys, &y, dt)?;
                fresh = true;
                last = f64::INFINITY;
                continue;
            }
            last = norm;
            let (lu, _) = self.lu.as_ref().unwrap();
            let d = match lu.solve(&g) {
                Some(d) => d,
                None => return Ok(None),
            };
            for i in 0..n {
                y[i] -= d[i];
            }
        }
        Ok(None)
    }

    /// Advance one step of `dt`, halving on Newton failure. `fx` is the
    /// derivative at `x`; returns the new state and its derivative.
    pub fn advance<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        x: &[f64],
        fx: &[f64],
        t: f64,
        dt: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
        if let Some(r) = self.newton(sys, x, fx, dt)? {
            self.stats.steps += 1;
            return Ok(r);
        }
        let half = 0.5 * dt;
        if half < self.opts.dt * self.opts.min_step_fraction {
            return Err(DynamicsError::Integration {
                t,
                reason: format!("Newton failed at minimum step {dt:e} s"),
            });
        }
        self.stats.halvings += 1;
        self.invalidate();
        let (xm, fm) = self.advance(sys, x, fx, t, half)?;
        self.interior.push((t + half, xm.clone()));
        let r = self.advance(sys, &xm, &fm, t + half, half)?;
        self.invalidate();
        Ok(r)
    }
}

/// One trapezoidal step from scratch.
pub fn integrate_step<S: OdeSystem + ?Sized>(
    sys: &S,
    x: &[f64],
    t: f64,
    dt: f64,
    opts: IntegratorOptions,
) -> Result<Vec<f64>, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::Integration {
            t,
            reason: format!("step {dt} must be positive"),
        });
    }
    let mut fx = vec![0.0; sys.dim()];
    sys.eval(x, &mut fx)?;
    let mut it = Integrator::new(IntegratorOptions { dt, ..opts });
    Ok(it.advance(sys, x, &fx, t, dt)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> FnSystem<impl Fn(&[f64], &mut [f64])> {
        FnSystem {
            n: 1,
            f: |x: &[f64], d: &mut [f64]| d[0] = -x[0],
        }
    }

    fn run(dt: f64) -> f64 {
        let s = decay();
        let mut it = Integrator::new(IntegratorOptions {
            dt,
            tolerance: 1e-14,
            ..Default::default()
        });
        let mut x = vec![1.0];
        let mut f = vec![-1.0];
        let n = (1.0 / dt).round() as usize;
        for k in 0..n {
            let (a, b) = it.advance(&s, &x, &f, k as f64 * dt, dt).unwrap();
            x = a;
            f = b;
        }
        x[0]
    }

    #[test]
    fn exponential_decay_accuracy() {
        let x = run(1e-3);
        assert!((x - (-1f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn second_order_convergence() {
        let exact = (-1f64).exp();
        let e1 = (run(0.02) - exact).abs();
        let e2 = (run(0.01) - exact).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn zero_derivative_is_fixed_point() {
        let s = FnSystem {
            n: 2,
            f: |_: &[f64], d: &mut [f64]| d.fill(0.0),
        };
        let x = integrate_step(&s, &[0.3, -2.0], 0.0, 1e-3, IntegratorOptions::default()).unwrap();
        assert_eq!(x, vec![0.3, -2.0]);
    }

    #[test]
    fn stiff_linear_system_is_stable() {
        let s = FnSystem {
            n: 2,
            f: |x: &[f64], d: &mut [f64]| {
                d[0] = -1e4 * x[0] + x[1];
                d[1] = -x[1];
            },
        };
        let mut x = vec![1.0, 1.0];
        for k in 0..100 {
            x = integrate_step(&s, &x, k as f64 * 0.01, 0.01, IntegratorOptions::default())
                .unwrap();
            assert!(x[0].abs() <= 1.0);
        }
        // The stiff component rings down slowly under the trapezoidal rule.
        assert!(x[0].abs() < 0.05 && (x[1] - (-1f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn rejects_non_positive_step() {
        assert!(integrate_step(&decay(), &[1.0], 0.0, 0.0, IntegratorOptions::default()).is_err());
    }
}
