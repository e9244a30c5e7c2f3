//! Dense nonsymmetric eigensolver: balancing, Householder reduction to
//! Hessenberg form, Francis double-shift QR for the spectrum and inverse
//! iteration for right and left eigenvectors.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge for eigenvalue {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },
    #[error("inverse iteration failed for eigenvalue {0}")]
    InverseIteration(Complex64),
}

const MAX_QR_ITERS: usize = 60;

/// Scale rows and columns by powers of two so that row and column norms
/// are comparable. Returns `(D⁻¹·A·D, diag(D))`.
pub fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut a = a.clone();
    let mut scale = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                scale[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    (a, scale)
}

/// Householder similarity reduction to upper Hessenberg form.
pub fn hessenberg(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut h = a.clone();
    if n < 3 {
        return h;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let norm = (k + 1..n)
            .map(|i| h[(i, k)] * h[(i, k)])
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if h[(k + 1, k)] >= 0.0 { -norm } else { norm };
        for i in k + 1..n {
            v[i] = h[(i, k)];
        }
        v[k + 1] -= alpha;
        let vn = (k + 1..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for vi in &mut v[k + 1..n] {
            *vi /= vn;
        }
        // H <- P H
        for j in 0..n {
            let d: f64 = (k + 1..n).map(|i| v[i] * h[(i, j)]).sum();
            for i in k + 1..n {
                h[(i, j)] -= 2.0 * v[i] * d;
            }
        }
        // H <- H P
        for i in 0..n {
            let d: f64 = (k + 1..n).map(|j| h[(i, j)] * v[j]).sum();
            for j in k + 1..n {
                h[(i, j)] -= 2.0 * d * v[j];
            }
        }
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    h
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
/// algorithm. `h` is destroyed.
pub fn hqr(h: &mut DMatrix<f64>) -> Result<Vec<Complex64>, EigenError> {
    let n = h.nrows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += h[(i, j)].abs();
        }
    }
    let eps = f64::EPSILON;
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let nu = nn as usize;
        let mut its = 0;
        loop {
            let mut l = nu;
            while l >= 1 {
                let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[(l, l - 1)].abs() <= eps * s {
                    h[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = h[(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = h[(nu - 1, nu - 1)];
            let mut w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != 0.0 {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = 0.0;
                    wi[nu] = 0.0;
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = z;
                    wi[nu] = -z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_QR_ITERS {
                return Err(EigenError::NoConvergence {
                    index: nu,
                    iterations: its,
                });
            }
            if its == 10 || its == 20 || its == 40 {
                t += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                let s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = h[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - rr - ss;
                r = h[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }
            let mut k = m;
            while k < nu {
                let mut xk = 0.0;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if k != nu - 1 { h[(k + 2, k - 1)] } else { 0.0 };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk != 0.0 {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            h[(k, k - 1)] = -h[(k, k - 1)];
                        }
                    } else {
                        h[(k, k - 1)] = -s * xk;
                    }
                    p += s;
                    let xx = p / s;
                    let yy = q / s;
                    let zz = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                        if k != nu - 1 {
                            pp += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= pp * zz;
                        }
                        h[(k + 1, j)] -= pp * yy;
                        h[(k, j)] -= pp * xx;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = xx * h[(i, k)] + yy * h[(i, k + 1)];
                        if k != nu - 1 {
                            pp += zz * h[(i, k + 2)];
                            h[(i, k + 2)] -= pp * r;
                        }
                        h[(i, k + 1)] -= pp * q;
                        h[(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(r, i)| Complex64::new(r, i))
        .collect())
}

fn check_input(a: &DMatrix<f64>) -> Result<(), EigenError> {
    if a.nrows() != a.ncols() {
        return Err(EigenError::NotSquare(a.nrows(), a.ncols()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(EigenError::NonFinite);
    }
    Ok(())
}

/// Eigenvalues only.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>, EigenError> {
    check_input(a)?;
    let (b, _) = balance(a);
    let mut h = hessenberg(&b);
    hqr(&mut h)
}

/// Eigenvalues with right and left eigenvectors (as columns), scaled so
/// that `lᵀ·r = 1` for each pair.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub right: DMatrix<Complex64>,
    pub left: DMatrix<Complex64>,
    /// Pairs whose `lᵀ·r` was too small to normalize reliably.
    pub unreliable: Vec<bool>,
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse iteration on `(M - λI)`, starting from a fixed vector.
fn inverse_iteration(
    m: &DMatrix<Complex64>,
    lambda: Complex64,
    scale: f64,
) -> Option<DVector<Complex64>> {
    let n = m.nrows();
    let mut last = None;
    for attempt in 0..4 {
        let shift = lambda + Complex64::new(1.0, 0.5) * scale * 1e-12 * 10f64.powi(2 * attempt);
        let mut b = m.clone();
        for i in 0..n {
            b[(i, i)] -= shift;
        }
        let lu = b.lu();
        let mut v = DVector::from_fn(n, |i, _| {
            Complex64::new(1.0 + 0.1 * (i as f64 % 7.0), 0.05 * i as f64)
        });
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&v) {
                Some(w) => {
                    let nrm = w.norm();
                    if !nrm.is_finite() || nrm == 0.0 {
                        ok = false;
                        break;
                    }
                    v = w / Complex64::new(nrm, 0.0);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let mut res = m * &v;
        res -= &v * lambda;
        let rel = res.norm() / scale.max(f64::MIN_POSITIVE);
        if rel < 1e-10 {
            return Some(v);
        }
        last = Some((rel, v));
    }
    last.filter(|(rel, _)| *rel < 1e-8).map(|(_, v)| v)
}

pub fn eigen_decompose(a: &DMatrix<f64>) -> Result<EigenDecomposition, EigenError> {
    check_input(a)?;
    let n = a.nrows();
    let (b, d) = balance(a);
    let mut h = hessenberg(&b);
    let values = hqr(&mut h)?;
    let scale = inf_norm(&b).max(1e-300);
    let bc = b.map(|v| Complex64::new(v, 0.0));
    let btc = bc.transpose();
    let mut right = DMatrix::<Complex64>::zeros(n, n);
    let mut left = DMatrix::<Complex64>::zeros(n, n);
    let mut unreliable = vec![false; n];
    let mut done = vec![false; n];
    for k in 0..n {
        if done[k] {
            continue;
        }
        let lam = values[k];
        let r = inverse_iteration(&bc, lam, scale).ok_or(EigenError::InverseIteration(lam))?;
        let l = inverse_iteration(&btc, lam, scale).ok_or(EigenError::InverseIteration(lam))?;
        // Undo balancing: r = D r_b, l = D⁻¹ l_b.
        let r = DVector::from_fn(n, |i, _| r[i] * d[i]);
        let l = DVector::from_fn(n, |i, _| l[i] / d[i]);
        let rn = r.norm();
        let r = r / Complex64::new(rn, 0.0);
        let dot: Complex64 = l.iter().zip(r.iter()).map(|(a, b)| a * b).sum();
        let ln = l.norm();
        if dot.norm() < 1e-12 * ln {
            unreliable[k] = true;
        }
        let l = l / dot;
        right.set_column(k, &r);
        left.set_column(k, &l);
        done[k] = true;
        if lam.im != 0.0 {
            if let Some(j) = (k + 1..n).find(|&j| !done[j] && values[j] == lam.conj()) {
                right.set_column(j, &r.map(|c| c.conj()));
                left.set_column(j, &l.map(|c| c.conj()));
                unreliable[j] = unreliable[k];
                done[j] = true;
            }
        }
    }
    Ok(EigenDecomposition {
        values,
        right,
        left,
        unreliable,
    })
}
