//! Eigenvalues of dense nonsymmetric real matrices: balancing, Householder
//! reduction to upper Hessenberg form, then Francis double-shift QR.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest dimension accepted by [`eigenvalues`].
pub const MAX_DIM: usize = 256;
/// Relative residual bound `‖Mw − ξw‖ ≤ RESIDUAL_TOL·‖M‖` for sampled pairs.
pub const RESIDUAL_TOL: f64 = 1e-8;
const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;
const RESIDUAL_SAMPLES: usize = 4;

/// All eigenvalues of `mat`, sorted by descending real part then imaginary
/// part. A sample of eigenpairs is checked by inverse iteration.
pub fn eigenvalues(mat: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let mut eigs = eigenvalues_unchecked(mat)?;
    let norm = mat.norm();
    if norm > 0.0 {
        let step = (eigs.len() / RESIDUAL_SAMPLES).max(1);
        for xi in eigs.iter().step_by(step) {
            let r = eigen_residual(mat, *xi);
            if !(r <= RESIDUAL_TOL * norm) {
                return Err(Error::EigenResidual { residual: r, bound: RESIDUAL_TOL * norm });
            }
        }
    }
    eigs.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(eigs)
}

/// Eigenvalues without the residual verification.
pub fn eigenvalues_unchecked(mat: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = mat.nrows();
    if n != mat.ncols() {
        return Err(Error::InvalidParameter(format!("eigenvalues of a non-square {}x{} matrix", n, mat.ncols())));
    }
    if n > MAX_DIM {
        return Err(Error::DimensionCap { dim: n, cap: MAX_DIM });
    }
    if let Some(i) = mat.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index: i, context: "eigenvalue input" });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // row-major working copy
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| mat[(i, j)]).collect()).collect();
    balance(&mut a);
    hessenberg(&mut a);
    hqr(&mut a)
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable.
fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i][j] *= g;
                    }
                    for row in a.iter_mut() {
                        row[i] *= f;
                    }
                }
            }
        }
    }
}

/// Householder similarity reduction to upper Hessenberg form.
fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let alpha_sq: f64 = (k + 1..n).map(|i| a[i][k] * a[i][k]).sum();
        let alpha_norm = alpha_sq.sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = a[k + 1][k];
        let alpha = if x0 >= 0.0 { -alpha_norm } else { alpha_norm };
        for i in k + 1..n {
            v[i] = a[i][k];
        }
        v[k + 1] -= alpha;
        let vnorm_sq: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm_sq;
        // A ← (I − β v vᵀ) A
        for j in 0..n {
            let s: f64 = (k + 1..n).map(|i| v[i] * a[i][j]).sum();
            let s = beta * s;
            for i in k + 1..n {
                a[i][j] -= s * v[i];
            }
        }
        // A ← A (I − β v vᵀ)
        for row in a.iter_mut() {
            let s: f64 = (k + 1..n).map(|j| row[j] * v[j]).sum();
            let s = beta * s;
            for j in k + 1..n {
                row[j] -= s * v[j];
            }
        }
        a[k + 1][k] = alpha;
        for row in a.iter_mut().skip(k + 2) {
            row[k] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, with exceptional
/// shifts every ten sweeps on a stalled block.
fn hqr(a: &mut [Vec<f64>]) -> Result<Vec<Complex64>> {
    let n = a.len();
    let eps = f64::EPSILON;
    let mut wr = vec![Complex64::new(0.0, 0.0); n];
    let mut anorm = 0.0;
    for (i, row) in a.iter().enumerate() {
        for v in row.iter().skip(i.saturating_sub(1)) {
            anorm += v.abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nnu = nn as usize;
            // look for a single small subdiagonal element
            let mut l = nnu;
            while l > 0 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() <= eps * s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nnu][nnu];
            if l == nnu {
                wr[nnu] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[nnu - 1][nnu - 1];
            let mut w = a[nnu][nnu - 1] * a[nnu - 1][nnu];
            if l + 1 == nnu {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nnu - 1] = Complex64::new(x + z, 0.0);
                    wr[nnu] = Complex64::new(if z != 0.0 { x - w / z } else { x + z }, 0.0);
                } else {
                    wr[nnu] = Complex64::new(x + p, -z);
                    wr[nnu - 1] = Complex64::new(x + p, z);
                }
                nn -= 2;
                break;
            }
            if its >= MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::EigenNonConvergence { iterations: its, dim: n });
            }
            if its > 0 && its.is_multiple_of(10) {
                t += x;
                for (i, row) in a.iter_mut().enumerate().take(nnu + 1) {
                    row[i] -= x;
                }
                let s = a[nnu][nnu - 1].abs() + a[nnu - 1][nnu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = nnu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nnu - 1 {
                a[i + 2][i] = 0.0;
                if i != m {
                    a[i + 2][i - 1] = 0.0;
                }
            }
            // double-shift QR sweep on rows l..=nn, columns m..=nn
            let mut k = m;
            while k < nnu {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k + 1 != nnu { a[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nnu {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k + 1 != nnu {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        let mut pp = x * row[k] + y * row[k + 1];
                        if k + 1 != nnu {
                            pp += z * row[k + 2];
                            row[k + 2] -= pp * r;
                        }
                        row[k + 1] -= pp * q;
                        row[k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr)
}

/// `min ‖Mw − ξw‖` over the vector `w` (unit norm) produced by two steps of
/// inverse iteration with a slightly perturbed shift.
pub fn eigen_residual(mat: &DMatrix<f64>, xi: Complex64) -> f64 {
    let n = mat.nrows();
    if n == 0 {
        return 0.0;
    }
    let scale = mat.norm().max(f64::MIN_POSITIVE);
    let shift = xi + Complex64::new(scale * 1e-10, scale * 1e-10);
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { shift } else { Complex64::new(0.0, 0.0) };
        Complex64::new(mat[(i, j)], 0.0) - d
    });
    let lu = shifted.lu();
    let mut w = nalgebra::DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64) * 0.37, 0.5));
    for _ in 0..3 {
        match lu.solve(&w) {
            Some(next) => {
                let nrm = next.norm();
                if !(nrm.is_finite() && nrm > 0.0) {
                    break;
                }
                w = next / Complex64::new(nrm, 0.0);
            }
            None => break,
        }
    }
    let nrm = w.norm();
    let w = w / Complex64::new(nrm, 0.0);
    let mc = mat.map(|v| Complex64::new(v, 0.0));
    (mc * &w - &w * xi).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, re: f64, im: f64, tol: f64) -> bool {
        (a.re - re).abs() <= tol && (a.im - im).abs() <= tol
    }

    #[test]
    fn identity() {
        let e = eigenvalues(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.iter().all(|z| close(*z, 1.0, 0.0, 1e-14)));
    }

    #[test]
    fn rotation_generator() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = eigenvalues(&m).unwrap();
        assert!(close(e[0], 0.0, 1.0, 1e-14));
        assert!(close(e[1], 0.0, -1.0, 1e-14));
    }

    #[test]
    fn damped_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, 0.5, -1.0]);
        let e = eigenvalues(&m).unwrap();
        assert!(close(e[0], -1.0, 0.5, 1e-14));
        assert!(close(e[1], -1.0, -0.5, 1e-14));
    }

    #[test]
    fn triangular_and_defective() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 5.0, 0.0, 2.0, -3.0, 0.0, 0.0, -4.0]);
        let e = eigenvalues(&m).unwrap();
        assert!(close(e[0], 2.0, 0.0, 1e-7));
        assert!(close(e[1], 2.0, 0.0, 1e-7));
        assert!(close(e[2], -4.0, 0.0, 1e-12));
    }

    #[test]
    fn zero_and_empty() {
        assert!(eigenvalues(&DMatrix::<f64>::zeros(0, 0)).unwrap().is_empty());
        let e = eigenvalues(&DMatrix::zeros(4, 4)).unwrap();
        assert!(e.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(eigenvalues(&DMatrix::zeros(2, 3)).is_err());
        assert!(eigenvalues(&DMatrix::zeros(257, 257)).is_err());
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(eigenvalues(&m).is_err());
    }

    #[test]
    fn badly_scaled_matrix_is_balanced() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1e8, 0.0, 1e-8, 1.0, 1e8, 0.0, 1e-8, 1.0]);
        let e = eigenvalues(&m).unwrap();
        let trace: f64 = e.iter().map(|z| z.re).sum();
        assert!((trace - 3.0).abs() < 1e-10);
    }
}
