//! Small dense linear algebra used by the solver and the diagnostics:
//! LU solves with partial pivoting, explicit inversion, and a cyclic
//! Jacobi eigensolver for small symmetric matrices. Matrices are flat
//! row-major `Vec<f64>` buffers; all dimensions here are small (the
//! simplex basis is n×n, eigenproblems are k×k submatrices).

use crate::error::{Error, Result};

/// Solves A x = b in place (`b` becomes `x`) by LU with partial
/// pivoting. `a` is destroyed. Dimension is `n`, row-major.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best < 1e-300 {
            return Err(Error::Singular {
                context: "LU factorization",
            });
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        let akk = a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / akk;
            if f != 0.0 {
                for j in (k + 1)..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                b[i] -= f * b[k];
            }
            a[i * n + k] = 0.0;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..n {
            s -= a[k * n + j] * b[j];
        }
        b[k] = s / a[k * n + k];
    }
    Ok(())
}

/// Inverts `a` (n×n row-major) by Gauss-Jordan with partial pivoting,
/// returning the inverse as a new buffer.
pub fn invert(a: &[f64], n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k * n + k].abs();
        for i in (k + 1)..n {
            let v = m[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best < 1e-300 {
            return Err(Error::Singular {
                context: "Gauss-Jordan inversion",
            });
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
                inv.swap(k * n + j, piv * n + j);
            }
        }
        let d = m[k * n + k];
        for j in 0..n {
            m[k * n + j] /= d;
            inv[k * n + j] /= d;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = m[i * n + k];
            if f != 0.0 {
                for j in 0..n {
                    m[i * n + j] -= f * m[k * n + j];
                    inv[i * n + j] -= f * inv[k * n + j];
                }
            }
        }
    }
    Ok(inv)
}

/// All eigenvalues of a symmetric k×k matrix (row-major) by cyclic
/// Jacobi rotations. Returns them in ascending order.
pub fn symmetric_eigenvalues(a: &[f64], k: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), k * k);
    if k == 0 {
        return Vec::new();
    }
    if k == 1 {
        return vec![a[0]];
    }
    let mut m = a.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                off = off.max(m[i * k + j].abs());
            }
        }
        if off <= tol {
            break;
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let apq = m[i * k + j];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m[i * k + i];
                let aqq = m[j * k + j];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for l in 0..k {
                    let mil = m[i * k + l];
                    let mjl = m[j * k + l];
                    m[i * k + l] = c * mil - s * mjl;
                    m[j * k + l] = s * mil + c * mjl;
                }
                for l in 0..k {
                    let mli = m[l * k + i];
                    let mlj = m[l * k + j];
                    m[l * k + i] = c * mli - s * mlj;
                    m[l * k + j] = s * mli + c * mlj;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..k).map(|i| m[i * k + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}
