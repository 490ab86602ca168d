//! Small dense symmetric linear algebra (row-major `n x n` slices).
//!
//! Every matrix handled here is at most a dozen rows wide: Hessians of the
//! likelihoods and normal equations of the ARCH-LM regression.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Returns `None` when the matrix is not numerically positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn forward_back(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let l = cholesky(a, n)?;
    let mut x = b.to_vec();
    forward_back(&l, n, &mut x);
    Some(x)
}

/// Inverse of a symmetric positive definite matrix.
pub fn inverse_spd(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        forward_back(&l, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Some(inv)
}

/// Ordinary least squares of `y` on the columns of `x` (row-major, `k`
/// regressors per row). Returns the coefficients and the centred R².
pub fn ols(x: &[f64], k: usize, y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    debug_assert_eq!(x.len(), n * k);
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for (row, &yi) in x.chunks_exact(k).zip(y) {
        for i in 0..k {
            xty[i] += row[i] * yi;
            for j in 0..=i {
                xtx[i * k + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[j * k + i] = xtx[i * k + j];
        }
    }
    let coef = solve_spd(&xtx, k, &xty)?;
    let mean = y.iter().sum::<f64>() / n as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (row, &yi) in x.chunks_exact(k).zip(y) {
        let fit: f64 = row.iter().zip(&coef).map(|(a, b)| a * b).sum();
        ss_res += (yi - fit).powi(2);
        ss_tot += (yi - mean).powi(2);
    }
    if ss_tot <= 0.0 {
        return None;
    }
    Some((coef, 1.0 - ss_res / ss_tot))
}
