//! Dense symmetric positive-definite solves for the ridge fit.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Solves `a · x = b` for SPD `a` (`n`×`n`, row-major) and `k` right-hand
/// sides stored row-major in `b` (`n`×`k`). Returns `x` (`n`×`k`).
pub(crate) fn cholesky_solve(a: &[f64], n: usize, b: &[f64], k: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n * k);
    // lower factor l with a = l lᵀ
    let mut l = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for p in 0..j {
                sum -= l[i * n + p] * l[j * n + p];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return Err(Error::Singular);
                }
                l[i * n + i] = math::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut x = b.to_vec();
    for c in 0..k {
        for i in 0..n {
            let mut sum = x[i * k + c];
            for p in 0..i {
                sum -= l[i * n + p] * x[p * k + c];
            }
            x[i * k + c] = sum / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut sum = x[i * k + c];
            for p in i + 1..n {
                sum -= l[p * n + i] * x[p * k + c];
            }
            x[i * k + c] = sum / l[i * n + i];
        }
    }
    Ok(x)
}
