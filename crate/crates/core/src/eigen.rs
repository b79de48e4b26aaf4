//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;
const MAX_SWEEPS: usize = 100;

/// Extreme eigenvalues of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Jacobi sweeps until the off-diagonal part vanished.
    pub iterations: usize,
    /// max of ‖A·v − λ·v‖ over the two extreme unit eigenvectors.
    pub residual: f64,
}

impl EigenPair {
    /// max(λ_max, −λ_min).
    pub fn spectral_radius(&self) -> f64 {
        self.lambda_max.max(-self.lambda_min)
    }
}

/// One cyclic sweep pass until convergence. `a` is row-major `n × n` and is
/// overwritten; eigenvalues end up on its diagonal. Rotations are accumulated
/// into `v` when given.
fn jacobi_in_place(a: &mut [f64], n: usize, mut v: Option<&mut [f64]>) -> Option<usize> {
    if let Some(v) = v.as_deref_mut() {
        v.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return Some(0);
    }
    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= 1e-17 * frob {
            return Some(sweep);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    None
}

/// (λ_min, λ_max) of a symmetric row-major matrix, eigenvalues only.
///
/// Used on the hot enumeration path; the caller guarantees symmetry.
pub fn extreme_eigenvalues(a: &mut [f64], n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    // Convergence failure is not reachable for symmetric input of this size.
    jacobi_in_place(a, n, None).expect("Jacobi failed on a small symmetric matrix");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(a[i * n + i]);
        hi = hi.max(a[i * n + i]);
    }
    (lo, hi)
}

/// Extreme eigenpairs of a small symmetric integer matrix, with a residual
/// check on both extreme eigenvectors.
pub fn extreme_eigs(m: &[Vec<i64>], tol: f64) -> Result<EigenPair> {
    let n = m.len();
    if n > MAX_DIM {
        return Err(Error::TooLarge {
            dim: n,
            limit: MAX_DIM,
        });
    }
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::NotSymmetric);
    }
    for i in 0..n {
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(Error::NotSymmetric);
            }
        }
    }
    if n == 0 {
        return Ok(EigenPair {
            lambda_min: 0.0,
            lambda_max: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let orig: Vec<f64> = m.iter().flatten().map(|&x| x as f64).collect();
    let mut a = orig.clone();
    let mut v = vec![0.0; n * n];
    let sweeps = jacobi_in_place(&mut a, n, Some(&mut v)).ok_or(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        residual: f64::NAN,
    })?;
    let (mut imin, mut imax) = (0, 0);
    for i in 1..n {
        if a[i * n + i] < a[imin * n + imin] {
            imin = i;
        }
        if a[i * n + i] > a[imax * n + imax] {
            imax = i;
        }
    }
    let residual_of = |col: usize, lambda: f64| -> f64 {
        let norm: f64 = (0..n).map(|k| v[k * n + col].powi(2)).sum::<f64>().sqrt();
        let r: f64 = (0..n)
            .map(|i| {
                let av: f64 = (0..n).map(|k| orig[i * n + k] * v[k * n + col]).sum();
                (av - lambda * v[i * n + col]).powi(2)
            })
            .sum::<f64>()
            .sqrt();
        r / norm
    };
    let lambda_min = a[imin * n + imin];
    let lambda_max = a[imax * n + imax];
    let residual = residual_of(imin, lambda_min).max(residual_of(imax, lambda_max));
    if residual > tol {
        return Err(Error::NoConvergence { sweeps, residual });
    }
    Ok(EigenPair {
        lambda_min,
        lambda_max,
        iterations: sweeps,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_matrix() {
        let e = extreme_eigs(&vec![vec![0; 3]; 3], 1e-12).unwrap();
        assert_eq!((e.lambda_min, e.lambda_max), (0.0, 0.0));
    }

    #[test]
    fn exchange_matrix() {
        let e = extreme_eigs(&[vec![0, 1], vec![1, 0]], 1e-12).unwrap();
        assert!((e.lambda_min + 1.0).abs() < 1e-12);
        assert!((e.lambda_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_ones_off_diagonal() {
        // J − I on three vertices
        let m = vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
        let e = extreme_eigs(&m, 1e-12).unwrap();
        assert!((e.lambda_min + 1.0).abs() < 1e-12);
        assert!((e.lambda_max - 2.0).abs() < 1e-12);
        assert!(e.residual <= 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            extreme_eigs(&[vec![0, 1], vec![2, 0]], 1e-12).unwrap_err(),
            Error::NotSymmetric
        );
        assert!(matches!(
            extreme_eigs(&vec![vec![0; 65]; 65], 1e-12),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let m: Vec<Vec<i64>> = (0..12)
            .map(|i| (0..12).map(|j| if i == j { 0 } else if (i * j) % 3 == 1 { 1 } else { -1 }).collect())
            .collect();
        assert_eq!(extreme_eigs(&m, 1e-12).unwrap(), extreme_eigs(&m, 1e-12).unwrap());
    }

    proptest! {
        #[test]
        fn matches_nalgebra(n in 1usize..20, entries in proptest::collection::vec(-3i64..=3, 400)) {
            let mut m = vec![vec![0i64; n]; n];
            for i in 0..n {
                for j in 0..=i {
                    let x = entries[i * 20 + j];
                    m[i][j] = x;
                    m[j][i] = x;
                }
            }
            let e = extreme_eigs(&m, 1e-10).unwrap();
            let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j] as f64);
            let ev = dm.symmetric_eigenvalues();
            let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((e.lambda_min - lo).abs() < 1e-9);
            prop_assert!((e.lambda_max - hi).abs() < 1e-9);
        }
    }
}
