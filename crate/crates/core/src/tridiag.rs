//! Thomas algorithm for tridiagonal systems.
//!
//! Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`;
//! `lower[0]` and `upper[n-1]` are ignored.

use crate::scalar::Scalar;

/// Solves a tridiagonal system in place, overwriting `rhs` with the solution.
///
/// `scratch` must have the same length as `rhs`. No pivoting: the matrix is expected
/// to be diagonally dominant.
pub fn solve_tridiagonal<T: Scalar>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &mut [T],
    scratch: &mut [T],
) {
    let n = rhs.len();
    debug_assert!(lower.len() == n && diag.len() == n && upper.len() == n && scratch.len() == n);
    if n == 0 {
        return;
    }
    let mut denom = diag[0];
    scratch[0] = upper[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = upper[i] / denom;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= scratch[i] * next;
    }
}

/// LU factors of a fixed tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct FactoredTridiagonal<T> {
    lower: Vec<T>,
    upper_mod: Vec<T>,
    inv_denom: Vec<T>,
}

impl<T: Scalar> FactoredTridiagonal<T> {
    pub fn new(lower: &[T], diag: &[T], upper: &[T]) -> Self {
        let n = diag.len();
        let mut upper_mod = vec![T::zero(); n];
        let mut inv_denom = vec![T::zero(); n];
        for i in 0..n {
            let denom = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * upper_mod[i - 1]
            };
            inv_denom[i] = T::one() / denom;
            upper_mod[i] = upper[i] * inv_denom[i];
        }
        Self {
            lower: lower.to_vec(),
            upper_mod,
            inv_denom,
        }
    }

    pub fn len(&self) -> usize {
        self.inv_denom.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_denom.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve(&self, rhs: &mut [T]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        if n == 0 {
            return;
        }
        rhs[0] *= self.inv_denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) * self.inv_denom[i];
        }
        for i in (0..n - 1).rev() {
            let next = rhs[i + 1];
            rhs[i] -= self.upper_mod[i] * next;
        }
    }
}
