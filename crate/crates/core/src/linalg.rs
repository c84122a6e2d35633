//! Dense Gaussian elimination with partial pivoting, generic over [`Scalar`].
//!
//! With `BigRational` the pivot rule only has to find a nonzero entry, but
//! picking the largest magnitude is harmless and keeps one code path.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `a · x = b` for square `a`.
pub fn solve<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col][col].abs_value();
        for row in col + 1..n {
            let mag = a[row][col].abs_value();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best.is_zero() {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let r = col + 1 + offset;
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / pivot_row[col].clone();
            for k in col..n {
                let delta = factor.clone() * pivot_row[k].clone();
                row[k] = row[k].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[r] = b[r].clone() - delta;
        }
    }
    let mut x = alloc::vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * x[k].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Ok(x)
}
