//! Exact Gaussian elimination over the rationals.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Solves the square system `a · x = b`, pivoting on the first nonzero entry
/// of each column.
pub fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Result<Vec<Rational>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidMatrix("system is not square".into()));
    }
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::InvalidMatrix(format!("singular system (column {col})")))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Rational::one() / &a[col][col];
        for k in col..n {
            a[col][k] *= &inv;
        }
        b[col] *= &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for k in col..n {
                let delta = &f * &a[col][k];
                a[r][k] -= delta;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    Ok(b)
}

/// Stationary distribution `π P = π`, `Σ π = 1` of an irreducible
/// row-stochastic matrix.
pub fn stationary_distribution(p: &[Vec<Rational>]) -> Result<Vec<Rational>> {
    let n = p.len();
    if n == 0 {
        return Err(Error::InvalidMatrix("empty chain".into()));
    }
    // rows of (P^T - I), last equation replaced by the normalization
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| {
                    let mut x = p[c][r].clone();
                    if r == c {
                        x -= Rational::one();
                    }
                    x
                })
                .collect()
        })
        .collect();
    a[n - 1] = vec![Rational::one(); n];
    let mut b = vec![Rational::zero(); n];
    b[n - 1] = Rational::one();
    solve(a, b)
}
