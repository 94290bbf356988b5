use std::cmp::Ordering;

use crate::error::SolveError;
use crate::scalar::Scalar;

/// Solves `a x = b` by Gaussian elimination with row pivoting.
///
/// Exact scalars pivot on the first nonzero entry; floats on the largest.
pub fn solve<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>, SolveError> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(SolveError::Invalid(
            "matrix and right-hand side sizes differ".into(),
        ));
    }
    for col in 0..n {
        let pivot = if S::EXACT {
            (col..n).find(|&r| !a[r][col].is_zero())
        } else {
            (col..n)
                .max_by(|&r, &s| a[r][col].abs_value().compare(&a[s][col].abs_value()))
                .filter(|&r| !a[r][col].is_zero())
        };
        let pivot = pivot.ok_or(SolveError::Singular)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / a[col][col].clone();
            for k in col..n {
                let delta = factor.clone() * a[col][k].clone();
                a[r][k] = a[r][k].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[r] = b[r].clone() - delta;
        }
    }
    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * x[k].clone();
        }
        x[row] = acc / a[row][row].clone();
    }
    Ok(x)
}

/// Residual check: `max |a x - b|` compared against zero.
pub fn residual_is_zero<S: Scalar>(a: &[Vec<S>], x: &[S], b: &[S]) -> bool {
    a.iter().zip(b).all(|(row, bi)| {
        let lhs = row
            .iter()
            .zip(x)
            .fold(S::zero(), |acc, (aij, xj)| acc + aij.clone() * xj.clone());
        lhs.compare(bi) == Ordering::Equal
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Exact, Float};

    fn q(n: i64, d: i64) -> Exact {
        Exact::new(n.into(), d.into())
    }

    #[test]
    fn exact_three_by_three() {
        let a = vec![
            vec![q(0, 1), q(2, 1), q(1, 1)],
            vec![q(1, 1), q(1, 1), q(0, 1)],
            vec![q(1, 2), q(0, 1), q(3, 1)],
        ];
        let b = vec![q(3, 1), q(2, 1), q(7, 2)];
        let x = solve(a.clone(), b.clone()).unwrap();
        assert_eq!(x, vec![q(1, 1), q(1, 1), q(1, 1)]);
        assert!(residual_is_zero(&a, &x, &b));
    }

    #[test]
    fn singular_is_reported() {
        let a = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        assert_eq!(solve(a, vec![q(1, 1), q(2, 1)]), Err(SolveError::Singular));
    }

    #[test]
    fn float_pivoting() {
        let a = vec![vec![Float(1e-12), Float(1.0)], vec![Float(1.0), Float(1.0)]];
        let x = solve(a, vec![Float(1.0), Float(2.0)]).unwrap();
        assert!((x[0].0 - 1.0).abs() < 1e-9 && (x[1].0 - 1.0).abs() < 1e-9);
    }
}
