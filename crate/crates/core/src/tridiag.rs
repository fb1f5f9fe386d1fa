//! Eigen-decomposition of real symmetric tridiagonal matrices by the
//! implicit QL method with Wilkinson shifts.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagEigen<T> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// `rows[r][i]` is component `tracked[r]` of eigenvector `i`.
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> TridiagEigen<T> {
    /// Full eigenvector `i` when every row was tracked.
    pub fn vector(&self, i: usize) -> Vec<T> {
        self.rows.iter().map(|r| r[i]).collect()
    }
}

/// Diagonalizes the tridiagonal matrix with diagonal `diag` and
/// sub-diagonal `off` (`off.len() + 1 == diag.len()`).
///
/// Only the eigenvector components listed in `tracked` are accumulated, so
/// asking for the last row alone (Lanczos residual estimates) costs `O(n^2)`.
/// Returns `None` if an eigenvalue fails to converge in 60 sweeps.
pub fn tridiag_eigen<T: Real>(diag: &[T], off: &[T], tracked: &[usize]) -> Option<TridiagEigen<T>> {
    let n = diag.len();
    assert!(off.len() + 1 == n || (n == 0 && off.is_empty()));
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(T::zero());
    let mut z: Vec<Vec<T>> = tracked
        .iter()
        .map(|&r| (0..n).map(|c| if c == r { T::one() } else { T::zero() }).collect())
        .collect();
    let two = T::of(2.0);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let rows = z.into_iter().map(|row| order.iter().map(|&i| row[i]).collect()).collect();
    Some(TridiagEigen { values, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dense(d: &[f64], e: &[f64]) -> DMatrix<f64> {
        let n = d.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i + 1 == j {
                e[i]
            } else if j + 1 == i {
                e[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_solver() {
        let d = [4.0, -1.0, 2.5, 0.3, 7.0, -3.2];
        let e = [1.0, 0.5, -2.0, 0.01, 1.5];
        let all: Vec<usize> = (0..d.len()).collect();
        let t = tridiag_eigen(&d, &e, &all).unwrap();
        let a = dense(&d, &e);
        let mut reference: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
        reference.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in t.values.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12);
        }
        for i in 0..d.len() {
            let v = nalgebra::DVector::from_vec(t.vector(i));
            let r = &a * &v - &v * t.values[i];
            assert!(r.norm() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tracked_rows_agree_with_full() {
        let d = [1.0, 2.0, 3.0, 4.0];
        let e = [0.5, 0.5, 0.5];
        let full = tridiag_eigen(&d, &e, &[0, 1, 2, 3]).unwrap();
        let last = tridiag_eigen(&d, &e, &[3]).unwrap();
        assert_eq!(full.values, last.values);
        assert_eq!(full.rows[3], last.rows[0]);
    }

    #[test]
    fn decoupled_blocks_and_trivial_sizes() {
        let t = tridiag_eigen(&[2.0, 1.0], &[0.0], &[0, 1]).unwrap();
        assert_eq!(t.values, vec![1.0, 2.0]);
        let t = tridiag_eigen(&[5.0f32], &[], &[0]).unwrap();
        assert_eq!(t.values, vec![5.0]);
    }
}
