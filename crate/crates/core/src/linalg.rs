//! Dense-matrix helpers shared by the graph, spectral and stability modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Pivots below this magnitude (relative to `max(1, ‖A‖∞)`) mark a matrix as singular.
pub const SINGULAR_PIVOT: f64 = 1e-10;

/// Infinity norm (maximum absolute row sum).
pub fn norm_inf(a: &Matrix) -> f64 {
    a.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frobenius norm of `A - Aᵀ`; zero iff `a` is exactly symmetric.
pub fn asymmetry(a: &Matrix) -> f64 {
    assert!(a.is_square());
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = a[(i, j)] - a[(j, i)];
            acc += 2.0 * d * d;
        }
    }
    acc.sqrt()
}

/// LU factorization with partial pivoting, `PA = LU`, stored compactly.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        assert!(a.is_square(), "LU of a non-square matrix");
        let n = a.nrows();
        let scale = norm_inf(a).max(1.0);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut max_pivot: f64 = 0.0;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            max_pivot = max_pivot.max(pivot);
            if pivot < SINGULAR_PIVOT * scale {
                return Err(Error::SingularPinnedLaplacian {
                    min_pivot: pivot,
                    pivot_ratio: if max_pivot > 0.0 {
                        pivot / max_pivot
                    } else {
                        0.0
                    },
                });
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let d = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &Vector) -> Vector {
        let n = self.lu.nrows();
        assert_eq!(b.len(), n);
        let mut x = Vector::from_iterator(n, self.perm.iter().map(|&p| b[p]));
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Product of the pivots with the permutation sign.
    pub fn determinant(&self) -> f64 {
        let n = self.lu.nrows();
        let mut det: f64 = (0..n).map(|i| self.lu[(i, i)]).product();
        // parity of the permutation
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
                len += 1;
            }
            if len % 2 == 0 {
                det = -det;
            }
        }
        det
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = Matrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let x = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let b = &a * &x;
        let lu = Lu::new(&a).unwrap();
        assert!((lu.solve(&b) - x).amax() < 1e-14);
        // det = 0*(1-0) - 2*(1-0) + 1*(0-3) = -5
        assert!((lu.determinant() + 5.0).abs() < 1e-12);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        match Lu::new(&a) {
            Err(Error::SingularPinnedLaplacian { min_pivot, .. }) => assert!(min_pivot < 1e-10),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn asymmetry_detects_transpose_mismatch() {
        let s = Matrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert_eq!(asymmetry(&s), 0.0);
        let a = Matrix::from_row_slice(2, 2, &[2.0, -1.0, 0.0, 2.0]);
        assert!(asymmetry(&a) > 1.0);
    }
}
