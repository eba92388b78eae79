//! Small dense containers generic over [`Scalar`], plus Gauss-Jordan
//! inversion with pivoting on the real part. Used where derivative-carrying
//! matrix algebra is needed (nalgebra stays the workhorse for plain `f64`).

use crate::dual::Scalar;

/// Row-major square matrix over a generic scalar.
#[derive(Debug, Clone)]
pub struct SquareMat<S> {
    pub dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> SquareMat<S> {
    pub fn zeros(dim: usize) -> Self {
        SquareMat {
            dim,
            data: vec![S::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting on |re|.
    /// Returns `None` when a pivot falls below `tol` in magnitude.
    pub fn inverse(&self, tol: f64) -> Option<SquareMat<S>> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .re()
                        .abs()
                        .partial_cmp(&a[(j, col)].re().abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a[(pivot_row, col)].re().abs() <= tol {
                return None;
            }
            if pivot_row != col {
                for k in 0..n {
                    a.data.swap(pivot_row * n + k, col * n + k);
                    inv.data.swap(pivot_row * n + k, col * n + k);
                }
            }
            let pivot = a[(col, col)];
            let pivot_inv = S::one() / pivot;
            for k in 0..n {
                a[(col, k)] = a[(col, k)] * pivot_inv;
                inv[(col, k)] = inv[(col, k)] * pivot_inv;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[(row, col)];
                for k in 0..n {
                    a[(row, k)] = a[(row, k)] - factor * a[(col, k)];
                    inv[(row, k)] = inv[(row, k)] - factor * inv[(col, k)];
                }
            }
        }
        Some(inv)
    }

    /// Determinant via LU with partial pivoting on |re|.
    pub fn det(&self) -> S {
        let n = self.dim;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)]
                        .re()
                        .abs()
                        .partial_cmp(&a[(j, col)].re().abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            if a[(pivot_row, col)].re() == 0.0 {
                return S::zero();
            }
            if pivot_row != col {
                for k in 0..n {
                    a.data.swap(pivot_row * n + k, col * n + k);
                }
                det = -det;
            }
            let pivot = a[(col, col)];
            det = det * pivot;
            let pivot_inv = S::one() / pivot;
            for row in (col + 1)..n {
                let factor = a[(row, col)] * pivot_inv;
                for k in col..n {
                    a[(row, k)] = a[(row, k)] - factor * a[(col, k)];
                }
            }
        }
        det
    }
}

impl<S> std::ops::Index<(usize, usize)> for SquareMat<S> {
    type Output = S;
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.dim + c]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for SquareMat<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.dim + c]
    }
}

/// Rank-3 array indexed `[c][a][b]`, symmetric storage left to the caller.
#[derive(Debug, Clone)]
pub struct Rank3<S> {
    pub dim: usize,
    data: Vec<S>,
}

impl<S: Scalar> Rank3<S> {
    pub fn zeros(dim: usize) -> Self {
        Rank3 {
            dim,
            data: vec![S::zero(); dim * dim * dim],
        }
    }
}

impl<S> std::ops::Index<(usize, usize, usize)> for Rank3<S> {
    type Output = S;
    fn index(&self, (c, a, b): (usize, usize, usize)) -> &S {
        &self.data[(c * self.dim + a) * self.dim + b]
    }
}

impl<S> std::ops::IndexMut<(usize, usize, usize)> for Rank3<S> {
    fn index_mut(&mut self, (c, a, b): (usize, usize, usize)) -> &mut S {
        &mut self.data[(c * self.dim + a) * self.dim + b]
    }
}

/// Rank-4 array indexed `[d][a][b][c]`.
#[derive(Debug, Clone)]
pub struct Rank4 {
    pub dim: usize,
    data: Vec<f64>,
}

impl Rank4 {
    pub fn zeros(dim: usize) -> Self {
        Rank4 {
            dim,
            data: vec![0.0; dim * dim * dim * dim],
        }
    }
}

impl std::ops::Index<(usize, usize, usize, usize)> for Rank4 {
    type Output = f64;
    fn index(&self, (d, a, b, c): (usize, usize, usize, usize)) -> &f64 {
        &self.data[((d * self.dim + a) * self.dim + b) * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize, usize, usize)> for Rank4 {
    fn index_mut(&mut self, (d, a, b, c): (usize, usize, usize, usize)) -> &mut f64 {
        &mut self.data[((d * self.dim + a) * self.dim + b) * self.dim + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_lorentz_block() {
        // [[0,1],[1,0]] is its own inverse.
        let mut m = SquareMat::<f64>::zeros(2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let inv = m.inverse(1e-14).unwrap();
        assert_eq!(inv[(0, 1)], 1.0);
        assert_eq!(inv[(1, 0)], 1.0);
        assert_eq!(inv[(0, 0)], 0.0);
    }

    #[test]
    fn det_matches_rule_of_sarrus() {
        let mut m = SquareMat::<f64>::zeros(3);
        let vals = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 1.0]];
        for r in 0..3 {
            for c in 0..3 {
                m[(r, c)] = vals[r][c];
            }
        }
        assert!((m.det() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = SquareMat::<f64>::zeros(2);
        assert!(m.inverse(1e-14).is_none());
    }
}
