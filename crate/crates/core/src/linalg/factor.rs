use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails with `NumericFailure` unless `m` is numerically positive definite.
    pub fn new(m: &Matrix<T>) -> Result<Self> {
        let n = m.rows();
        if !m.is_square() {
            return Err(Error::DimensionMismatch("cholesky of non-square matrix".into()));
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NumericFailure(format!(
                    "matrix not positive definite (pivot {j} = {d})"
                )));
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn log_det(&self) -> T {
        (0..self.l.rows()).map(|i| self.l[(i, i)].ln()).sum::<T>() * T::lit(2.0)
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let v = self.l[(i, k)] * y[k];
                y[i] -= v;
            }
            y[i] /= self.l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = self.l[(k, i)] * y[k];
                y[i] -= v;
            }
            y[i] /= self.l[(i, i)];
        }
        y
    }

    /// `M⁻¹`, symmetric.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve_vec(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetric_part()
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "lu_solve: {}x{} system with rhs of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.max_abs().max(T::min_positive_value());
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().partial_cmp(&m[(j, col)].abs()).expect("finite"))
            .expect("nonempty");
        if m[(piv, col)].abs() <= T::epsilon() * scale * T::lit(n as f64) {
            return Err(Error::NumericFailure("singular linear system".into()));
        }
        if piv != col {
            for k in 0..n {
                let tmp = m[(col, k)];
                m[(col, k)] = m[(piv, k)];
                m[(piv, k)] = tmp;
            }
            x.swap(col, piv);
        }
        for i in (col + 1)..n {
            let f = m[(i, col)] / m[(col, col)];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = m[(col, k)];
                m[(i, k)] -= f * v;
            }
            let v = x[col];
            x[i] -= f * v;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= m[(i, k)] * x[k];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Inverse of a square matrix via repeated `lu_solve`.
pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = lu_solve(a, &e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}
