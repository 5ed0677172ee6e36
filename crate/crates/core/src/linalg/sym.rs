use std::fmt;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense real symmetric matrix. Symmetry is exact: the constructor mirrors the
/// upper triangle after checking the input is symmetric to rounding.
#[derive(Clone, PartialEq)]
pub struct SymMatrix<T> {
    inner: Matrix<T>,
}

/// Eigenvalue signature of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Inertia {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.neg + self.zero + self.pos
    }

    /// Inertia `(p, 0, n - p)` required of a dominance storage.
    pub fn dominance(p: usize, n: usize) -> Self {
        Self {
            neg: p,
            zero: 0,
            pos: n - p,
        }
    }
}

impl fmt::Display for Inertia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.neg, self.zero, self.pos)
    }
}

/// Ascending eigenvalues with matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Accepts `m` if it is square and symmetric up to `1e-10·(1 + max|m_ij|)`.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square and nonempty, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let tol = T::lit(1e-10) * (T::one() + m.max_abs());
        for i in 0..m.rows() {
            for j in (i + 1)..m.cols() {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::from_symmetric_part(&m))
    }

    /// Symmetric part `(m + mᵀ)/2` of any square matrix.
    pub fn from_symmetric_part(m: &Matrix<T>) -> Self {
        Self {
            inner: m.symmetric_part(),
        }
    }

    pub fn from_f64_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_f64_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: Matrix::identity(n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            inner: Matrix::zeros(n, n),
        }
    }

    pub fn from_diag(d: &[T]) -> Self {
        Self {
            inner: Matrix::from_diag(d),
        }
    }

    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.inner[(i, j)]
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            inner: self.inner.scale(s),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            inner: self.inner.add(&rhs.inner),
        }
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        let mx = self.inner.matvec(x);
        x.iter().zip(&mx).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    /// `Sᵀ M S` (congruence).
    pub fn congruence(&self, s: &Matrix<T>) -> Self {
        Self::from_symmetric_part(&s.transpose().matmul(&self.inner).matmul(s))
    }

    pub fn block_diag(blocks: &[&Self]) -> Self {
        let mats: Vec<&Matrix<T>> = blocks.iter().map(|b| &b.inner).collect();
        Self {
            inner: Matrix::block_diag(&mats),
        }
    }

    pub fn cast<U: Scalar>(&self) -> SymMatrix<U> {
        SymMatrix {
            inner: self.inner.cast(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for SymMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym{:?}", self.inner)
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen<T: Scalar>(m: &SymMatrix<T>) -> Result<SymEigen<T>> {
    let n = m.n();
    if !m.inner.is_finite() {
        return Err(Error::InvalidInput("sym_eigen: non-finite matrix entry".into()));
    }
    let mut a = m.inner.clone();
    let mut v = Matrix::identity(n);
    let total = a.frob_norm();
    let target = (T::epsilon() * total).powi(2);

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: T = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off <= target || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (theta * theta + T::one()).sqrt())
                } else {
                    -T::one() / (-theta + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            algorithm: "Jacobi eigenvalue sweep",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).expect("finite"));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// Default zero threshold for inertia counts: `n·‖M‖∞·1e-9`.
pub fn default_zero_tol<T: Scalar>(m: &SymMatrix<T>) -> T {
    T::lit(m.n() as f64) * m.inner.norm_inf() * T::lit(1e-9)
}

pub fn inertia_of<T: Scalar>(m: &SymMatrix<T>, zero_tol: T) -> Result<Inertia> {
    if zero_tol < T::zero() {
        return Err(Error::InvalidInput("zero_tol must be nonnegative".into()));
    }
    let eig = sym_eigen(m)?;
    let mut inertia = Inertia {
        neg: 0,
        zero: 0,
        pos: 0,
    };
    for &l in &eig.values {
        if l < -zero_tol {
            inertia.neg += 1;
        } else if l > zero_tol {
            inertia.pos += 1;
        } else {
            inertia.zero += 1;
        }
    }
    Ok(inertia)
}

/// Inertia with the default zero threshold.
pub fn inertia<T: Scalar>(m: &SymMatrix<T>) -> Result<Inertia> {
    inertia_of(m, default_zero_tol(m))
}

pub fn max_eig_sym<T: Scalar>(m: &SymMatrix<T>) -> Result<T> {
    let eig = sym_eigen(m)?;
    Ok(*eig.values.last().expect("n >= 1"))
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm_sym<T: Scalar>(m: &SymMatrix<T>) -> Result<T> {
    let eig = sym_eigen(m)?;
    Ok(eig.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs())))
}
