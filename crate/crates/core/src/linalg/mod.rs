//! Dense real linear algebra.

mod eigen_general;
mod factor;
mod matrix;
mod sym;

pub use eigen_general::{eig_general, Spectrum};
pub use factor::{inverse, lu_solve, Cholesky};
pub use matrix::Matrix;
pub use sym::{
    default_zero_tol, inertia, inertia_of, max_eig_sym, spectral_norm_sym, sym_eigen, Inertia, SymEigen, SymMatrix,
};
