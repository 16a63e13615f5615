//! Dense complex linear algebra: Hermitian eigendecomposition, SVD, PSD-cone
//! projection and least squares. Sized for the small matrices (at most a few
//! dozen rows) that the estimators produce.

mod eig;
mod lstsq;
mod matrix;
mod svd;

pub(crate) use eig::project_from_eig;
pub use eig::{hermitian_eig, hermitian_eig_warm, psd_project, EigResult, DEFAULT_TOL};
pub use lstsq::{cholesky, lstsq};
pub use matrix::{dot, norm, ComplexMatrix};
pub use svd::{complete_basis, svd, Svd};
