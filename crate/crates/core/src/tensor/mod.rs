//! Dense linear algebra over labeled tensor-product spaces.

pub mod json;
mod layout;
mod linalg;
mod operator;
pub mod random;
mod state;

pub use layout::{SystemLabel, SystemLayout};
pub use linalg::{eig_hermitian, frobenius, hermiticity_defect, identity, kron, CMatrix, CVector, HermitianEigen, C64};
pub use operator::LinearOperator;
pub use state::{DensityOperator, Ket, RANK_CUTOFF, STATE_TOL};

pub(crate) use layout::axis_permutation;
pub(crate) use linalg::{
    clamped_spectrum, eigh, fix_phase, hermitian_trace_norm, left_apply, polar_unitary, qr_isometry, ONE, ZERO,
};
