//! Dense complex linear algebra for operators and superoperators.
//!
//! Operators on a d-dimensional Hilbert space are dense `d x d` complex
//! matrices. Superoperators act on column-stacked operators and are stored
//! as dense `d^2 x d^2` matrices; the vectorization convention is fixed
//! here once and shared by every module.

mod expm;
mod matrices;
mod pinv;
mod superop;
mod svd;

pub use expm::{expm, expm_frechet, hermitian_function, hermitian_function_frechet};
pub use matrices::{
    anticommutator, commutator, devectorize, hermiticity_defect, hs_inner, kron, max_abs,
    partial_trace_b, pauli, sigma_minus, sigma_plus, vectorize, HSBasis, CMatrix, CVector, C64,
};
pub use pinv::{restricted_inverse, restricted_inverse_between, RestrictedInverse};
pub use superop::SuperOp;
pub use svd::{range_basis, rank, singular_values};
