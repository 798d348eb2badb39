//! Time-local projected dynamics for finite-dimensional open systems.
//!
//! The crate builds reduced descriptions of a master equation
//! `d rho/dt = lambda L(t) rho` around a (possibly time-dependent, possibly
//! nonlinear) projection of the state space onto a family of relevant
//! observables. It provides:
//!
//! - dense complex linear algebra for operators and superoperators,
//!   including an oblique restricted inverse ([`linalg`]);
//! - generator constructors for commutator and GKSL-type dissipative terms,
//!   and interaction-picture conjugation ([`models`]);
//! - adaptive propagation of the full dynamics together with the iterated
//!   time-ordered integrals of the generator ([`propagator`]);
//! - ansatz families (exponential, power-law, linear, and explicit two-level
//!   forms) consistent with a set of relevant observables ([`ansatz`]);
//! - projection superoperators built from those families, including the
//!   nonlinear construction that follows the mean values along a state
//!   trajectory ([`projectors`]);
//! - exact and perturbative kinetic coefficients of the time-local reduced
//!   equation ([`tcl`]);
//! - closed mean-value dynamics to first and second order in the coupling
//!   ([`kg_dynamics`]);
//! - reproduction experiments with independent reference trajectories and
//!   asymptotic-order fits ([`experiments`]);
//! - a machine-checkable map from the documented formula inventory to
//!   operations and tests ([`feature_map`]).
//!
//! With the default `parallel` feature the embarrassingly parallel loops
//! (per-node coefficient assembly, sweep members, sample batches) run on
//! rayon; without it the same code paths run sequentially.

pub mod ansatz;
pub mod error;
pub mod experiments;
pub mod kg_dynamics;
pub mod linalg;
pub mod models;
pub mod ode;
pub mod par;
pub mod projectors;
pub mod propagator;
pub mod tcl;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
