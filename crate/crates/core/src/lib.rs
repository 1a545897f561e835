//! Numerics for the semilinear heat equation
//! `u_t - u_xx + V u = <x>^{-m} u^p` on the line, where `V = psi''/psi` is
//! generated by the ground state `psi = <x>^alpha`.
//!
//! Most work happens in the harmonic variable `u_* = u / psi`, which turns the
//! operator `L = -d^2 + V` into the weighted divergence form
//! `psi^-2 (psi^2 u_*')'`.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod exponent;
pub mod fit;
pub mod flux;
pub mod grid;
pub mod inequalities;
pub mod par;
pub mod plot;
pub mod profile;
pub mod quad;
pub mod semigroup;
pub mod testfn;
pub mod solver;
pub mod sweep;
pub mod tridiag;

pub use config::{Schedule, SimConfig};
pub use error::{Error, Result};
pub use exponent::{alpha_star, critical_exponent, regime_classify, Branch, ExponentResult, Regime};
pub use grid::{quadratic_form, weighted_norms, Field, Grid, Norms};
pub use par::Execution;
pub use profile::{bracket, make_profile, PotentialProfile};
