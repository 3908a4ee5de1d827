//! Effective Hamiltonians for Raman-driven trapped ions.
//!
//! The engine decomposes the interaction-picture evolution operator of a
//! laser-driven three-level ion as
//!
//! ```text
//! T(λ;t) = exp(−i Z(λ;t)) · exp(−i C(λ) t) · exp(+i Z(λ;0))
//! ```
//!
//! where `C` is time-independent (it carries every secular term) and `Z(t)`
//! is a zero-mean operator-valued trigonometric polynomial (the "dynamical
//! dressing"). Both are computed order by order in the perturbative
//! parameter λ = g/Δ, up to second order, where the closed-form solutions
//! reproduce the AC Stark shifts and the effective two-photon coupling of
//! the Λ scheme. An independent midpoint-exponential propagator provides
//! exact benchmarks on the same truncated spaces.
//!
//! Modules:
//! - [`hilbert`]: dense operators on the (atom) ⊗ (Fock modes) space,
//!   matrix exponential, interior projections.
//! - [`trigpoly`]: exact algebra of operator-valued trigonometric
//!   polynomials over integer combinations of base frequencies.
//! - [`perturb`]: the gauge-fixed C/Z recursion and the assembled
//!   evolution operators.
//! - [`raman`]: builders for the trapped-ion Λ-Raman model and the analytic
//!   second-order effective model.
//! - [`propagate`]: exact benchmark propagation, fidelities, populations.
//! - [`cli`]: run-configuration ingestion and result emission for the
//!   `effham` binary.

pub mod cli;
pub mod error;
pub mod hilbert;
pub mod perturb;
pub mod propagate;
pub mod raman;
pub mod trigpoly;

pub use error::{Error, Result};
pub use hilbert::{Operator, SpaceSpec};
pub use num_complex::Complex64 as C64;
