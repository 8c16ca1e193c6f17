//! Deciding, bounding and searching for one-shot local protocols that turn a
//! shared seed into a target classical correlation.
//!
//! A seed is either a bipartite pure state (described by its squared Schmidt
//! coefficients), a classical-classical mixed state, or a classical
//! correlation. The crate is organised around five pieces:
//!
//! - [`correlation`]: validated joint distributions and the scalar
//!   information functionals used everywhere else.
//! - [`conditions`]: necessary conditions a pure seed must satisfy, collected
//!   into a [`ConditionReport`](conditions::ConditionReport).
//! - [`factorize`]: diagonal-form PSD factorizations `P(x,y) = tr(C_x D_y)`
//!   with `Σ C_x = Σ D_y = Λ`, computed by alternating convex optimization
//!   and checked exactly.
//! - [`purify`]: Schmidt decompositions and the correspondence between
//!   diagonal-form factorizations and purifications.
//! - [`classical`]: classical seeds, channel extraction from Kraus operators,
//!   and SUBSET-SUM instance builders with an exact oracle.
//!
//! A pure seed with Schmidt coefficients `√λ_i` can produce `P` exactly when
//! `P` admits a diagonal-form factorization with `Λ = diag(√λ_i)`. Finding one
//! is NP-hard in general, so the optimizer is a heuristic: a failed search is
//! reported as "no factorization found", never as infeasibility.

pub mod classical;
pub mod conditions;
pub mod correlation;
mod error;
pub mod factorize;
pub mod linalg;
pub mod purify;

pub use conditions::{ConditionReport, SchmidtSpectrum, Verdict};
pub use correlation::Correlation;
pub use error::{Error, Result};
pub use factorize::{DiagonalPsdFactorization, Lambda};
