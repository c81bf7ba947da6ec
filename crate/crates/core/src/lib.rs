//! Numerical toolkit for the divisor sum `Σ τ_k(n_1^r + … + n_ℓ^r + n_{ℓ+1}^s)`
//! and the circle-method objects that predict its asymptotics.
//!
//! * [`divisor`]: exact `τ_k` values, sieves and moments.
//! * [`expsum`]: Weyl sums, divisor-weighted sums, Gauss sums, oscillatory
//!   profiles and the Farey dissection into major and minor arcs.
//! * [`coeff`]: regression of the major-arc coefficients `A_j(q)`.
//! * [`main_term`]: singular series, singular integral and the predicted main term.
//! * [`delta`]: the power-saving exponent and its case analysis.
//! * [`harness`]: brute-force left-hand side, moment and Parseval checks, and
//!   the end-to-end comparison.

pub mod arith;
pub mod coeff;
pub mod delta;
pub mod divisor;
pub mod error;
pub mod expsum;
pub mod harness;
pub mod main_term;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex values of exponential sums and integrals.
pub type ComplexValue = Complex64;
