//! Ihara zeta functions of finite and periodic simple graphs.
//!
//! The zeta function of a graph X with a free action of a group Γ (trivial,
//! a finite permutation group, or ℤ^d translations with finite quotient) is
//! the Euler product over Γ-classes of prime reduced cycles
//!
//! ```text
//! Z(u) = Π (1 − u^{|C|})^{−1/|Γ_C|},
//! ```
//!
//! equal to exp(Σ N_m u^m/m) where N_m counts reduced closed paths of
//! length m based in a fundamental domain, and to the reciprocal of
//! (1 − u²)^{−χ(B)} det_Γ(I − Au + Qu²), the determinant formula. This
//! crate computes all three — exhaustive cycle enumeration, exact operator
//! recursions, and analytic determinants (dense spectra for finite
//! quotients, Brillouin-zone quadrature of Bloch symbols for lattices) —
//! and cross-checks them exactly where the arithmetic is rational and to
//! stated tolerances where it is floating.
//!
//! Module map:
//! - [`graph`]: simple graphs, ℤ^d-periodic graphs, validation, windows;
//! - [`action`]: free actions, quotients, fundamental domains, Tr_Γ;
//! - [`format`]: the text file format for both graph kinds;
//! - [`cycles`]: the brute-force cycle oracle and Euler products;
//! - [`kernel`]: equivariant kernels and the A_m/t_m/N_m/B_m recursions;
//! - [`series`]: truncated power series and Z(u) = exp(Σ N_m u^m/m);
//! - [`det`]: analytic determinants and the determinant formula;
//! - [`funceq`]: completed zetas and functional equations on Ω;
//! - [`verify`]: the cross-method invariant suite behind `ihara verify`.

pub mod action;
pub mod cycles;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod det;
pub mod format;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};

/// Exact integer scalar.
pub type Int = num_bigint::BigInt;
/// Exact rational scalar.
pub type Rat = num_rational::BigRational;
/// Complex double-precision scalar.
pub type Cplx = num_complex::Complex64;

/// Exact rational truncated series.
pub type ExactSeries = series::TruncatedSeries<Rat>;
/// Complex floating truncated series.
pub type ComplexSeries = series::TruncatedSeries<Cplx>;
/// Exact integer operator kernel.
pub type IntKernel = kernel::PeriodicKernel<Int>;
/// Complex operator kernel.
pub type ComplexKernel = kernel::PeriodicKernel<Cplx>;
