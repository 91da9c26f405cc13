//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),

    #[error("asymmetric adjacency data at ({0}, {1})")]
    AsymmetricEdge(usize, usize),

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("vertex index {index} out of range for {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },

    #[error("permutation has wrong length or is not a bijection")]
    BadPermutation,

    #[error("permutation is not a graph automorphism: edge {{{0}, {1}}} is not preserved")]
    NotAutomorphism(usize, usize),

    #[error("group action is not free: a non-identity element fixes vertex {vertex}")]
    NotFree { vertex: usize },

    #[error("group closure exceeds {0} elements")]
    GroupTooLarge(usize),

    #[error("graph is not regular")]
    NotRegular,

    #[error("unroll window of radius {radius} cannot certify paths of length {needed}")]
    RadiusTooSmall { radius: usize, needed: usize },

    #[error("enumeration window supports lengths up to {max}, requested {requested}")]
    WindowTooSmall { max: usize, requested: usize },

    #[error("|u| = {modulus:.6} is outside the convergence domain |u| < {bound:.6} ({bound_name})")]
    DomainError {
        modulus: f64,
        bound: f64,
        bound_name: &'static str,
    },

    #[error("series constant term must be {expected}")]
    BadConstantTerm { expected: &'static str },

    #[error("kernels live in different action contexts")]
    ActionMismatch,

    #[error("0 lies in (or within tolerance of) the convex hull of the spectrum")]
    HullContainsZero,

    #[error("no admissible branch of log over the sampled spectra")]
    BranchObstruction,

    #[error("Brillouin-zone quadrature did not converge below {tol:e} within {max_n} points per dimension")]
    QuadratureNotConverged { tol: f64, max_n: usize },

    #[error("operator series did not converge below {tol:e} within {max_terms} terms")]
    TruncationNotConverged { tol: f64, max_terms: usize },

    #[error("point outside the holomorphy region Omega")]
    OutsideOmega,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
