//! Self-adjoint extensions of 1D Laplace, Schrodinger and Dirac-type
//! operators parametrized by unitary boundary data.
//!
//! The crate realizes the same operator several ways and cross-checks them:
//!
//! * von Neumann deficiency spaces and the extensions `T_K` they generate
//!   ([`deficiency`]), including the bipartite half-line x spin system and
//!   the entanglement its boundary conditions can generate ([`bipartite`]);
//! * unitary boundary conditions `phi - i phidot = U (phi + i phidot)`
//!   with their partial Cayley transform and spectral gap
//!   ([`boundary_param`]), discretized as quadratic forms by finite
//!   elements ([`quadform1d`]);
//! * sector-split (partially orthogonally additive) quadratic forms for
//!   operators that are not semibounded, with 1D Dirac instances
//!   ([`dirac1d`]), and symmetry reduction of rotation-invariant problems
//!   ([`symmetry_reduction`]).
//!
//! Everything is desk scale: boundary spaces are finite dimensional,
//! meshes are dense, and solvers are deterministic so outputs reproduce
//! bit for bit.

// validation deliberately writes `!(x > 0.0)` so that NaN fails too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use thiserror::Error;

pub mod linalg;

pub mod bipartite;
pub mod boundary_param;
pub mod deficiency;
pub mod dirac1d;
pub mod quadform1d;
pub mod symmetry_reduction;

mod spectral;

pub use spectral::SpectralResult;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: deviation {0:.3e} from U*U = I")]
    NonUnitary(f64),

    #[error("unitary has no usable spectral gap at -1 (gap_delta = {0:.3e})")]
    NoGap(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid too short: tail decay {decay:.3e} exceeds the required {tol:.3e}")]
    GridTooShort { decay: f64, tol: f64 },

    #[error("no bound state: tan^2(alpha1/2) = {tan_sq:.6} must exceed sigma = {sigma:.6}")]
    NoBoundState { tan_sq: f64, sigma: f64 },

    #[error("alpha1 is at the singular value pi (mod 2 pi)")]
    AlphaSingular,

    #[error("eigensolver failure: {0}")]
    SolverFailure(String),

    #[error("bracket too coarse: root count did not stabilize after {0} refinements")]
    BracketTooCoarse(u32),

    #[error("quadratic form is not additive across the split: off-diagonal norm {0:.3e}")]
    NotAdditive(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
