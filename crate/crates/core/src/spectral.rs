//! Shared container for computed spectra.

use crate::linalg::CMatrix;

/// Ordered eigenvalues with eigenvector coefficients and residual norms.
///
/// The meaning of the coefficient columns depends on the producer: nodal
/// values for finite-element solves, Fourier coefficients for circle
/// spectra, boundary spinors for secular solves.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Eigenvalues sorted ascending.
    pub eigenvalues: Vec<f64>,
    /// One coefficient column per eigenvalue.
    pub eigenvectors: CMatrix,
    /// Per-pair residual norms.
    pub residuals: Vec<f64>,
    /// Mesh/mode resolution the result was computed at.
    pub mesh_n: usize,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}
