use thiserror::Error;

/// Errors raised by the matrix family, the similarity builders and the
/// dense kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// The matrix is (numerically) singular.
    #[error("matrix is singular (smallest singular value {sigma_min:e}, norm {norm:e})")]
    Singular { sigma_min: f64, norm: f64 },

    /// The input is not a 3x3 matrix with elliptic numerical range centered
    /// at an eigenvalue.
    #[error("input is not elliptic-centered: residual {residual:e} exceeds threshold {threshold:e}")]
    NotEllipticCentered { residual: f64, threshold: f64 },

    /// The spectrum does not split as {center - d, center, center + d} with d != 0.
    #[error("spectrum is not of the form {{c - d, c, c + d}} with d != 0: {detail}")]
    SpectrumShape { detail: String },

    /// Eigenvalues closer than the separation required by the functional calculus.
    #[error("eigenvalues are clustered (gap {gap:e})")]
    ClusteredSpectrum { gap: f64 },

    /// Dimension outside the supported range or mismatched operands.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Malformed textual input (cycle notation, lists of numbers).
    #[error("parse error: {0}")]
    Parse(String),
}

impl LabError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        LabError::Domain {
            op,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
