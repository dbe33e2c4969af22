//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model assembly, eigensolvers, quadrature, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set violates its invariants (non-positive frequency,
    /// negative coupling, zero-sized spin, ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A basis index lies outside the truncated Hilbert space.
    #[error("basis index out of range: {0}")]
    IndexOutOfRange(String),

    /// The truncated Hilbert-space dimension exceeds the configured cap.
    #[error("basis dimension {dim} exceeds the cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    /// The iterative eigensolver failed to reach the requested residual.
    #[error(
        "eigensolver did not converge: residual {residual:.3e} after {iterations} iterations \
         (requested tol {tol:.3e})"
    )]
    EigenNotConverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    /// The Fock-cutoff convergence loop hit its ceiling.
    #[error(
        "cutoff not converged by n_cut = {n_cut_max}: last energy change {energy_delta:.3e}, \
         last tail occupation {tail_mass:.3e} (requested tol {tol:.3e})"
    )]
    CutoffNotConverged {
        n_cut_max: usize,
        energy_delta: f64,
        tail_mass: f64,
        tol: f64,
    },

    /// A quadrature grid does not cover the integrand: too much mass sits on
    /// the boundary of the named axis.
    #[error(
        "quadrature box too small on axis {axis}: boundary mass fraction {edge_fraction:.3e} \
         exceeds {threshold:.3e}; enlarge box_halfwidth or nodes_per_axis"
    )]
    InsufficientCoverage {
        axis: &'static str,
        edge_fraction: f64,
        threshold: f64,
    },

    /// A quadrature spec violates its invariants.
    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    /// The norm gate failed: the integrated density is not 1 within tolerance,
    /// so derived measures would be biased.
    #[error("norm gate failed: integrated density {norm} deviates from 1 by more than {tol:.3e}")]
    NormGate { norm: f64, tol: f64 },

    /// A measure was requested outside its domain (for example the Rényi order
    /// ν = 1, or a non-positive ν).
    #[error("measure domain error: {0}")]
    MeasureDomain(String),

    /// Constructing the odd-parity ansatz where its norm vanishes.
    #[error("degenerate ansatz: {0}")]
    DegenerateAnsatz(String),

    /// An operation that requires resonance (ω = ω₀) was called off resonance.
    #[error("resonance required: omega = {omega} differs from omega0 = {omega0}")]
    ResonanceRequired { omega: f64, omega0: f64 },

    /// Hermite-function evaluation was pushed past its stable degree.
    #[error("Hermite degree {degree} beyond stable range {max}: use the log-space path")]
    DegreeOverflow { degree: usize, max: usize },

    /// A cache file exists but does not describe the requested parameters.
    #[error("cache mismatch at {path}: {reason}")]
    CacheMismatch { path: String, reason: String },

    /// Malformed configuration (sweep config file, CLI grid syntax, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Underlying JSON (de)serialization failure.
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}
