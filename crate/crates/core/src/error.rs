//! Error taxonomy shared across the crate.

use thiserror::Error;

/// All failure modes of the library surface.
///
/// `NearDegenerate` is not a fault: it signals that the wave speed fell
/// under the guard floor mid-computation and the run is about to terminate
/// with a `Degenerated` verdict.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Argument left the physical range of the wave-speed model.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration or parameter set.
    #[error("config error: {0}")]
    Config(String),

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Input is degenerate for the requested operation (e.g. zero mass).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Rescaling would flip the sign of the field and break the sign condition.
    #[error("sign flip: {0}")]
    SignFlip(String),

    /// Wave speed fell below the division guard; degeneracy is imminent.
    #[error("near-degenerate state: min c(u) = {min_c:.3e} under guard {guard:.3e}")]
    NearDegenerate { min_c: f64, guard: f64 },

    /// Non-finite values or a broken solver invariant.
    #[error("solver fault: {0}")]
    SolverFault(String),

    /// Requested point lies outside the stored space-time box.
    #[error("out of box: {0}")]
    OutOfBox(String),

    /// Trajectory lacks the data a diagnostic needs.
    #[error("missing diagnostics: {0}")]
    MissingDiagnostics(String),

    /// Boundary contamination was detected; line integrals are unreliable.
    #[error("tainted run: {0}")]
    Tainted(String),

    /// Cutoff support does not fit inside the computational domain.
    #[error("support error: {0}")]
    Support(String),

    /// Bisection endpoints do not straddle the predicate.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// Initial data failed the admissibility check and no waiver was set.
    #[error("inadmissible initial data: {0}")]
    NotAdmissible(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
