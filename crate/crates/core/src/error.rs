//! Error type shared across the crate.
//!
//! Variants are named after the invariant they report so that a CLI failure
//! message identifies what was violated without a stack trace.

/// Everything that can go wrong while building models or evaluating spectra.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(
        "charge symmetry violated: |L[{row},{col}]| = {magnitude:.3e} couples sectors k={k_row} and k={k_col}"
    )]
    ChargeSymmetryViolation {
        row: usize,
        col: usize,
        magnitude: f64,
        k_row: i64,
        k_col: i64,
    },

    #[error("eigensolver did not converge")]
    EigNoConvergence,

    #[error("left/right eigenvalue pairing failed: worst mismatch {0:.3e}")]
    PairingFailure(f64),

    #[error(
        "defective eigenvalue cluster near lambda = {0}: biorthogonal normalization is singular"
    )]
    DefectiveCluster(String),

    #[error("degenerate steady state: found {0} zero modes of the generator")]
    DegenerateSteadyState(usize),

    #[error("growing mode: Re lambda = {0:.3e} exceeds the zero tolerance")]
    GrowingMode(f64),

    #[error("steady state failed validation: {0}")]
    InvalidSteadyState(String),

    #[error("selection rule violated: mode in sector k={k} has |tr(a r)| = {magnitude:.3e}")]
    SelectionRuleViolation { k: i64, magnitude: f64 },

    #[error("step size underflow at t = {0:.3e}")]
    StepSizeUnderflow(f64),

    #[error("time grid must be nonnegative and nondecreasing")]
    InvalidTimeGrid,

    #[error("frequency grid: {0}")]
    InvalidGrid(String),

    #[error("population inversion undefined: all level energies are degenerate (omega0 = u = 0)")]
    InversionUndefined,

    #[error("degenerate zeroth-order modes: {0}")]
    DegeneratePerturbation(String),

    #[error("hamiltonian must be diagonal in the Fock basis for perturbation theory")]
    NonDiagonalHamiltonian,
}

pub type Result<T> = std::result::Result<T, Error>;
