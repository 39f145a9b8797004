use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid rotation number {0}: p/q must satisfy gcd(p,q) = 1, 0 < p < q and q >= 2")]
    InvalidRotation(String),
    #[error("eigenvalue data is degenerate: {0}")]
    DegenerateIndex(String),
    #[error("eigenvalue must be nonzero for the rational normal form")]
    ZeroMultiplier,
    #[error("fixed point is not attracting (|multiplier| = {0})")]
    NotAttracting(f64),
    #[error("designated critical point is not in the basin")]
    CriticalNotInBasin,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("point is not in the basin")]
    NotInBasin,
    #[error("orbit did not reach the local chart within {0} iterations")]
    DepthExceeded(usize),
    #[error("value is not reachable by the inverse chart")]
    Unreachable,
    #[error("branch continuation is ambiguous near a critical value")]
    BranchAmbiguous,
    #[error("point is an exact preimage of the parabolic point")]
    PrefixedToZero,
    #[error("point is not in the immediate basin")]
    NotInImmediateBasin,
    #[error("classification is undecidable at this tolerance: {0}")]
    Undecidable(String),
    #[error("multiplier lies on the excluded ray [0, -omega)")]
    OnExcludedRay,
    #[error("log-value lies on a twig line (distance {0:e})")]
    OnLine(f64),
    #[error("point is not in the admissible region: {0}")]
    NotInXiStar(String),
    #[error("Newton iteration left the relatedness locus")]
    LeftR,
    #[error("parameter is not in the relatedness locus")]
    NotInR,
    #[error("point is outside the conjugacy domain: {0}")]
    OutsideDomain(String),
    #[error("sequence of normal-form parameters is not diverging")]
    NotDiverging,
    #[error("limit fit is unstable: {0}")]
    FitUnstable(String),
    #[error("wire did not land within the budget")]
    NoLanding,
    #[error("Newton iteration diverged")]
    NewtonDiverged,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
