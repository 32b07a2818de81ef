use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while building or iterating a linkage.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The four lengths cannot close into a quadrilateral.
    #[error("infeasible linkage: {bound}")]
    Infeasible { bound: String },

    #[error("angles do not close the chain: |Lbar - L| = {residual:e} > {tol:e}")]
    NotOnManifold { residual: f64, tol: f64 },

    /// Diagonal of the popped triangle has zero length, so the reflection
    /// line is undefined.
    #[error("degenerate diagonal: bars {0} and {1} fold onto each other")]
    DegenerateDiagonal(f64, f64),

    #[error("reflection line undefined: neighbour points coincide")]
    CollinearNeighbors,

    #[error("orbit drifted off the manifold at step {step}: residual {residual:e} > {bound:e}")]
    DriftExceeded { step: usize, residual: f64, bound: f64 },

    #[error("polar angle undefined at the origin of angle space")]
    OriginUndefined,

    #[error("L = {value} outside the admissible interval: {violated}")]
    OutsideLambda { value: f64, violated: String },

    #[error("lift branch is ambiguous: displacement range {range:.6} too close to 2*pi")]
    BranchAmbiguity { range: f64 },

    #[error("quadrature did not reach tolerance {tol:e} within {budget} nodes")]
    QuadratureFailure { tol: f64, budget: usize },

    #[error(
        "rotation number not strictly monotone between L = {l_left} (rho {rho_left}) \
         and L = {l_right} (rho {rho_right})"
    )]
    MonotonicityViolation {
        index: usize,
        l_left: f64,
        l_right: f64,
        rho_left: f64,
        rho_right: f64,
    },

    #[error("no cyclic relabeling yields a 0-pi double rocker")]
    NotFound,

    #[error("contour topology did not stabilise up to resolution {resolution}")]
    ResolutionTooCoarse { resolution: usize },
}
