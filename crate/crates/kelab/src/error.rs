//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation point outside the domain of a radial function.
    #[error("point s = {s} outside domain [0, {s_max})")]
    OutOfDomain { s: f64, s_max: f64 },

    /// An integrand produced NaN or infinity at a quadrature node.
    #[error("integrand not finite at s = {s}")]
    NonFinite { s: f64 },

    /// Adaptive refinement hit its node budget before reaching the tolerance.
    #[error("quadrature budget exceeded: {nodes} nodes, error estimate {error_estimate:.3e}")]
    BudgetExceeded { nodes: usize, error_estimate: f64 },

    /// The total mass of a weighted measure diverges.
    #[error("weight not integrable: boundary exponent {exponent} <= -1")]
    NonIntegrable { exponent: f64 },

    /// Kernel truncation tail dominates the requested accuracy.
    #[error("truncation tail {tail:.3e} exceeds {limit:.3e} x partial sum at s = {s}")]
    TailDominates { s: f64, tail: f64, limit: f64 },

    /// Gram matrix too ill-conditioned to invert reliably.
    #[error("Gram matrix ill-conditioned: estimated condition number {cond:.3e}")]
    IllConditioned { cond: f64 },

    /// A random section exceeded the extremal bound.
    #[error("extremal bound violated: ratio {ratio} at s = {s}; coefficients {coefficients:?}")]
    ExtremalViolation {
        ratio: f64,
        s: f64,
        coefficients: Vec<f64>,
    },

    /// A perturbed potential lost metric positivity.
    #[error("perturbed density non-positive at s = {s}: {density}")]
    MetricDegenerate { s: f64, density: f64 },

    /// Curvature requested for a non-positive metric density.
    #[error("metric density non-positive at s = {s}: {density}")]
    NonPositiveMetric { s: f64, density: f64 },

    /// Chart jet not pre-normalised to the identity at the centre.
    #[error("chart jet not normalised: |phi_ij - delta| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    /// Laplace phase Hessian is singular or not negative definite.
    #[error("phase Hessian singular or not negative definite (pivot {pivot:.3e})")]
    SingularHessian { pivot: f64 },

    /// Laplace phase gradient does not vanish at the expansion point.
    #[error("gradient |grad f(x0)| = {gradient_norm:.3e} exceeds {tolerance:.3e}")]
    NotCritical { gradient_norm: f64, tolerance: f64 },

    /// Finite-difference stencil would leave the fiber.
    #[error("stencil of half-width {h} leaves the domain at the sample point")]
    StencilOutsideDomain { h: f64 },

    /// Point outside the fiber of a disc family.
    #[error("|z| = {abs_z} outside fiber of radius {radius}")]
    OutsideFiber { abs_z: f64, radius: f64 },

    /// Too few usable points for a rate fit.
    #[error("rate fit needs at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Iteration error grew an order of magnitude beyond its start.
    #[error("divergence detected at k = {k}: sup error {error} vs initial {initial}")]
    DivergenceDetected { k: u32, error: f64, initial: f64 },

    /// A zero (or non-finite) section was passed where a section is required.
    #[error("invalid section: {reason}")]
    InvalidSection { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
