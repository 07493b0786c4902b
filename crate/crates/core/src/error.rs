use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `q = cosh η − cos ξ` vanished: the toroidal point represents spatial infinity.
    #[error("toroidal point represents the point at infinity (q = {q:e})")]
    PointAtInfinity { q: f64 },

    /// The Cartesian point sits on (or numerically next to) the focal circle, where η diverges.
    #[error("point lies on focal circle (eta = {eta})")]
    OnFocalCircle { eta: f64 },

    /// The azimuthal direction is undefined on the z-axis.
    #[error("azimuth undefined on the z-axis (eta = {eta:e})")]
    AxisDegeneracy { eta: f64 },

    #[error("m and n must be nonzero (got m = {m}, n = {n})")]
    ZeroWinding { m: i32, n: i32 },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("finite-difference stencil touches a singularity: {0}")]
    StencilSingular(Box<Error>),

    #[error("field modulus vanishes; phase undefined")]
    ZeroModulus,

    /// ∇S and ∇σ are (numerically) parallel or vanish.
    #[error("degenerate Jacobian: gradients of modulus and phase are not independent")]
    DegenerateJacobian,

    #[error("fiber did not close within {steps} steps")]
    NoClosure { steps: usize },

    #[error("level-set corrector diverged (residual {residual:e})")]
    CorrectorDiverged { residual: f64 },

    #[error("fiber is not closed")]
    OpenFiber,

    #[error("fibers too close for a well-conditioned linking integral (distance {distance:e} < {required:e})")]
    FibersTooClose { distance: f64, required: f64 },

    #[error("target map evaluated within {distance:e} of a pole")]
    PoleHit { distance: f64 },

    #[error("sphere inversion is singular at the origin")]
    InversionSingular,

    #[error("all sample points were excluded")]
    AllPointsExcluded,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
