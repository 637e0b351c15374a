use thiserror::Error;

/// Errors raised by the geometric constructions and numerical solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quaternion is not unit length (|q| = {0})")]
    NotUnit(f64),
    #[error("vector is not on the unit sphere (|x| = {0})")]
    NotOnSphere(f64),
    #[error("matrix is not a rotation")]
    NotRotation,
    #[error("vectors are not orthonormal")]
    NotOrthonormal,
    #[error("not a 2-plane")]
    NotAPlane,
    #[error("radius {0} outside (0, pi)")]
    InvalidRadius(f64),
    #[error("point is not on the circle (residual {0:e})")]
    OffCircle(f64),
    #[error("degenerate samples: {0}")]
    DegenerateSamples(&'static str),
    #[error("circles are identical")]
    IdenticalCircles,
    #[error("fibration solve failed after {iterations} iterations (last step {step:e})")]
    FiberSolveFailed { iterations: usize, step: f64 },
    #[error("kappa field is not admissible (margin {0})")]
    Inadmissible(f64),
    #[error("measure density is not positive at {0:?}")]
    NonPositiveMeasure([f64; 3]),
    #[error("degenerate fiber variation")]
    DegenerateVariation,
    #[error("finite-difference step underflow")]
    StepUnderflow,
    #[error("zero velocity")]
    ZeroVelocity,
    #[error("singular velocity hessian (det {0:e})")]
    SingularHessian(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
