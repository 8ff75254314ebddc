use thiserror::Error;

/// Geometry-stage failures: a query point left the tubular neighbourhood,
/// a chart map was evaluated outside its cylinder, or the chart cover
/// failed to reach partition-of-unity mass 1 somewhere on the closure.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point ({0:.6}, {1:.6}) is outside the reach of the boundary (|d| >= {2:.6})")]
    OutOfReach(f64, f64, f64),
    #[error("chart coordinate ({0:.6}, {1:.6}) is outside the chart cylinder (half-width {2:.6})")]
    OutOfChart(f64, f64, f64),
    #[error("normal-coordinate Jacobian degenerates (det = {0:.3e})")]
    SingularJacobian(f64),
    #[error("partition of unity undershoots at grid point ({0}, {1}): raw sum {2:.6e}")]
    CoverageGap(usize, usize, f64),
    #[error("invalid domain parameters: {0}")]
    BadDomain(String),
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid is degenerate: {0}")]
    DegenerateGrid(String),
    #[error("grid mismatch between operands: {0} vs {1}")]
    GridMismatch(String, String),
    #[error("field i/o failure: {0}")]
    Io(String),
    #[error("no admissible ball in the scan schedule ({0})")]
    EmptyScan(String),
}

#[derive(Debug, Error)]
pub enum SingularError {
    #[error("source field has mass {0:.3e} within the guard band of the data box edge")]
    SupportLeak(f64),
    #[error("evaluation point coincides with a source point")]
    SingularPoint,
}

#[derive(Debug, Error)]
pub enum FreezingError {
    #[error("Neumann series failed to contract: term ratio {0:.3} at term {1}")]
    ConvergenceFailure(f64, usize),
    #[error("coefficient cylinder degenerates: min J = {0:.3e}")]
    DegenerateCoefficients(f64),
}

#[derive(Debug, Error)]
pub enum NeumannError {
    #[error("boundary quadrature degenerate: {0}")]
    QuadratureDegenerate(String),
    #[error("Neumann data violates compatibility: |mean flux| = {0:.3e} exceeds tolerance {1:.3e}")]
    CompatibilityViolation(f64, f64),
    #[error("iterative solver stalled at relative residual {0:.3e} after {1} iterations")]
    SolverDivergence(f64, usize),
}

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("reflection requested outside the collar: |d| = {0:.6} >= {1:.6}")]
    OutOfReach(f64, f64),
    #[error("input field carries mass {0:.3e} outside its declared chart support")]
    SupportViolation(f64),
}

/// Crate-wide error, used by the pipeline and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Singular(#[from] SingularError),
    #[error(transparent)]
    Freezing(#[from] FreezingError),
    #[error(transparent)]
    Neumann(#[from] NeumannError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
