use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("line is parallel to the plane; intersection undefined")]
    ParallelLinePlane,
    #[error("LED lies directly above the reference point; azimuth undefined")]
    DegenerateVertical,
    #[error("plane normal has zero length")]
    DegenerateNormal,
    #[error("invalid body cylinder (radius {radius}, height {height})")]
    InvalidBody { radius: f64, height: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("power ratio zeta = {0} is outside (0.5, 1]")]
    InvalidZeta(f64),
    #[error("group must contain at least one user")]
    EmptyGroup,
    #[error("allocation solver did not converge within {iterations} iterations")]
    SolverNonConvergence { iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("lattice side {side} m exceeds the coverage bound {bound} m")]
    LatticeConstraintViolated { side: f64, bound: f64 },
    #[error("lattice side must be positive, got {0}")]
    InvalidSide(f64),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("value out of range at `{path}`: {message}")]
    Range { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ConfigError {
    pub fn range(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Range { path: path.into(), message: message.into() }
    }
}
