use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("thermodynamics: {0}")]
    Thermo(String),

    #[error("negative density {value:e} in cell {cell} (CFL violation)")]
    NegativeDensity { cell: usize, value: f64 },

    #[error("non-finite {field} in cell {cell}")]
    NonFinite { field: &'static str, cell: usize },

    #[error("internal energy {value:e} below cold floor {floor:e} in cell {cell}")]
    BelowColdFloor { cell: usize, value: f64, floor: f64 },

    #[error("time step {0:e} collapsed below 1e-14")]
    TimeStepCollapse(f64),

    #[error("step {step} (t = {time}): {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDivergence { iterations: usize, residual: f64 },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    ConfigConstraint { key: String, message: String },

    #[error("sweep run {index} (value {value:e}): {source}")]
    Sweep {
        index: usize,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
