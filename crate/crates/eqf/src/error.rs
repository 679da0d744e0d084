//! Error types shared across the library.

use thiserror::Error;

/// Numerical and domain failures raised by the group operations, the filter,
/// and the simulation harness.
#[derive(Debug, Error)]
pub enum EqfError {
    /// Two per-landmark collections had different lengths.
    #[error("dimension mismatch: expected {expected} landmark components, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A landmark vector fell below the norm floor that keeps the state on
    /// the punctured plane.
    #[error("landmark {index} is degenerate: norm {norm:.3e} is below {floor:.0e}")]
    DegenerateLandmark { index: usize, norm: f64, floor: f64 },

    /// A scale parameter that must stay positive was not.
    #[error("scale parameter must be positive, got {value}")]
    NonPositiveScale { value: f64 },

    /// A covariance block lost positive definiteness.
    #[error("covariance block {block} lost positive definiteness (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { block: usize, min_eigenvalue: f64 },

    /// A covariance or gain block was not symmetric.
    #[error("matrix block {block} is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { block: usize, asymmetry: f64 },

    /// An observer step drove a scale component to zero or below; the step
    /// size is too large for the current innovation.
    #[error("observer step collapsed scale of landmark {landmark} (dt too large)")]
    ScaleCollapsed { landmark: usize },

    /// A simulated trajectory passed too close to the origin, where the
    /// bearing output is undefined.
    #[error("landmark {landmark} passed within {floor:.0e} of the origin at step {step}")]
    OriginCrossing { step: usize, landmark: usize, floor: f64 },

    /// A bearing vector was not unit length.
    #[error("bearing {index} is not unit length: norm {norm}")]
    NotUnitLength { index: usize, norm: f64 },

    /// A sliding analysis window does not fit inside the recorded trace.
    #[error("window of {window:.3} s exceeds the {trace:.3} s trace")]
    WindowTooLong { window: f64, trace: f64 },

    /// The stability-bounded integrator could not finish a step.
    #[error("integration stalled: {detail}")]
    IntegrationStalled { detail: String },

    /// An error raised during a specific experiment step.
    #[error("at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<EqfError>,
    },
}

impl EqfError {
    /// Wraps the error with the experiment step at which it occurred.
    pub fn at_step(self, step: usize) -> Self {
        EqfError::AtStep {
            step,
            source: Box::new(self),
        }
    }
}

/// Failures while reading, parsing, or validating a scenario configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("key `{key}`: {detail}")]
    InvalidValue { key: String, detail: String },

    #[error("missing required key `{key}`")]
    MissingKey { key: String },

    #[error("{detail}")]
    Invalid { detail: String },
}

/// Either failure mode of a full experiment run: a bad configuration or a
/// numerical breakdown. The CLI maps the two to distinct exit codes.
#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Numerical(#[from] EqfError),
}
