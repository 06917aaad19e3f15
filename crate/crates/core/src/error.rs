//! Crate-wide error type for tensor, geodesic, and curvature computations.

use thiserror::Error;

use crate::jets::JetError;
use crate::metrics::MetricError;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("fundamental form not positive definite (min eigenvalue {min_eig:.6e})")]
    DegenerateMetric { min_eig: f64 },
    #[error("internal consistency check `{what}` failed: deviation {deviation:.3e} > {tolerance:.1e}")]
    Inconsistency {
        what: String,
        deviation: f64,
        tolerance: f64,
    },
    #[error("accuracy check `{what}` failed: estimate {estimate:.3e} exceeds {limit:.3e}; {hint}")]
    Accuracy {
        what: String,
        estimate: f64,
        limit: f64,
        hint: String,
    },
    #[error("flag direction is parallel to the flagpole")]
    DegenerateFlag,
    #[error("metric is not of scalar curvature at this (x, y): residual {residual:.3e} > {tolerance:.3e}")]
    NotScalarCurvature { residual: f64, tolerance: f64 },
    #[error("Matsumoto classification requires dimension n >= 3, got n = {n}")]
    DimensionRefusal { n: usize },
    #[error("geodesic left the admissible region at t = {exit_time:.6}")]
    DomainExit { exit_time: f64 },
}

pub type Result<T> = std::result::Result<T, GeomError>;
