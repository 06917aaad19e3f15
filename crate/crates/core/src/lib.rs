//! Numerical Finsler geometry engine.
//!
//! Computes the curvature and torsion quantities of Finsler metrics —
//! fundamental form, Cartan/Matsumoto/Landsberg torsions, spray, mean
//! Berwald curvature, Riemann and flag curvature — with all derivatives
//! taken exactly through a truncated Taylor-jet algebra, and verifies the
//! identity chain connecting them along geodesic flows on a catalog of
//! concrete metrics (Klein, Funk, Hilbert, Randers, perturbed Minkowski).

pub mod curvature;
pub mod error;
pub mod geodesics;
pub mod jets;
pub mod metrics;
pub mod poly;
pub mod tensors;
pub mod tol;

pub use error::{GeomError, Result};
pub use jets::{JetError, JetScalar};
pub use metrics::{build_metric, Metric, MetricError, MetricSpec};
pub use tensors::TensorContext;
