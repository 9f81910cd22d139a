//! Chart-based Riemannian geometry: curvature tensors on discretized domains
//! and boundary quantities.

pub mod boundary;
pub mod chart;
pub mod config;
pub mod fd;
pub mod field;
pub mod geometry;
pub mod pack;
pub mod tensor;

pub use chart::{BoundaryShape, Chart, ChartKind, MetricFn};
pub use geometry::{PointCurvature, PointGeometry};
pub use pack::{build_curvature, build_curvature_at, build_curvature_with, CurvaturePack, PackOptions};
