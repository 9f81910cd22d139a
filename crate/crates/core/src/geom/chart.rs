use super::fd::{Face, StencilPolicy};
use super::field::{RadialProfile, ScalarField};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::fmt;
use std::sync::Arc;

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    HalfBallFlat,
    BallConformallyFlat,
    RadialProfile,
    GeneralGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryShape {
    /// Coordinate face; the inner normal points along `+axis` (or `-axis`).
    Face(Face),
    /// Sphere `|x| = radius` bounding the domain from outside.
    Sphere { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Domain {
    Box,
    Ball { radius: f64 },
    HalfBall { radius: f64, axis: usize },
}

/// A coordinate patch with a uniform grid, a metric, and a designated boundary.
#[derive(Clone)]
pub struct Chart {
    pub kind: ChartKind,
    pub n: usize,
    pub resolution: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Conformal exponent for conformally flat kinds (`g = e^{-2w} delta`).
    pub w: Option<Arc<dyn ScalarField>>,
    /// Warping exponent `p(t)` for the profile kind (`g = dt^2 + e^{-2p(t)} dx'^2`).
    pub profile: Option<Arc<dyn RadialProfile>>,
    pub boundary: BoundaryShape,
    metric: MetricFn,
    domain: Domain,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("resolution", &self.resolution)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("boundary", &self.boundary)
            .finish()
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 5 {
        return Err(Error::Domain(format!("resolution {resolution} below 5")));
    }
    Ok(())
}

fn conformal_metric(w: Arc<dyn ScalarField>, n: usize) -> MetricFn {
    Arc::new(move |x: &[f64]| DMatrix::identity(n, n) * (-2.0 * w.value(x)).exp())
}

impl Chart {
    /// Flat half ball `{x_n >= 0, |x| <= 1}` with the face `x_n = 0` as boundary.
    pub fn half_ball_flat(n: usize, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        let mut lo = vec![-1.0; n];
        lo[n - 1] = 0.0;
        Ok(Self {
            kind: ChartKind::HalfBallFlat,
            n,
            resolution,
            lo,
            hi: vec![1.0; n],
            w: None,
            profile: None,
            boundary: BoundaryShape::Face(Face { axis: n - 1, at: 0.0, inward: 1.0 }),
            metric: Arc::new(move |_| DMatrix::identity(n, n)),
            domain: Domain::HalfBall { radius: 1.0, axis: n - 1 },
        })
    }

    /// Unit ball with `g = e^{-2w} delta`, bounded by the unit sphere.
    pub fn ball_conformally_flat(n: usize, resolution: usize, w: Arc<dyn ScalarField>) -> Result<Self> {
        check_resolution(resolution)?;
        Ok(Self {
            kind: ChartKind::BallConformallyFlat,
            n,
            resolution,
            lo: vec![-1.0; n],
            hi: vec![1.0; n],
            metric: conformal_metric(w.clone(), n),
            w: Some(w),
            profile: None,
            boundary: BoundaryShape::Sphere { radius: 1.0 },
            domain: Domain::Ball { radius: 1.0 },
        })
    }

    /// Fermi-form chart `dt^2 + e^{-2p(t)} |dx'|^2` on `[-half, half]^{n-1} x [0, depth]`,
    /// with `t` the last coordinate and boundary `t = 0`. Locally conformally flat,
    /// umbilic boundary with principal curvature `p'(0)`.
    pub fn radial_profile(
        n: usize,
        resolution: usize,
        half: f64,
        depth: f64,
        p: Arc<dyn RadialProfile>,
    ) -> Result<Self> {
        check_resolution(resolution)?;
        let mut lo = vec![-half; n];
        let mut hi = vec![half; n];
        lo[n - 1] = 0.0;
        hi[n - 1] = depth;
        let pc = p.clone();
        let metric: MetricFn = Arc::new(move |x: &[f64]| {
            let mut g = DMatrix::identity(n, n) * (-2.0 * pc.value(x[n - 1])).exp();
            g[(n - 1, n - 1)] = 1.0;
            g
        });
        Ok(Self {
            kind: ChartKind::RadialProfile,
            n,
            resolution,
            lo,
            hi,
            w: None,
            profile: Some(p),
            boundary: BoundaryShape::Face(Face { axis: n - 1, at: 0.0, inward: 1.0 }),
            metric,
            domain: Domain::Box,
        })
    }

    /// Arbitrary metric callback on a box with a boundary face.
    pub fn general(resolution: usize, lo: Vec<f64>, hi: Vec<f64>, face: Face, metric: MetricFn) -> Result<Self> {
        check_resolution(resolution)?;
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        Ok(Self {
            kind: ChartKind::GeneralGrid,
            n: lo.len(),
            resolution,
            lo,
            hi,
            w: None,
            profile: None,
            boundary: BoundaryShape::Face(face),
            metric,
            domain: Domain::Box,
        })
    }

    /// Same chart on a different grid.
    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        check_resolution(resolution)?;
        let mut c = self.clone();
        c.resolution = resolution;
        Ok(c)
    }

    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        (self.metric)(x)
    }

    pub fn metric_fn(&self) -> MetricFn {
        self.metric.clone()
    }

    /// Grid spacing along the first axis; grids are uniform with `resolution` nodes per axis.
    pub fn step(&self) -> f64 {
        (self.hi[0] - self.lo[0]) / (self.resolution - 1) as f64
    }

    fn axis_step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.resolution - 1) as f64
    }

    pub fn policy(&self) -> StencilPolicy {
        let h = self.step();
        match self.boundary {
            BoundaryShape::Face(f) => StencilPolicy::with_face(h, f),
            BoundaryShape::Sphere { .. } => StencilPolicy::central(h),
        }
    }

    pub fn is_conformally_flat(&self) -> bool {
        matches!(self.kind, ChartKind::HalfBallFlat | ChartKind::BallConformallyFlat)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let eps = 1e-12;
        match self.domain {
            Domain::Box => true,
            Domain::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>() <= radius * radius + eps,
            Domain::HalfBall { radius, axis } => {
                x[axis] >= -eps && x.iter().map(|v| v * v).sum::<f64>() <= radius * radius + eps
            }
        }
    }

    /// Grid nodes inside the domain, node-major with the last axis fastest.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let total = self.resolution.pow(self.n as u32);
        (0..total)
            .map(|mut p| {
                let mut x = vec![0.0; self.n];
                for axis in (0..self.n).rev() {
                    let i = p % self.resolution;
                    p /= self.resolution;
                    x[axis] = self.lo[axis] + self.axis_step(axis) * i as f64;
                }
                x
            })
            .filter(|x| self.contains(x))
            .collect()
    }

    /// Grid nodes on the boundary face (empty for spherical boundaries).
    pub fn boundary_nodes(&self) -> Vec<Vec<f64>> {
        match self.boundary {
            BoundaryShape::Face(f) => self.nodes().into_iter().filter(|x| (x[f.axis] - f.at).abs() < 1e-12).collect(),
            BoundaryShape::Sphere { .. } => Vec::new(),
        }
    }
}

/// Fermi-form metric `dt^2 + e^{-2 t mu(x')} gamma(x') + t^2 s` with `t` the last
/// coordinate. The face `t = 0` is umbilic with principal curvature `mu`.
pub fn fermi_metric(n: usize, gamma: MetricFn, mu: Arc<dyn ScalarField>, s: DMatrix<f64>) -> MetricFn {
    Arc::new(move |x: &[f64]| {
        let t = x[n - 1];
        let xt = &x[..n - 1];
        let tang = gamma(xt) * (-2.0 * t * mu.value(xt)).exp() + &s * (t * t);
        let mut g = DMatrix::identity(n, n);
        g.view_mut((0, 0), (n - 1, n - 1)).copy_from(&tang);
        g
    })
}
