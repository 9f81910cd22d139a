//! Boundary-restricted geometry: second fundamental form, umbilicity, and the
//! normal-derivative identities that hold on umbilic boundaries.
//!
//! Tangential components are taken against a tangent frame `T` (columns are
//! coordinate vectors) and the unit inner normal `nu`. On face charts `T` is the
//! coordinate frame of the face; on spheres it is `g`-orthonormal.

use super::chart::{BoundaryShape, Chart};
use super::fd::StencilPolicy;
use super::geometry::PointGeometry;
use super::pack::{curvature_at, schouten_at, CurvaturePack};
use super::tensor::{norm_sq, Tensor};
use crate::error::{Error, Result};
use crate::rng::{seeded, uniform_vec};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Frame and extrinsic data at one boundary point.
#[derive(Debug, Clone)]
pub struct Shape {
    pub normal: DVector<f64>,
    pub tangent: DMatrix<f64>,
    pub induced: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub h: f64,
    pub mu: f64,
    pub umbilic_residual: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub x: Vec<f64>,
    pub shape: Shape,
    pub a_t: DMatrix<f64>,
    pub a_tn: DVector<f64>,
    pub a_nn: f64,
}

#[derive(Debug, Clone)]
pub struct BoundarySlice {
    pub n: usize,
    pub points: Vec<BoundaryPoint>,
}

fn bil(m: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    (x.transpose() * m * y)[(0, 0)]
}

fn contract3(t: &Tensor, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>) -> f64 {
    let n = t.n;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                s += t.data[(i * n + j) * n + k] * a[i] * b[j] * c[k];
            }
        }
    }
    s
}

fn contract4(t: &Tensor, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> f64 {
    let n = t.n;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    s += t.data[((i * n + j) * n + k) * n + l] * a[i] * b[j] * c[k] * d[l];
                }
            }
        }
    }
    s
}

fn finish_shape(normal: DVector<f64>, tangent: DMatrix<f64>, g: &DMatrix<f64>, l: DMatrix<f64>) -> Shape {
    let induced = tangent.transpose() * g * &tangent;
    let m = induced.ncols();
    let inv = induced.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(m, m));
    let h = (&inv * &l).trace();
    let mu = h / m as f64;
    let umbilic_residual = (&l - &induced * mu).abs().max();
    Shape { normal, tangent, induced, l, h, mu, umbilic_residual }
}

/// Closest point of the boundary; boundary functions are extended constantly along it.
pub fn project(chart: &Chart, x: &[f64]) -> Vec<f64> {
    match chart.boundary {
        BoundaryShape::Face(f) => {
            let mut y = x.to_vec();
            y[f.axis] = f.at;
            y
        }
        BoundaryShape::Sphere { radius } => {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter().map(|v| v * radius / r).collect()
        }
    }
}

/// Unit inner normal, tangent frame and second fundamental form at a boundary point.
///
/// Face charts use `L_ab = Gamma^n_ab / sqrt(g^nn)` from finite differences of the
/// metric. Ball charts use the conformal law `mu = e^w (1/R - d_r w)`, with `L = mu g`.
pub fn shape_at(chart: &Chart, x: &[f64]) -> Result<Shape> {
    let n = chart.n;
    let g = chart.metric(x);
    match chart.boundary {
        BoundaryShape::Face(f) => {
            let metric = chart.metric_fn();
            let geo = PointGeometry::new(n, chart.policy(), &*metric);
            let ginv = geo.inverse(x)?;
            let gnn = ginv[(f.axis, f.axis)];
            let normal = ginv.column(f.axis) * (f.inward / gnn.sqrt());
            let tan_axes: Vec<usize> = (0..n).filter(|&a| a != f.axis).collect();
            let tangent = DMatrix::from_fn(n, n - 1, |i, a| if i == tan_axes[a] { 1.0 } else { 0.0 });
            let l = if chart.is_conformally_flat() && chart.w.is_none() {
                DMatrix::zeros(n - 1, n - 1)
            } else {
                let gamma = geo.christoffel(x)?;
                DMatrix::from_fn(n - 1, n - 1, |a, b| {
                    f.inward * gamma.get(&[f.axis, tan_axes[a], tan_axes[b]]) / gnn.sqrt()
                })
            };
            Ok(finish_shape(normal, tangent, &g, l))
        }
        BoundaryShape::Sphere { radius } => {
            let w = chart
                .w
                .as_ref()
                .ok_or_else(|| Error::UnsupportedChart("spherical boundary needs a conformal exponent".into()))?;
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let xhat = DVector::from_iterator(n, x.iter().map(|v| v / r));
            let ew = w.value(x).exp();
            let grad = DVector::from_vec(w.gradient(x));
            let mu = ew * (1.0 / radius - xhat.dot(&grad));
            let normal = -&xhat * ew;
            let tangent = flat_tangent_frame(&xhat) * ew;
            let induced = tangent.transpose() * &g * &tangent;
            Ok(finish_shape(normal, tangent, &g, induced * mu))
        }
    }
}

/// Orthonormal basis of the Euclidean complement of `xhat`.
fn flat_tangent_frame(xhat: &DVector<f64>) -> DMatrix<f64> {
    let n = xhat.len();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for e in 0..n {
        let mut v = DVector::from_fn(n, |i, _| if i == e { 1.0 } else { 0.0 });
        v -= xhat * xhat[e];
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        let norm = v.norm();
        if norm > 1e-6 && basis.len() < n - 1 {
            basis.push(v / norm);
        }
    }
    DMatrix::from_columns(&basis)
}

/// Second fundamental form `L(X, Y) = -g(nabla_X nu, Y)` of a sphere boundary from
/// finite differences of the extended unit normal field `-e^w x/|x|`.
pub fn sphere_l_fd(chart: &Chart, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = chart.n;
    let w = chart.w.clone().ok_or_else(|| Error::UnsupportedChart("needs conformal exponent".into()))?;
    let metric = chart.metric_fn();
    let geo = PointGeometry::new(n, StencilPolicy::central(chart.step()), &*metric);
    let nu = |y: &[f64]| {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ew = w.value(y).exp();
        y.iter().map(|v| -v / r * ew).collect::<Vec<f64>>()
    };
    let dnu = geo.policy.gradient(&nu, x);
    let gamma = geo.christoffel(x)?;
    let nux = nu(x);
    let shape = shape_at(chart, x)?;
    let g = chart.metric(x);
    let nabla = DMatrix::from_fn(n, n, |p, a| dnu[a][p] + (0..n).map(|m| gamma.get(&[p, a, m]) * nux[m]).sum::<f64>());
    let t = &shape.tangent;
    Ok(-(t.transpose() * g * nabla * t))
}

/// Boundary data at one point, with `A` from the chart's Schouten evaluation.
pub fn boundary_point(chart: &Chart, x: &[f64]) -> Result<BoundaryPoint> {
    let shape = shape_at(chart, x)?;
    let a = schouten_at(chart, x)?;
    Ok(point_from(x, shape, &a))
}

fn point_from(x: &[f64], shape: Shape, a: &DMatrix<f64>) -> BoundaryPoint {
    let a_t = shape.tangent.transpose() * a * &shape.tangent;
    let a_tn = shape.tangent.transpose() * a * &shape.normal;
    let a_nn = bil(a, &shape.normal, &shape.normal);
    BoundaryPoint { x: x.to_vec(), shape, a_t, a_tn, a_nn }
}

/// Deterministic sample of points on a sphere of the given radius.
pub fn sphere_samples(n: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| {
            let v = uniform_vec(&mut rng, n, -1.0, 1.0);
            let r = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
            v.iter().map(|a| a * radius / r).collect()
        })
        .collect()
}

/// Boundary slice over the pack's boundary nodes (face charts) or a fixed sample
/// of the boundary sphere (ball charts).
pub fn build_boundary(chart: &Chart, pack: &CurvaturePack) -> Result<BoundarySlice> {
    match chart.boundary {
        BoundaryShape::Face(f) => {
            let points = pack
                .nodes
                .iter()
                .filter(|p| (p.x[f.axis] - f.at).abs() < 1e-12)
                .map(|p| Ok(point_from(&p.x, shape_at(chart, &p.x)?, &p.schouten)))
                .collect::<Result<Vec<_>>>()?;
            Ok(BoundarySlice { n: chart.n, points })
        }
        BoundaryShape::Sphere { radius } => build_boundary_at(chart, &sphere_samples(chart.n, radius, 4 * chart.n, 7)),
    }
}

pub fn build_boundary_at(chart: &Chart, points: &[Vec<f64>]) -> Result<BoundarySlice> {
    let points = points.iter().map(|x| boundary_point(chart, x)).collect::<Result<Vec<_>>>()?;
    Ok(BoundarySlice { n: chart.n, points })
}

impl BoundarySlice {
    pub fn max_umbilic_residual(&self) -> f64 {
        self.points.iter().map(|p| p.shape.umbilic_residual).fold(0.0, f64::max)
    }

    /// Errors with the residual when the slice is not umbilic within `tol`.
    pub fn require_umbilic(&self, tol: f64) -> Result<()> {
        let residual = self.max_umbilic_residual();
        if residual > tol {
            return Err(Error::NotUmbilic { residual });
        }
        Ok(())
    }

    /// Largest `|h - (n-1) mu|`; zero by construction of `mu`, kept as a consistency probe.
    pub fn max_mean_curvature_mismatch(&self) -> f64 {
        self.points.iter().map(|p| (p.shape.h - (self.n - 1) as f64 * p.shape.mu).abs()).fold(0.0, f64::max)
    }
}

/// Derivatives of boundary functions extended constantly along the normal.
struct BoundaryCalculus<'a> {
    chart: &'a Chart,
    metric: crate::geom::chart::MetricFn,
}

impl<'a> BoundaryCalculus<'a> {
    fn new(chart: &'a Chart) -> Self {
        Self { chart, metric: chart.metric_fn() }
    }

    fn geo(&self) -> PointGeometry<'_> {
        PointGeometry::new(self.chart.n, self.chart.policy(), &*self.metric)
    }

    fn mu(&self, y: &[f64]) -> f64 {
        shape_at(self.chart, &project(self.chart, y)).map(|s| s.mu).unwrap_or(f64::NAN)
    }

    fn dmu(&self, x: &[f64]) -> DVector<f64> {
        let g = self.geo().policy.gradient(&|y: &[f64]| vec![self.mu(y)], x);
        DVector::from_iterator(self.chart.n, g.into_iter().map(|v| v[0]))
    }

    /// Ambient Hessian of the extended `mu`; equals the boundary Hessian because the
    /// extension has zero normal derivative.
    fn hess_mu(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let geo = self.geo();
        let grad = |y: &[f64]| Tensor { n: self.chart.n, rank: 1, data: self.dmu(y).as_slice().to_vec() };
        Ok(geo.covariant(&grad, x)?.to_matrix())
    }

    fn schouten_field(&self) -> impl Fn(&[f64]) -> Tensor + '_ {
        let n = self.chart.n;
        move |y: &[f64]| {
            schouten_at(self.chart, y).map(|a| Tensor::from_matrix(&a)).unwrap_or_else(|_| Tensor {
                n,
                rank: 2,
                data: vec![f64::NAN; n * n],
            })
        }
    }
}

fn check_finite(t: &Tensor, x: &[f64]) -> Result<()> {
    if t.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Geometry { node: x.to_vec() });
    }
    Ok(())
}

/// Residuals of the umbilic boundary identities for `A` and the boundary predicates
/// (T0)-(T2) with `S = A`.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct BoundaryIdentityReport {
    pub points: usize,
    pub umbilic_residual: f64,
    /// `A_{an} = mu_a`.
    pub codazzi: f64,
    /// `mu_{ab~} = A_{an,b} + A_nn mu g_ab - A_ab mu`.
    pub hessian: f64,
    /// `R_{nanb} = A_ab + A_nn g_ab`, expected only when `W = 0` on the boundary.
    pub curvature: f64,
    /// `A_{ab,n} - 2 mu A_ab = mu_{ab~} - R_{anbn} mu`, expected when also `C = 0`.
    pub normal_derivative: f64,
    pub weyl: f64,
    pub cotton: f64,
    /// Largest eigenvalue of `S_ab + S_nn g_ab - R_{anbn}`; (T1) holds when `<= 0`.
    pub t1_gap: f64,
    /// Largest eigenvalue of `S_{ab,n} - 2 mu S_ab - mu_{ab~} + R_{anbn} mu`; (T2) holds when `<= 0`.
    pub t2_gap: f64,
}

fn max_eig(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

pub fn check_boundary_identities(chart: &Chart, slice: &BoundarySlice) -> Result<BoundaryIdentityReport> {
    let calc = BoundaryCalculus::new(chart);
    let geo = calc.geo();
    let field = calc.schouten_field();
    let mut rep = BoundaryIdentityReport { points: slice.points.len(), ..Default::default() };
    rep.umbilic_residual = slice.max_umbilic_residual();
    rep.t1_gap = f64::NEG_INFINITY;
    rep.t2_gap = f64::NEG_INFINITY;
    let m = chart.n - 1;
    for p in &slice.points {
        let x = &p.x;
        let s = &p.shape;
        let nu = &s.normal;
        let t = |a: usize| s.tangent.column(a).into_owned();
        let mu = s.mu;
        let da = geo.covariant(&field, x)?;
        check_finite(&da, x)?;
        let pc = curvature_at(chart, x)?;
        let dmu = calc.dmu(x);
        let hmu = calc.hess_mu(x)?;
        let cot = super::pack::cotton_at(chart, x)?;
        rep.weyl = rep.weyl.max(norm_sq(&pc.weyl, &pc.ginv).max(0.0).sqrt());
        rep.cotton = rep.cotton.max(cot.max_abs());
        let mut t1 = DMatrix::zeros(m, m);
        let mut t2 = DMatrix::zeros(m, m);
        for a in 0..m {
            let ta = t(a);
            rep.codazzi = rep.codazzi.max((p.a_tn[a] - dmu.dot(&ta)).abs());
            for b in 0..m {
                let tb = t(b);
                let hab = bil(&hmu, &ta, &tb);
                let gab = s.induced[(a, b)];
                let rhs = contract3(&da, &ta, nu, &tb) + p.a_nn * mu * gab - p.a_t[(a, b)] * mu;
                rep.hessian = rep.hessian.max((hab - rhs).abs());
                let r_nanb = contract4(&pc.riem, nu, &ta, nu, &tb);
                let r_anbn = contract4(&pc.riem, &ta, nu, &tb, nu);
                rep.curvature = rep.curvature.max((r_nanb - p.a_t[(a, b)] - p.a_nn * gab).abs());
                let lhs = contract3(&da, &ta, &tb, nu) - 2.0 * mu * p.a_t[(a, b)];
                rep.normal_derivative = rep.normal_derivative.max((lhs - (hab - r_anbn * mu)).abs());
                t1[(a, b)] = p.a_t[(a, b)] + p.a_nn * gab - r_anbn;
                t2[(a, b)] = lhs - hab + r_anbn * mu;
            }
        }
        rep.t1_gap = rep.t1_gap.max(max_eig(&t1));
        rep.t2_gap = rep.t2_gap.max(max_eig(&t2));
    }
    Ok(rep)
}

impl BoundaryIdentityReport {
    /// (T0) residual for `S = A`; the same quantity as the Codazzi identity.
    pub fn t0(&self) -> f64 {
        self.codazzi
    }
}

/// Fermi face charts: `g_nn = 1`, `g_an = 0` near the boundary, normal axis increasing inward.
fn require_fermi(chart: &Chart, points: &[Vec<f64>]) -> Result<usize> {
    let BoundaryShape::Face(f) = chart.boundary else {
        return Err(Error::UnsupportedChart("boundary is not a coordinate face".into()));
    };
    if f.inward <= 0.0 {
        return Err(Error::UnsupportedChart("normal coordinate must increase inward".into()));
    }
    for x in points {
        for depth in [0.0, chart.step(), 3.0 * chart.step()] {
            let mut y = x.clone();
            y[f.axis] += depth;
            let g = chart.metric(&y);
            let off = (0..chart.n).filter(|&a| a != f.axis).map(|a| g[(a, f.axis)].abs()).fold(0.0, f64::max);
            if off > 1e-12 || (g[(f.axis, f.axis)] - 1.0).abs() > 1e-12 {
                return Err(Error::UnsupportedChart(format!("metric not in Fermi form at {y:?}")));
            }
        }
    }
    Ok(f.axis)
}

/// Largest deviations of the Fermi-chart Christoffel symbols from their umbilic values.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct FermiChristoffelReport {
    pub points: usize,
    pub mu_range: (f64, f64),
    /// `Gamma^n_ab - mu g_ab`.
    pub normal_tangential: f64,
    /// `Gamma^b_an + mu delta_ab`.
    pub mixed: f64,
    /// `Gamma^n_an`.
    pub normal_normal: f64,
    /// Intrinsic `Gamma~^c_ab` of the induced metric against the ambient `Gamma^c_ab`.
    pub intrinsic: f64,
}

pub fn fermi_christoffels(chart: &Chart, slice: &BoundarySlice) -> Result<FermiChristoffelReport> {
    let xs: Vec<Vec<f64>> = slice.points.iter().map(|p| p.x.clone()).collect();
    let axis = require_fermi(chart, &xs)?;
    let n = chart.n;
    let tan: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
    let metric = chart.metric_fn();
    let geo = PointGeometry::new(n, chart.policy(), &*metric);
    let mut rep =
        FermiChristoffelReport { points: xs.len(), mu_range: (f64::INFINITY, f64::NEG_INFINITY), ..Default::default() };
    for p in &slice.points {
        let x = &p.x;
        let gamma = geo.christoffel(x)?;
        let g = chart.metric(x);
        let mu = p.shape.mu;
        rep.mu_range = (rep.mu_range.0.min(mu), rep.mu_range.1.max(mu));
        let base = x.clone();
        let m2 = metric.clone();
        let tan2 = tan.clone();
        let induced = move |y: &[f64]| {
            let mut z = base.clone();
            for (a, &ax) in tan2.iter().enumerate() {
                z[ax] = y[a];
            }
            let g = m2(&z);
            DMatrix::from_fn(n - 1, n - 1, |a, b| g[(tan2[a], tan2[b])])
        };
        let bgeo = PointGeometry::new(n - 1, StencilPolicy::central(chart.step()), &induced);
        let xb: Vec<f64> = tan.iter().map(|&a| x[a]).collect();
        let tgamma = bgeo.christoffel(&xb)?;
        for (a, &ia) in tan.iter().enumerate() {
            rep.normal_normal = rep.normal_normal.max(gamma.get(&[axis, ia, axis]).abs());
            for (b, &ib) in tan.iter().enumerate() {
                let delta = if a == b { 1.0 } else { 0.0 };
                rep.normal_tangential =
                    rep.normal_tangential.max((gamma.get(&[axis, ia, ib]) - mu * g[(ia, ib)]).abs());
                rep.mixed = rep.mixed.max((gamma.get(&[ib, ia, axis]) + mu * delta).abs());
                for (c, &ic) in tan.iter().enumerate() {
                    rep.intrinsic = rep.intrinsic.max((tgamma.get(&[c, a, b]) - gamma.get(&[ic, ia, ib])).abs());
                }
            }
        }
    }
    Ok(rep)
}

/// Residuals of the normal-derivative identities for a conformal factor `u` with
/// `u_n = -mu + muhat e^{-u}` on a Fermi face.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct NormalDerivativeReport {
    pub points: usize,
    /// `u_n + mu - muhat e^{-u}`: the hypothesis itself.
    pub neumann: f64,
    /// `u_{na} = -mu_a + mu u_a - muhat u_a e^{-u}`.
    pub first: f64,
    /// Third covariant derivative `u_{abn}` against its boundary expression.
    pub second: f64,
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

fn gradient_field<'a>(geo: &'a PointGeometry<'a>, u: &'a ScalarFn) -> impl Fn(&[f64]) -> Tensor + 'a {
    move |y: &[f64]| {
        let d = geo.policy.gradient(&|z: &[f64]| vec![u(z)], y);
        Tensor { n: geo.n, rank: 1, data: d.into_iter().map(|v| v[0]).collect() }
    }
}

pub fn check_normal_derivatives(
    chart: &Chart,
    slice: &BoundarySlice,
    u: ScalarFn,
    muhat: f64,
) -> Result<NormalDerivativeReport> {
    let xs: Vec<Vec<f64>> = slice.points.iter().map(|p| p.x.clone()).collect();
    let axis = require_fermi(chart, &xs)?;
    let n = chart.n;
    let tan: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
    let calc = BoundaryCalculus::new(chart);
    let geo = calc.geo();
    let grad = gradient_field(&geo, &u);
    let hess =
        |y: &[f64]| geo.covariant(&grad, y).unwrap_or_else(|_| Tensor { n, rank: 2, data: vec![f64::NAN; n * n] });
    let mut rep = NormalDerivativeReport { points: xs.len(), ..Default::default() };
    for p in &slice.points {
        let x = &p.x;
        let mu = p.shape.mu;
        let uv = u(x);
        let du = grad(x);
        let h2 = hess(x);
        let h3 = geo.covariant(&hess, x)?;
        check_finite(&h3, x)?;
        let pc = curvature_at(chart, x)?;
        let dmu = calc.dmu(x);
        let hmu = calc.hess_mu(x)?;
        let g = &pc.g;
        let e = (-uv).exp();
        let un = du.data[axis];
        rep.neumann = rep.neumann.max((un + mu - muhat * e).abs());
        let ginv_t = DMatrix::from_fn(n - 1, n - 1, |a, b| pc.ginv[(tan[a], tan[b])]);
        let mut mu_dot_u = 0.0;
        for (a, &ia) in tan.iter().enumerate() {
            for (b, &ib) in tan.iter().enumerate() {
                mu_dot_u += ginv_t[(a, b)] * dmu[ia] * du.data[ib];
            }
        }
        let unn = h2.get(&[axis, axis]);
        let c = -mu + muhat * e;
        for &ia in &tan {
            let ua = du.data[ia];
            let rhs = -dmu[ia] + mu * ua - muhat * ua * e;
            rep.first = rep.first.max((h2.get(&[axis, ia]) - rhs).abs());
            for &ib in &tan {
                let ub = du.data[ib];
                let gab = g[(ia, ib)];
                let rhs = (2.0 * mu - muhat * e) * h2.get(&[ia, ib]) - mu * unn * gab + muhat * ua * ub * e
                    - hmu[(ia, ib)]
                    + dmu[ia] * ub
                    + dmu[ib] * ua
                    - mu_dot_u * gab
                    + pc.riem.get(&[axis, ib, ia, axis]) * c
                    - mu * c * c * gab;
                rep.second = rep.second.max((h3.get(&[ia, ib, axis]) - rhs).abs());
            }
        }
    }
    Ok(rep)
}

/// `g^{ab} Ahat_{ab,n} - 2 mu g^{ab} Ahat_ab` for `ghat = e^{-2u} g` with `u_n = -mu`,
/// where `Ahat = Hess u + du du - |du|^2 g / 2 + A` and derivatives are taken in `g`.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct BoundaryBianchiReport {
    pub points: usize,
    pub neumann: f64,
    pub residual: f64,
}

pub fn check_boundary_bianchi(chart: &Chart, slice: &BoundarySlice, u: ScalarFn) -> Result<BoundaryBianchiReport> {
    let xs: Vec<Vec<f64>> = slice.points.iter().map(|p| p.x.clone()).collect();
    let axis = require_fermi(chart, &xs)?;
    let n = chart.n;
    let tan: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
    let calc = BoundaryCalculus::new(chart);
    let geo = calc.geo();
    let grad = gradient_field(&geo, &u);
    let ahat = |y: &[f64]| -> Tensor {
        let bad = Tensor { n, rank: 2, data: vec![f64::NAN; n * n] };
        let (Ok(h), Ok(a), Ok(ginv)) = (geo.covariant(&grad, y), schouten_at(chart, y), geo.inverse(y)) else {
            return bad;
        };
        let du = grad(y);
        let g = chart.metric(y);
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += ginv[(i, j)] * du.data[i] * du.data[j];
            }
        }
        let mut out = Tensor::zeros(n, 2);
        for i in 0..n {
            for j in 0..n {
                out.set(&[i, j], h.get(&[i, j]) + du.data[i] * du.data[j] - 0.5 * q * g[(i, j)] + a[(i, j)]);
            }
        }
        out
    };
    let mut rep = BoundaryBianchiReport { points: xs.len(), ..Default::default() };
    for p in &slice.points {
        let x = &p.x;
        let mu = p.shape.mu;
        let du = grad(x);
        rep.neumann = rep.neumann.max((du.data[axis] + mu).abs());
        let ah = ahat(x);
        let dah = geo.covariant(&ahat, x)?;
        check_finite(&dah, x)?;
        let ginv = geo.inverse(x)?;
        let mut r = 0.0;
        for &a in &tan {
            for &b in &tan {
                r += ginv[(a, b)] * (dah.get(&[a, b, axis]) - 2.0 * mu * ah.get(&[a, b]));
            }
        }
        rep.residual = rep.residual.max(r.abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::field::{EvenPoly, Radial, RoundSphere, Zero};

    #[test]
    fn flat_half_ball_face_is_totally_geodesic() {
        let chart = Chart::half_ball_flat(3, 9).unwrap();
        let pack = crate::geom::build_curvature(&chart).unwrap();
        let slice = build_boundary(&chart, &pack).unwrap();
        assert!(!slice.points.is_empty());
        for p in &slice.points {
            assert!(p.shape.l.abs().max() < 1e-12 && p.shape.h.abs() < 1e-12);
        }
        let rep = check_boundary_identities(&chart, &slice).unwrap();
        assert!(rep.codazzi < 1e-12 && rep.hessian < 1e-12 && rep.curvature < 1e-12);
        let fc = fermi_christoffels(&chart, &slice).unwrap();
        assert!(fc.normal_tangential < 1e-12 && fc.mixed < 1e-12 && fc.normal_normal < 1e-12);
    }

    #[test]
    fn flat_unit_sphere_has_unit_principal_curvature() {
        let chart = Chart::ball_conformally_flat(3, 41, Arc::new(Zero)).unwrap();
        let x = [0.6, 0.0, 0.8];
        let s = shape_at(&chart, &x).unwrap();
        assert!((s.mu - 1.0).abs() < 1e-14);
        let lfd = sphere_l_fd(&chart, &x).unwrap();
        assert!((&lfd - DMatrix::identity(2, 2)).abs().max() < 1e-4, "{lfd}");
    }

    #[test]
    fn hemisphere_equator_is_totally_geodesic() {
        let chart = Chart::ball_conformally_flat(4, 41, Arc::new(Radial::new(RoundSphere))).unwrap();
        let slice = build_boundary_at(&chart, &sphere_samples(4, 1.0, 5, 3)).unwrap();
        for p in &slice.points {
            assert!(p.shape.mu.abs() < 1e-14);
            let lfd = sphere_l_fd(&chart, &p.x).unwrap();
            assert!(lfd.abs().max() < 1e-4);
        }
    }

    #[test]
    fn radial_ball_satisfies_boundary_predicates_with_equality() {
        let w = Arc::new(Radial::new(EvenPoly(vec![0.0, 0.3, -0.1])));
        let chart = Chart::ball_conformally_flat(4, 41, w).unwrap();
        let slice = build_boundary_at(&chart, &sphere_samples(4, 1.0, 3, 11)).unwrap();
        slice.require_umbilic(1e-12).unwrap();
        let rep = check_boundary_identities(&chart, &slice).unwrap();
        assert!(rep.codazzi < 1e-8, "{rep:?}");
        assert!(rep.curvature < 1e-4, "{rep:?}");
        assert!(rep.normal_derivative < 1e-4, "{rep:?}");
        assert!(rep.t1_gap.abs() < 1e-4 && rep.t2_gap.abs() < 1e-4);
    }

    #[test]
    fn non_umbilic_slice_is_rejected() {
        let metric: crate::geom::MetricFn = Arc::new(|x: &[f64]| {
            let mut g = DMatrix::identity(3, 3);
            g[(0, 0)] = (-2.0 * x[2]).exp();
            g
        });
        let face = crate::geom::fd::Face { axis: 2, at: 0.0, inward: 1.0 };
        let chart = Chart::general(9, vec![-0.2, -0.2, 0.0], vec![0.2, 0.2, 0.4], face, metric).unwrap();
        let slice = build_boundary_at(&chart, &[vec![0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(slice.require_umbilic(1e-6), Err(Error::NotUmbilic { .. })));
    }

    #[test]
    fn non_fermi_chart_is_unsupported() {
        let chart = Chart::ball_conformally_flat(3, 9, Arc::new(Zero)).unwrap();
        let slice = build_boundary_at(&chart, &[vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(fermi_christoffels(&chart, &slice), Err(Error::UnsupportedChart(_))));
    }
}
