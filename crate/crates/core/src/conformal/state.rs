//! Conformal change `ghat = e^{-2u} g` on a chart and the functionals
//! `F_k = int sigma_k(A) dV + oint B^k dS` by quadrature.

use super::bk::{boundary_bk, BkForm};
use crate::error::{Error, Result};
use crate::geom::boundary::shape_at;
use crate::geom::chart::{BoundaryShape, Chart, ChartKind};
use crate::geom::field::{ScalarField, SumField, Zero};
use crate::geom::geometry::{conformal_schouten, PointGeometry};
use crate::geom::pack::schouten_at;
use crate::geom::tensor::orthonormal_frame;
use crate::quadrature::{pairwise_sum, sphere_area, Rule1d, SphereRule};
use crate::symfun::{sigma, sigma_spectrum};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::sync::Arc;

/// Chart plus conformal factor; every derived field is evaluated on demand.
#[derive(Debug, Clone)]
pub struct ConformalState {
    pub chart: Chart,
    pub u: Arc<dyn ScalarField>,
}

/// Boundary data of `ghat` at one point, in a `ghat`-orthonormal frame.
#[derive(Debug, Clone)]
pub struct HatBoundary {
    pub a_t: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub mu: f64,
    /// `dS_ghat / dS_g`.
    pub area_factor: f64,
    pub umbilic_residual: f64,
}

/// Attach a conformal factor to a chart.
pub fn apply_conformal(chart: &Chart, u: Arc<dyn ScalarField>) -> ConformalState {
    ConformalState { chart: chart.clone(), u }
}

impl ConformalState {
    pub fn n(&self) -> usize {
        self.chart.n
    }

    /// Total exponent `w + u` for conformally flat charts (`ghat = e^{-2(w+u)} delta`).
    pub fn total_exponent(&self) -> Option<Arc<dyn ScalarField>> {
        if !self.chart.is_conformally_flat() {
            return None;
        }
        let w: Arc<dyn ScalarField> = self.chart.w.clone().unwrap_or_else(|| Arc::new(Zero));
        Some(Arc::new(SumField(vec![w, self.u.clone()])))
    }

    pub fn metric_hat(&self, x: &[f64]) -> DMatrix<f64> {
        self.chart.metric(x) * (-2.0 * self.u.value(x)).exp()
    }

    /// `Ahat = Hess_g u + du du - |du|^2 g / 2 + A_g` as a covariant tensor.
    pub fn schouten_hat(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if let Some(v) = self.total_exponent() {
            return Ok(conformal_schouten(&v.gradient(x), &v.hessian(x)));
        }
        let n = self.n();
        let metric = self.chart.metric_fn();
        let geo = PointGeometry::new(n, self.chart.policy(), &*metric);
        let gamma = geo.christoffel(x)?;
        let ginv = geo.inverse(x)?;
        let g = self.chart.metric(x);
        let du = self.u.gradient(x);
        let hu = self.u.hessian(x);
        let a = schouten_at(&self.chart, x)?;
        let q = (DVector::from_row_slice(&du).transpose() * &ginv * DVector::from_row_slice(&du))[(0, 0)];
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let ch: f64 = (0..n).map(|m| gamma.get(&[m, i, j]) * du[m]).sum();
            hu[(i, j)] - ch + du[i] * du[j] - 0.5 * q * g[(i, j)] + a[(i, j)]
        }))
    }

    /// `ghat^{-1} Ahat`.
    pub fn endomorphism(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let ginv = self.metric_hat(x).cholesky().ok_or_else(|| Error::Geometry { node: x.to_vec() })?.inverse();
        Ok(ginv * self.schouten_hat(x)?)
    }

    pub fn sigma_hat(&self, x: &[f64], k: usize) -> Result<f64> {
        sigma(&self.endomorphism(x)?, k)
    }

    /// `dV_ghat / dx`.
    pub fn volume_density(&self, x: &[f64]) -> f64 {
        let g = self.chart.metric(x);
        g.determinant().sqrt() * (-(self.n() as f64) * self.u.value(x)).exp()
    }

    /// `Lhat e^u = u_nu g + L`; in the `ghat`-orthonormal frame `Lhat = e^u (u_nu I + L)`.
    pub fn boundary_hat(&self, x: &[f64]) -> Result<HatBoundary> {
        let n = self.n();
        let s = shape_at(&self.chart, x)?;
        let c = orthonormal_frame(&s.induced).ok_or_else(|| Error::Geometry { node: x.to_vec() })?;
        let uval = self.u.value(x);
        let eu = uval.exp();
        let du = DVector::from_vec(self.u.gradient(x));
        let u_nu = du.dot(&s.normal);
        let l_on = c.transpose() * &s.l * &c;
        let l = (DMatrix::identity(n - 1, n - 1) * u_nu + l_on) * eu;
        let t = &s.tangent * &c;
        let a_t = t.transpose() * self.schouten_hat(x)? * &t * (eu * eu);
        let mu = l.trace() / (n - 1) as f64;
        let umbilic_residual = (&l - DMatrix::identity(n - 1, n - 1) * mu).abs().max();
        Ok(HatBoundary { a_t, l, mu, area_factor: (-((n - 1) as f64) * uval).exp(), umbilic_residual })
    }

    /// `B^k(ghat)` at a boundary point.
    pub fn bk_hat(&self, x: &[f64], k: usize, form: BkForm) -> Result<f64> {
        let b = self.boundary_hat(x)?;
        boundary_bk(&b.a_t, &b.l, self.n(), k, form)
    }
}

/// Radial quadrature family on `[0, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialRule {
    Gauss(usize),
    Simpson(usize),
}

impl RadialRule {
    fn rule(self, a: f64, b: f64) -> Rule1d {
        match self {
            RadialRule::Gauss(m) => Rule1d::gauss_legendre(m, a, b),
            RadialRule::Simpson(m) => Rule1d::simpson(m, a, b),
        }
    }

    fn halved(self) -> Self {
        match self {
            RadialRule::Gauss(m) => RadialRule::Gauss((m / 2).max(2)),
            RadialRule::Simpson(m) => RadialRule::Simpson(((m / 2) + (m / 2) % 2).max(2)),
        }
    }

    /// Algebraic convergence order, when the rule has one.
    pub fn order(self) -> Option<i32> {
        match self {
            RadialRule::Gauss(_) => None,
            RadialRule::Simpson(_) => Some(4),
        }
    }
}

/// Product rule: radial rule times a sphere rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BallQuadrature {
    pub radial: RadialRule,
    pub polar: usize,
    pub azimuth: usize,
    /// Integrate radial data with a single sphere-area factor instead of the angular rule.
    pub radial_only: bool,
}

impl BallQuadrature {
    pub fn new(radial: RadialRule, polar: usize, azimuth: usize) -> Self {
        Self { radial, polar, azimuth, radial_only: false }
    }

    pub fn radial(radial: RadialRule) -> Self {
        Self { radial, polar: 0, azimuth: 0, radial_only: true }
    }

    pub fn coarsened(&self) -> Self {
        Self {
            radial: self.radial.halved(),
            polar: (self.polar / 2).max(2),
            azimuth: (self.azimuth / 2).max(4),
            radial_only: self.radial_only,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct FunctionalValue {
    pub interior: f64,
    pub boundary: f64,
    pub total: f64,
    /// Richardson estimate from the coarsened rule.
    pub error_estimate: f64,
    pub volume: f64,
    pub nodes: usize,
}

fn ball_radius(chart: &Chart) -> Result<f64> {
    match (chart.kind, chart.boundary) {
        (ChartKind::BallConformallyFlat, BoundaryShape::Sphere { radius }) => Ok(radius),
        (ChartKind::HalfBallFlat, _) => Ok(1.0),
        _ => Err(Error::UnsupportedChart(format!("no ball quadrature for {:?}", chart.kind))),
    }
}

/// `F_k(ghat)` with a Richardson error estimate from the coarsened rule.
pub fn functional_fk(state: &ConformalState, k: usize, quad: &BallQuadrature, form: BkForm) -> Result<FunctionalValue> {
    let fine = functional_fk_once(state, k, quad, form)?;
    let coarse = functional_fk_once(state, k, &quad.coarsened(), form)?;
    let diff = (fine.total - coarse.total).abs();
    let error_estimate = match quad.radial.order() {
        Some(p) => diff / (2f64.powi(p) - 1.0),
        None => diff,
    };
    Ok(FunctionalValue { error_estimate, ..fine })
}

/// `F_k(ghat)` on a single rule, without error estimate.
pub fn functional_fk_once(
    state: &ConformalState,
    k: usize,
    quad: &BallQuadrature,
    form: BkForm,
) -> Result<FunctionalValue> {
    weighted_fk(state, k, quad, form, None)
}

/// `int sigma_k phi dV + oint B^k phi dS` of `ghat`; `phi = 1` when no weight is given.
pub fn weighted_fk(
    state: &ConformalState,
    k: usize,
    quad: &BallQuadrature,
    form: BkForm,
    weight: Option<&dyn ScalarField>,
) -> Result<FunctionalValue> {
    let n = state.n();
    let phi = |x: &[f64]| weight.map_or(1.0, |f| f.value(x));
    if quad.radial_only {
        let radius = ball_radius(&state.chart)?;
        return functional_fk_radial(state, k, quad.radial, form, radius, weight);
    }
    let nodes = sample_nodes(state, quad)?;
    let vals = nodes
        .interior
        .par_iter()
        .map(|(x, wgt)| {
            let dv = state.volume_density(x);
            Ok((wgt * state.sigma_hat(x, k)? * dv * phi(x), wgt * dv))
        })
        .collect::<Result<Vec<_>>>()?;
    let interior = pairwise_sum(&vals.iter().map(|v| v.0).collect::<Vec<_>>());
    let volume = pairwise_sum(&vals.iter().map(|v| v.1).collect::<Vec<_>>());
    let bvals = nodes
        .boundary
        .par_iter()
        .map(|(x, wgt)| {
            let hb = state.boundary_hat(x)?;
            Ok(wgt * hb.area_factor * boundary_bk(&hb.a_t, &hb.l, n, k, form)? * phi(x))
        })
        .collect::<Result<Vec<_>>>()?;
    let boundary = pairwise_sum(&bvals);
    Ok(FunctionalValue {
        interior,
        boundary,
        total: interior + boundary,
        error_estimate: 0.0,
        volume,
        nodes: nodes.interior.len() + nodes.boundary.len(),
    })
}

/// Quadrature nodes with weights such that `int f dV_g = sum w f sqrt(det g)` over the
/// interior and `oint f dS_g = sum w f` over the boundary. With `radial_only` the nodes
/// sit on the first axis and carry the full sphere area, which is exact for radial data.
#[derive(Debug, Clone, Default)]
pub struct QuadratureNodes {
    pub interior: Vec<(Vec<f64>, f64)>,
    pub boundary: Vec<(Vec<f64>, f64)>,
}

pub fn sample_nodes(state: &ConformalState, quad: &BallQuadrature) -> Result<QuadratureNodes> {
    let n = state.n();
    let radius = ball_radius(&state.chart)?;
    let rule = quad.radial.rule(0.0, radius);
    let on_axis = |r: f64| {
        let mut x = vec![0.0; n];
        x[0] = r;
        x
    };
    if quad.radial_only {
        if state.chart.kind != ChartKind::BallConformallyFlat {
            return Err(Error::UnsupportedChart("radial nodes need a ball chart".into()));
        }
        let area = sphere_area(n - 1);
        let interior = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(r, wr)| (on_axis(*r), wr * r.powi(n as i32 - 1) * area))
            .collect();
        let xb = on_axis(radius);
        let s = shape_at(&state.chart, &xb)?;
        let wb = area * radius.powi(n as i32 - 1) * s.induced.determinant().sqrt() / jacobian_flat(&s.tangent);
        return Ok(QuadratureNodes { interior, boundary: vec![(xb, wb)] });
    }
    let sphere = SphereRule::new(n, quad.polar, quad.azimuth);
    let half = state.chart.kind == ChartKind::HalfBallFlat;
    let scale = if half { 0.5 } else { 1.0 };
    let mut interior = Vec::with_capacity(rule.len() * sphere.len());
    for (r, wr) in rule.nodes.iter().zip(&rule.weights) {
        for (th, wt) in sphere.points.iter().zip(&sphere.weights) {
            let mut x: Vec<f64> = th.iter().map(|c| c * r).collect();
            if half {
                x[n - 1] = x[n - 1].abs();
            }
            interior.push((x, wr * wt * r.powi(n as i32 - 1) * scale));
        }
    }
    let boundary = boundary_rule(state, quad, radius)?
        .into_iter()
        .map(|(x, w)| {
            let s = shape_at(&state.chart, &x)?;
            let f = s.induced.determinant().sqrt() / jacobian_flat(&s.tangent);
            Ok((x, w * f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadratureNodes { interior, boundary })
}

/// `(int f dV_ghat, V_ghat)`.
pub fn integrate_volume(state: &ConformalState, quad: &BallQuadrature, f: &dyn ScalarField) -> Result<(f64, f64)> {
    let nodes = sample_nodes(state, quad)?;
    let (a, b): (Vec<f64>, Vec<f64>) = nodes
        .interior
        .iter()
        .map(|(x, w)| {
            let dv = w * state.volume_density(x);
            (f.value(x) * dv, dv)
        })
        .unzip();
    Ok((pairwise_sum(&a), pairwise_sum(&b)))
}

/// `oint f dS_ghat`.
pub fn integrate_boundary(
    state: &ConformalState,
    quad: &BallQuadrature,
    f: &dyn Fn(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let nodes = sample_nodes(state, quad)?;
    let n = state.n() as f64;
    let vals = nodes
        .boundary
        .iter()
        .map(|(x, w)| Ok(w * (-(n - 1.0) * state.u.value(x)).exp() * f(x)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&vals))
}

/// Flat area element of the tangent frame, so that `sqrt(det induced) / it` is `dS_g / dS_flat`.
fn jacobian_flat(tangent: &DMatrix<f64>) -> f64 {
    (tangent.transpose() * tangent).determinant().sqrt()
}

/// Quadrature nodes and flat weights on the boundary: the bounding sphere, or the face disc.
fn boundary_rule(state: &ConformalState, quad: &BallQuadrature, radius: f64) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = state.n();
    match state.chart.boundary {
        BoundaryShape::Sphere { radius } => {
            let sphere = SphereRule::new(n, quad.polar, quad.azimuth);
            Ok(sphere
                .points
                .iter()
                .zip(&sphere.weights)
                .map(|(p, w)| (p.iter().map(|c| c * radius).collect(), w * radius.powi(n as i32 - 1)))
                .collect())
        }
        BoundaryShape::Face(f) => {
            let rule = quad.radial.rule(0.0, radius);
            let sphere = SphereRule::new(n - 1, quad.polar, quad.azimuth);
            let mut out = Vec::new();
            for (r, wr) in rule.nodes.iter().zip(&rule.weights) {
                for (th, wt) in sphere.points.iter().zip(&sphere.weights) {
                    let mut x = vec![f.at; n];
                    let mut it = th.iter();
                    for (axis, slot) in x.iter_mut().enumerate() {
                        if axis != f.axis {
                            *slot = it.next().copied().unwrap_or(0.0) * r;
                        }
                    }
                    out.push((x, wr * wt * r.powi(n as i32 - 2)));
                }
            }
            Ok(out)
        }
    }
}

/// Radial fast path: both exponents radial, two distinct eigenvalues of `ghat^{-1} Ahat`
/// (radial `e^{2v}(v'' + v'^2/2)`, tangential `e^{2v}(v'/r - v'^2/2)`).
fn functional_fk_radial(
    state: &ConformalState,
    k: usize,
    radial: RadialRule,
    form: BkForm,
    radius: f64,
    weight: Option<&dyn ScalarField>,
) -> Result<FunctionalValue> {
    let n = state.n();
    let phi = match weight {
        None => None,
        Some(f) => Some(f.radial().ok_or_else(|| Error::UnsupportedChart("radial path needs a radial weight".into()))?),
    };
    let phi = |r: f64| phi.as_ref().map_or(1.0, |p| p.value(r));
    if state.chart.kind != ChartKind::BallConformallyFlat {
        return Err(Error::UnsupportedChart("radial path needs a ball chart".into()));
    }
    let w = state.chart.w.as_ref().and_then(|w| w.radial());
    let u = state.u.radial();
    let (Some(w), Some(u)) = (w, u) else {
        return Err(Error::UnsupportedChart("radial path needs radial w and u".into()));
    };
    let v = |r: f64| (w.value(r) + u.value(r), w.d1(r) + u.d1(r), w.d2(r) + u.d2(r), w.d1_over_r(r) + u.d1_over_r(r));
    let spectrum = |r: f64| {
        let (v0, v1, v2, v1r) = v(r);
        let e = (2.0 * v0).exp();
        let mut lam = vec![e * (v1r - 0.5 * v1 * v1); n];
        lam[0] = e * (v2 + 0.5 * v1 * v1);
        lam
    };
    let area = sphere_area(n - 1);
    let rule = radial.rule(0.0, radius);
    let mut iv = Vec::with_capacity(rule.len());
    let mut vv = Vec::with_capacity(rule.len());
    for (r, wr) in rule.nodes.iter().zip(&rule.weights) {
        let dv = (-(n as f64) * v(*r).0).exp() * r.powi(n as i32 - 1) * area * wr;
        iv.push(sigma_spectrum(&spectrum(*r), k)? * dv * phi(*r));
        vv.push(dv);
    }
    let (v0, v1, _, _) = v(radius);
    let e = v0.exp();
    let mu = e * (1.0 / radius - v1);
    let lam_t = spectrum(radius)[1];
    let at = DMatrix::identity(n - 1, n - 1) * lam_t;
    let l = DMatrix::identity(n - 1, n - 1) * mu;
    let b = boundary_bk(&at, &l, n, k, form)?;
    let boundary = b * (-((n - 1) as f64) * v0).exp() * radius.powi(n as i32 - 1) * area * phi(radius);
    let interior = pairwise_sum(&iv);
    Ok(FunctionalValue {
        interior,
        boundary,
        total: interior + boundary,
        error_estimate: 0.0,
        volume: pairwise_sum(&vv),
        nodes: rule.len() + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::field::{EvenPoly, Radial, RoundSphere};
    use std::f64::consts::PI;

    fn hemisphere() -> Chart {
        Chart::ball_conformally_flat(4, 21, Arc::new(Radial::new(RoundSphere))).unwrap()
    }

    #[test]
    fn identity_change_keeps_schouten() {
        let chart = hemisphere();
        let st = apply_conformal(&chart, Arc::new(Zero));
        let x = [0.2, -0.1, 0.3, 0.0];
        let a = schouten_at(&chart, &x).unwrap();
        assert!((st.schouten_hat(&x).unwrap() - a).abs().max() < 1e-14);
        let e = st.endomorphism(&x).unwrap();
        assert!((e - DMatrix::identity(4, 4) * 0.5).abs().max() < 1e-12);
    }

    #[test]
    fn constant_shift_scales_volume() {
        let chart = hemisphere();
        let c = 0.3;
        let st = apply_conformal(&chart, Arc::new(Radial::new(EvenPoly(vec![c]))));
        let x = [0.1, 0.1, 0.1, 0.1];
        let a = schouten_at(&chart, &x).unwrap();
        assert!((st.schouten_hat(&x).unwrap() - a).abs().max() < 1e-14);
        let q = BallQuadrature::radial(RadialRule::Gauss(20));
        let base = functional_fk_once(&apply_conformal(&chart, Arc::new(Zero)), 2, &q, BkForm::Umbilic).unwrap();
        let shifted = functional_fk_once(&st, 2, &q, BkForm::Umbilic).unwrap();
        assert!((shifted.volume - (-4.0 * c).exp() * base.volume).abs() < 1e-12);
    }

    #[test]
    fn round_trip_to_flat_has_zero_schouten() {
        let chart = hemisphere();
        let st = apply_conformal(
            &chart,
            Arc::new(crate::geom::field::ScaledField(-1.0, Arc::new(Radial::new(RoundSphere)))),
        );
        assert!(st.schouten_hat(&[0.3, 0.2, -0.1, 0.4]).unwrap().abs().max() < 1e-14);
    }

    #[test]
    fn hemisphere_functional_radial_and_product_paths() {
        let st = apply_conformal(&hemisphere(), Arc::new(Zero));
        let r = functional_fk(&st, 2, &BallQuadrature::radial(RadialRule::Gauss(24)), BkForm::Umbilic).unwrap();
        assert!((r.total - 2.0 * PI * PI).abs() < 1e-10, "{r:?}");
        assert!(r.boundary.abs() < 1e-14);
        let p =
            functional_fk_once(&st, 2, &BallQuadrature::new(RadialRule::Gauss(8), 12, 24), BkForm::Umbilic).unwrap();
        assert!((p.total - r.total).abs() < 1e-6 * r.total, "{p:?}");
    }

    #[test]
    fn flat_half_ball_functional_vanishes() {
        let chart = Chart::half_ball_flat(4, 5).unwrap();
        let st = apply_conformal(&chart, Arc::new(Zero));
        for k in 1..=3 {
            let f = functional_fk_once(&st, k, &BallQuadrature::new(RadialRule::Gauss(4), 14, 16), BkForm::Umbilic)
                .unwrap();
            assert_eq!(f.total, 0.0);
            assert!((f.volume - PI * PI / 4.0).abs() < 1e-10, "{}", f.volume);
        }
    }

    #[test]
    fn hemisphere_boundary_is_totally_geodesic() {
        let st = apply_conformal(&hemisphere(), Arc::new(Zero));
        let hb = st.boundary_hat(&[0.0, 0.6, 0.0, 0.8]).unwrap();
        assert!(hb.mu.abs() < 1e-14 && hb.umbilic_residual < 1e-14);
    }
}
