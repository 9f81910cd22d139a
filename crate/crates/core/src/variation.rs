//! Finite-difference checks of the first variation of `F_k` and of weighted
//! boundary invariants under conformal perturbations `ghat_t = e^{-2(u + t phi)} g`.

use crate::conformal::boundary_gb4;
use crate::conformal::{
    apply_conformal, integrate_boundary, integrate_volume, sample_nodes, weighted_fk, BallQuadrature, BkForm,
    ConformalState, RadialRule,
};
use crate::error::{Error, Result};
use crate::geom::boundary::shape_at;
use crate::geom::chart::Chart;
use crate::geom::field::{EvenPoly, Radial, ScalarField, ScaledField, SumField};
use crate::geom::pack::schouten_at;
use crate::geom::tensor::{kulkarni_nomizu, orthonormal_frame, Tensor};
use crate::geom::PointGeometry;
use crate::quadrature::pairwise_sum;
use crate::symfun::{cone_membership, newton_tensor, ConeVerdict, SymTensor};
use crate::tolerances::VARIATION_STEPS;
use nalgebra::DMatrix;
use serde::Serialize;
use std::sync::Arc;

/// Variation direction `phi`, optionally projected to `int phi dV = 0`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub phi: Arc<dyn ScalarField>,
    pub volume_preserving: bool,
}

impl Perturbation {
    pub fn new(phi: Arc<dyn ScalarField>) -> Self {
        Self { phi, volume_preserving: false }
    }

    pub fn volume_preserving(phi: Arc<dyn ScalarField>) -> Self {
        Self { phi, volume_preserving: true }
    }

    /// The direction actually used: `phi`, or `phi - mean(phi)` over `ghat`.
    pub fn direction(&self, state: &ConformalState, quad: &BallQuadrature) -> Result<Arc<dyn ScalarField>> {
        if !self.volume_preserving {
            return Ok(self.phi.clone());
        }
        let (int, vol) = integrate_volume(state, quad, &*self.phi)?;
        let shift: Arc<dyn ScalarField> = Arc::new(Radial::new(EvenPoly(vec![-int / vol])));
        Ok(Arc::new(SumField(vec![self.phi.clone(), shift])))
    }
}

#[derive(Debug, Clone)]
pub struct VariationOptions {
    pub quad: BallQuadrature,
    pub form: BkForm,
    /// Decreasing central-difference steps.
    pub steps: Vec<f64>,
    /// Reject perturbed states whose `ghat^{-1} Ahat` leaves the closed cone at a quadrature node.
    pub require_cone: bool,
}

impl Default for VariationOptions {
    fn default() -> Self {
        Self {
            quad: BallQuadrature::radial(RadialRule::Gauss(32)),
            form: BkForm::Umbilic,
            steps: VARIATION_STEPS.to_vec(),
            require_cone: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRow {
    pub step: f64,
    pub derivative: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationReport {
    pub n: usize,
    pub k: usize,
    /// Richardson extrapolation of the two finest central differences.
    pub fd_derivative: f64,
    pub formula_value: f64,
    /// `|fd_derivative - formula_value|`.
    pub residual: f64,
    /// Raw central-difference residual at the finest step, relative to `|formula_value|`
    /// (absolute when the formula vanishes).
    pub relative_residual: f64,
    pub step: f64,
    /// `log(res(h) / res(h')) / log(h / h')` over the two finest raw residuals; `None` at roundoff.
    pub order: Option<f64>,
    pub rows: Vec<StepRow>,
}

fn perturbed(state: &ConformalState, phi: &Arc<dyn ScalarField>, t: f64) -> ConformalState {
    let du: Arc<dyn ScalarField> = Arc::new(ScaledField(t, phi.clone()));
    apply_conformal(&state.chart, Arc::new(SumField(vec![state.u.clone(), du])))
}

fn check_cone(state: &ConformalState, k: usize, quad: &BallQuadrature) -> Result<()> {
    for (x, _) in sample_nodes(state, quad)?.interior {
        let tag = cone_membership(&SymTensor::new(state.endomorphism(&x)?)?.spectrum(), k)?;
        if tag.verdict == ConeVerdict::Outside {
            let index = tag.sigmas.iter().position(|s| *s < 0.0).unwrap_or(0) + 1;
            return Err(Error::ConeViolation { k, index, value: tag.sigmas[index - 1] });
        }
    }
    Ok(())
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::Domain(format!("variation of F_{k} needs 2 <= k <= n = {n}")));
    }
    Ok(())
}

/// Central differences of `value(t)` at each step, compared against `formula`.
fn difference_report(
    n: usize,
    k: usize,
    steps: &[f64],
    formula: f64,
    value: &dyn Fn(f64) -> Result<f64>,
) -> Result<VariationReport> {
    if steps.is_empty() || steps.windows(2).any(|w| w[1] >= w[0]) || steps.iter().any(|h| *h <= 0.0) {
        return Err(Error::Domain("steps must be positive and decreasing".into()));
    }
    let mut rows = Vec::with_capacity(steps.len());
    for &h in steps {
        let d = (value(h)? - value(-h)?) / (2.0 * h);
        rows.push(StepRow { step: h, derivative: d, residual: (d - formula).abs() });
    }
    let last = rows[rows.len() - 1];
    let (fd_derivative, order) = if rows.len() >= 2 {
        let prev = rows[rows.len() - 2];
        let rho = prev.step / last.step;
        let rich = last.derivative + (last.derivative - prev.derivative) / (rho * rho - 1.0);
        let floor = 1e-13 * (1.0 + formula.abs());
        let order =
            (last.residual > floor && prev.residual > floor).then(|| (prev.residual / last.residual).ln() / rho.ln());
        (rich, order)
    } else {
        (last.derivative, None)
    };
    let scale = if formula.abs() > 0.0 { formula.abs() } else { 1.0 };
    Ok(VariationReport {
        n,
        k,
        fd_derivative,
        formula_value: formula,
        residual: (fd_derivative - formula).abs(),
        relative_residual: last.residual / scale,
        step: last.step,
        order,
        rows,
    })
}

/// `d/dt F_k(e^{-2 t phi} ghat)` at `t = 0` by central differences against
/// `(2k - n)(int sigma_k phi dV + oint B^k phi dS)`.
pub fn first_variation_check(
    state: &ConformalState,
    k: usize,
    pert: &Perturbation,
    opts: &VariationOptions,
) -> Result<VariationReport> {
    let n = state.n();
    check_order(n, k)?;
    if k >= 3 && !state.chart.is_conformally_flat() {
        return Err(Error::UnsupportedChart("k >= 3 needs a conformally flat chart".into()));
    }
    let phi = pert.direction(state, &opts.quad)?;
    let weighted = weighted_fk(state, k, &opts.quad, opts.form, Some(&*phi))?;
    let formula = (2 * k) as f64 - n as f64;
    let formula = formula * weighted.total;
    let value = |t: f64| {
        let s = perturbed(state, &phi, t);
        if opts.require_cone {
            check_cone(&s, k, &opts.quad)?;
        }
        Ok(weighted_fk(&s, k, &opts.quad, opts.form, None)?.total)
    };
    difference_report(n, k, &opts.steps, formula, &value)
}

/// `d/dt V(e^{-2 t phi} ghat)` against `-n int phi dV`.
pub fn volume_variation_check(
    state: &ConformalState,
    pert: &Perturbation,
    opts: &VariationOptions,
) -> Result<VariationReport> {
    let n = state.n();
    let phi = pert.direction(state, &opts.quad)?;
    let formula = -(n as f64) * integrate_volume(state, &opts.quad, &*phi)?.0;
    let one = Radial::new(EvenPoly(vec![1.0]));
    let value = |t: f64| Ok(integrate_volume(&perturbed(state, &phi, t), &opts.quad, &one)?.1);
    difference_report(n, 0, &opts.steps, formula, &value)
}

/// Pointwise Euler-Lagrange residuals: `sigma_k(Ahat) - mean` at interior nodes and `B^k(ghat)` on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerLagrangeResidual {
    pub mean_sigma: f64,
    pub interior: Vec<(Vec<f64>, f64)>,
    pub boundary: Vec<(Vec<f64>, f64)>,
    pub max_interior: f64,
    pub max_boundary: f64,
}

pub fn euler_lagrange_residual(
    state: &ConformalState,
    k: usize,
    quad: &BallQuadrature,
    form: BkForm,
) -> Result<EulerLagrangeResidual> {
    check_order(state.n(), k)?;
    let nodes = sample_nodes(state, quad)?;
    let mut sig = Vec::with_capacity(nodes.interior.len());
    let (mut num, mut den) = (Vec::new(), Vec::new());
    for (x, w) in &nodes.interior {
        let s = state.sigma_hat(x, k)?;
        let dv = w * state.volume_density(x);
        num.push(s * dv);
        den.push(dv);
        sig.push((x.clone(), s));
    }
    let mean_sigma = pairwise_sum(&num) / pairwise_sum(&den);
    let interior: Vec<_> = sig.into_iter().map(|(x, s)| (x, s - mean_sigma)).collect();
    let boundary =
        nodes.boundary.iter().map(|(x, _)| Ok((x.clone(), state.bk_hat(x, k, form)?))).collect::<Result<Vec<_>>>()?;
    let max = |v: &[(Vec<f64>, f64)]| v.iter().fold(0.0f64, |m, (_, r)| m.max(r.abs()));
    Ok(EulerLagrangeResidual {
        mean_sigma,
        max_interior: max(&interior),
        max_boundary: max(&boundary),
        interior,
        boundary,
    })
}

/// Boundary scalar invariants of weight `2k - 1`: `L(ghat) = e^{(2k-1)u} L(g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalInvariant {
    /// `mu^{2k-1}`; conformally covariant only for perturbations with vanishing normal derivative.
    MuPower,
    /// The four-dimensional boundary term `L_4`, evaluated on conformally flat charts.
    L4,
}

fn local_invariant_at(state: &ConformalState, x: &[f64], k: usize, which: LocalInvariant) -> Result<f64> {
    let hb = state.boundary_hat(x)?;
    match which {
        LocalInvariant::MuPower => Ok(hb.mu.powi(2 * k as i32 - 1)),
        LocalInvariant::L4 => {
            let n = state.n();
            if n != 4 || k != 2 || !state.chart.is_conformally_flat() {
                return Err(Error::Domain("L_4 needs n = 4, k = 2 on a conformally flat chart".into()));
            }
            let s = shape_at(&state.chart, x)?;
            let c = orthonormal_frame(&s.induced).ok_or_else(|| Error::Geometry { node: x.to_vec() })?;
            let t = &s.tangent * &c;
            let mut e = DMatrix::zeros(n, n);
            e.view_mut((0, 0), (n, n - 1)).copy_from(&t);
            e.column_mut(n - 1).copy_from(&s.normal);
            let eu = state.u.value(x).exp();
            let a = e.transpose() * state.schouten_hat(x)? * &e * (eu * eu);
            let riem = kulkarni_nomizu(&a, &DMatrix::identity(n, n));
            Ok(boundary_gb4(&riem, &hb.l)?.l4)
        }
    }
}

/// `d/dt oint L dS` against `(2k - n) oint L phi dS`.
pub fn local_invariant_variation_check(
    state: &ConformalState,
    k: usize,
    pert: &Perturbation,
    which: LocalInvariant,
    opts: &VariationOptions,
) -> Result<VariationReport> {
    let n = state.n();
    check_order(n, k)?;
    let phi = pert.direction(state, &opts.quad)?;
    let formula = ((2 * k) as f64 - n as f64)
        * integrate_boundary(state, &opts.quad, &|x| Ok(local_invariant_at(state, x, k, which)? * phi.value(x)))?;
    let value = |t: f64| {
        let s = perturbed(state, &phi, t);
        integrate_boundary(&s, &opts.quad, &|x| local_invariant_at(&s, x, k, which))
    };
    difference_report(n, k, &opts.steps, formula, &value)
}

/// Covariant divergence `g^{ik} nabla_k (T_q)_{ij}` of the Newton tensor of `g^{-1} A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub q: usize,
    pub step: f64,
    pub points: usize,
    pub max_divergence: f64,
    /// `max |T_q|` over the points, for scale.
    pub max_tensor: f64,
}

pub fn newton_divergence(chart: &Chart, q: usize, points: &[Vec<f64>]) -> Result<DivergenceReport> {
    let n = chart.n;
    let metric = chart.metric_fn();
    let geo = PointGeometry::new(n, chart.policy(), &*metric);
    let field = |y: &[f64]| {
        let lowered = (|| {
            let g = chart.metric(y);
            let ginv = g.clone().cholesky()?.inverse();
            let a = schouten_at(chart, y).ok()?;
            newton_tensor(&(ginv * a), q).ok().map(|t| g * t)
        })();
        lowered.map(|m| Tensor::from_matrix(&m)).unwrap_or_else(|| Tensor { n, rank: 2, data: vec![f64::NAN; n * n] })
    };
    let mut max_divergence: f64 = 0.0;
    let mut max_tensor: f64 = 0.0;
    for x in points {
        let ginv = geo.inverse(x)?;
        let d = geo.covariant(&field, x)?;
        max_tensor = max_tensor.max(field(x).max_abs());
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for kk in 0..n {
                    s += ginv[(i, kk)] * d.get(&[i, j, kk]);
                }
            }
            if !s.is_finite() {
                return Err(Error::Geometry { node: x.clone() });
            }
            max_divergence = max_divergence.max(s.abs());
        }
    }
    Ok(DivergenceReport { q, step: chart.step(), points: points.len(), max_divergence, max_tensor })
}
