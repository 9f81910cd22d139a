//! Radial reduction on the unit ball with `g = e^{-2w(r)} delta`.
//!
//! For radial `u`, `g^{-1} Ahat` has a radial eigenvalue `e^{2w}(v'' + v'^2/2)` and an
//! `(n-1)`-fold tangential one `e^{2w}(v'/r - v'^2/2)`, `v = w + u`. The unknowns are
//! `u` on the grid `r_j = j h` plus one ghost value at each end.

use crate::error::{Error, Result};
use crate::geom::field::RadialProfile;
use crate::quadrature::sphere_area;
use crate::symfun::{binomial, cone_membership, ConeVerdict, Spectrum};
use crate::tolerances::THETA_MIN_EIGENVALUE;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Right-hand side `f(r) e^{a u}`.
#[derive(Clone)]
pub struct Target {
    pub f: RadialFn,
    pub exponent: f64,
    pub label: String,
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Target({}, exponent {})", self.label, self.exponent)
    }
}

impl Target {
    pub fn constant(c: f64) -> Self {
        Self { f: Arc::new(move |_| c), exponent: 0.0, label: format!("{c}") }
    }

    /// `c e^{-2u}`.
    pub fn exp_minus(c: f64) -> Self {
        Self { f: Arc::new(move |_| c), exponent: -2.0, label: format!("{c} e^(-2u)") }
    }

    /// `c e^{2u}`.
    pub fn exp_plus(c: f64) -> Self {
        Self { f: Arc::new(move |_| c), exponent: 2.0, label: format!("{c} e^(2u)") }
    }

    pub fn profile(f: RadialFn, exponent: f64, label: &str) -> Self {
        Self { f, exponent, label: label.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// The target equation itself; no path parameter.
    Sigma,
    /// `sigma_k^{1/k}(Ahat^t) = f e^{2u}`, `t` from `-Theta` to 1.
    Pos,
    /// The nonlocal deformation in dimension four, `t` from 0 to 1.
    Defm,
    /// `sigma_k^{1/k}(Ahat + (1-t)/2 sigma_{k-1}^{1/(k-1)}(Ahat) g) = f e^{2u}`, `t` from `-Theta` to 1.
    Lcf,
}

/// Precomputed background data on the grid.
#[derive(Debug, Clone)]
struct Grid {
    r: Vec<f64>,
    h: f64,
    e2w: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
    w1r: Vec<f64>,
    /// `dV_g` weights (composite Simpson when the interval count is even, else trapezoid).
    dv: Vec<f64>,
    mu_g: f64,
    ew_boundary: f64,
}

#[derive(Clone)]
pub struct RadialProblem {
    pub n: usize,
    pub k: usize,
    pub w: Arc<dyn RadialProfile>,
    pub target: Target,
    pub mu_hat: f64,
    pub nodes: usize,
    grid: Grid,
}

impl fmt::Debug for RadialProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProblem")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("w", &self.w)
            .field("target", &self.target)
            .field("mu_hat", &self.mu_hat)
            .field("nodes", &self.nodes)
            .finish()
    }
}

fn radial_weights(nodes: usize) -> Vec<f64> {
    let m = nodes - 1;
    let h = 1.0 / m as f64;
    if m.is_multiple_of(2) {
        (0..nodes)
            .map(|j| {
                let c = if j == 0 || j == m {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    } else {
        (0..nodes).map(|j| if j == 0 || j == m { 0.5 * h } else { h }).collect()
    }
}

/// `(sigma_j, d/d lambda_r, d/d lambda_t)` of the spectrum `(lambda_r, lambda_t x (n-1))`,
/// the tangential derivative taken along the common value.
fn sigma_two_valued(lr: f64, lt: f64, n: usize, j: usize) -> (f64, f64, f64) {
    if j == 0 {
        return (1.0, 0.0, 0.0);
    }
    let m = n - 1;
    let pw = |e: i32| if e < 0 { 0.0 } else { lt.powi(e) };
    let j = j as i32;
    let a = binomial(m, j as usize);
    let b = binomial(m, j as usize - 1);
    let s = a * pw(j) + lr * b * pw(j - 1);
    let dr = b * pw(j - 1);
    let dt = a * j as f64 * pw(j - 1) + lr * b * (j - 1) as f64 * pw(j - 2);
    (s, dr, dt)
}

fn full_spectrum(lr: f64, lt: f64, n: usize) -> Vec<f64> {
    let mut v = vec![lt; n];
    v[0] = lr;
    v
}

/// Two-valued spectrum of `g^{-1} Ahat^t` at radius `r` with `Ahat^t = Ahat + (1-t)/2 sigma_1(Ahat) g`.
pub fn radial_hessian_spectrum(
    u: &dyn RadialProfile,
    w: &dyn RadialProfile,
    r: f64,
    t: f64,
    n: usize,
) -> Result<Spectrum> {
    let e = (2.0 * w.value(r)).exp();
    let v1 = w.d1(r) + u.d1(r);
    let v2 = w.d2(r) + u.d2(r);
    let v1r = w.d1_over_r(r) + u.d1_over_r(r);
    let lr = e * (v2 + 0.5 * v1 * v1);
    let lt = e * (v1r - 0.5 * v1 * v1);
    let s = 0.5 * (1.0 - t) * (lr + (n - 1) as f64 * lt);
    let vals = full_spectrum(lr + s, lt + s, n);
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite spectrum at r = {r}")));
    }
    Spectrum::new(vals)
}

/// Mapped `(lambda_r, lambda_t)` and the Jacobian of the map.
type ShiftMap = ((f64, f64), [[f64; 2]; 2]);

/// Equation and path data at which residuals are assembled.
#[derive(Debug, Clone)]
pub struct PathSpec {
    pub kind: PathKind,
    pub theta: f64,
    /// First value of the path parameter.
    pub start: f64,
    /// Node values of the coefficient on the right-hand side.
    pub forcing: Vec<f64>,
    pub exponent: f64,
    /// `V_g` with the grid weights.
    pub volume: f64,
    /// Recompute the `pos`/`lcf` forcing at every `t` from the background, so `u = 0` solves the whole path.
    pub tracks_background: bool,
}

/// `zeta(t)`: smoothstep `3s^2 - 2s^3` in `s = 2t`, equal to 1 for `t >= 1/2`.
pub fn zeta(t: f64) -> (f64, f64) {
    let s = (2.0 * t).clamp(0.0, 1.0);
    let ds = if (0.0..=0.5).contains(&t) { 2.0 } else { 0.0 };
    (3.0 * s * s - 2.0 * s * s * s, ds * 6.0 * s * (1.0 - s))
}

/// Residual and Jacobian at one state, with the cone margin and the per-node spectra.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub residual: DVector<f64>,
    pub jacobian: Option<DMatrix<f64>>,
    pub cone_margin: f64,
    /// `(lambda_r, lambda_t)` of the operator argument at each node.
    pub spectra: Vec<(f64, f64)>,
}

impl RadialProblem {
    pub fn new(
        n: usize,
        k: usize,
        w: Arc<dyn RadialProfile>,
        target: Target,
        mu_hat: f64,
        nodes: usize,
    ) -> Result<Self> {
        if n < 3 || k == 0 || k > n {
            return Err(Error::Domain(format!("need n >= 3 and 1 <= k <= n, got n = {n}, k = {k}")));
        }
        if nodes < 5 {
            return Err(Error::Domain(format!("need at least 5 nodes, got {nodes}")));
        }
        let m = nodes - 1;
        let h = 1.0 / m as f64;
        let r: Vec<f64> = (0..nodes).map(|j| j as f64 * h).collect();
        for &x in &r {
            let fx = (target.f)(x);
            if fx.is_nan() || fx <= 0.0 {
                return Err(Error::Domain(format!("target must be positive, f({x}) = {fx}")));
            }
        }
        let area = sphere_area(n - 1);
        let q = radial_weights(nodes);
        let dv = r
            .iter()
            .zip(&q)
            .map(|(x, qw)| qw * area * x.powi(n as i32 - 1) * (-(n as f64) * w.value(*x)).exp())
            .collect();
        let ew_boundary = w.value(1.0).exp();
        let grid = Grid {
            e2w: r.iter().map(|x| (2.0 * w.value(*x)).exp()).collect(),
            w1: r.iter().map(|x| w.d1(*x)).collect(),
            w2: r.iter().map(|x| w.d2(*x)).collect(),
            w1r: r.iter().map(|x| w.d1_over_r(*x)).collect(),
            dv,
            mu_g: ew_boundary * (1.0 - w.d1(1.0)),
            ew_boundary,
            r,
            h,
        };
        Ok(Self { n, k, w, target, mu_hat, nodes, grid })
    }

    pub fn radii(&self) -> &[f64] {
        &self.grid.r
    }

    pub fn step(&self) -> f64 {
        self.grid.h
    }

    pub fn unknowns(&self) -> usize {
        self.nodes + 2
    }

    /// Mean curvature of the boundary sphere in `g`.
    pub fn mu_g(&self) -> f64 {
        self.grid.mu_g
    }

    /// `dV_g` weights of the grid nodes.
    pub fn volume_weights(&self) -> &[f64] {
        &self.grid.dv
    }

    /// Unknown vector (with ghosts) sampling a profile.
    pub fn sample(&self, u: &dyn RadialProfile) -> DVector<f64> {
        let h = self.grid.h;
        DVector::from_fn(self.unknowns(), |i, _| u.value((i as f64 - 1.0) * h))
    }

    pub fn constant(&self, c: f64) -> DVector<f64> {
        DVector::from_element(self.unknowns(), c)
    }

    /// Node values without the ghosts.
    pub fn interior<'a>(&self, u: &'a DVector<f64>) -> &'a [f64] {
        &u.as_slice()[1..=self.nodes]
    }

    /// Eigenvalues of `g^{-1} A_g` at node `j`.
    pub fn background_spectrum(&self, j: usize) -> (f64, f64) {
        let g = &self.grid;
        let e = g.e2w[j];
        let (w1, w2, w1r) = (g.w1[j], g.w2[j], g.w1r[j]);
        (e * (w2 + 0.5 * w1 * w1), e * (w1r - 0.5 * w1 * w1))
    }

    /// Path data, including `Theta` and the start forcing for `pos` and `lcf`.
    pub fn path(&self, kind: PathKind) -> Result<PathSpec> {
        let volume: f64 = self.grid.dv.iter().sum();
        let target: Vec<f64> = self.grid.r.iter().map(|x| (self.target.f)(*x)).collect();
        match kind {
            PathKind::Sigma => Ok(PathSpec {
                kind,
                theta: 0.0,
                start: 1.0,
                forcing: target,
                exponent: self.target.exponent,
                volume,
                tracks_background: false,
            }),
            PathKind::Defm => {
                if self.n != 4 || self.k != 2 {
                    return Err(Error::Domain("the nonlocal deformation is set up for n = 4, k = 2".into()));
                }
                Ok(PathSpec {
                    kind,
                    theta: 0.0,
                    start: 0.0,
                    forcing: target,
                    exponent: self.target.exponent,
                    volume,
                    tracks_background: false,
                })
            }
            PathKind::Pos | PathKind::Lcf => {
                if kind == PathKind::Lcf && self.k < 2 {
                    return Err(Error::Domain("the lcf path needs k >= 2".into()));
                }
                let theta = self.select_theta(kind)?;
                let forcing =
                    (0..self.nodes).map(|j| self.background_forcing(kind, -theta, j)).collect::<Result<Vec<_>>>()?;
                Ok(PathSpec { kind, theta, start: -theta, forcing, exponent: 2.0, volume, tracks_background: false })
            }
        }
    }

    /// `pos` or `lcf` path whose forcing follows the background tensor along `t`.
    pub fn background_path(&self, kind: PathKind) -> Result<PathSpec> {
        if !matches!(kind, PathKind::Pos | PathKind::Lcf) {
            return Err(Error::Domain("background tracking applies to the pos and lcf paths".into()));
        }
        let mut path = self.path(kind)?;
        path.tracks_background = true;
        Ok(path)
    }

    fn background_forcing(&self, kind: PathKind, t: f64, j: usize) -> Result<f64> {
        let (lr, lt) = self.background_spectrum(j);
        let (sr, st) = self.shift_map(kind, t, lr, lt)?.0;
        let s = sigma_two_valued(sr, st, self.n, self.k).0;
        if s <= 0.0 {
            return Err(Error::ConeViolation { k: self.k, index: self.k, value: s });
        }
        Ok(s.powf(1.0 / self.k as f64))
    }

    /// Smallest positive multiple of 5 making every eigenvalue of the start tensor at least
    /// `THETA_MIN_EIGENVALUE` on the grid.
    fn select_theta(&self, kind: PathKind) -> Result<f64> {
        for step in 1..=2000 {
            let theta = 5.0 * step as f64;
            let mut ok = true;
            for j in 0..self.nodes {
                let (lr, lt) = self.background_spectrum(j);
                let ((sr, st), _) = self.shift_map(kind, -theta, lr, lt)?;
                if sr.min(st) < THETA_MIN_EIGENVALUE {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(theta);
            }
        }
        Err(Error::Domain("no Theta up to 10^4 makes the start tensor positive".into()))
    }

    /// The path's pointwise map `lambdahat -> lambda` and its 2x2 Jacobian.
    fn shift_map(&self, kind: PathKind, t: f64, lr: f64, lt: f64) -> Result<ShiftMap> {
        let n = self.n;
        let s = 0.5 * (1.0 - t);
        match kind {
            PathKind::Sigma | PathKind::Defm => Ok(((lr, lt), [[1.0, 0.0], [0.0, 1.0]])),
            PathKind::Pos => {
                let m = (n - 1) as f64;
                let s1 = lr + m * lt;
                Ok(((lr + s * s1, lt + s * s1), [[1.0 + s, s * m], [s, 1.0 + s * m]]))
            }
            PathKind::Lcf => {
                let p = self.k - 1;
                let (sp, dr, dt) = sigma_two_valued(lr, lt, n, p);
                if sp <= 0.0 {
                    return Err(Error::ConeViolation { k: p, index: p, value: sp });
                }
                let q = sp.powf(1.0 / p as f64);
                let dq = q / (p as f64 * sp);
                Ok(((lr + s * q, lt + s * q), [[1.0 + s * dq * dr, s * dq * dt], [s * dq * dr, 1.0 + s * dq * dt]]))
            }
        }
    }

    fn defm_shift(&self, t: f64, j: usize, volume: f64) -> (f64, f64) {
        let (z, _) = zeta(t);
        let c = volume.powf(0.4) / 6f64.sqrt();
        let (ar, at) = self.background_spectrum(j);
        ((1.0 - z) * (c - ar), (1.0 - z) * (c - at))
    }

    /// `int e^{-5u} dV_g` over the grid.
    pub fn nonlocal_integral(&self, u: &DVector<f64>) -> f64 {
        self.interior(u).iter().zip(&self.grid.dv).map(|(x, w)| w * (-5.0 * x).exp()).sum()
    }

    /// `u'` and `u''` at node `j` by central differences.
    fn derivatives(&self, u: &DVector<f64>, j: usize) -> (f64, f64) {
        let h = self.grid.h;
        let (um, u0, up) = (u[j], u[j + 1], u[j + 2]);
        ((up - um) / (2.0 * h), (up - 2.0 * u0 + um) / (h * h))
    }

    /// `lambdahat` at node `j` with its derivatives in `(u', u'')`.
    fn hat_spectrum(&self, u: &DVector<f64>, j: usize) -> ((f64, f64), [[f64; 2]; 2]) {
        let g = &self.grid;
        let (d1, d2) = self.derivatives(u, j);
        let e = g.e2w[j];
        let v1 = g.w1[j] + d1;
        let v2 = g.w2[j] + d2;
        let (v1r, dv1r_d1, dv1r_d2) =
            if j == 0 { (g.w1r[j] + d2, 0.0, 1.0) } else { (g.w1r[j] + d1 / g.r[j], 1.0 / g.r[j], 0.0) };
        let lr = e * (v2 + 0.5 * v1 * v1);
        let lt = e * (v1r - 0.5 * v1 * v1);
        ((lr, lt), [[e * v1, e], [e * (dv1r_d1 - v1), e * dv1r_d2]])
    }

    /// `lambdahat` of `g^{-1} Ahat` at node `j` (no path shift).
    pub fn hat_spectrum_at(&self, u: &DVector<f64>, j: usize) -> (f64, f64) {
        self.hat_spectrum(u, j).0
    }

    /// Full residual evaluation; fails with `NodeCone` when the operator argument leaves the cone.
    pub fn evaluate(&self, path: &PathSpec, t: f64, u: &DVector<f64>, with_jacobian: bool) -> Result<Evaluation> {
        if u.len() != self.unknowns() {
            return Err(Error::DimensionMismatch { expected: self.unknowns(), got: u.len() });
        }
        let (n, k, nodes) = (self.n, self.k, self.nodes);
        let h = self.grid.h;
        let dim = self.unknowns();
        let mut res = DVector::zeros(dim);
        let mut jac = with_jacobian.then(|| DMatrix::zeros(dim, dim));
        res[0] = (u[2] - u[0]) / (2.0 * h);
        if let Some(j) = jac.as_mut() {
            j[(0, 2)] = 1.0 / (2.0 * h);
            j[(0, 0)] = -1.0 / (2.0 * h);
        }
        let (z, _) = zeta(t);
        let nonlocal = (path.kind == PathKind::Defm).then(|| self.nonlocal_integral(u));
        let mut margin = f64::INFINITY;
        let mut spectra = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let ((hr, ht), dhat) = self.hat_spectrum(u, j);
            let ((mut lr, mut lt), dmap) = match self.shift_map(path.kind, t, hr, ht) {
                Ok(v) => v,
                Err(_) => return Err(Error::NodeCone { node: j, spectrum: full_spectrum(hr, ht, n) }),
            };
            if path.kind == PathKind::Defm {
                let (sr, st) = self.defm_shift(t, j, path.volume);
                lr += sr;
                lt += st;
            }
            let spec = Spectrum::new(full_spectrum(lr, lt, n))?;
            let tag = cone_membership(&spec, k)?;
            if tag.verdict != ConeVerdict::Inside {
                return Err(Error::NodeCone { node: j, spectrum: spec.values().to_vec() });
            }
            if path.kind == PathKind::Lcf {
                let lower = cone_membership(&Spectrum::new(full_spectrum(hr, ht, n))?, k - 1)?;
                if lower.verdict != ConeVerdict::Inside {
                    return Err(Error::NodeCone { node: j, spectrum: full_spectrum(hr, ht, n) });
                }
            }
            margin = margin.min(tag.margin(spec.max_abs()));
            spectra.push((lr, lt));
            let (sk, dr, dt) = sigma_two_valued(lr, lt, n, k);
            let f = sk.powf(1.0 / k as f64);
            let df = f / (k as f64 * sk);
            let uj = u[j + 1];
            let forcing =
                if path.tracks_background { self.background_forcing(path.kind, t, j)? } else { path.forcing[j] };
            let (rhs, drhs) = match path.kind {
                PathKind::Defm => {
                    let i = nonlocal.unwrap_or(0.0);
                    let local = z * forcing * (path.exponent * uj).exp();
                    ((1.0 - t) * i.powf(0.4) + local, path.exponent * local)
                }
                _ => {
                    let v = forcing * (path.exponent * uj).exp();
                    (v, path.exponent * v)
                }
            };
            res[j + 1] = f - rhs;
            if let Some(jm) = jac.as_mut() {
                // dF/d(u', u'') through lambda <- lambdahat <- (u', u'')
                let gr = df * dr;
                let gt = df * dt;
                let dhr = [gr * dmap[0][0] + gt * dmap[1][0], gr * dmap[0][1] + gt * dmap[1][1]];
                let c1 = dhr[0] * dhat[0][0] + dhr[1] * dhat[1][0];
                let c2 = dhr[0] * dhat[0][1] + dhr[1] * dhat[1][1];
                let row = j + 1;
                jm[(row, j)] += -c1 / (2.0 * h) + c2 / (h * h);
                jm[(row, j + 1)] += -2.0 * c2 / (h * h) - drhs;
                jm[(row, j + 2)] += c1 / (2.0 * h) + c2 / (h * h);
                if let Some(i) = nonlocal {
                    let coef = (1.0 - t) * 0.4 * i.powf(-0.6);
                    for (m, w) in self.grid.dv.iter().enumerate() {
                        jm[(row, m + 1)] -= coef * (-5.0 * w * (-5.0 * u[m + 1]).exp());
                    }
                }
            }
        }
        let last = dim - 1;
        let ew = self.grid.ew_boundary;
        let un = -ew * (u[last] - u[last - 2]) / (2.0 * h);
        res[last] = match path.kind {
            PathKind::Sigma => un + self.grid.mu_g - self.mu_hat * (-u[last - 1]).exp(),
            _ => un,
        };
        if let Some(jm) = jac.as_mut() {
            jm[(last, last)] = -ew / (2.0 * h);
            jm[(last, last - 2)] = ew / (2.0 * h);
            if path.kind == PathKind::Sigma {
                jm[(last, last - 1)] = self.mu_hat * (-u[last - 1]).exp();
            }
        }
        Ok(Evaluation { residual: res, jacobian: jac, cone_margin: margin, spectra })
    }
}

/// Residual vector: center row `u'(0)`, one row per node, then the boundary row.
pub fn assemble_residual(problem: &RadialProblem, path: &PathSpec, t: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(problem.evaluate(path, t, u, false)?.residual)
}

/// Analytic Jacobian of [`assemble_residual`].
pub fn linearized_operator(problem: &RadialProblem, path: &PathSpec, t: f64, u: &DVector<f64>) -> Result<DMatrix<f64>> {
    Ok(problem.evaluate(path, t, u, true)?.jacobian.expect("requested"))
}

/// Fourth-order central-difference Jacobian, for validation.
pub fn fd_jacobian(
    problem: &RadialProblem,
    path: &PathSpec,
    t: f64,
    u: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>> {
    let dim = problem.unknowns();
    let mut out = DMatrix::zeros(dim, dim);
    let at = |c: usize, o: f64| {
        let mut v = u.clone();
        v[c] += o * step;
        assemble_residual(problem, path, t, &v)
    };
    for c in 0..dim {
        let d = (at(c, -2.0)? - at(c, -1.0)? * 8.0 + at(c, 1.0)? * 8.0 - at(c, 2.0)?) / (12.0 * step);
        out.set_column(c, &d);
    }
    Ok(out)
}
