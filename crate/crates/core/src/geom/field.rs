//! Smooth scalar fields with analytic first and second derivatives.

use nalgebra::DMatrix;
use std::fmt::Debug;
use std::sync::Arc;

/// Radial profile `p(r)` with derivatives.
pub trait RadialProfile: Send + Sync + Debug {
    fn value(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;
    /// `p'(r)/r`, with the limit `p''(0)` at the origin.
    fn d1_over_r(&self, r: f64) -> f64 {
        if r.abs() < 1e-8 {
            self.d2(r)
        } else {
            self.d1(r) / r
        }
    }
}

/// Conformal exponent of the round sphere in the ball model: `e^{-w} = 2/(1+r^2)`.
#[derive(Debug, Clone, Copy)]
pub struct RoundSphere;

impl RadialProfile for RoundSphere {
    fn value(&self, r: f64) -> f64 {
        ((1.0 + r * r) / 2.0).ln()
    }
    fn d1(&self, r: f64) -> f64 {
        2.0 * r / (1.0 + r * r)
    }
    fn d2(&self, r: f64) -> f64 {
        let s = 1.0 + r * r;
        2.0 * (1.0 - r * r) / (s * s)
    }
    fn d1_over_r(&self, r: f64) -> f64 {
        2.0 / (1.0 + r * r)
    }
}

/// `sum_j c_j r^{2j}`.
#[derive(Debug, Clone)]
pub struct EvenPoly(pub Vec<f64>);

impl RadialProfile for EvenPoly {
    fn value(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.0.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
    }
    fn d1(&self, r: f64) -> f64 {
        r * self.d1_over_r(r)
    }
    fn d2(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c * (2 * j) as f64 * (2 * j - 1) as f64 * r2.powi(j as i32 - 1))
            .sum()
    }
    fn d1_over_r(&self, r: f64) -> f64 {
        let r2 = r * r;
        self.0.iter().enumerate().skip(1).map(|(j, c)| c * (2 * j) as f64 * r2.powi(j as i32 - 1)).sum()
    }
}

/// Sum of profiles.
#[derive(Debug, Clone)]
pub struct SumProfile(pub Vec<Arc<dyn RadialProfile>>);

impl RadialProfile for SumProfile {
    fn value(&self, r: f64) -> f64 {
        self.0.iter().map(|p| p.value(r)).sum()
    }
    fn d1(&self, r: f64) -> f64 {
        self.0.iter().map(|p| p.d1(r)).sum()
    }
    fn d2(&self, r: f64) -> f64 {
        self.0.iter().map(|p| p.d2(r)).sum()
    }
    fn d1_over_r(&self, r: f64) -> f64 {
        self.0.iter().map(|p| p.d1_over_r(r)).sum()
    }
}

/// `c * p(r)`.
#[derive(Debug, Clone)]
pub struct ScaledProfile(pub f64, pub Arc<dyn RadialProfile>);

impl RadialProfile for ScaledProfile {
    fn value(&self, r: f64) -> f64 {
        self.0 * self.1.value(r)
    }
    fn d1(&self, r: f64) -> f64 {
        self.0 * self.1.d1(r)
    }
    fn d2(&self, r: f64) -> f64 {
        self.0 * self.1.d2(r)
    }
    fn d1_over_r(&self, r: f64) -> f64 {
        self.0 * self.1.d1_over_r(r)
    }
}

/// Scalar field on R^n.
pub trait ScalarField: Send + Sync + Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
    /// The radial profile, when the field depends on |x| only.
    fn radial(&self) -> Option<Arc<dyn RadialProfile>> {
        None
    }
}

/// `x -> p(|x|)`.
#[derive(Debug, Clone)]
pub struct Radial(pub Arc<dyn RadialProfile>);

impl Radial {
    pub fn new(p: impl RadialProfile + 'static) -> Self {
        Self(Arc::new(p))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ScalarField for Radial {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(norm(x))
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let q = self.0.d1_over_r(norm(x));
        x.iter().map(|v| q * v).collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let r = norm(x);
        let q = self.0.d1_over_r(r);
        let mut h = DMatrix::identity(n, n) * q;
        if r > 1e-8 {
            let c = (self.0.d2(r) - q) / (r * r);
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += c * x[i] * x[j];
                }
            }
        }
        h
    }
    fn radial(&self) -> Option<Arc<dyn RadialProfile>> {
        Some(self.0.clone())
    }
}

/// Polynomial `sum_t c_t x^{e_t}` in n variables.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub terms: Vec<(f64, Vec<u32>)>,
}

fn mono(x: &[f64], e: &[u32], di: Option<usize>, dj: Option<usize>) -> f64 {
    let mut c = 1.0;
    let mut p = 1.0;
    for (i, (&xi, &ei)) in x.iter().zip(e).enumerate() {
        let mut k = ei as i32;
        for d in [di, dj].into_iter().flatten() {
            if d == i {
                c *= k as f64;
                k -= 1;
            }
        }
        if k < 0 {
            return 0.0;
        }
        p *= xi.powi(k);
    }
    c * p
}

impl ScalarField for Polynomial {
    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, e)| c * mono(x, e, None, None)).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| self.terms.iter().map(|(c, e)| c * mono(x, e, Some(i), None)).sum()).collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        DMatrix::from_fn(n, n, |i, j| self.terms.iter().map(|(c, e)| c * mono(x, e, Some(i), Some(j))).sum())
    }
}

/// Identically zero field.
#[derive(Debug, Clone, Copy)]
pub struct Zero;

impl ScalarField for Zero {
    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(x.len(), x.len())
    }
    fn radial(&self) -> Option<Arc<dyn RadialProfile>> {
        Some(Arc::new(EvenPoly(vec![])))
    }
}

/// Sum of fields.
#[derive(Debug, Clone)]
pub struct SumField(pub Vec<Arc<dyn ScalarField>>);

impl ScalarField for SumField {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|f| f.value(x)).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for f in &self.0 {
            g.iter_mut().zip(f.gradient(x)).for_each(|(a, b)| *a += b);
        }
        g
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.0.iter().fold(DMatrix::zeros(x.len(), x.len()), |acc, f| acc + f.hessian(x))
    }
    fn radial(&self) -> Option<Arc<dyn RadialProfile>> {
        let parts: Option<Vec<_>> = self.0.iter().map(|f| f.radial()).collect();
        parts.map(|p| Arc::new(SumProfile(p)) as Arc<dyn RadialProfile>)
    }
}

/// `c * f`.
#[derive(Debug, Clone)]
pub struct ScaledField(pub f64, pub Arc<dyn ScalarField>);

impl ScalarField for ScaledField {
    fn value(&self, x: &[f64]) -> f64 {
        self.0 * self.1.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.1.gradient(x).into_iter().map(|v| self.0 * v).collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.1.hessian(x) * self.0
    }
    fn radial(&self) -> Option<Arc<dyn RadialProfile>> {
        self.1.radial().map(|p| Arc::new(ScaledProfile(self.0, p)) as Arc<dyn RadialProfile>)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn ScalarField, x: &[f64]) {
        let h = 1e-5;
        let g = f.gradient(x);
        let hs = f.hessian(x);
        for i in 0..x.len() {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            let d = (f.value(&p) - f.value(&m)) / (2.0 * h);
            assert!((d - g[i]).abs() < 1e-8, "grad {i}");
            let gp = f.gradient(&p);
            let gm = f.gradient(&m);
            for j in 0..x.len() {
                assert!(((gp[j] - gm[j]) / (2.0 * h) - hs[(j, i)]).abs() < 1e-7, "hess {i}{j}");
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        fd_check(&Radial::new(RoundSphere), &[0.3, -0.2, 0.5, 0.1]);
        fd_check(&Radial::new(EvenPoly(vec![0.1, -0.3, 0.25])), &[0.3, -0.2, 0.5]);
        let p = Polynomial { terms: vec![(0.5, vec![2, 1, 0]), (-0.2, vec![0, 0, 3]), (1.0, vec![1, 0, 0])] };
        fd_check(&p, &[0.3, -0.7, 0.4]);
        let s = SumField(vec![Arc::new(p), Arc::new(Radial::new(RoundSphere))]);
        fd_check(&s, &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn radial_hessian_at_origin() {
        let f = Radial::new(RoundSphere);
        let h = f.hessian(&[0.0, 0.0, 0.0]);
        assert!((h - DMatrix::identity(3, 3) * 2.0).abs().max() < 1e-14);
    }
}

/// Ordinary polynomial `sum_j c_j t^j` in one variable.
#[derive(Debug, Clone)]
pub struct Poly1d(pub Vec<f64>);

impl RadialProfile for Poly1d {
    fn value(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
    fn d1(&self, t: f64) -> f64 {
        self.0.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, c)| acc * t + j as f64 * c)
    }
    fn d2(&self, t: f64) -> f64 {
        self.0.iter().enumerate().skip(2).rev().fold(0.0, |acc, (j, c)| acc * t + (j * (j - 1)) as f64 * c)
    }
}
