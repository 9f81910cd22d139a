//! Pointwise Levi-Civita data computed by finite differences of a metric callback.

use super::fd::StencilPolicy;
use super::tensor::{ricci, schouten, trace, weyl, Tensor};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Metric callback plus the stencil policy used to differentiate it.
pub struct PointGeometry<'a> {
    pub n: usize,
    pub policy: StencilPolicy,
    metric: &'a (dyn Fn(&[f64]) -> DMatrix<f64> + Sync),
}

#[derive(Debug, Clone)]
pub struct PointCurvature {
    pub x: Vec<f64>,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    /// `gamma[(k, i, j)] = Gamma^k_{ij}`.
    pub gamma: Tensor,
    pub riem: Tensor,
    pub ric: DMatrix<f64>,
    pub scal: f64,
    pub schouten: DMatrix<f64>,
    pub weyl: Tensor,
}

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    Tensor::from_matrix(m).data
}

impl<'a> PointGeometry<'a> {
    pub fn new(n: usize, policy: StencilPolicy, metric: &'a (dyn Fn(&[f64]) -> DMatrix<f64> + Sync)) -> Self {
        Self { n, policy, metric }
    }

    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        (self.metric)(x)
    }

    pub fn inverse(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.metric(x);
        match g.clone().cholesky() {
            Some(c) => Ok(c.inverse()),
            None => Err(Error::Geometry { node: x.to_vec() }),
        }
    }

    /// Christoffel symbols of the second kind.
    pub fn christoffel(&self, x: &[f64]) -> Result<Tensor> {
        let n = self.n;
        let ginv = self.inverse(x)?;
        let dg = self.policy.gradient(&|y: &[f64]| flatten(&self.metric(y)), x);
        let d = |k: usize, i: usize, j: usize| dg[k][i * n + j];
        let mut gamma = Tensor::zeros(n, 3);
        for i in 0..n {
            for j in i..n {
                let lower: Vec<f64> = (0..n).map(|l| 0.5 * (d(i, j, l) + d(j, i, l) - d(l, i, j))).collect();
                for k in 0..n {
                    let v: f64 = (0..n).map(|l| ginv[(k, l)] * lower[l]).sum();
                    gamma.set(&[k, i, j], v);
                    gamma.set(&[k, j, i], v);
                }
            }
        }
        Ok(gamma)
    }

    /// Fully covariant Riemann tensor from finite differences of the Christoffel symbols.
    pub fn riemann(&self, x: &[f64]) -> Result<(Tensor, Tensor)> {
        let n = self.n;
        let gamma = self.christoffel(x)?;
        let g = self.metric(x);
        let dgamma = self.policy.gradient(
            &|y: &[f64]| self.christoffel(y).map(|t| t.data).unwrap_or_else(|_| vec![f64::NAN; n * n * n]),
            x,
        );
        if dgamma.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Geometry { node: x.to_vec() });
        }
        let dg = |a: usize, p: usize, j: usize, l: usize| dgamma[a][(p * n + j) * n + l];
        let gm = |p: usize, j: usize, l: usize| gamma.data[(p * n + j) * n + l];
        let mut up = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    for p in 0..n {
                        let mut v = dg(i, p, j, l) - dg(j, p, i, l);
                        for m in 0..n {
                            v += gm(m, j, l) * gm(p, i, m) - gm(m, i, l) * gm(p, j, m);
                        }
                        up[((i * n + j) * n + l) * n + p] = v;
                    }
                }
            }
        }
        let mut riem = Tensor::zeros(n, 4);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v: f64 = (0..n).map(|p| g[(k, p)] * up[((i * n + j) * n + l) * n + p]).sum();
                        riem.set(&[i, j, k, l], v);
                    }
                }
            }
        }
        Ok((gamma, riem))
    }

    pub fn curvature(&self, x: &[f64]) -> Result<PointCurvature> {
        let g = self.metric(x);
        let ginv = self.inverse(x)?;
        let (gamma, riem) = self.riemann(x)?;
        let ric = ricci(&riem, &ginv);
        let scal = trace(&ric, &ginv);
        let a = schouten(&ric, scal, &g);
        let w = weyl(&riem, &a, &g);
        Ok(PointCurvature { x: x.to_vec(), g, ginv, gamma, riem, ric, scal, schouten: a, weyl: w })
    }

    /// Schouten tensor at `x`.
    pub fn schouten(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.curvature(x)?.schouten)
    }

    /// Covariant derivative of a covariant tensor field; the new index is last.
    pub fn covariant(&self, field: &dyn Fn(&[f64]) -> Tensor, x: &[f64]) -> Result<Tensor> {
        let n = self.n;
        let t = field(x);
        let gamma = self.christoffel(x)?;
        let dt = self.policy.gradient(&|y: &[f64]| field(y).data, x);
        let mut out = Tensor::zeros(n, t.rank + 1);
        for idx in t.indices().collect::<Vec<_>>() {
            for (a, da) in dt.iter().enumerate() {
                let mut v = da[t.offset(&idx)];
                for s in 0..t.rank {
                    let mut j = idx.clone();
                    for m in 0..n {
                        j[s] = m;
                        v -= gamma.get(&[m, a, idx[s]]) * t.get(&j);
                    }
                }
                let mut full = idx.clone();
                full.push(a);
                out.set(&full, v);
            }
        }
        Ok(out)
    }

    /// `C_{ijk} = A_{ij,k} - A_{ik,j}`.
    pub fn cotton(&self, x: &[f64]) -> Result<Tensor> {
        let n = self.n;
        let field = |y: &[f64]| {
            self.schouten(y).map(|a| Tensor::from_matrix(&a)).unwrap_or_else(|_| Tensor {
                n,
                rank: 2,
                data: vec![f64::NAN; n * n],
            })
        };
        let da = self.covariant(&field, x)?;
        if da.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry { node: x.to_vec() });
        }
        let mut c = Tensor::zeros(n, 3);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    c.set(&[i, j, k], da.get(&[i, j, k]) - da.get(&[i, k, j]));
                }
            }
        }
        Ok(c)
    }
}

/// Schouten tensor of `e^{-2w} delta` from the exact formula
/// `A = Hess w + dw dw - |dw|^2 delta / 2`.
pub fn conformal_schouten(grad: &[f64], hess: &DMatrix<f64>) -> DMatrix<f64> {
    let n = grad.len();
    let q: f64 = grad.iter().map(|v| v * v).sum();
    DMatrix::from_fn(n, n, |i, j| hess[(i, j)] + grad[i] * grad[j] - if i == j { 0.5 * q } else { 0.0 })
}
