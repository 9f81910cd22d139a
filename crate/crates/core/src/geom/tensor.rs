//! Dense tensors with all indices in coordinate position and the pointwise
//! algebra of curvature tensors.
//!
//! Convention: `R_{ijkl} = <R(d_i, d_j) d_l, d_k>`, so the round sphere has
//! `R_{ijij} > 0`, `Ric_{jl} = g^{ik} R_{ijkl}`.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub n: usize,
    pub rank: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, rank: usize) -> Self {
        Self { n, rank, data: vec![0.0; n.pow(rank as u32)] }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self { n, rank: 2, data: (0..n * n).map(|p| m[(p / n, p % n)]).collect() }
    }

    pub fn scalar(v: f64) -> Self {
        Self { n: 0, rank: 0, data: vec![v] }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.rank, 2);
        DMatrix::from_fn(self.n, self.n, |i, j| self.data[i * self.n + j])
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        Tensor { n: self.n, rank: self.rank, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// Multi-indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let (n, rank) = (self.n, self.rank);
        (0..self.data.len()).map(move |mut p| {
            let mut idx = vec![0; rank];
            for slot in (0..rank).rev() {
                idx[slot] = p % n;
                p /= n;
            }
            idx
        })
    }
}

/// Kulkarni-Nomizu product `(h o k)_{ijkl} = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il`.
pub fn kulkarni_nomizu(h: &DMatrix<f64>, k: &DMatrix<f64>) -> Tensor {
    let n = h.nrows();
    let mut t = Tensor::zeros(n, 4);
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let v =
                        h[(i, a)] * k[(j, b)] + h[(j, b)] * k[(i, a)] - h[(i, b)] * k[(j, a)] - h[(j, a)] * k[(i, b)];
                    t.set(&[i, j, a, b], v);
                }
            }
        }
    }
    t
}

pub fn ricci(riem: &Tensor, ginv: &DMatrix<f64>) -> DMatrix<f64> {
    let n = riem.n;
    DMatrix::from_fn(n, n, |j, l| {
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += ginv[(i, k)] * riem.get(&[i, j, k, l]);
            }
        }
        s
    })
}

pub fn trace(m: &DMatrix<f64>, ginv: &DMatrix<f64>) -> f64 {
    (ginv * m).trace()
}

/// `A = (Ric - R g / (2(n-1))) / (n-2)`.
pub fn schouten(ric: &DMatrix<f64>, scal: f64, g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows() as f64;
    (ric - g * (scal / (2.0 * (n - 1.0)))) / (n - 2.0)
}

/// Weyl part `W = Riem - A o g`.
pub fn weyl(riem: &Tensor, a: &DMatrix<f64>, g: &DMatrix<f64>) -> Tensor {
    riem.sub(&kulkarni_nomizu(a, g))
}

/// Full contraction `|T|^2` with the inverse metric on every slot.
pub fn norm_sq(t: &Tensor, ginv: &DMatrix<f64>) -> f64 {
    let mut raised = t.clone();
    for slot in 0..t.rank {
        let src = raised.clone();
        for idx in raised.indices().collect::<Vec<_>>() {
            let mut s = 0.0;
            let mut j = idx.clone();
            for m in 0..t.n {
                j[slot] = m;
                s += ginv[(idx[slot], m)] * src.get(&j);
            }
            raised.set(&idx, s);
        }
    }
    raised.data.iter().zip(&t.data).map(|(a, b)| a * b).sum()
}

/// Largest defect among the algebraic symmetries of a curvature tensor:
/// antisymmetry in each pair, pair symmetry and the first Bianchi identity.
pub fn riemann_symmetry_residual(r: &Tensor) -> f64 {
    let n = r.n;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r.get(&[i, j, k, l]);
                    worst = worst
                        .max((v + r.get(&[j, i, k, l])).abs())
                        .max((v + r.get(&[i, j, l, k])).abs())
                        .max((v - r.get(&[k, l, i, j])).abs())
                        .max((v + r.get(&[i, k, l, j]) + r.get(&[i, l, j, k])).abs());
                }
            }
        }
    }
    worst
}

/// Basis `E` with `E^T g E = I` (columns orthonormal for g).
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = g.clone().cholesky()?;
    chol.l().transpose().try_inverse()
}

/// Components of a rank-4 tensor in the frame `E`.
pub fn rank4_in_frame(t: &Tensor, e: &DMatrix<f64>) -> Tensor {
    let n = t.n;
    let mut cur = t.clone();
    for slot in 0..4 {
        let src = cur.clone();
        for idx in cur.indices().collect::<Vec<_>>() {
            let mut s = 0.0;
            let mut j = idx.clone();
            for m in 0..n {
                j[slot] = m;
                s += e[(m, idx[slot])] * src.get(&j);
            }
            cur.set(&idx, s);
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn kulkarni_nomizu_has_curvature_symmetries() {
        let mut r = rng::seeded(4);
        let h = rng::symmetric(&mut r, 4, 1.0);
        let k = rng::symmetric(&mut r, 4, 1.0);
        assert!(riemann_symmetry_residual(&kulkarni_nomizu(&h, &k)) < 1e-14);
    }

    #[test]
    fn constant_curvature_decomposes_without_weyl() {
        let g = DMatrix::<f64>::identity(4, 4);
        let riem = kulkarni_nomizu(&(&g * 0.5), &g);
        let ric = ricci(&riem, &g);
        assert!((&ric - &g * 3.0).abs().max() < 1e-14);
        let a = schouten(&ric, trace(&ric, &g), &g);
        assert!((&a - &g * 0.5).abs().max() < 1e-14);
        assert!(weyl(&riem, &a, &g).max_abs() < 1e-14);
        assert_eq!(riem.get(&[0, 1, 0, 1]), 1.0);
    }

    #[test]
    fn frame_orthonormalizes() {
        let mut r = rng::seeded(9);
        let m = rng::symmetric(&mut r, 3, 0.3) + DMatrix::identity(3, 3);
        let e = orthonormal_frame(&m).unwrap();
        assert!((e.transpose() * &m * &e - DMatrix::identity(3, 3)).abs().max() < 1e-13);
    }
}
