//! Gauss-Bonnet integrands: the Euler density `E_n` and the boundary terms `Q_{i,n}`,
//! each by the generalized-Kronecker sum and by symmetric functions of `A`.

use super::bk::{c1, double_factorial, factorial};
use crate::error::{Error, Result};
use crate::geom::boundary::BoundarySlice;
use crate::geom::pack::{curvature_at, CurvaturePack};
use crate::geom::tensor::{kulkarni_nomizu, orthonormal_frame, rank4_in_frame, Tensor};
use crate::symfun::{mixed_sigma, sigma};
use crate::tolerances::LCF_WEYL_MAX;
use nalgebra::DMatrix;

/// All permutations of `0..m` with their signs.
pub fn signed_permutations(m: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..m).collect();
    fn rec(p: &mut Vec<usize>, start: usize, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if start == p.len() {
            out.push((p.clone(), sign));
            return;
        }
        for j in start..p.len() {
            p.swap(start, j);
            rec(p, start + 1, if j == start { sign } else { -sign }, out);
            p.swap(start, j);
        }
    }
    rec(&mut p, 0, 1.0, &mut out);
    out
}

/// `sum delta^{b_1..b_m}_{a_1..a_m} R_{a1 a2}^{b1 b2} ... L_{a}^{b} ...` in an orthonormal
/// frame with `pairs` curvature factors followed by second fundamental form factors.
fn kronecker_sum(m: usize, riem: &Tensor, pairs: usize, l: Option<&DMatrix<f64>>) -> f64 {
    let perms = signed_permutations(m);
    let mut total = 0.0;
    for (a, sa) in &perms {
        for (b, sb) in &perms {
            let mut prod = sa * sb;
            for p in 0..pairs {
                prod *= riem.get(&[a[2 * p], a[2 * p + 1], b[2 * p], b[2 * p + 1]]);
                if prod == 0.0 {
                    break;
                }
            }
            if prod != 0.0 {
                if let Some(l) = l {
                    for q in 2 * pairs..m {
                        prod *= l[(a[q], b[q])];
                    }
                }
            }
            total += prod;
        }
    }
    total
}

/// `E_n = (2^{n/2} (n/2)!)^{-1} sum delta R ... R` from orthonormal-frame curvature.
pub fn euler_density_kronecker(riem: &Tensor) -> Result<f64> {
    let n = riem.n;
    if !n.is_multiple_of(2) || n == 0 {
        return Err(Error::Domain(format!("Euler density needs even n, got {n}")));
    }
    let h = n / 2;
    Ok(kronecker_sum(n, riem, h, None) / (2f64.powi(h as i32) * factorial(h)))
}

/// `2^{n/2} (n/2)! sigma_{n/2}(A)` from orthonormal-frame Schouten components.
pub fn euler_density_sigma(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    if !n.is_multiple_of(2) {
        return Err(Error::Domain(format!("Euler density needs even n, got {n}")));
    }
    let h = n / 2;
    Ok(2f64.powi(h as i32) * factorial(h) * sigma(a, h)?)
}

/// `Q_{i,n} = 2^{n/2-2i} / (i! (n-1-2i)!!) sum delta R...R L...L` over boundary indices.
/// `riem` is the full tensor in a frame whose first `n-1` vectors span the boundary.
pub fn boundary_q_kronecker(riem: &Tensor, l: &DMatrix<f64>, i: usize) -> Result<f64> {
    let n = riem.n;
    if !n.is_multiple_of(2) || 2 * i > n - 1 {
        return Err(Error::Domain(format!("Q_{{{i},{n}}} undefined")));
    }
    let coeff = 2f64.powi(n as i32 / 2 - 2 * i as i32) / (factorial(i) * double_factorial((n - 1 - 2 * i) as i64));
    Ok(coeff * kronecker_sum(n - 1, riem, i, Some(l)))
}

/// `2^{n/2} (n/2)! C_1(n, n/2, i) sigma_{n-1-i,i}(A^T, L)`.
pub fn boundary_q_sigma(at: &DMatrix<f64>, l: &DMatrix<f64>, n: usize, i: usize) -> Result<f64> {
    if !n.is_multiple_of(2) {
        return Err(Error::Domain(format!("Q_{{i,n}} needs even n, got {n}")));
    }
    let h = n / 2;
    Ok(2f64.powi(h as i32) * factorial(h) * c1(n, h, i) * mixed_sigma(at, l, n - 1 - i, i)?)
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct GaussBonnetIntegrands {
    pub n: usize,
    pub e_kronecker: Vec<f64>,
    pub e_sigma: Vec<f64>,
    /// `q_kronecker[p][i]` at boundary point `p`.
    pub q_kronecker: Vec<Vec<f64>>,
    pub q_sigma: Vec<Vec<f64>>,
    pub max_weyl: f64,
}

impl GaussBonnetIntegrands {
    /// Largest disagreement between the two paths, relative to `1 + |value|`.
    pub fn max_path_disagreement(&self) -> f64 {
        let e = self.e_kronecker.iter().zip(&self.e_sigma).map(|(a, b)| (a - b).abs() / (1.0 + b.abs()));
        let q = self
            .q_kronecker
            .iter()
            .zip(&self.q_sigma)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs() / (1.0 + y.abs())).collect::<Vec<_>>());
        e.chain(q).fold(0.0, f64::max)
    }
}

/// Frame curvature: exact `A o g` on conformally flat charts, finite differences otherwise.
fn frame_curvature(pack: &CurvaturePack, riem: &Tensor, a: &DMatrix<f64>, frame: &DMatrix<f64>) -> Tensor {
    if pack.chart.is_conformally_flat() {
        kulkarni_nomizu(a, &DMatrix::identity(a.nrows(), a.nrows()))
    } else {
        rank4_in_frame(riem, frame)
    }
}

/// Both integrand paths at the pack nodes and slice points of a locally conformally flat chart.
pub fn gauss_bonnet_integrands(pack: &CurvaturePack, slice: &BoundarySlice) -> Result<GaussBonnetIntegrands> {
    let n = pack.chart.n;
    if !n.is_multiple_of(2) {
        return Err(Error::Domain(format!("Gauss-Bonnet integrands need even n, got {n}")));
    }
    let max_weyl = pack.max_weyl_norm();
    if max_weyl > LCF_WEYL_MAX {
        return Err(Error::UnsupportedChart(format!("chart is not locally conformally flat: |W| = {max_weyl:e}")));
    }
    let mut out = GaussBonnetIntegrands { n, max_weyl, ..Default::default() };
    for p in &pack.nodes {
        let e = orthonormal_frame(&p.g).ok_or_else(|| Error::Geometry { node: p.x.clone() })?;
        let a = e.transpose() * &p.schouten * &e;
        let riem = frame_curvature(pack, &p.riem, &a, &e);
        out.e_kronecker.push(euler_density_kronecker(&riem)?);
        out.e_sigma.push(euler_density_sigma(&a)?);
    }
    for bp in &slice.points {
        let pc = curvature_at(&pack.chart, &bp.x)?;
        let s = &bp.shape;
        let c = orthonormal_frame(&s.induced).ok_or_else(|| Error::Geometry { node: bp.x.clone() })?;
        let t = &s.tangent * &c;
        let mut frame = DMatrix::zeros(n, n);
        frame.view_mut((0, 0), (n, n - 1)).copy_from(&t);
        frame.set_column(n - 1, &s.normal);
        let a = frame.transpose() * &pc.schouten * &frame;
        let riem = frame_curvature(pack, &pc.riem, &a, &frame);
        let at = a.view((0, 0), (n - 1, n - 1)).into_owned();
        let l = c.transpose() * &s.l * &c;
        let mut qk = Vec::new();
        let mut qs = Vec::new();
        for i in 0..=(n - 1) / 2 {
            qk.push(boundary_q_kronecker(&riem, &l, i)?);
            qs.push(boundary_q_sigma(&at, &l, n, i)?);
        }
        out.q_kronecker.push(qk);
        out.q_sigma.push(qs);
    }
    Ok(out)
}

/// Kronecker vs sigma paths on random algebraic data with `R = A o g` in an orthonormal frame.
pub fn algebraic_path_check(n: usize, samples: usize, seed: u64) -> Result<f64> {
    use crate::rng::{seeded, symmetric};
    let mut rng = seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a = symmetric(&mut rng, n, 1.0);
        let l = symmetric(&mut rng, n - 1, 1.0);
        let riem = kulkarni_nomizu(&a, &DMatrix::identity(n, n));
        let e1 = euler_density_kronecker(&riem)?;
        let e2 = euler_density_sigma(&a)?;
        worst = worst.max((e1 - e2).abs() / (1.0 + e2.abs()));
        let at = a.view((0, 0), (n - 1, n - 1)).into_owned();
        for i in 0..=(n - 1) / 2 {
            let q1 = boundary_q_kronecker(&riem, &l, i)?;
            let q2 = boundary_q_sigma(&at, &l, n, i)?;
            worst = worst.max((q1 - q2).abs() / (1.0 + q2.abs()));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::boundary::{build_boundary_at, sphere_samples};
    use crate::geom::field::{EvenPoly, Radial, RoundSphere};
    use crate::geom::{build_curvature_at, Chart, PackOptions};
    use std::sync::Arc;

    #[test]
    fn permutation_signs() {
        let p = signed_permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p.iter().map(|(_, s)| s).sum::<f64>(), 0.0);
    }

    #[test]
    fn round_sphere_euler_density_is_twelve() {
        let a = DMatrix::identity(4, 4) * 0.5;
        let riem = kulkarni_nomizu(&a, &DMatrix::identity(4, 4));
        assert!((euler_density_kronecker(&riem).unwrap() - 12.0).abs() < 1e-12);
        assert!((euler_density_sigma(&a).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn two_paths_agree_on_random_lcf_data() {
        assert!(algebraic_path_check(4, 20, 1).unwrap() < 1e-10);
        assert!(algebraic_path_check(6, 2, 2).unwrap() < 1e-10);
    }

    #[test]
    fn chart_integrands_agree_and_flat_vanishes() {
        let w = Arc::new(Radial::new(EvenPoly(vec![0.0, 0.2, 0.1])));
        let chart = Chart::ball_conformally_flat(4, 81, w).unwrap();
        let pts = vec![vec![0.1, 0.2, 0.0, -0.3], vec![0.4, 0.1, -0.2, 0.1]];
        let pack = build_curvature_at(&chart, &pts, PackOptions::default()).unwrap();
        let slice = build_boundary_at(&chart, &sphere_samples(4, 1.0, 2, 5)).unwrap();
        let gb = gauss_bonnet_integrands(&pack, &slice).unwrap();
        assert!(gb.max_path_disagreement() < 1e-8, "{gb:?}");

        let round = Chart::ball_conformally_flat(4, 81, Arc::new(Radial::new(RoundSphere))).unwrap();
        let pack = build_curvature_at(&round, &pts, PackOptions::default()).unwrap();
        let slice = build_boundary_at(&round, &sphere_samples(4, 1.0, 2, 5)).unwrap();
        let gb = gauss_bonnet_integrands(&pack, &slice).unwrap();
        assert!(gb.e_sigma.iter().all(|e| (e - 12.0).abs() < 1e-10));
        assert!(gb.q_sigma.iter().flatten().all(|q| q.abs() < 1e-10));
    }

    #[test]
    fn odd_dimension_and_curved_weyl_are_rejected() {
        let chart = Chart::half_ball_flat(3, 5).unwrap();
        let pack = crate::geom::build_curvature(&chart).unwrap();
        let slice = BoundarySlice { n: 3, points: vec![] };
        assert!(matches!(gauss_bonnet_integrands(&pack, &slice), Err(Error::Domain(_))));
    }
}
