use super::{binomial, elementary_all, sigma_excluding, Spectrum};
use crate::error::{Error, Result};
use crate::rng;
use crate::tolerances::{CONCAVITY_SLACK, CONE_TAU, SAMPLER_BOX, SAMPLER_RETRIES, STRUCTURE_SLACK};
use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeVerdict {
    Inside,
    Boundary,
    Outside,
}

/// Verdict of a Garding cone test with the sigma values it was based on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeTag {
    pub k: usize,
    pub verdict: ConeVerdict,
    /// sigma_1 .. sigma_k
    pub sigmas: Vec<f64>,
}

impl ConeTag {
    pub fn inside(&self) -> bool {
        self.verdict == ConeVerdict::Inside
    }

    /// Smallest sigma_i rescaled by (1 + |lambda|_inf)^i; positive inside the cone.
    pub fn margin(&self, scale: f64) -> f64 {
        self.sigmas.iter().enumerate().map(|(i, s)| s / (1.0 + scale).powi(i as i32 + 1)).fold(f64::INFINITY, f64::min)
    }
}

pub fn cone_membership(lambda: &Spectrum, k: usize) -> Result<ConeTag> {
    cone_membership_with(lambda, k, CONE_TAU)
}

pub fn cone_membership_with(lambda: &Spectrum, k: usize, tau: f64) -> Result<ConeTag> {
    let n = lambda.n();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("cone order {k} outside 1..={n}")));
    }
    let e = elementary_all(lambda.values());
    let scale = 1.0 + lambda.max_abs();
    let mut verdict = ConeVerdict::Inside;
    for (i, &s) in e.iter().enumerate().take(k + 1).skip(1) {
        let tol = tau * scale.powi(i as i32);
        if s < -tol {
            verdict = ConeVerdict::Outside;
            break;
        }
        if s <= tol {
            verdict = ConeVerdict::Boundary;
        }
    }
    Ok(ConeTag { k, verdict, sigmas: e[1..=k].to_vec() })
}

/// Largest violation of the Newton-MacLaurin inequalities
/// `k(n-l+1) sigma_{l-1} sigma_k <= l(n-k+1) sigma_l sigma_{k-1}`, `0 <= l < k`,
/// as `max(lhs - rhs)`; nonpositive when all hold.
pub fn newton_maclaurin_margin(lambda: &Spectrum, k: usize) -> f64 {
    let n = lambda.n();
    let e = elementary_all(lambda.values());
    let s = |i: isize| if i < 0 { 0.0 } else { e[i as usize] };
    let (nf, kf) = (n as f64, k as f64);
    (0..k)
        .map(|l| {
            let lf = l as f64;
            let lhs = kf * (nf - lf + 1.0) * s(l as isize - 1) * s(k as isize);
            let rhs = lf * (nf - kf + 1.0) * s(l as isize) * s(k as isize - 1);
            lhs - rhs
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn require_inside(lambda: &Spectrum, k: usize) -> Result<()> {
    let tag = cone_membership(lambda, k)?;
    if !tag.inside() {
        let (index, value) =
            tag.sigmas.iter().enumerate().map(|(i, &v)| (i + 1, v)).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        return Err(Error::ConeViolation { k, index, value });
    }
    Ok(())
}

/// `F = binom(n,k)^{-1/k} sigma_k^{1/k}` and its gradient.
pub fn f_normalized(lambda: &Spectrum, k: usize) -> Result<(f64, Spectrum)> {
    require_inside(lambda, k)?;
    let n = lambda.n();
    let kf = k as f64;
    let c = binomial(n, k).powf(-1.0 / kf);
    let sk = elementary_all(lambda.values())[k];
    let value = c * sk.powf(1.0 / kf);
    let grad =
        (0..n).map(|i| c / kf * sk.powf(1.0 / kf - 1.0) * sigma_excluding(lambda.values(), k - 1, &[i])).collect();
    Ok((value, Spectrum { values: grad }))
}

/// Hessian of F in the eigenvalues.
pub fn f_normalized_hessian(lambda: &Spectrum, k: usize) -> Result<DMatrix<f64>> {
    require_inside(lambda, k)?;
    let n = lambda.n();
    let kf = k as f64;
    let c = binomial(n, k).powf(-1.0 / kf);
    let v = lambda.values();
    let sk = elementary_all(v)[k];
    let d1: Vec<f64> = (0..n).map(|i| sigma_excluding(v, k - 1, &[i])).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let mut h = (1.0 / kf) * (1.0 / kf - 1.0) * sk.powf(1.0 / kf - 2.0) * d1[i] * d1[j];
        if i != j && k >= 2 {
            h += (1.0 / kf) * sk.powf(1.0 / kf - 1.0) * sigma_excluding(v, k - 2, &[i, j]);
        }
        c * h
    }))
}

/// Rejection sampler for Gamma_k^+ in the box [-1, 2]^n.
pub fn sample_cone(r: &mut impl Rng, n: usize, k: usize) -> Result<Spectrum> {
    for _ in 0..SAMPLER_RETRIES {
        let s = Spectrum { values: rng::uniform_vec(r, n, SAMPLER_BOX.0, SAMPLER_BOX.1) };
        if cone_membership(&s, k)?.inside() {
            return Ok(s);
        }
    }
    Err(Error::Sampling { attempts: SAMPLER_RETRIES })
}

/// Worst observed margins of the structure conditions over sampled cone points.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    /// min over samples and i of `F_i sigma_1 / F` (condition S3 constant)
    pub epsilon: f64,
    /// max over samples with some lambda_i <= 0 of `sum_{j != i} F_j / F_i`
    pub rho: Option<f64>,
    /// points that exercised condition (A)
    pub rho_points: usize,
    pub min_value: f64,
    pub max_hessian_eigenvalue: f64,
    pub min_gradient: f64,
    pub max_euler_residual: f64,
    pub min_gradient_sum: f64,
    pub max_newton_maclaurin: f64,
    pub s0: bool,
    pub s1: bool,
    pub s2: bool,
    pub s3: bool,
    pub a: bool,
}

impl StructureReport {
    pub fn all_pass(&self) -> bool {
        self.s0 && self.s1 && self.s2 && self.s3 && self.a
    }
}

pub fn check_structure_conditions(k: usize, n: usize, samples: usize, seed: u64) -> Result<StructureReport> {
    if k == 0 || k > n || samples == 0 {
        return Err(Error::Domain(format!("need 1 <= k <= n and samples > 0 (k={k}, n={n})")));
    }
    let mut r = rng::seeded(seed);
    let mut rep = StructureReport {
        n,
        k,
        samples,
        epsilon: f64::INFINITY,
        rho: None,
        rho_points: 0,
        min_value: f64::INFINITY,
        max_hessian_eigenvalue: f64::NEG_INFINITY,
        min_gradient: f64::INFINITY,
        max_euler_residual: 0.0,
        min_gradient_sum: f64::INFINITY,
        max_newton_maclaurin: f64::NEG_INFINITY,
        s0: false,
        s1: false,
        s2: false,
        s3: false,
        a: false,
    };
    for _ in 0..samples {
        let lambda = sample_cone(&mut r, n, k)?;
        let (f, grad) = f_normalized(&lambda, k)?;
        let g = grad.values();
        let s1 = lambda.values().iter().sum::<f64>();
        rep.min_value = rep.min_value.min(f);
        let hmax =
            f_normalized_hessian(&lambda, k)?.symmetric_eigenvalues().iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        rep.max_hessian_eigenvalue = rep.max_hessian_eigenvalue.max(hmax);
        let euler: f64 = lambda.values().iter().zip(g).map(|(l, d)| l * d).sum();
        rep.max_euler_residual = rep.max_euler_residual.max((euler - f).abs() / f);
        rep.min_gradient_sum = rep.min_gradient_sum.min(g.iter().sum());
        let scale = (1.0 + lambda.max_abs()).powi(2 * k as i32);
        rep.max_newton_maclaurin = rep.max_newton_maclaurin.max(newton_maclaurin_margin(&lambda, k) / scale);
        let gsum: f64 = g.iter().sum();
        for (i, &gi) in g.iter().enumerate() {
            rep.min_gradient = rep.min_gradient.min(gi);
            rep.epsilon = rep.epsilon.min(gi * s1 / f);
            if lambda.values()[i] <= 0.0 {
                let ratio = (gsum - gi) / gi;
                rep.rho = Some(rep.rho.map_or(ratio, |r: f64| r.max(ratio)));
                rep.rho_points += 1;
            }
        }
    }
    let kf = k as f64;
    rep.s0 = rep.min_value > 0.0;
    rep.s1 = rep.max_hessian_eigenvalue <= CONCAVITY_SLACK;
    rep.s2 = rep.min_gradient > 0.0;
    rep.s3 = rep.epsilon >= 1.0 / kf - STRUCTURE_SLACK;
    rep.a = rep.rho.is_none_or(|r| r <= (n - k) as f64 + STRUCTURE_SLACK);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_vector_is_inside_every_cone() {
        for k in 1..=5 {
            assert!(cone_membership(&Spectrum::ones(5), k).unwrap().inside());
        }
    }

    #[test]
    fn small_examples() {
        let t = cone_membership(&spec(&[1.0, 1.0, -0.4]), 2).unwrap();
        assert_eq!(t.verdict, ConeVerdict::Inside);
        assert!((t.sigmas[0] - 1.6).abs() < 1e-15 && (t.sigmas[1] - 0.2).abs() < 1e-15);
        let t = cone_membership(&spec(&[1.0, -1.0, 1.0]), 2).unwrap();
        assert_eq!(t.verdict, ConeVerdict::Outside);
        assert_eq!(t.sigmas[1], -1.0);
        let t = cone_membership(&spec(&[1.0, 0.0, 0.0]), 2).unwrap();
        assert_eq!(t.verdict, ConeVerdict::Boundary);
    }

    #[test]
    fn normalized_values() {
        let (v, _) = f_normalized(&Spectrum::ones(4), 2).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let (v, _) = f_normalized(&Spectrum::ones(4).scaled(2.0), 2).unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        let (v, _) = f_normalized(&spec(&[0.5; 4]), 2).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn outside_is_an_error_with_failing_sigma() {
        match f_normalized(&spec(&[1.0, -1.0, 1.0]), 2) {
            Err(Error::ConeViolation { index, value, .. }) => {
                assert_eq!(index, 2);
                assert_eq!(value, -1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn condition_a_at_fixed_point() {
        let l = spec(&[1.0, 1.0, 1.0, -0.2]);
        let (_, g) = f_normalized(&l, 2).unwrap();
        let g = g.values();
        let others: f64 = g[..3].iter().sum();
        assert!(others <= 2.0 * g[3] + 1e-12);
    }

    #[test]
    fn linear_case_has_flat_hessian() {
        let rep = check_structure_conditions(1, 3, 50, 1).unwrap();
        assert_eq!(rep.max_hessian_eigenvalue, 0.0);
        assert!(rep.all_pass());
    }

    #[test]
    fn newton_maclaurin_is_tight_at_e() {
        for k in 1..=4 {
            assert!(newton_maclaurin_margin(&Spectrum::ones(4), k).abs() <= 1e-12);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_gradient() {
        let l = spec(&[1.2, 0.7, -0.1, 0.9]);
        let h = f_normalized_hessian(&l, 3).unwrap();
        let eps = 1e-6;
        for j in 0..4 {
            let mut p = l.values().to_vec();
            let mut m = p.clone();
            p[j] += eps;
            m[j] -= eps;
            let gp = f_normalized(&spec(&p), 3).unwrap().1;
            let gm = f_normalized(&spec(&m), 3).unwrap().1;
            for i in 0..4 {
                let fd = (gp.values()[i] - gm.values()[i]) / (2.0 * eps);
                assert!((fd - h[(i, j)]).abs() < 1e-7);
            }
        }
    }
}
