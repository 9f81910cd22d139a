//! Boundary curvature terms `B^k` built from the tangential Schouten tensor and
//! the second fundamental form, plus the four-dimensional Gauss-Bonnet boundary terms.
//!
//! Matrices are mixed-index endomorphisms of the boundary tangent space
//! (`g^{-1} A^T`, `g^{-1} L`), so orthonormal-frame components can be passed directly.

use crate::error::{Error, Result};
use crate::geom::tensor::{ricci, schouten, trace, Tensor};
use crate::symfun::{mixed_sigma, sigma};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BkForm {
    General,
    Umbilic,
}

/// `m!!` with `0!! = (-1)!! = 1`.
pub fn double_factorial(m: i64) -> f64 {
    let mut acc = 1.0;
    let mut j = m;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}

pub fn factorial(m: usize) -> f64 {
    (1..=m).map(|j| j as f64).product()
}

/// `C_1(n,k,i) = (2k-i-1)! (n-2k+i)! / ((n-k)! (2k-2i-1)!! i!)`, defined for `n >= 2k - i`.
pub fn c1(n: usize, k: usize, i: usize) -> f64 {
    factorial(2 * k - i - 1) * factorial(n + i - 2 * k)
        / (factorial(n - k) * double_factorial((2 * k - 2 * i) as i64 - 1) * factorial(i))
}

/// `C_2(n,k,i) = (n-i-1)! / ((n-k)! (2k-2i-1)!!)`.
pub fn c2(n: usize, k: usize, i: usize) -> f64 {
    factorial(n - i - 1) / (factorial(n - k) * double_factorial((2 * k - 2 * i) as i64 - 1))
}

fn check_boundary_dims(at: &DMatrix<f64>, l: &DMatrix<f64>, n: usize) -> Result<()> {
    if at.nrows() != n - 1 || at.ncols() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, got: at.nrows() });
    }
    if l.nrows() != n - 1 || l.ncols() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, got: l.nrows() });
    }
    Ok(())
}

/// `B^2`; for `n = 3` the mean-curvature closed form replaces `sigma_{3,0}`.
pub fn boundary_b2(at: &DMatrix<f64>, l: &DMatrix<f64>, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("B^2 needs n >= 3, got {n}")));
    }
    check_boundary_dims(at, l, n)?;
    let s21 = mixed_sigma(at, l, 2, 1)?;
    if n == 3 {
        let h = l.trace();
        let l2 = (l * l).trace();
        return Ok(2.0 * s21 + h.powi(3) / 3.0 - 0.5 * h * l2);
    }
    let s30 = mixed_sigma(at, l, 3, 0)?;
    let nf = n as f64;
    Ok(2.0 / (nf - 2.0) * s21 + 2.0 / ((nf - 2.0) * (nf - 3.0)) * s30)
}

/// General `B^k = sum_i C_1 sigma_{2k-i-1,i}(A^T, L)`; requires `n >= 2k`.
pub fn boundary_bk_general(at: &DMatrix<f64>, l: &DMatrix<f64>, n: usize, k: usize) -> Result<f64> {
    if k == 2 {
        return boundary_b2(at, l, n);
    }
    if k < 2 || n < 2 * k {
        return Err(Error::Domain(format!("general B^k needs k >= 2 and n >= 2k, got n = {n}, k = {k}")));
    }
    check_boundary_dims(at, l, n)?;
    (0..k).map(|i| Ok(c1(n, k, i) * mixed_sigma(at, l, 2 * k - i - 1, i)?)).sum()
}

/// Umbilic `B^k = sum_i C_2 sigma_i(A^T) mu^{2k-2i-1}`, valid for every `n > k`.
pub fn boundary_bk_umbilic(at: &DMatrix<f64>, mu: f64, n: usize, k: usize) -> Result<f64> {
    if k < 1 || k >= n {
        return Err(Error::Domain(format!("umbilic B^k needs 1 <= k < n, got n = {n}, k = {k}")));
    }
    if at.nrows() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, got: at.nrows() });
    }
    (0..k).map(|i| Ok(c2(n, k, i) * sigma(at, i)? * mu.powi((2 * k - 2 * i - 1) as i32))).sum()
}

/// The bracket in `B^k = (sum_i C_2 sigma_i(A^T) mu^{2k-2i-2}) mu`.
pub fn umbilic_bracket(at: &DMatrix<f64>, mu: f64, n: usize, k: usize) -> Result<f64> {
    (0..k).map(|i| Ok(c2(n, k, i) * sigma(at, i)? * mu.powi((2 * k - 2 * i - 2) as i32))).sum()
}

/// Principal curvature when `L = mu I` within `tol`.
pub fn umbilic_mu(l: &DMatrix<f64>, tol: f64) -> Result<f64> {
    let m = l.nrows();
    let mu = l.trace() / m as f64;
    let residual = (l - DMatrix::identity(m, m) * mu).abs().max();
    if residual > tol {
        return Err(Error::NotUmbilic { residual });
    }
    Ok(mu)
}

/// `B^k` in the requested form. The general form falls back to the umbilic one when
/// `n < 2k` and `L` is umbilic.
pub fn boundary_bk(at: &DMatrix<f64>, l: &DMatrix<f64>, n: usize, k: usize, form: BkForm) -> Result<f64> {
    let tol = 1e-10 * (1.0 + l.abs().max());
    match form {
        BkForm::General if k == 2 || n >= 2 * k => boundary_bk_general(at, l, n, k),
        BkForm::General => match umbilic_mu(l, tol) {
            Ok(mu) => boundary_bk_umbilic(at, mu, n, k),
            Err(_) => Err(Error::Domain(format!("B^{k} on a non-umbilic boundary needs n >= 2k, got n = {n}"))),
        },
        BkForm::Umbilic => boundary_bk_umbilic(at, umbilic_mu(l, tol)?, n, k),
    }
}

/// Boundary terms of the four-dimensional Gauss-Bonnet formula at one point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Gb4Terms {
    /// `1/2 R h - R_nn h - R_{cacb} L^{ab} + h^3/3 - h|L|^2 + 2/3 tr L^3`.
    pub b_cal: f64,
    /// `-2 sigma_1(A^T) h - 2(n-3) A_ab L^ab + 2 R^c_{acb} L^ab`.
    pub l4: f64,
    pub b2: f64,
    /// `B^2 - (b_cal/2 + l4/4)`.
    pub residual: f64,
}

/// `riem` is the full curvature tensor in an orthonormal frame whose last vector is
/// the inner normal; `l` is the second fundamental form in the tangential part of that frame.
pub fn boundary_gb4(riem: &Tensor, l: &DMatrix<f64>) -> Result<Gb4Terms> {
    let n = riem.n;
    if n != 4 {
        return Err(Error::Domain(format!("Gauss-Bonnet boundary term needs n = 4, got {n}")));
    }
    if l.nrows() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: l.nrows() });
    }
    let id = DMatrix::identity(n, n);
    let ric = ricci(riem, &id);
    let scal = trace(&ric, &id);
    let a = schouten(&ric, scal, &id);
    let at = a.view((0, 0), (3, 3)).into_owned();
    let h = l.trace();
    let l2 = (l * l).trace();
    let l3 = (l * l * l).trace();
    let mut rl = 0.0;
    for c in 0..3 {
        for a_ in 0..3 {
            for b in 0..3 {
                rl += riem.get(&[c, a_, c, b]) * l[(a_, b)];
            }
        }
    }
    let ric_nn = ric[(3, 3)];
    let b_cal = 0.5 * scal * h - ric_nn * h - rl + h.powi(3) / 3.0 - h * l2 + 2.0 / 3.0 * l3;
    let al: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| at[(i, j)] * l[(i, j)]).sum();
    let l4 = -2.0 * at.trace() * h - 2.0 * (n as f64 - 3.0) * al + 2.0 * rl;
    let b2 = boundary_b2(&at, l, 4)?;
    Ok(Gb4Terms { b_cal, l4, b2, residual: b2 - (0.5 * b_cal + 0.25 * l4) })
}

/// Outcome of the two directions relating `B^k` and the mean curvature on umbilic boundaries.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct VanishingReport {
    /// Largest `|B^k|` over samples with `mu = 0`; zero exactly.
    pub max_bk_at_zero_mean_curvature: f64,
    /// Smallest bracket `sum_i C_2 sigma_i(A^T) mu^{2k-2i-2}` over cone samples.
    pub min_bracket: f64,
    /// Largest `|mu|` among samples where `B^k` vanished to `tol`.
    pub max_mu_with_vanishing_bk: f64,
    pub samples: usize,
}

/// Samples `A` in the cone `Gamma_k^+` of dimension `n` and checks that `mu = 0`
/// forces `B^k = 0` and that `B^k = 0` forces `mu = 0` (positive bracket).
pub fn check_vanishing(n: usize, k: usize, samples: usize, seed: u64, tol: f64) -> Result<VanishingReport> {
    use crate::rng::{seeded, uniform_vec};
    use crate::symfun::sample_cone;
    let mut rng = seeded(seed);
    let mut rep = VanishingReport {
        max_bk_at_zero_mean_curvature: 0.0,
        min_bracket: f64::INFINITY,
        max_mu_with_vanishing_bk: 0.0,
        samples,
    };
    for _ in 0..samples {
        let lam = sample_cone(&mut rng, n, k)?;
        let q = random_orthogonal(&mut rng, n);
        let a = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(lam.values())) * q.transpose();
        let at = a.view((0, 0), (n - 1, n - 1)).into_owned();
        rep.max_bk_at_zero_mean_curvature =
            rep.max_bk_at_zero_mean_curvature.max(boundary_bk_umbilic(&at, 0.0, n, k)?.abs());
        let mu = uniform_vec(&mut rng, 1, -2.0, 2.0)[0];
        let bracket = umbilic_bracket(&at, mu, n, k)?;
        rep.min_bracket = rep.min_bracket.min(bracket);
        for m in [mu, mu * 1e-3, 0.0] {
            if boundary_bk_umbilic(&at, m, n, k)?.abs() <= tol {
                rep.max_mu_with_vanishing_bk = rep.max_mu_with_vanishing_bk.max(m.abs());
            }
        }
    }
    Ok(rep)
}

/// Largest `|general - umbilic| / (1 + |umbilic|)` over random `(A^T, mu)` with `L = mu g`.
pub fn check_form_agreement(n: usize, k: usize, samples: usize, seed: u64) -> Result<f64> {
    use crate::rng::{seeded, symmetric, uniform_vec};
    let mut rng = seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let at = symmetric(&mut rng, n - 1, 1.0);
        let mu = uniform_vec(&mut rng, 1, -2.0, 2.0)[0];
        let l = DMatrix::identity(n - 1, n - 1) * mu;
        let g = boundary_bk_general(&at, &l, n, k)?;
        let u = boundary_bk_umbilic(&at, mu, n, k)?;
        worst = worst.max((g - u).abs() / (1.0 + u.abs()));
    }
    Ok(worst)
}

/// Haar-ish orthogonal matrix from the QR factorization of a Gaussian-like matrix.
pub fn random_orthogonal(rng: &mut impl rand::Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, symmetric};

    #[test]
    fn double_factorial_conventions() {
        assert_eq!(double_factorial(-1), 1.0);
        assert_eq!(double_factorial(0), 1.0);
        assert_eq!(double_factorial(5), 15.0);
        assert_eq!(double_factorial(6), 48.0);
    }

    #[test]
    fn umbilic_b2_matches_closed_forms() {
        let mut rng = seeded(3);
        for n in 3..7 {
            let at = symmetric(&mut rng, n - 1, 1.0);
            let mu = 0.7;
            let l = DMatrix::identity(n - 1, n - 1) * mu;
            let s1 = at.trace();
            let expect =
                if n == 3 { (s1 + 2.0 / 3.0 * mu * mu) * mu } else { (s1 + (n as f64 - 1.0) / 3.0 * mu * mu) * mu };
            assert!((boundary_b2(&at, &l, n).unwrap() - expect).abs() < 1e-12);
            assert!((boundary_bk_umbilic(&at, mu, n, 2).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn random_form_agreement() {
        for (n, k) in [(6, 3), (8, 3), (8, 4)] {
            assert!(check_form_agreement(n, k, 200, 9).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn general_and_umbilic_forms_agree() {
        let mut rng = seeded(5);
        for (n, k) in [(6, 3), (8, 3), (8, 4)] {
            let at = symmetric(&mut rng, n - 1, 1.0);
            let mu = -0.4;
            let l = DMatrix::identity(n - 1, n - 1) * mu;
            let g = boundary_bk_general(&at, &l, n, k).unwrap();
            let u = boundary_bk_umbilic(&at, mu, n, k).unwrap();
            assert!((g - u).abs() <= 1e-10 * (1.0 + u.abs()), "{n} {k}: {g} {u}");
        }
    }

    #[test]
    fn general_form_needs_room_when_not_umbilic() {
        let mut rng = seeded(9);
        let at = symmetric(&mut rng, 4, 1.0);
        let l = symmetric(&mut rng, 4, 1.0);
        assert!(matches!(boundary_bk(&at, &l, 5, 3, BkForm::General), Err(Error::Domain(_))));
        assert!(matches!(boundary_bk(&at, &l, 5, 3, BkForm::Umbilic), Err(Error::NotUmbilic { .. })));
        let mu_l = DMatrix::identity(4, 4) * 0.3;
        assert!(boundary_bk(&at, &mu_l, 5, 3, BkForm::General).is_ok());
        assert!(matches!(boundary_b2(&at, &l, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn gb4_identity_on_random_curvature() {
        let mut rng = seeded(11);
        let mut riem = Tensor::zeros(4, 4);
        for _ in 0..3 {
            let h = symmetric(&mut rng, 4, 1.0);
            let k = symmetric(&mut rng, 4, 1.0);
            let kn = crate::geom::tensor::kulkarni_nomizu(&h, &k);
            for (r, v) in riem.data.iter_mut().zip(&kn.data) {
                *r += v;
            }
        }
        let l = symmetric(&mut rng, 3, 1.0);
        let t = boundary_gb4(&riem, &l).unwrap();
        assert!(t.residual.abs() < 1e-12, "{t:?}");
        assert!(matches!(boundary_gb4(&Tensor::zeros(3, 4), &l), Err(Error::Domain(_))));
    }

    #[test]
    fn vanishing_both_directions() {
        let rep = check_vanishing(5, 2, 200, 1, 1e-12).unwrap();
        assert_eq!(rep.max_bk_at_zero_mean_curvature, 0.0);
        assert!(rep.min_bracket > 0.0);
        assert_eq!(rep.max_mu_with_vanishing_bk, 0.0);
    }
}
