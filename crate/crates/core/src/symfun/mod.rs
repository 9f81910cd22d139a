//! Elementary symmetric functions, Newton tensors, mixed symmetric functions,
//! Garding cones and the normalized operator F.
//!
//! Matrix arguments are read as endomorphisms `W^i_j` (row = upper index).
//! For symmetric input this is immaterial; for `g^{-1}A` it is the natural reading.

mod cone;
pub mod kronecker;
pub mod suite;

pub use cone::{
    check_structure_conditions, cone_membership, cone_membership_with, f_normalized, f_normalized_hessian,
    newton_maclaurin_margin, sample_cone, ConeTag, ConeVerdict, StructureReport,
};

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::ops::Deref;

/// Ordered eigenvalues of a symmetric endomorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empty spectrum".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite eigenvalue".into()));
        }
        Ok(Self { values })
    }

    /// The vector e = (1, ..., 1).
    pub fn ones(n: usize) -> Self {
        Self { values: vec![1.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v + c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl TryFrom<Vec<f64>> for Spectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Spectrum::new(v)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.values
    }
}

/// Real symmetric matrix; symmetry is enforced on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymTensor {
    m: DMatrix<f64>,
}

impl SymTensor {
    /// Symmetrizes `m` as `(m + m^T) / 2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite entry".into()));
        }
        let s = (&m + m.transpose()) * 0.5;
        Ok(Self { m: s })
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self { m: DMatrix::identity(n, n) * c }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self { m: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)) }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Spectrum {
        let mut v: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        Spectrum { values: v }
    }

    /// Leading `(n-1) x (n-1)` block: the tangential part when the last index is normal.
    pub fn tangential(&self) -> SymTensor {
        let k = self.n() - 1;
        Self { m: self.m.view((0, 0), (k, k)).into_owned() }
    }
}

impl Deref for SymTensor {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.m
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymTensor {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("ragged matrix".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let asym = (&m - m.transpose()).abs().max();
        if asym > 0.0 {
            return Err(Error::Domain(format!("matrix not symmetric (defect {asym:e})")));
        }
        SymTensor::new(m)
    }
}

impl From<SymTensor> for Vec<Vec<f64>> {
    fn from(s: SymTensor) -> Self {
        (0..s.n()).map(|i| (0..s.n()).map(|j| s.m[(i, j)]).collect()).collect()
    }
}

fn check_order(k: usize, n: usize) -> Result<()> {
    if k > n {
        return Err(Error::Domain(format!("order {k} exceeds dimension {n}")));
    }
    Ok(())
}

/// All elementary symmetric functions e_0..e_n of a list of numbers.
pub fn elementary_all(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (count, &x) in values.iter().enumerate() {
        for j in (1..=count + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// sigma_k of a spectrum.
pub fn sigma_spectrum(lambda: &[f64], k: usize) -> Result<f64> {
    check_order(k, lambda.len())?;
    Ok(elementary_all(lambda)[k])
}

/// sigma_k of the spectrum with the entries at `skip` removed.
pub fn sigma_excluding(lambda: &[f64], k: usize, skip: &[usize]) -> f64 {
    let rest: Vec<f64> = lambda.iter().enumerate().filter(|(i, _)| !skip.contains(i)).map(|(_, &v)| v).collect();
    if k > rest.len() {
        return 0.0;
    }
    elementary_all(&rest)[k]
}

/// sigma_k of a square matrix through its characteristic polynomial
/// (Faddeev-LeVerrier: `k sigma_k = tr(T_{k-1} W)`).
pub fn sigma(w: &DMatrix<f64>, k: usize) -> Result<f64> {
    check_square(w)?;
    check_order(k, w.nrows())?;
    Ok(sigmas_and_newton(w, k).0[k])
}

/// sigma_k of a symmetric matrix through its eigenvalues.
pub fn sigma_eigen(w: &SymTensor, k: usize) -> Result<f64> {
    check_order(k, w.n())?;
    sigma_spectrum(w.spectrum().values(), k)
}

fn check_square(w: &DMatrix<f64>) -> Result<()> {
    if w.nrows() != w.ncols() {
        return Err(Error::DimensionMismatch { expected: w.nrows(), got: w.ncols() });
    }
    Ok(())
}

/// `(sigma_0..sigma_q, T_0..T_q)` of a square matrix.
pub fn sigmas_and_newton(w: &DMatrix<f64>, q: usize) -> (Vec<f64>, Vec<DMatrix<f64>>) {
    let n = w.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut sig = vec![1.0];
    let mut ts = vec![id.clone()];
    for j in 1..=q {
        let p = &ts[j - 1] * w;
        let s = p.trace() / j as f64;
        sig.push(s);
        ts.push(&id * s - p);
    }
    (sig, ts)
}

/// Newton tensor `T_q(W) = sigma_q I - T_{q-1} W`.
pub fn newton_tensor(w: &DMatrix<f64>, q: usize) -> Result<DMatrix<f64>> {
    check_square(w)?;
    check_order(q, w.nrows())?;
    Ok(sigmas_and_newton(w, q).1.pop().unwrap())
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    binom(n, k)
}

/// Polarized Faddeev-LeVerrier on `W(s) = s A + B`: returns, for each degree
/// j <= q, the coefficients in s of sigma_j(W(s)) and T_j(W(s)).
struct Polarized {
    sigma: Vec<Vec<f64>>,
    newton: Vec<Vec<DMatrix<f64>>>,
}

fn polarize(a: &DMatrix<f64>, b: &DMatrix<f64>, q: usize) -> Polarized {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut sigma = vec![vec![1.0]];
    let mut newton = vec![vec![id.clone()]];
    for j in 1..=q {
        let prev = &newton[j - 1];
        let mut prod = vec![DMatrix::<f64>::zeros(n, n); j + 1];
        for (d, t) in prev.iter().enumerate() {
            prod[d] += t * b;
            prod[d + 1] += t * a;
        }
        let s: Vec<f64> = prod.iter().map(|p| p.trace() / j as f64).collect();
        let t: Vec<DMatrix<f64>> = prod.into_iter().zip(&s).map(|(p, &c)| &id * c - p).collect();
        sigma.push(s);
        newton.push(t);
    }
    Polarized { sigma, newton }
}

fn check_mixed(a: &DMatrix<f64>, b: &DMatrix<f64>, q: usize, r: usize) -> Result<()> {
    check_square(a)?;
    check_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    if r > q {
        return Err(Error::Domain(format!("mixed order r = {r} exceeds q = {q}")));
    }
    check_order(q, a.nrows())
}

/// Mixed symmetric function sigma_{q,r}(A, B): r slots of A and q - r of B,
/// normalized so that sigma_{q,r}(A, A) = sigma_q(A).
pub fn mixed_sigma(a: &DMatrix<f64>, b: &DMatrix<f64>, q: usize, r: usize) -> Result<f64> {
    check_mixed(a, b, q, r)?;
    let p = polarize(a, b, q);
    Ok(p.sigma[q][r] / binom(q, r))
}

/// Mixed Newton tensor T_{q,r}(A, B).
pub fn mixed_newton(a: &DMatrix<f64>, b: &DMatrix<f64>, q: usize, r: usize) -> Result<DMatrix<f64>> {
    check_mixed(a, b, q, r)?;
    let p = polarize(a, b, q);
    Ok(&p.newton[q][r] / binom(q, r))
}

/// Contraction `T : M = T^i_j M^j_i`.
pub fn contract(t: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    (t * m).trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn sigma_of_identity_is_binomial() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert_eq!(sigma(&id, 2).unwrap(), 6.0);
        assert_eq!(sigma(&id, 0).unwrap(), 1.0);
    }

    #[test]
    fn sigma_two_of_small_spectrum() {
        let v = sigma_spectrum(&[1.0, 1.0, -0.4], 2).unwrap();
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn order_above_dimension_is_rejected() {
        assert!(matches!(sigma_spectrum(&[1.0, 2.0], 3), Err(Error::Domain(_))));
        assert!(sigma(&DMatrix::identity(2, 2), 3).is_err());
        assert!(newton_tensor(&DMatrix::identity(2, 2), 3).is_err());
    }

    #[test]
    fn first_newton_tensor_of_identity() {
        let t = newton_tensor(&DMatrix::identity(3, 3), 1).unwrap();
        assert_eq!(t, DMatrix::identity(3, 3) * 2.0);
    }

    #[test]
    fn charpoly_and_eigen_paths_agree() {
        let mut r = rng::seeded(11);
        for n in 1..=6 {
            let w = SymTensor::new(rng::symmetric(&mut r, n, 1.0)).unwrap();
            for k in 0..=n {
                let a = sigma(&w, k).unwrap();
                let b = sigma_eigen(&w, k).unwrap();
                assert!(rel(a, b) < 1e-12, "n={n} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn mixed_with_equal_slots_reduces() {
        let mut r = rng::seeded(3);
        let a = rng::symmetric(&mut r, 4, 1.0);
        for r_ in 0..=3 {
            let m = mixed_sigma(&a, &a, 3, r_).unwrap();
            assert!(rel(m, sigma(&a, 3).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn mixed_newton_without_b_slots_is_newton() {
        let mut r = rng::seeded(5);
        let a = rng::symmetric(&mut r, 4, 1.0);
        let b = rng::symmetric(&mut r, 4, 1.0);
        let t = mixed_newton(&a, &b, 2, 2).unwrap();
        assert!((t - newton_tensor(&a, 2).unwrap()).abs().max() < 1e-13);
    }

    #[test]
    fn mixed_dimension_mismatch() {
        let a = DMatrix::<f64>::identity(3, 3);
        let b = DMatrix::<f64>::identity(4, 4);
        assert!(matches!(mixed_sigma(&a, &b, 2, 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sym_tensor_round_trips_through_json() {
        let s = SymTensor::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0])).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[1.0,0.5],[0.5,-2.0]]");
        let back: SymTensor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SymTensor>("[[1.0,0.5],[0.4,1.0]]").is_err());
    }
}
