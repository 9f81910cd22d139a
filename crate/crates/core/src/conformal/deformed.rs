//! The deformation `A^t = A + (1-t)/2 (tr A) g` along the continuation paths.

use crate::error::{Error, Result};
use crate::geom::pack::CurvaturePack;
use crate::geom::tensor::trace;
use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct DeformedTensor {
    pub t: f64,
    pub theta: f64,
    pub tensor: DMatrix<f64>,
    pub offset: Option<DMatrix<f64>>,
}

fn check_t(t: f64, theta: f64) -> Result<()> {
    if !(t >= -theta && t <= 1.0) {
        return Err(Error::Domain(format!("t = {t} outside [-{theta}, 1]")));
    }
    Ok(())
}

/// `A^t` at one point, optionally plus an offset `S`.
pub fn deform(
    a: &DMatrix<f64>,
    g: &DMatrix<f64>,
    t: f64,
    theta: f64,
    offset: Option<DMatrix<f64>>,
) -> Result<DeformedTensor> {
    check_t(t, theta)?;
    let ginv = g.clone().cholesky().ok_or_else(|| Error::Geometry { node: vec![] })?.inverse();
    let mut tensor = a + g * (0.5 * (1.0 - t) * trace(a, &ginv));
    if let Some(s) = &offset {
        tensor += s;
    }
    Ok(DeformedTensor { t, theta, tensor, offset })
}

/// `A^t` at every node of a pack.
pub fn deformed_tensor(pack: &CurvaturePack, t: f64, theta: f64) -> Result<Vec<DeformedTensor>> {
    pack.nodes.iter().map(|p| deform(&p.schouten, &p.g, t, theta, None)).collect()
}

/// Spectrum of `g^{-1} A^t`: every eigenvalue shifted by `(1-t)/2 sigma_1`.
pub fn deformed_spectrum(lambda: &[f64], t: f64) -> Vec<f64> {
    let s1: f64 = lambda.iter().sum();
    lambda.iter().map(|l| l + 0.5 * (1.0 - t) * s1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, symmetric};

    #[test]
    fn endpoint_and_trace_law() {
        let mut rng = seeded(4);
        for n in 3..7 {
            let a = symmetric(&mut rng, n, 1.0);
            let b = symmetric(&mut rng, n, 0.3);
            let g = DMatrix::identity(n, n) + &b * b.transpose();
            let ginv = g.clone().try_inverse().unwrap();
            let d1 = deform(&a, &g, 1.0, 5.0, None).unwrap();
            assert!((&d1.tensor - &a).abs().max() < 1e-15);
            let t = -2.3;
            let d = deform(&a, &g, t, 5.0, None).unwrap();
            let lhs = trace(&d.tensor, &ginv);
            let rhs = (1.0 + n as f64 * (1.0 - t) / 2.0) * trace(&a, &ginv);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
        assert!(deform(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2), -6.0, 5.0, None).is_err());
    }

    #[test]
    fn large_theta_makes_positive_curvature_definite() {
        let ric = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -0.5, 0.2, 0.4]));
        let g = DMatrix::identity(4, 4);
        let scal = ric.trace();
        let a = crate::geom::tensor::schouten(&ric, scal, &g);
        let d = deform(&a, &g, -50.0, 50.0, None).unwrap();
        assert!(d.tensor.symmetric_eigenvalues().min() > 0.0);
        let expect = (&ric + &g * (50.0 / 6.0 * scal)) * 0.5;
        assert!((d.tensor - expect).abs().max() < 1e-12);
    }
}
