use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sigmak_core::conformal::bk::random_orthogonal;
use sigmak_core::conformal::{
    apply_conformal, deform, deformed_spectrum, functional_fk_once, integrate_volume, BallQuadrature, BkForm,
    RadialRule,
};
use sigmak_core::geom::boundary::shape_at;
use sigmak_core::geom::field::{EvenPoly, Radial, RadialProfile, RoundSphere, ScalarField, SumProfile};
use sigmak_core::geom::Chart;
use sigmak_core::quadrature::Rule1d;
use sigmak_core::rng;
use sigmak_core::solver::{PathKind, RadialProblem, Target};
use sigmak_core::symfun::{
    self, check_structure_conditions, cone_membership_with, kronecker, sigma, sigma_eigen, ConeVerdict, Spectrum,
    SymTensor,
};
use sigmak_core::variation::Perturbation;
use std::sync::Arc;

fn sym(n: usize, seed: u64) -> DMatrix<f64> {
    rng::symmetric(&mut rng::seeded(seed), n, 1.0)
}

/// `sigma_i` by enumerating subsets.
fn subset_sigma(values: &[f64], i: usize) -> f64 {
    (0u32..1 << values.len())
        .filter(|m| m.count_ones() as usize == i)
        .map(|m| (0..values.len()).filter(|j| m & (1 << j) != 0).map(|j| values[j]).product::<f64>())
        .sum()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sigma_matches_kronecker_sum(n in 1usize..=5, seed in any::<u64>(), q in 0usize..=5) {
        let q = q.min(n);
        let a = sym(n, seed);
        let oracle = kronecker::sigma(&a, q);
        prop_assert!(rel(sigma(&a, q).unwrap(), oracle) < 1e-11);
        prop_assert!(rel(sigma_eigen(&SymTensor::new(a).unwrap(), q).unwrap(), oracle) < 1e-10);
    }

    #[test]
    fn mixed_sigma_matches_kronecker_sum(n in 1usize..=4, seed in any::<u64>(), q in 0usize..=4, r in 0usize..=4) {
        prop_assume!(r <= q && q <= n);
        let a = sym(n, seed);
        let b = sym(n, seed.wrapping_add(1));
        let got = symfun::mixed_sigma(&a, &b, q, r).unwrap();
        prop_assert!(rel(got, kronecker::mixed_sigma(&a, &b, q, r)) < 1e-11);
    }

    #[test]
    fn sigma_is_conjugation_invariant(n in 1usize..=6, seed in any::<u64>(), q in 0usize..=6) {
        let q = q.min(n);
        let a = sym(n, seed);
        let o = random_orthogonal(&mut rng::seeded(seed ^ 0x55), n);
        let b = &o * &a * o.transpose();
        prop_assert!(rel(sigma(&a, q).unwrap(), sigma(&b, q).unwrap()) < 1e-11);
    }

    #[test]
    fn newton_tensor_trace(n in 1usize..=6, seed in any::<u64>(), q in 0usize..=6) {
        let q = q.min(n);
        let a = sym(n, seed);
        let t = symfun::newton_tensor(&a, q).unwrap();
        prop_assert!(rel(t.trace(), (n - q) as f64 * sigma(&a, q).unwrap()) < 1e-11);
    }

    #[test]
    fn cone_verdict_follows_sigma_signs(values in prop::collection::vec(-1.0f64..2.0, 1..=6), k in 1usize..=6) {
        let k = k.min(values.len());
        let s: Vec<f64> = (1..=k).map(|i| subset_sigma(&values, i)).collect();
        prop_assume!(s.iter().all(|v| v.abs() > 1e-12));
        let tag = cone_membership_with(&Spectrum::new(values.clone()).unwrap(), k, 0.0).unwrap();
        prop_assert_eq!(tag.verdict == ConeVerdict::Inside, s.iter().all(|v| *v > 0.0));
        let mut permuted = values.clone();
        permuted.reverse();
        let again = cone_membership_with(&Spectrum::new(permuted).unwrap(), k, 0.0).unwrap();
        prop_assert_eq!(again.verdict, tag.verdict);
    }

    #[test]
    fn structure_margins_hold(n in 2usize..=6, k in 1usize..=6, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let r = check_structure_conditions(k, n, 50, seed).unwrap();
        prop_assert!(r.epsilon >= 1.0 / k as f64 - 1e-8);
        if let Some(rho) = r.rho {
            prop_assert!(rho <= (n - k) as f64 + 1e-8);
        }
    }

    #[test]
    fn deformed_tensor_trace(n in 2usize..=6, seed in any::<u64>(), t in -5.0f64..=1.0) {
        let a = sym(n, seed);
        let m = sym(n, seed ^ 7);
        let g = &m * m.transpose() + DMatrix::identity(n, n);
        let ginv = g.clone().try_inverse().unwrap();
        let at = deform(&a, &g, t, 5.0, None).unwrap().tensor;
        let tr = |x: &DMatrix<f64>| (&ginv * x).trace();
        prop_assert!(rel(tr(&at), (1.0 + n as f64 * (1.0 - t) / 2.0) * tr(&a)) < 1e-11);
        prop_assert!((deform(&a, &g, 1.0, 5.0, None).unwrap().tensor - &a).abs().max() == 0.0);
        let lam = SymTensor::new(a.clone()).unwrap().spectrum();
        let shifted = SymTensor::new(deform(&a, &DMatrix::identity(n, n), t, 5.0, None).unwrap().tensor).unwrap().spectrum();
        let mut expect = deformed_spectrum(lam.values(), t);
        expect.sort_by(f64::total_cmp);
        let mut got = shifted.values().to_vec();
        got.sort_by(f64::total_cmp);
        for (x, y) in got.iter().zip(&expect) {
            prop_assert!(rel(*x, *y) < 1e-10);
        }
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree(m in 1usize..=12, coef in prop::collection::vec(-1.0f64..1.0, 24), b in 0.1f64..3.0) {
        let deg = 2 * m - 1;
        let c = &coef[..=deg];
        let rule = Rule1d::gauss_legendre(m, 0.0, b);
        let got = rule.integrate(|x| c.iter().rev().fold(0.0, |acc, v| acc * x + v));
        let exact: f64 = c.iter().enumerate().map(|(i, v)| v * b.powi(i as i32 + 1) / (i + 1) as f64).sum();
        prop_assert!((got - exact).abs() < 1e-12 * (1.0 + b.powi(deg as i32 + 1)));
    }

    #[test]
    fn ball_metric_is_exactly_conformal(n in 3usize..=6, c in prop::collection::vec(-0.3f64..0.3, 3), x in prop::collection::vec(-0.5f64..0.5, 6)) {
        let w = Radial::new(EvenPoly(c));
        let chart = Chart::ball_conformally_flat(n, 9, Arc::new(w.clone())).unwrap();
        let x = &x[..n];
        let g = chart.metric(x);
        let expect = DMatrix::identity(n, n) * (-2.0 * w.value(x)).exp();
        prop_assert!((g - expect).abs().max() == 0.0);
    }

    #[test]
    fn hat_mean_curvature_follows_conformal_law(n in 3usize..=6, c in prop::collection::vec(-0.3f64..0.3, 3), seed in any::<u64>()) {
        let w: Arc<dyn RadialProfile> = Arc::new(SumProfile(vec![Arc::new(RoundSphere), Arc::new(EvenPoly(vec![0.0, 0.1]))]));
        let u: Arc<dyn RadialProfile> = Arc::new(EvenPoly(c));
        let chart = Chart::ball_conformally_flat(n, 9, Arc::new(Radial(w.clone()))).unwrap();
        let state = apply_conformal(&chart, Arc::new(Radial(u.clone())));
        let combined = Chart::ball_conformally_flat(n, 9, Arc::new(Radial(Arc::new(SumProfile(vec![w, u]))))).unwrap();
        let x = sigmak_core::geom::boundary::sphere_samples(n, 1.0, 1, seed).remove(0);
        let hat = state.boundary_hat(&x).unwrap();
        prop_assert!(hat.umbilic_residual < 1e-12);
        prop_assert!((hat.mu - shape_at(&combined, &x).unwrap().mu).abs() < 1e-12);
    }

    #[test]
    fn functional_splits_into_interior_and_boundary(c in prop::collection::vec(-0.2f64..0.2, 3)) {
        let chart = Chart::ball_conformally_flat(4, 9, Arc::new(Radial::new(RoundSphere))).unwrap();
        let state = apply_conformal(&chart, Arc::new(Radial::new(EvenPoly(c))));
        let f = functional_fk_once(&state, 2, &BallQuadrature::radial(RadialRule::Gauss(16)), BkForm::Umbilic).unwrap();
        prop_assert_eq!(f.total, f.interior + f.boundary);
    }

    #[test]
    fn volume_preserving_direction_has_zero_mean(c in prop::collection::vec(-1.0f64..1.0, 3), n in 3usize..=6) {
        let chart = Chart::ball_conformally_flat(n, 9, Arc::new(Radial::new(RoundSphere))).unwrap();
        let state = apply_conformal(&chart, Arc::new(Radial::new(EvenPoly(vec![0.1]))));
        let quad = BallQuadrature::radial(RadialRule::Gauss(24));
        let phi = Perturbation::volume_preserving(Arc::new(Radial::new(EvenPoly(c)))).direction(&state, &quad).unwrap();
        let (mean, vol) = integrate_volume(&state, &quad, &*phi).unwrap();
        prop_assert!(mean.abs() < 1e-12 * vol);
    }

    #[test]
    fn constant_solution_is_discrete_solution(n in 3usize..=6, k in 1usize..=6, c in 0.5f64..4.0, nodes in 11usize..=81) {
        prop_assume!(k <= n);
        let p = RadialProblem::new(n, k, Arc::new(RoundSphere), Target::exp_minus(c), 0.0, nodes).unwrap();
        let path = p.path(PathKind::Sigma).unwrap();
        // sigma_k^{1/k}(g^{-1} A_round) = binom(n,k)^{1/k} / 2 = c e^{-2u}
        let binom: f64 = (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product();
        let ustar = -0.5 * (binom.powf(1.0 / k as f64) / (2.0 * c)).ln();
        let u: DVector<f64> = p.constant(ustar);
        let eval = p.evaluate(&path, 1.0, &u, false).unwrap();
        prop_assert!(eval.residual.amax() < 1e-12, "{}", eval.residual.amax());
    }
}
