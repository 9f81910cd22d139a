//! Damped Newton iteration with a cone guard in the line search.

use super::radial::{PathSpec, RadialProblem};
use crate::error::{Error, NewtonFailure, Result};
use crate::tolerances::{ARMIJO_C, MIN_DAMPING, NEWTON_TOL};
use nalgebra::DVector;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Max-norm residual accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: NEWTON_TOL, max_iter: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonRecord {
    pub iterations: usize,
    /// Max-norm residual before each step and after the last one.
    pub residuals: Vec<f64>,
    pub damping: Vec<f64>,
    /// Steps rejected by the cone guard during line searches.
    pub cone_rejections: usize,
    pub cone_margin: f64,
    /// `log(e_{i+1}/e_i) / log(e_i/e_{i-1})` over the last three residuals above roundoff.
    pub observed_order: Option<f64>,
}

fn observed_order(res: &[f64]) -> Option<f64> {
    let floor = 1e-13;
    let tail: Vec<f64> = res.iter().copied().filter(|r| *r > floor).collect();
    if tail.len() < 3 {
        return None;
    }
    let (a, b, c) = (tail[tail.len() - 3], tail[tail.len() - 2], tail[tail.len() - 1]);
    let p = (c / b).ln() / (b / a).ln();
    p.is_finite().then_some(p)
}

/// Solve the discrete equation at parameter `t` from `u0`.
///
/// The starting point must be cone-admissible; the cone error is returned unchanged otherwise.
pub fn newton_solve(
    problem: &RadialProblem,
    path: &PathSpec,
    t: f64,
    u0: &DVector<f64>,
    opts: &NewtonOptions,
) -> Result<(DVector<f64>, NewtonRecord)> {
    let mut u = u0.clone();
    let mut eval = problem.evaluate(path, t, &u, true)?;
    let mut rec = NewtonRecord {
        iterations: 0,
        residuals: vec![eval.residual.amax()],
        damping: Vec::new(),
        cone_rejections: 0,
        cone_margin: eval.cone_margin,
        observed_order: None,
    };
    loop {
        let rmax = eval.residual.amax();
        if rmax <= opts.tol {
            rec.observed_order = observed_order(&rec.residuals);
            rec.cone_margin = eval.cone_margin;
            return Ok((u, rec));
        }
        if rec.iterations >= opts.max_iter {
            return Err(Error::Newton(NewtonFailure::MaxIterations { iterations: rec.iterations, residual: rmax }));
        }
        let jac = eval.jacobian.take().expect("requested");
        let delta = jac.lu().solve(&(-&eval.residual)).ok_or(Error::Newton(NewtonFailure::Singular))?;
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Newton(NewtonFailure::Singular));
        }
        let norm2 = eval.residual.norm_squared();
        let mut alpha = 1.0;
        let mut cone_only = true;
        let accepted = loop {
            if alpha < MIN_DAMPING {
                break None;
            }
            let trial = &u + &delta * alpha;
            match problem.evaluate(path, t, &trial, true) {
                Ok(e) => {
                    if e.residual.norm_squared() <= (1.0 - 2.0 * ARMIJO_C * alpha) * norm2 {
                        break Some((trial, e));
                    }
                    cone_only = false;
                }
                Err(Error::NodeCone { .. }) => rec.cone_rejections += 1,
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        };
        let Some((next, e)) = accepted else {
            return Err(Error::Newton(if cone_only {
                NewtonFailure::ConeGuard { iterations: rec.iterations }
            } else {
                NewtonFailure::LineSearch { residual: rmax }
            }));
        };
        u = next;
        eval = e;
        rec.iterations += 1;
        rec.damping.push(alpha);
        rec.residuals.push(eval.residual.amax());
        rec.cone_margin = rec.cone_margin.min(eval.cone_margin);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::field::{EvenPoly, RadialProfile, RoundSphere};
    use crate::solver::radial::{PathKind, Target};
    use crate::tolerances::{CONSTANT_SOLUTION_ITERS, CONSTANT_SOLUTION_TOL};
    use std::sync::Arc;

    fn hemisphere() -> RadialProblem {
        RadialProblem::new(4, 2, Arc::new(RoundSphere), Target::exp_minus(2.0), 0.0, 201).unwrap()
    }

    #[test]
    fn constant_solution_from_nearby_start() {
        let p = hemisphere();
        let path = p.path(PathKind::Sigma).unwrap();
        let (u, rec) = newton_solve(&p, &path, 1.0, &p.constant(0.3), &NewtonOptions::default()).unwrap();
        let ustar = -0.5 * (6f64.sqrt() / 4.0).ln();
        assert!(p.interior(&u).iter().all(|v| (v - ustar).abs() < CONSTANT_SOLUTION_TOL));
        assert!(rec.iterations <= CONSTANT_SOLUTION_ITERS, "{rec:?}");
        assert!(rec.observed_order.unwrap() > 1.8, "{rec:?}");
    }

    #[test]
    fn exact_start_needs_no_iteration() {
        let p = hemisphere();
        let path = p.path(PathKind::Sigma).unwrap();
        let ustar = -0.5 * (6f64.sqrt() / 4.0).ln();
        let (_, rec) = newton_solve(&p, &path, 1.0, &p.constant(ustar), &NewtonOptions::default()).unwrap();
        assert_eq!(rec.iterations, 0);
    }

    #[test]
    fn cone_violating_start_is_reported() {
        let p = hemisphere();
        let path = p.path(PathKind::Sigma).unwrap();
        let bad = p.sample(&EvenPoly(vec![0.0, -3.0]));
        let e = newton_solve(&p, &path, 1.0, &bad, &NewtonOptions::default());
        assert!(matches!(e, Err(Error::NodeCone { .. })), "{e:?}");
    }

    #[test]
    fn iteration_budget_is_distinct_failure() {
        let p = hemisphere();
        let path = p.path(PathKind::Sigma).unwrap();
        let e = newton_solve(&p, &path, 1.0, &p.constant(0.3), &NewtonOptions { tol: 1e-11, max_iter: 1 });
        assert!(matches!(e, Err(Error::Newton(NewtonFailure::MaxIterations { .. }))), "{e:?}");
    }

    #[test]
    fn linear_order_converges_fast() {
        // k = 1: linear apart from the gradient-squared term, small amplitude
        let flat: Arc<dyn RadialProfile> = Arc::new(EvenPoly(vec![]));
        let exact = Arc::new(EvenPoly(vec![0.02, 0.05]));
        let p = crate::solver::report::manufactured_problem(4, 1, flat, exact.clone(), 81).unwrap();
        let path = p.path(PathKind::Sigma).unwrap();
        let start = p.sample(&EvenPoly(vec![0.0, 0.04]));
        let (u, rec) = newton_solve(&p, &path, 1.0, &start, &NewtonOptions::default()).unwrap();
        assert!(rec.iterations <= 3, "{rec:?}");
        let err = p.interior(&u).iter().zip(p.radii()).fold(0.0f64, |m, (v, r)| m.max((v - exact.value(*r)).abs()));
        assert!(err < 1e-3, "{err}");
    }
}
