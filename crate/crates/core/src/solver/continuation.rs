//! Adaptive marching in the path parameter with Newton correction at each step.

use super::newton::{newton_solve, NewtonOptions, NewtonRecord};
use super::radial::{PathKind, PathSpec, RadialProblem};
use super::report::{solve_report, SolveReport};
use crate::error::{Error, Result};
use crate::tolerances::MIN_CONTINUATION_STEP;
use nalgebra::DVector;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationOptions {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Steps accepted within this many Newton iterations grow the step by 1.5.
    pub easy_iterations: usize,
    /// Ratio to the start value above which the nonlocal monitor is flagged.
    pub growth_flag: f64,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            max_step: 1.0,
            min_step: MIN_CONTINUATION_STEP,
            easy_iterations: 3,
            growth_flag: 100.0,
            newton: NewtonOptions { tol: 1e-10, max_iter: 12 },
        }
    }
}

/// Monitored quantities at one accepted parameter value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationStep {
    pub t: f64,
    pub step: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    pub cone_margin: f64,
    pub sup_u: f64,
    pub inf_u: f64,
    pub max_gradient: f64,
    pub max_laplacian: f64,
    /// `(1 - t)(int e^{-5u} dV)^{2/5}` on the nonlocal path.
    pub integral_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub kind: PathKind,
    pub theta: f64,
    pub start: f64,
    pub steps: Vec<ContinuationStep>,
    pub rejected_steps: usize,
    /// Newton iterations of the correction at the start value.
    pub start_iterations: usize,
    pub integral_bound_flagged: bool,
    pub min_cone_margin: f64,
    pub last: SolveReport,
    #[serde(skip)]
    pub solution: DVector<f64>,
}

fn monitor(
    problem: &RadialProblem,
    path: &PathSpec,
    t: f64,
    step: f64,
    u: &DVector<f64>,
    rec: &NewtonRecord,
) -> ContinuationStep {
    let n = problem.n as f64;
    let h = problem.step();
    let r = problem.radii();
    let w = &problem.w;
    let mut max_gradient: f64 = 0.0;
    let mut max_laplacian = f64::NEG_INFINITY;
    for (j, &x) in r.iter().enumerate() {
        let d1 = (u[j + 2] - u[j]) / (2.0 * h);
        let d2 = (u[j + 2] - 2.0 * u[j + 1] + u[j]) / (h * h);
        let e = w.value(x).exp();
        max_gradient = max_gradient.max(e * d1.abs());
        let lap = if j == 0 { n * d2 } else { d2 + ((n - 1.0) / x - (n - 2.0) * w.d1(x)) * d1 };
        max_laplacian = max_laplacian.max(e * e * lap);
    }
    let vals = problem.interior(u);
    ContinuationStep {
        t,
        step,
        newton_iterations: rec.iterations,
        residual: *rec.residuals.last().unwrap_or(&0.0),
        cone_margin: rec.cone_margin,
        sup_u: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        inf_u: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max_gradient,
        max_laplacian,
        integral_bound: (path.kind == PathKind::Defm).then(|| (1.0 - t) * problem.nonlocal_integral(u).powf(0.4)),
    }
}

/// March the path from its start to `t = 1`, starting from `u = 0`.
///
/// The start value is corrected by Newton first, which takes zero iterations when
/// `u = 0` is an exact discrete solution there.
pub fn run_continuation(
    problem: &RadialProblem,
    kind: PathKind,
    opts: &ContinuationOptions,
) -> Result<ContinuationReport> {
    run_continuation_on(problem, &problem.path(kind)?, opts)
}

/// As [`run_continuation`] on explicit path data.
pub fn run_continuation_on(
    problem: &RadialProblem,
    path: &PathSpec,
    opts: &ContinuationOptions,
) -> Result<ContinuationReport> {
    let kind = path.kind;
    let start = path.start;
    let (mut u, rec0) = newton_solve(problem, path, start, &problem.constant(0.0), &opts.newton)?;
    let mut steps = vec![monitor(problem, path, start, 0.0, &u, &rec0)];
    let mut t = start;
    let mut dt = opts.initial_step.min(opts.max_step) * (1.0 - start).max(1.0);
    let mut rejected = 0;
    let mut prev: Option<(f64, DVector<f64>)> = None;
    let mut last_rec = rec0.clone();
    while t < 1.0 {
        let next = (t + dt).min(1.0);
        // secant predictor from the last two accepted points
        let guess = match &prev {
            Some((tp, up)) if (t - tp).abs() > 0.0 => &u + (&u - up) * ((next - t) / (t - tp)),
            _ => u.clone(),
        };
        let attempt = newton_solve(problem, path, next, &guess, &opts.newton)
            .or_else(|_| newton_solve(problem, path, next, &u, &opts.newton));
        match attempt {
            Ok((un, rec)) => {
                steps.push(monitor(problem, path, next, next - t, &un, &rec));
                let easy = rec.iterations <= opts.easy_iterations;
                last_rec = rec;
                prev = Some((t, std::mem::replace(&mut u, un)));
                t = next;
                if easy {
                    dt = (dt * 1.5).min(opts.max_step * (1.0 - start).max(1.0));
                }
            }
            Err(Error::Newton(_)) | Err(Error::NodeCone { .. }) => {
                rejected += 1;
                dt *= 0.5;
                if dt < opts.min_step {
                    return Err(Error::ContinuationStuck { last_t: t, step: dt });
                }
            }
            Err(e) => return Err(e),
        }
    }
    let bounds: Vec<f64> = steps.iter().filter_map(|s| s.integral_bound).collect();
    let integral_bound_flagged = match bounds.first() {
        Some(&b0) => bounds.iter().any(|b| *b > opts.growth_flag * b0.abs().max(1e-300)),
        None => false,
    };
    let min_cone_margin = steps.iter().map(|s| s.cone_margin).fold(f64::INFINITY, f64::min);
    let iterations = steps.iter().map(|s| s.newton_iterations).collect();
    let last = solve_report(problem, path, 1.0, &u, &last_rec, iterations, true)?;
    Ok(ContinuationReport {
        kind,
        theta: path.theta,
        start,
        start_iterations: rec0.iterations,
        steps,
        rejected_steps: rejected,
        integral_bound_flagged,
        min_cone_margin,
        last,
        solution: u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::field::{EvenPoly, RadialProfile, RoundSphere, SumProfile};
    use crate::solver::radial::Target;
    use std::sync::Arc;

    fn perturbed_hemisphere(eps: f64) -> Arc<dyn RadialProfile> {
        Arc::new(SumProfile(vec![Arc::new(RoundSphere), Arc::new(EvenPoly(vec![0.0, eps, -0.5 * eps]))]))
    }

    #[test]
    fn pos_path_reaches_one() {
        let p = RadialProblem::new(4, 2, perturbed_hemisphere(0.2), Target::exp_minus(2.0), 0.0, 101).unwrap();
        let rep = run_continuation(&p, PathKind::Pos, &ContinuationOptions::default()).unwrap();
        assert_eq!(rep.start_iterations, 0);
        assert_eq!(rep.steps.last().unwrap().t, 1.0);
        assert!(rep.min_cone_margin > 0.0);
        assert!(rep.last.max_operator_residual <= 1e-10);
        assert!(rep.steps.iter().all(|s| s.residual <= 1e-10));
    }

    #[test]
    fn defm_path_monitor_stays_bounded() {
        let p = RadialProblem::new(4, 2, perturbed_hemisphere(0.2), Target::exp_minus(2.0), 0.0, 101).unwrap();
        let rep = run_continuation(&p, PathKind::Defm, &ContinuationOptions::default()).unwrap();
        assert_eq!(rep.steps.last().unwrap().t, 1.0);
        assert!(!rep.integral_bound_flagged);
        let bounds: Vec<f64> = rep.steps.iter().filter_map(|s| s.integral_bound).collect();
        assert_eq!(bounds.len(), rep.steps.len());
        assert_eq!(*bounds.last().unwrap(), 0.0);
        assert!(rep.min_cone_margin > 0.0);
    }

    #[test]
    fn lcf_path_with_m_two_reaches_one() {
        let p = RadialProblem::new(4, 2, Arc::new(RoundSphere), Target::exp_minus(2.0), 0.0, 81).unwrap();
        let lcf = run_continuation(&p, PathKind::Lcf, &ContinuationOptions::default()).unwrap();
        let pos = run_continuation(&p, PathKind::Pos, &ContinuationOptions::default()).unwrap();
        assert_eq!(lcf.steps.last().unwrap().t, 1.0);
        assert!(lcf.min_cone_margin > 0.0);
        assert!((&lcf.solution - &pos.solution).amax() < 1e-9);
    }

    #[test]
    fn lcf_path_in_higher_order() {
        let p = RadialProblem::new(5, 3, perturbed_hemisphere(0.1), Target::exp_minus(2.0), 0.0, 61).unwrap();
        let rep = run_continuation(&p, PathKind::Lcf, &ContinuationOptions::default()).unwrap();
        assert_eq!(rep.steps.last().unwrap().t, 1.0);
        assert!(rep.min_cone_margin > 0.0);
    }

    #[test]
    fn background_path_needs_no_iterations() {
        let p = RadialProblem::new(4, 2, perturbed_hemisphere(0.2), Target::exp_minus(2.0), 0.0, 61).unwrap();
        let path = p.background_path(PathKind::Pos).unwrap();
        let rep = run_continuation_on(&p, &path, &ContinuationOptions::default()).unwrap();
        assert!(rep.steps.len() > 2);
        assert!(rep.steps.iter().all(|s| s.newton_iterations == 0));
        assert!(rep.solution.amax() == 0.0);
    }

    #[test]
    fn stuck_path_reports_last_parameter() {
        let p = RadialProblem::new(4, 2, Arc::new(RoundSphere), Target::exp_minus(2.0), 0.0, 41).unwrap();
        let opts = ContinuationOptions { newton: NewtonOptions { tol: 1e-10, max_iter: 0 }, ..Default::default() };
        match run_continuation(&p, PathKind::Pos, &opts) {
            Err(Error::ContinuationStuck { last_t, step }) => {
                assert_eq!(last_t, -5.0);
                assert!(step < MIN_CONTINUATION_STEP);
            }
            other => panic!("{other:?}"),
        }
    }
}
