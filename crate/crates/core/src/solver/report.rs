//! Solution reports, the `ghat` diagnostics extracted from a solution, and CSV export.

use super::newton::NewtonRecord;
use super::radial::{PathKind, PathSpec, RadialProblem, Target};
use crate::conformal::boundary_bk_umbilic;
use crate::error::{Error, Result};
use crate::geom::field::RadialProfile;
use crate::quadrature::sphere_area;
use crate::symfun::{binomial, cone_membership, Spectrum};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub kind: PathKind,
    pub t: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    /// Newton iterations per accepted parameter value.
    pub newton_iterations: Vec<usize>,
    pub residual_history: Vec<f64>,
    pub observed_order: Option<f64>,
    /// `operator - right-hand side` at each node.
    pub node_residual: Vec<f64>,
    pub node_cone_margin: Vec<f64>,
    pub max_operator_residual: f64,
    pub boundary_residual: f64,
    /// `sigma_k(ghat^{-1} Ahat)` at each node.
    pub sigma_hat: Vec<f64>,
    /// `e^u (u_n + mu_g)` at `r = 1`.
    pub mu_hat: f64,
    pub volume_hat: f64,
    /// `int sigma_k dV + oint B^k dS` of `ghat`, both on the grid rule.
    pub fk: f64,
}

/// Evaluate every diagnostic of a converged (or candidate) solution.
pub fn solve_report(
    problem: &RadialProblem,
    path: &PathSpec,
    t: f64,
    u: &DVector<f64>,
    rec: &NewtonRecord,
    newton_iterations: Vec<usize>,
    converged: bool,
) -> Result<SolveReport> {
    let (n, k) = (problem.n, problem.k);
    let eval = problem.evaluate(path, t, u, false)?;
    let nodes = problem.nodes;
    let vals = problem.interior(u).to_vec();
    let node_residual: Vec<f64> = (0..nodes).map(|j| eval.residual[j + 1]).collect();
    let node_cone_margin = eval
        .spectra
        .iter()
        .map(|(lr, lt)| {
            let mut v = vec![*lt; n];
            v[0] = *lr;
            let s = Spectrum::new(v)?;
            Ok(cone_membership(&s, k)?.margin(s.max_abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sigma_hat = Vec::with_capacity(nodes);
    let mut interior = 0.0;
    let mut volume_hat = 0.0;
    for (j, (uj, dv)) in vals.iter().zip(problem.volume_weights()).enumerate() {
        let (lr, lt) = problem.hat_spectrum_at(u, j);
        let e = (2.0 * uj).exp();
        let s = e.powi(k as i32)
            * (binomial(n - 1, k) * lt.powi(k as i32) + lr * binomial(n - 1, k - 1) * lt.powi(k as i32 - 1));
        let dvh = dv * (-(n as f64) * uj).exp();
        sigma_hat.push(s);
        interior += s * dvh;
        volume_hat += dvh;
    }
    let last = nodes - 1;
    let h = problem.step();
    let ew = problem.w.value(1.0).exp();
    let un = -ew * (u[last + 2] - u[last]) / (2.0 * h);
    let ub = vals[last];
    let mu_hat = ub.exp() * (un + problem.mu_g());
    let boundary = if k < n {
        let lt = problem.hat_spectrum_at(u, last).1 * (2.0 * ub).exp();
        let at = DMatrix::identity(n - 1, n - 1) * lt;
        let b = boundary_bk_umbilic(&at, mu_hat, n, k)?;
        b * (-((n - 1) as f64) * (ub + problem.w.value(1.0))).exp() * sphere_area(n - 1)
    } else {
        0.0
    };
    let max_operator_residual = node_residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let boundary_residual = eval.residual[eval.residual.len() - 1].abs().max(eval.residual[0].abs());
    Ok(SolveReport {
        converged,
        kind: path.kind,
        t,
        r: problem.radii().to_vec(),
        u: vals,
        newton_iterations,
        residual_history: rec.residuals.clone(),
        observed_order: rec.observed_order,
        node_residual,
        node_cone_margin,
        max_operator_residual,
        boundary_residual,
        sigma_hat,
        mu_hat,
        volume_hat,
        fk: interior + boundary,
    })
}

/// Problem whose exact solution is a given radial profile: `f := sigma_k^{1/k}(Ahat[u_exact])`
/// with exponent 0 and the boundary datum matching `u_exact`.
pub fn manufactured_problem(
    n: usize,
    k: usize,
    w: Arc<dyn RadialProfile>,
    u_exact: Arc<dyn RadialProfile>,
    nodes: usize,
) -> Result<RadialProblem> {
    let (ww, ue) = (w.clone(), u_exact.clone());
    let f = move |r: f64| {
        let s = super::radial::radial_hessian_spectrum(&*ue, &*ww, r, 1.0, n).ok()?;
        let sk = crate::symfun::sigma_spectrum(s.values(), k).ok()?;
        (sk > 0.0).then(|| sk.powf(1.0 / k as f64))
    };
    let f_checked = {
        let f = f.clone();
        Arc::new(move |r: f64| f(r).unwrap_or(f64::NAN))
    };
    let e1 = w.value(1.0).exp();
    let mu_g = e1 * (1.0 - w.d1(1.0));
    let mu_hat = u_exact.value(1.0).exp() * (-e1 * u_exact.d1(1.0) + mu_g);
    RadialProblem::new(n, k, w, Target::profile(f_checked, 0.0, "manufactured"), mu_hat, nodes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalSummary {
    pub r_max: f64,
    pub u_max: f64,
    pub r_min: f64,
    pub u_min: f64,
    pub max_on_boundary: bool,
    /// `Delta_g u` at the maximum; the maximum principle wants it `<= 0` at an interior maximum.
    pub laplacian_at_max: f64,
    /// `|grad u|_g` at the maximum.
    pub gradient_at_max: f64,
    /// `sigma_k^{1/k}(lambda)` and `binom(n,k)^{1/k} sigma_1(lambda) / n` of `g^{-1} Ahat` at the maximum.
    pub chain_lhs: f64,
    pub chain_rhs: f64,
    pub chain_holds: bool,
    /// `sup u - inf u`.
    pub oscillation: f64,
}

pub fn extremal_diagnostics(problem: &RadialProblem, u: &DVector<f64>) -> Result<ExtremalSummary> {
    let (n, k) = (problem.n, problem.k);
    let vals = problem.interior(u);
    let r = problem.radii();
    let (jmax, &u_max) =
        vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or_else(|| Error::Domain("empty grid".into()))?;
    let (jmin, &u_min) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    let h = problem.step();
    let x = r[jmax];
    let d1 = (u[jmax + 2] - u[jmax]) / (2.0 * h);
    let d2 = (u[jmax + 2] - 2.0 * u[jmax + 1] + u[jmax]) / (h * h);
    let e = problem.w.value(x).exp();
    let nf = n as f64;
    let lap = if jmax == 0 { nf * d2 } else { d2 + ((nf - 1.0) / x - (nf - 2.0) * problem.w.d1(x)) * d1 } * e * e;
    let (lr, lt) = problem.hat_spectrum_at(u, jmax);
    let s1 = lr + (nf - 1.0) * lt;
    let sk = binomial(n - 1, k) * lt.powi(k as i32) + lr * binomial(n - 1, k - 1) * lt.powi(k as i32 - 1);
    let chain_lhs = sk.max(0.0).powf(1.0 / k as f64);
    let chain_rhs = binomial(n, k).powf(1.0 / k as f64) * s1 / nf;
    Ok(ExtremalSummary {
        r_max: x,
        u_max,
        r_min: r[jmin],
        u_min,
        max_on_boundary: jmax == problem.nodes - 1,
        laplacian_at_max: lap,
        gradient_at_max: e * d1.abs(),
        chain_lhs,
        chain_rhs,
        chain_holds: chain_lhs <= chain_rhs * (1.0 + 1e-12) + 1e-14,
        oscillation: u_max - u_min,
    })
}

#[derive(Serialize)]
struct ProfileRow {
    t: f64,
    r: f64,
    u: f64,
    residual: f64,
    cone_margin: f64,
}

/// Solution profile as CSV with columns `t, r, u, residual, cone_margin`.
pub fn write_profile_csv<W: Write>(report: &SolveReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for j in 0..report.r.len() {
        w.serialize(ProfileRow {
            t: report.t,
            r: report.r[j],
            u: report.u[j],
            residual: report.node_residual[j],
            cone_margin: report.node_cone_margin[j],
        })
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Continuation trace as CSV, one row per accepted parameter value.
pub fn write_trace_csv<W: Write>(steps: &[super::continuation::ContinuationStep], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in steps {
        w.serialize(s).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::field::{EvenPoly, RoundSphere};
    use crate::solver::newton::{newton_solve, NewtonOptions};
    use crate::solver::radial::PathKind;
    use std::f64::consts::PI;

    fn manufactured_error(nodes: usize) -> f64 {
        let exact: Arc<dyn RadialProfile> = Arc::new(EvenPoly(vec![0.1, 0.15, -0.05]));
        let p = manufactured_problem(4, 2, Arc::new(RoundSphere), exact.clone(), nodes).unwrap();
        let path = p.path(PathKind::Sigma).unwrap();
        let (u, _) = newton_solve(&p, &path, 1.0, &p.constant(0.1), &NewtonOptions::default()).unwrap();
        p.interior(&u).iter().zip(p.radii()).fold(0.0f64, |m, (v, r)| m.max((v - exact.value(*r)).abs()))
    }

    #[test]
    fn manufactured_solution_is_second_order() {
        let e: Vec<f64> = [51, 101, 201].into_iter().map(manufactured_error).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.9 && order < 2.2, "{e:?}");
        }
    }

    fn constant_solution() -> (RadialProblem, DVector<f64>, SolveReport) {
        let p = RadialProblem::new(4, 2, Arc::new(RoundSphere), Target::exp_minus(2.0), 0.0, 201).unwrap();
        let path = p.path(PathKind::Sigma).unwrap();
        let (u, rec) = newton_solve(&p, &path, 1.0, &p.constant(0.3), &NewtonOptions::default()).unwrap();
        let rep = solve_report(&p, &path, 1.0, &u, &rec, vec![rec.iterations], true).unwrap();
        (p, u, rep)
    }

    #[test]
    fn hemisphere_solution_is_conformally_consistent() {
        let (_, _, rep) = constant_solution();
        assert!(rep.max_operator_residual < 1e-10 && rep.boundary_residual < 1e-10);
        assert!(rep.mu_hat.abs() < 1e-10);
        // ghat = e^{-2u*} g_round has sigma_2(ghat^{-1} Ahat) = (3/2) e^{4u*}
        let ustar = -0.5 * (6f64.sqrt() / 4.0).ln();
        let expect = 1.5 * (4.0 * ustar).exp();
        assert!(rep.sigma_hat.iter().all(|s| (s - expect).abs() < 1e-9 * expect));
        assert!((rep.fk - 2.0 * PI * PI).abs() < 1e-6 * 2.0 * PI * PI, "{}", rep.fk);
        let v = 4.0 * PI * PI / 3.0 * (-4.0 * ustar).exp();
        assert!((rep.volume_hat - v).abs() < 1e-8 * v);
    }

    #[test]
    fn constant_solution_extremals() {
        let (p, u, _) = constant_solution();
        let x = extremal_diagnostics(&p, &u).unwrap();
        assert!(x.oscillation < 1e-10);
        assert!(x.laplacian_at_max.abs() < 1e-6);
        assert!(x.chain_holds);
        assert!((x.chain_lhs - x.chain_rhs).abs() < 1e-9, "umbilic spectrum attains the chain");
    }

    #[test]
    fn perturbed_solution_satisfies_chain() {
        let w: Arc<dyn RadialProfile> = Arc::new(crate::geom::field::SumProfile(vec![
            Arc::new(RoundSphere),
            Arc::new(EvenPoly(vec![0.0, 0.2, -0.1])),
        ]));
        let mut gaps = Vec::new();
        for nodes in [51, 101, 201] {
            let p = RadialProblem::new(4, 2, w.clone(), Target::exp_minus(2.0), 0.0, nodes).unwrap();
            let rep = crate::solver::run_continuation(&p, PathKind::Pos, &Default::default()).unwrap();
            let x = extremal_diagnostics(&p, &rep.solution).unwrap();
            assert!(x.chain_holds, "{x:?}");
            if !x.max_on_boundary && x.r_max > 0.0 {
                assert!(x.laplacian_at_max <= 1e-8, "{x:?}");
            }
            if x.max_on_boundary {
                assert!(x.gradient_at_max < 1e-8, "{x:?}");
            }
            gaps.push(x.oscillation);
        }
        assert!(gaps[0] > 0.0);
        assert!((gaps[1] - gaps[2]).abs() < (gaps[0] - gaps[1]).abs(), "{gaps:?}");
    }

    #[test]
    fn csv_columns() {
        let (_, _, rep) = constant_solution();
        let mut buf = Vec::new();
        write_profile_csv(&rep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,r,u,residual,cone_margin\n"));
        assert_eq!(text.lines().count(), 202);
    }
}
