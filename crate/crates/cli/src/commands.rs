//! The five subcommands. Each fills a ledger and writes its CSV/JSON artifacts to `out`.

use crate::config::{ExperimentConfig, SolvePath, TargetKind};
use crate::ledger::RunLedger;
use serde::Serialize;
use serde_json::json;
use sigmak_core::conformal::{
    apply_conformal, check_form_agreement, check_vanishing, functional_fk, BallQuadrature, BkForm, RadialRule,
};
use sigmak_core::geom::boundary::{
    build_boundary, build_boundary_at, check_boundary_identities, fermi_christoffels, sphere_samples,
};
use sigmak_core::geom::config::{ChartSpec, ProfileSpec};
use sigmak_core::geom::field::{EvenPoly, Radial, ScalarField, Zero};
use sigmak_core::geom::{
    build_curvature, build_curvature_at, BoundaryShape, Chart, ChartKind, CurvaturePack, PackOptions,
};
use sigmak_core::solver::{
    newton_solve, run_continuation, write_profile_csv, write_trace_csv, ContinuationOptions, NewtonOptions,
    RadialProblem, Target,
};
use sigmak_core::symfun::check_structure_conditions;
use sigmak_core::symfun::suite::{run_identity_suite, SuiteOptions};
use sigmak_core::tolerances::{BK_AGREEMENT, CONSTANT_SOLUTION_ITERS, CONSTANT_SOLUTION_TOL, MIN_ORDER};
use sigmak_core::variation::{first_variation_check, volume_variation_check, Perturbation, VariationOptions};
use sigmak_core::{rng, Error};
use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

/// Residuals below this count as exact in refinement rows.
const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Failures that stop a command before its checks run; exit code 2.
#[derive(Debug)]
pub struct SetupError(pub String);

impl From<Error> for SetupError {
    fn from(e: Error) -> Self {
        SetupError(e.to_string())
    }
}

type Setup<T> = Result<T, SetupError>;

fn create(out: &Path, name: &str) -> Setup<BufWriter<File>> {
    File::create(out.join(name)).map(BufWriter::new).map_err(|e| SetupError(format!("{name}: {e}")))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Setup<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| SetupError(e.to_string()))?;
    std::fs::write(out.join(name), text + "\n").map_err(|e| SetupError(format!("{name}: {e}")))
}

fn write_rows<T: Serialize>(out: &Path, name: &str, rows: &[T]) -> Setup<()> {
    let mut w = csv::Writer::from_writer(create(out, name)?);
    for r in rows {
        w.serialize(r).map_err(|e| SetupError(format!("{name}: {e}")))?;
    }
    w.flush().map_err(|e| SetupError(format!("{name}: {e}")))
}

pub fn identities(cfg: &ExperimentConfig, ledger: &mut RunLedger, out: &Path) -> Setup<()> {
    let c = &cfg.identities;
    let opts =
        SuiteOptions { instances: c.instances, seed: cfg.seed, max_dim: c.max_dim, sabotage: c.sabotage.clone() };
    let checks = run_identity_suite(&opts);
    if let Some(name) = &c.sabotage {
        if !checks.iter().any(|k| k.name == name) {
            return Err(SetupError(format!("unknown identity {name}")));
        }
    }
    for k in &checks {
        ledger.bound(format!("identity.{}", k.name), k.max_residual, k.tolerance, json!({ "instances": k.instances }));
    }
    write_rows(out, "identities.csv", &checks)?;
    for &(n, k) in &c.structure {
        let r = check_structure_conditions(k, n, c.instances, cfg.seed)?;
        ledger.flag(format!("structure.n{n}_k{k}"), r.all_pass(), serde_json::to_value(&r).unwrap_or_default());
    }
    for &(n, k) in &c.boundary_terms {
        if k < 2 || k > n {
            return Err(SetupError(format!("boundary term needs 2 <= k <= n, got n = {n}, k = {k}")));
        }
        let agree = check_form_agreement(n, k, c.instances, cfg.seed)?;
        ledger.bound(format!("boundary_term.general_vs_umbilic.n{n}_k{k}"), agree, BK_AGREEMENT, json!({}));
        let v = check_vanishing(n, k, c.instances, cfg.seed, 1e-12)?;
        let pass = v.max_bk_at_zero_mean_curvature == 0.0 && v.min_bracket > 0.0 && v.max_mu_with_vanishing_bk == 0.0;
        ledger.flag(format!("boundary_term.vanishing.n{n}_k{k}"), pass, serde_json::to_value(v).unwrap_or_default());
    }
    Ok(())
}

/// Interior points away from the boundary, in the central part of the chart's bounding box.
fn probe_points(chart: &Chart) -> Vec<Vec<f64>> {
    let fractions = [0.37, 0.61, 0.23, 0.71, 0.45, 0.83, 0.12, 0.58];
    (0..4)
        .map(|p| {
            (0..chart.n)
                .map(|i| {
                    let f = fractions[(i + 3 * p) % fractions.len()];
                    chart.lo[i] + (0.35 + 0.3 * f) * (chart.hi[i] - chart.lo[i])
                })
                .collect::<Vec<f64>>()
        })
        .filter(|x| chart.contains(x))
        .collect()
}

/// Residual at `chart` and at half the grid step, with the observed order; passes when the
/// fine value is at roundoff or the order reaches `MIN_ORDER`.
fn refinement_row(
    ledger: &mut RunLedger,
    name: &str,
    chart: &Chart,
    residual: &dyn Fn(&CurvaturePack) -> f64,
) -> Setup<()> {
    let probe = probe_points(chart);
    let fine_chart = chart.with_resolution(2 * chart.resolution - 1)?;
    let coarse = residual(&build_curvature_at(chart, &probe, PackOptions::default())?);
    let fine = residual(&build_curvature_at(&fine_chart, &probe, PackOptions::default())?);
    let order = (coarse / fine).log2();
    let pass = fine <= ROUNDOFF_FLOOR || order >= MIN_ORDER;
    ledger.flag(name, pass, json!({ "coarse": coarse, "fine": fine, "order": order, "points": probe.len() }));
    Ok(())
}

pub fn curvature(cfg: &ExperimentConfig, ledger: &mut RunLedger, out: &Path) -> Setup<()> {
    let chart = cfg.chart.build()?;
    let tol = cfg.curvature.tol;
    let pack = build_curvature(&chart)?;
    pack.write_csv(create(out, "curvature.csv")?)?;
    let info = json!({ "nodes": pack.len(), "step": chart.step() });
    ledger.bound("curvature.decomposition", pack.max_decomposition_residual(), tol, info);
    refinement_row(ledger, "curvature.riemann_symmetry_refinement", &chart, &|p| p.max_symmetry_residual())?;
    // every configurable chart kind is locally conformally flat
    refinement_row(ledger, "curvature.weyl_refinement", &chart, &|p| p.max_weyl_norm())?;
    let slice = match chart.boundary {
        BoundaryShape::Sphere { radius } => {
            build_boundary_at(&chart, &sphere_samples(chart.n, radius, cfg.curvature.boundary_points, cfg.seed))?
        }
        BoundaryShape::Face(_) => build_boundary(&chart, &pack)?,
    };
    let b = check_boundary_identities(&chart, &slice)?;
    let detail = serde_json::to_value(&b).unwrap_or_default();
    ledger.bound("boundary.umbilic", b.umbilic_residual, tol, detail.clone());
    ledger.bound("boundary.codazzi", b.codazzi, tol, detail.clone());
    ledger.bound("boundary.principal_curvature_hessian", b.hessian, tol, detail.clone());
    if b.weyl <= tol && b.cotton <= tol {
        ledger.bound("boundary.normal_curvature", b.curvature, tol, detail.clone());
        ledger.bound("boundary.schouten_normal_derivative", b.normal_derivative, tol, detail);
    } else {
        ledger.skipped("boundary.normal_curvature", "Weyl or Cotton tensor nonzero on the boundary");
        ledger.skipped("boundary.schouten_normal_derivative", "Weyl or Cotton tensor nonzero on the boundary");
    }
    match chart.boundary {
        BoundaryShape::Face(_) => {
            let f = fermi_christoffels(&chart, &slice)?;
            let detail = serde_json::to_value(&f).unwrap_or_default();
            ledger.bound("fermi.normal_tangential", f.normal_tangential, tol, detail.clone());
            ledger.bound("fermi.mixed", f.mixed, tol, detail.clone());
            ledger.bound("fermi.normal_normal", f.normal_normal, tol, detail.clone());
            ledger.bound("fermi.intrinsic", f.intrinsic, tol, detail);
        }
        BoundaryShape::Sphere { .. } => {
            for name in ["fermi.normal_tangential", "fermi.mixed", "fermi.normal_normal", "fermi.intrinsic"] {
                ledger.skipped(name, "boundary is not a coordinate face");
            }
        }
    }
    Ok(())
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

#[derive(Serialize)]
struct GaussBonnetRow {
    sample: String,
    value: f64,
    error_estimate: f64,
    drift: f64,
    coarse_drift: f64,
}

fn random_radial(seed: u64, sample: usize, amplitude: f64) -> Vec<f64> {
    let mut r = rng::seeded(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(sample as u64 + 1)));
    rng::uniform_vec(&mut r, 3, -amplitude, amplitude)
}

pub fn gaussbonnet(cfg: &ExperimentConfig, ledger: &mut RunLedger, out: &Path) -> Setup<()> {
    let c = &cfg.gaussbonnet;
    let chart = cfg.chart.build()?;
    let n = chart.n;
    if n % 2 != 0 {
        return Err(SetupError(format!("the Gauss-Bonnet functional needs even n, got {n}")));
    }
    if !matches!(chart.kind, ChartKind::BallConformallyFlat | ChartKind::HalfBallFlat) {
        return Err(SetupError("the Gauss-Bonnet functional needs a ball or half-ball chart".into()));
    }
    let m = n / 2;
    let quad = BallQuadrature::new(RadialRule::Simpson(c.radial), c.polar, c.azimuth);
    let base_state = apply_conformal(&chart, Arc::new(Zero));
    let base = functional_fk(&base_state, m, &quad, BkForm::Umbilic)?;
    let unit = (2.0 * PI).powi(m as i32) / factorial(m);
    refinement_row(ledger, "gauss_bonnet.weyl_refinement", &chart, &|p| p.max_weyl_norm())?;
    let mut rows = vec![GaussBonnetRow {
        sample: "base".into(),
        value: base.total,
        error_estimate: base.error_estimate,
        drift: 0.0,
        coarse_drift: 0.0,
    }];
    let detail = serde_json::to_value(base).unwrap_or_default();
    if chart.kind == ChartKind::HalfBallFlat {
        ledger.bound("gauss_bonnet.value", base.total.abs(), c.tol, detail);
        ledger.skipped(
            "gauss_bonnet.euler_characteristic",
            "the flat half ball has a corner; the functional is not a closed invariant",
        );
        ledger.skipped(
            "gauss_bonnet.conformal_drift",
            "the flat half ball has a corner; the functional is not a closed invariant",
        );
    } else {
        ledger.bound("gauss_bonnet.value", (base.total - unit).abs() / unit, c.tol, detail);
        let chi = base.total / unit;
        ledger.bound("gauss_bonnet.euler_characteristic", (chi - 1.0).abs(), c.tol, json!({ "chi": chi }));
        let coarse = functional_fk(&base_state, m, &quad.coarsened(), BkForm::Umbilic)?;
        let mut worst: f64 = 0.0;
        let mut details = Vec::new();
        for s in 0..c.samples {
            let coef = random_radial(cfg.seed, s, c.amplitude);
            let u: Arc<dyn ScalarField> = Arc::new(Radial::new(EvenPoly(coef.clone())));
            let st = apply_conformal(&chart, u);
            let f = functional_fk(&st, m, &quad, BkForm::Umbilic)?;
            let fc = functional_fk(&st, m, &quad.coarsened(), BkForm::Umbilic)?;
            let drift = (f.total - base.total).abs();
            let coarse_drift = (fc.total - coarse.total).abs();
            let estimate = f.error_estimate + base.error_estimate;
            worst = worst.max(if drift == 0.0 { 0.0 } else { drift / estimate });
            details.push(
                json!({ "coefficients": coef, "drift": drift, "estimate": estimate, "coarse_drift": coarse_drift }),
            );
            rows.push(GaussBonnetRow {
                sample: format!("u{s}"),
                value: f.total,
                error_estimate: f.error_estimate,
                drift,
                coarse_drift,
            });
        }
        ledger.bound("gauss_bonnet.conformal_drift", worst, c.drift_factor, json!(details));
    }
    write_rows(out, "gaussbonnet.csv", &rows)
}

#[derive(Serialize)]
struct VariationRow {
    check: String,
    k: usize,
    step: f64,
    derivative: f64,
    formula: f64,
    residual: f64,
}

pub fn variation(cfg: &ExperimentConfig, ledger: &mut RunLedger, out: &Path) -> Setup<()> {
    let c = &cfg.variation;
    let chart = cfg.chart.build()?;
    let n = chart.n;
    let quad = if chart.kind == ChartKind::BallConformallyFlat {
        BallQuadrature::radial(RadialRule::Gauss(c.radial))
    } else {
        BallQuadrature::new(RadialRule::Gauss((c.radial / 4).max(4)), 12, 24)
    };
    let opts = VariationOptions { quad, ..Default::default() };
    let state = apply_conformal(&chart, Arc::new(Zero));
    let mut rows = Vec::new();
    let mut push_rows = |name: &str, k: usize, r: &sigmak_core::variation::VariationReport| {
        for s in &r.rows {
            rows.push(VariationRow {
                check: name.to_string(),
                k,
                step: s.step,
                derivative: s.derivative,
                formula: r.formula_value,
                residual: s.residual,
            });
        }
    };
    let pert = |spec: &ProfileSpec| {
        let phi: Arc<dyn ScalarField> = Arc::new(Radial(spec.build()));
        if c.volume_preserving {
            Perturbation::volume_preserving(phi)
        } else {
            Perturbation::new(phi)
        }
    };
    for &k in &c.k {
        if k < 2 || k > n {
            return Err(SetupError(format!("first variation needs 2 <= k <= n = {n}, got k = {k}")));
        }
        let zero = first_variation_check(&state, k, &Perturbation::new(Arc::new(Zero)), &opts)?;
        let name = format!("variation.k{k}.zero_direction");
        ledger.flag(
            &name,
            zero.fd_derivative == 0.0 && zero.formula_value == 0.0,
            serde_json::to_value(&zero).unwrap_or_default(),
        );
        for (i, spec) in c.directions.iter().enumerate() {
            let name = format!("variation.k{k}.direction{i}");
            match first_variation_check(&state, k, &pert(spec), &opts) {
                Ok(r) => {
                    let detail = serde_json::to_value(&r).unwrap_or_default();
                    if n == 2 * k {
                        ledger.bound(&name, r.fd_derivative.abs(), c.tol, detail);
                    } else {
                        ledger.bound(&name, r.relative_residual, c.tol, detail);
                    }
                    push_rows(&name, k, &r);
                }
                Err(e @ Error::ConeViolation { .. }) => ledger.error(&name, &e),
                Err(e) => return Err(e.into()),
            }
        }
    }
    for (i, spec) in c.directions.iter().enumerate() {
        let name = format!("variation.volume.direction{i}");
        let r = volume_variation_check(&state, &pert(spec), &opts)?;
        ledger.bound(&name, r.relative_residual, c.tol, serde_json::to_value(&r).unwrap_or_default());
        push_rows(&name, 0, &r);
    }
    write_rows(out, "variation.csv", &rows)
}

/// Closed-form constant solution of `sigma_k^{1/k}(g^{-1} Ahat) = c e^{-2u}` on the round hemisphere.
fn constant_solution(n: usize, k: usize, c: f64) -> f64 {
    let binom: f64 = (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product();
    -0.5 * (binom.powf(1.0 / k as f64) / (2.0 * c)).ln()
}

pub fn solve(cfg: &ExperimentConfig, ledger: &mut RunLedger, out: &Path) -> Setup<()> {
    let c = &cfg.solve;
    let n = cfg.chart.n();
    let w = cfg.chart.radial_w()?;
    let target = match c.target {
        TargetKind::Constant => Target::constant(c.c),
        TargetKind::ExpMinus => Target::exp_minus(c.c),
        TargetKind::ExpPlus => Target::exp_plus(c.c),
    };
    let problem = RadialProblem::new(n, c.k, w, target, c.mu_hat, c.nodes)?;
    let newton = NewtonOptions { tol: c.tol, max_iter: c.max_iter };
    let round = matches!(&cfg.chart, ChartSpec::BallConformallyFlat { w: ProfileSpec::RoundSphere, .. });
    for &p in &c.paths {
        let name = p.name();
        let path = problem.path(p.kind()).map_err(SetupError::from)?;
        if p == SolvePath::Sigma {
            let start = problem.sample(&*c.start.build());
            match newton_solve(&problem, &path, 1.0, &start, &newton) {
                Ok((u, rec)) => {
                    let rep =
                        sigmak_core::solver::solve_report(&problem, &path, 1.0, &u, &rec, vec![rec.iterations], true)?;
                    let res = rep.max_operator_residual.max(rep.boundary_residual);
                    ledger.bound(
                        "solve.sigma.residual",
                        res,
                        c.tol,
                        json!({ "iterations": rec.iterations, "order": rec.observed_order }),
                    );
                    if round && c.target == TargetKind::ExpMinus && c.mu_hat == 0.0 {
                        let ustar = constant_solution(n, c.k, c.c);
                        let err = problem.interior(&u).iter().fold(0.0f64, |m, v| m.max((v - ustar).abs()));
                        ledger.bound(
                            "solve.sigma.constant_solution",
                            err,
                            CONSTANT_SOLUTION_TOL,
                            json!({ "u_star": ustar }),
                        );
                        ledger.bound(
                            "solve.sigma.iteration_budget",
                            rec.iterations as f64,
                            CONSTANT_SOLUTION_ITERS as f64,
                            json!({ "residuals": rec.residuals, "order": rec.observed_order }),
                        );
                    }
                    write_profile_csv(&rep, create(out, "profile_sigma.csv")?)?;
                    write_json(out, "report_sigma.json", &rep)?;
                }
                Err(e) => ledger.error("solve.sigma.residual", &e),
            }
            continue;
        }
        let opts = ContinuationOptions { newton: NewtonOptions { max_iter: 12, ..newton }, ..Default::default() };
        match run_continuation(&problem, p.kind(), &opts) {
            Ok(rep) => {
                let reached = rep.steps.last().is_some_and(|s| s.t == 1.0);
                ledger.flag(
                    format!("solve.{name}.reaches_one"),
                    reached && rep.min_cone_margin > 0.0,
                    json!({
                        "theta": rep.theta,
                        "steps": rep.steps.len(),
                        "rejected_steps": rep.rejected_steps,
                        "start_iterations": rep.start_iterations,
                        "min_cone_margin": rep.min_cone_margin,
                    }),
                );
                let res = rep.last.max_operator_residual.max(rep.last.boundary_residual);
                ledger.bound(format!("solve.{name}.residual"), res, c.tol, json!({}));
                if p == SolvePath::Defm {
                    let peak = rep.steps.iter().filter_map(|s| s.integral_bound).fold(0.0, f64::max);
                    ledger.flag("solve.defm.integral_monitor", !rep.integral_bound_flagged, json!({ "max": peak }));
                }
                write_trace_csv(&rep.steps, create(out, &format!("trace_{name}.csv"))?)?;
                write_profile_csv(&rep.last, create(out, &format!("profile_{name}.csv"))?)?;
                write_json(out, &format!("report_{name}.json"), &rep)?;
            }
            Err(e) => ledger.error(format!("solve.{name}.reaches_one"), &e),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_constant_solution() {
        assert!((constant_solution(4, 2, 2.0) - (-0.5 * (6f64.sqrt() / 4.0).ln())).abs() < 1e-15);
    }
}
