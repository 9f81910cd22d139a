use serde_json::Value;
use std::collections::HashSet;
use std::path::Path;
use std::process::Command;

fn run(args: &[&str], config: Option<&str>, out: &Path) -> (i32, Value) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sigmak"));
    cmd.args(args).arg("--out").arg(out);
    let cfg_path = out.with_extension("toml");
    if let Some(text) = config {
        std::fs::write(&cfg_path, text).unwrap();
        cmd.arg("--config").arg(&cfg_path);
    }
    let status = cmd.output().unwrap().status.code().unwrap();
    let ledger = std::fs::read_to_string(out.join("ledger.json"))
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or(Value::Null);
    (status, ledger)
}

fn status_of<'a>(ledger: &'a Value, name: &str) -> &'a str {
    ledger["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()["status"].as_str().unwrap()
}

#[test]
fn identities_pass_with_unique_names() {
    let dir = tempfile::tempdir().unwrap();
    let (code, ledger) = run(&["identities"], Some("[identities]\ninstances = 200\n"), &dir.path().join("a"));
    assert_eq!(code, 0);
    let checks = ledger["checks"].as_array().unwrap();
    let names: HashSet<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), checks.len());
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    assert_eq!(ledger["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn sabotaged_identity_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[identities]\ninstances = 50\nsabotage = \"newton_trace\"\n";
    let (code, ledger) = run(&["identities"], Some(cfg), &dir.path().join("a"));
    assert_eq!(code, 1);
    assert_eq!(status_of(&ledger, "identity.newton_trace"), "fail");
    assert_eq!(status_of(&ledger, "identity.sigma_eigen_vs_charpoly"), "pass");
}

#[test]
fn seed_changes_values_not_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[identities]\ninstances = 100\n";
    let (_, a) = run(&["identities"], Some(cfg), &dir.path().join("a"));
    let (_, b) = run(&["identities", "--seed", "99"], Some(cfg), &dir.path().join("b"));
    let (_, c) = run(&["identities"], Some(cfg), &dir.path().join("c"));
    let verdicts = |l: &Value| l["checks"].as_array().unwrap().iter().map(|c| c["status"].clone()).collect::<Vec<_>>();
    assert_eq!(verdicts(&a), verdicts(&b));
    assert_ne!(a["checks"][0]["residual"], b["checks"][0]["residual"]);
    assert_eq!(a["ledger_hash"], c["ledger_hash"]);
    assert_ne!(a["ledger_hash"], b["ledger_hash"]);
}

#[test]
fn solve_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (code, ledger) = run(&["solve", "--grid", "101"], None, &dir.path().join("a"));
    assert_eq!(code, 0);
    for name in ["solve.sigma.constant_solution", "solve.pos.reaches_one", "solve.defm.integral_monitor"] {
        assert_eq!(status_of(&ledger, name), "pass", "{name}");
    }
    run(&["solve", "--grid", "101"], None, &dir.path().join("b"));
    for f in ["ledger.json", "profile_pos.csv", "trace_defm.csv", "report_sigma.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let profile = std::fs::read_to_string(dir.path().join("a/profile_pos.csv")).unwrap();
    assert!(profile.starts_with("t,r,u,residual,cone_margin\n"));
}

#[test]
fn cone_violating_start_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[solve]\npaths = [\"sigma\"]\nstart = { even_poly = [0.0, -3.0] }\n";
    let (code, ledger) = run(&["solve"], Some(cfg), &dir.path().join("a"));
    assert_eq!(code, 3);
    assert_eq!(status_of(&ledger, "solve.sigma.residual"), "error");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["seed = \"x\"\n", "[solve]\nk = 9\n", "[chart]\nkind = \"half_ball_flat\"\nn = 3\nresolution = 2\n"] {
        let (code, _) = run(&["solve"], Some(cfg), &dir.path().join("a"));
        assert_eq!(code, 2, "{cfg}");
    }
    let (code, _) = run(
        &["gaussbonnet"],
        Some("[chart]\nkind = \"half_ball_flat\"\nn = 5\nresolution = 5\n"),
        &dir.path().join("b"),
    );
    assert_eq!(code, 2);
}

#[test]
fn gauss_bonnet_on_hemisphere_and_half_ball() {
    let dir = tempfile::tempdir().unwrap();
    let (code, ledger) = run(&["gaussbonnet"], Some("[gaussbonnet]\nsamples = 2\n"), &dir.path().join("a"));
    assert_eq!(code, 0);
    assert_eq!(status_of(&ledger, "gauss_bonnet.euler_characteristic"), "pass");
    let flat = "[chart]\nkind = \"half_ball_flat\"\nn = 4\nresolution = 7\n";
    let (code, ledger) = run(&["gaussbonnet"], Some(flat), &dir.path().join("b"));
    assert_eq!(code, 0);
    assert_eq!(status_of(&ledger, "gauss_bonnet.value"), "pass");
    assert_eq!(status_of(&ledger, "gauss_bonnet.euler_characteristic"), "skipped");
}

#[test]
fn variation_and_curvature_default_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, ledger) = run(&["variation"], None, &dir.path().join("a"));
    assert_eq!(code, 0);
    assert_eq!(status_of(&ledger, "variation.k2.zero_direction"), "pass");
    let (code, ledger) = run(&["curvature"], None, &dir.path().join("b"));
    assert_eq!(code, 0);
    assert_eq!(status_of(&ledger, "curvature.weyl_refinement"), "pass");
    assert!(dir.path().join("b/curvature.csv").exists());
}
