use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curved-nbody"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_builtins_names_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["list-builtins"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for name in [
        "s2_geodesic",
        "s2_two_body_collapse",
        "s2_remark1_isosceles",
        "s3_symmetric_triple_collapse",
        "h2_bound_pair",
    ] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn simulate_writes_artifacts_and_diagnose_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pair");
    let o = bin(
        &["simulate", "s2_two_body_collapse", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Collision"));
    for f in ["timeseries.csv", "summary.json", "scenario.toml"] {
        assert!(out.join(f).is_file(), "{f} not written");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["termination"]["reason"], "collision");

    let header = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert!(header.starts_with("t,q0_0,"));
    assert!(header.contains("min_pair_metric"));

    let o = bin(&["diagnose", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("diagnosis.json")).unwrap()).unwrap();
    assert_eq!(diag["painleve"]["verdict"], "signature_confirmed", "{diag}");
}

#[test]
fn shown_builtin_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["list-builtins", "--show", "s2_bound_pair"], dir.path());
    assert!(o.status.success());
    let path = dir.path().join("pair.toml");
    fs::write(&path, stdout(&o)).unwrap();
    let out = dir.path().join("run");
    let o = bin(
        &[
            "simulate",
            path.to_str().unwrap(),
            "--t-end",
            "1.5",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = fs::read_to_string(out.join("scenario.toml")).unwrap();
    assert!(echo.contains("t_end = 1.5"), "{echo}");
}

#[test]
fn unknown_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["simulate", "no_such_scenario"], dir.path());
    assert!(!o.status.success());
    assert!(!stderr(&o).is_empty());
}

#[test]
fn flat_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["list-builtins", "--show", "s2_geodesic"], dir.path());
    let text = stdout(&o).replace("kappa = 1.0", "kappa = 0.0");
    assert!(text.contains("kappa = 0.0"), "{text}");
    let path = dir.path().join("flat.toml");
    fs::write(&path, text).unwrap();
    let o = bin(&["simulate", path.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("kappa = 0"), "{}", stderr(&o));
}

#[test]
fn compare_rejects_negative_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["compare", "h2_bound_pair"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn compare_reports_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tri");
    let o = bin(
        &["compare", "s2_rotating_triangle", "--t-end", "0.5", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).split_once('\n').unwrap().1).unwrap();
    assert_eq!(v["report"]["status"]["status"], "completed", "{v}");
}

#[test]
fn batch_runs_each_file_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = dir.path().join("scenarios");
    fs::create_dir(&scenarios).unwrap();
    for name in ["s2_geodesic", "h2_geodesic"] {
        let o = bin(&["list-builtins", "--show", name], dir.path());
        fs::write(scenarios.join(format!("{name}.toml")), stdout(&o)).unwrap();
    }
    let out = dir.path().join("out");
    let args = [
        "batch",
        scenarios.to_str().unwrap(),
        "--t-end",
        "1",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ];
    let o = bin(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("s2_geodesic/summary.json").is_file());
    assert!(out.join("h2_geodesic/summary.json").is_file());

    fs::write(scenarios.join("broken.toml"), "name = 3\n").unwrap();
    let o = bin(&args, dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("broken.toml"));
}
