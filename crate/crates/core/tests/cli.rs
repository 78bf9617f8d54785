use std::path::PathBuf;
use std::process::{Command, Output};

use overdet::cli::{FindGOutput, ProblemFile, SolveOutput, TrivialOutput, VerifyOutput};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overdet"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn problem(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "problems", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

#[test]
fn critical_values_csv() {
    let text = stdout(&run(&[
        "critical-values",
        "--dim",
        "2",
        "--radius",
        "0.8",
        "--kmax",
        "4",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,s_k,admissible,slope");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "2");
    assert!((fields[1].parse::<f64>().unwrap() - 9.7413).abs() < 5e-4);
    assert_eq!(fields[2], "true");
    assert_eq!(lines[2], "3,,false,");
}

#[test]
fn trivial_state() {
    let text = stdout(&run(&[
        "trivial", "--dim", "3", "--radius", "0.5", "--sigma", "2", "--points", "0,1",
    ]));
    let out: TrivialOutput = serde_json::from_str(&text).unwrap();
    assert!((out.d - 2.0 / 3.0).abs() < 1e-15);
    assert!(out.profile[1].1.abs() < 1e-15);
    assert!((out.u_origin - out.profile[0].1).abs() < 1e-15);
}

#[test]
fn solve_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solve.json");
    let path = path.to_str().unwrap();
    stdout(&run(&[
        "solve",
        "--problem",
        &problem("ellipse_3d.json"),
        "--output",
        path,
    ]));
    let first = std::fs::read(path).unwrap();
    let second = stdout(&run(&["solve", "--problem", &problem("ellipse_3d.json")]));
    assert_eq!(first, second.as_bytes());
    let parsed: SolveOutput = serde_json::from_slice(&first).unwrap();
    assert!(parsed.residual.max < 1e-10);
    let reparsed: SolveOutput =
        serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
    assert_eq!(parsed, reparsed);
}

#[test]
fn verify_reports_identities() {
    let out: VerifyOutput = serde_json::from_str(&stdout(&run(&[
        "verify",
        "--problem",
        &problem("ellipse_3d.json"),
    ])))
    .unwrap();
    assert!(out.divergence_gap.abs() < 1e-10);
    assert!(out.interface_flux.abs() < 1e-10);
    assert!(out.heintze_karcher_gap.unwrap() > 0.0);
    assert!(out.d_integral.unwrap() < 2.0 / 3.0);
    let table = stdout(&run(&[
        "verify",
        "--problem",
        &problem("ellipse_3d.json"),
        "--table",
    ]));
    assert!(table.lines().any(|l| l.starts_with("Heintze-Karcher gap")));
}

#[test]
fn find_g_with_restart() {
    let text = stdout(&run(&[
        "find-g",
        "--problem",
        &problem("construction.json"),
        "--seed",
        "7",
    ]));
    let out: FindGOutput = serde_json::from_str(&text).unwrap();
    assert!(out.residual <= 1e-9);
    assert!(out.d_integral < 0.5);
    assert!(out.d_spread <= 1e-7);
    assert!(out.restart.is_some());
}

#[test]
fn branch_csv() {
    let text = stdout(&run(&[
        "branch",
        "--dim",
        "2",
        "--radius",
        "0.8",
        "--k",
        "2",
        "--eps",
        "0.01,0.02",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("eps,sigma,lambda,d,residual,coeff_2,coeff_4"));
    assert_eq!(lines.len(), 3);
    let sigma: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(sigma > 9.7412587412587);
}

#[test]
fn harmonic_poly_is_exact() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&[
        "harmonic-poly",
        "--dim",
        "3",
        "--degree",
        "3",
    ])))
    .unwrap();
    assert_eq!(v["coeffs"], serde_json::json!([["-3", "2"], ["1", "1"]]));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"dim":2,"core_radius":0.5,"sigma":2,"truncation":8,"bogus":1}"#,
    )
    .unwrap();
    let out = run(&["solve", "--problem", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let diag: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(diag["error"].as_str().unwrap().contains("bogus"));

    assert_eq!(
        run(&["trivial", "--dim", "2", "--radius", "1.5", "--sigma", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["critical-values", "--dim", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn problem_file_round_trip() {
    let text = std::fs::read_to_string(problem("ellipse_3d.json")).unwrap();
    let p = ProblemFile::parse(&text).unwrap();
    let again = ProblemFile::parse(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(p, again);
}
