use std::fs;
use std::path::Path;
use std::process::{Command as Proc, Output};

use qpot::grid::read_grid_function;
use qpot_cli::{parse_field, run, Command, Options, RunReport};
use serde_json::Value;
use tempfile::TempDir;

fn qpot(dir: &Path, args: &[&str], config: &str) -> Output {
    let path = dir.join("run.ini");
    fs::write(&path, config).unwrap();
    Proc::new(env!("CARGO_BIN_EXE_qpot"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn without_wall_time(out: &Output) -> String {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_time\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn run_small(command: Command, config: &str) -> RunReport {
    let opts = Options {
        grid_n: Some(13),
        ..Default::default()
    };
    run(command, config, &opts).unwrap()
}

fn assert_all_pass(rep: &RunReport) {
    for v in &rep.verdicts {
        assert!(v.pass, "{}: {} vs {} (tol {})", v.name, v.lhs, v.rhs, v.tol);
    }
}

#[test]
fn ma_eval_of_norm_squared_is_two() {
    let dir = TempDir::new().unwrap();
    let out = qpot(dir.path(), &["ma-eval"], "[field]\nexpr = x0^2+x1^2+x2^2+x3^2\npoint = origin\n");
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["command"], "ma-eval");
    assert_eq!(r["results"]["value"].as_f64(), Some(2.0));
    for key in ["config_digest", "results", "verdicts", "seed", "version", "wall_time"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = "[matrix]\nn = 3\nsamples = 5\n";
    let (ra, rb) = (
        qpot(dir.path(), &["moore-det", "--seed", "9"], cfg),
        qpot(dir.path(), &["moore-det", "--seed", "9"], cfg),
    );
    assert_eq!(without_wall_time(&ra), without_wall_time(&rb));
    let (a, c) = (json(&ra), json(&qpot(dir.path(), &["moore-det", "--seed", "10"], cfg)));
    assert_ne!(a["results"], c["results"]);
    assert_ne!(a["config_digest"], c["config_digest"]);
    assert_eq!(a["seed"], 9);
}

#[test]
fn exit_code_tracks_verdicts() {
    let dir = TempDir::new().unwrap();
    let ok = qpot(dir.path(), &["qpsh-check"], "[field]\nexpr = x0^2+x1^2+x2^2+x3^2\n");
    assert_eq!(ok.status.code(), Some(0));
    // Laplacian -4: not quaternionic plurisubharmonic.
    let bad = qpot(dir.path(), &["qpsh-check"], "[field]\nexpr = x0^2 - x1^2 - x2^2 - x3^2\n");
    assert_eq!(bad.status.code(), Some(1));
    let r = json(&bad);
    assert!(r["verdicts"].as_array().unwrap().iter().any(|v| v["pass"] == false));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let syntax = qpot(dir.path(), &["ma-eval"], "[field]\nexpr = x0^\n");
    assert_eq!(syntax.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&syntax.stderr).contains("offset 3"));
    let range = qpot(dir.path(), &["ma-eval"], "[field]\nexpr = x0 + x4\n");
    assert_eq!(range.status.code(), Some(2));
    let unknown = qpot(dir.path(), &["frobnicate"], "");
    assert_eq!(unknown.status.code(), Some(2));
    let missing = Proc::new(env!("CARGO_BIN_EXE_qpot"))
        .args(["ma-eval", "--config", "/nonexistent/run.ini"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let bad_grid = qpot(dir.path(), &["capacity", "--grid-n", "8"], "");
    assert_eq!(bad_grid.status.code(), Some(2));
}

#[test]
fn parser_positions_and_ranges() {
    assert_eq!(parse_field("x0^", 1).unwrap_err().offset, 3);
    assert_eq!(parse_field("x6 - x7", 2).unwrap(), parse_field("-x7 + x6", 2).unwrap());
    assert!(parse_field("x8", 2).unwrap_err().message.contains("out of range"));
    let p = parse_field("x0^2 - x1^2 - x2^2 - x3^2", 1).unwrap();
    use qpot::field::ScalarField;
    assert_eq!(p.exact_laplacian(&[0.3, 0.1, 0.0, 0.2]), Some(-4.0));
}

#[test]
fn explicit_two_by_two_moore_det() {
    // [[a, q], [conj q, b]] has determinant a b - |q|^2.
    let cfg = "[matrix]\nn = 2\nentries = 2 0 0 0 | 0.5 0.1 0 0.2 | 0.5 -0.1 0 -0.2 | 3 0 0 0\n";
    let rep = run(Command::MooreDet, cfg, &Options::default()).unwrap();
    let md = rep.results["moore_det"].as_f64().unwrap();
    assert!((md - (6.0 - 0.30)).abs() < 1e-12, "{md}");
    assert_all_pass(&rep);
    let not_hermitian = "[matrix]\nn = 2\nentries = 2 0 0 0 | 0.5 0 0 0 | 0.4 0 0 0 | 3 0 0 0\n";
    assert!(run(Command::MooreDet, not_hermitian, &Options::default()).is_err());
}

#[test]
fn artifacts_are_written() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let opts = Options {
        out: Some(out.clone()),
        grid_n: Some(9),
        ..Default::default()
    };
    let cfg = "[dirichlet]\nf = 2\nexact = x0^2+x1^2+x2^2+x3^2-1\n";
    let rep = run(Command::SolveDirichlet, cfg, &opts).unwrap();
    assert_all_pass(&rep);
    assert_eq!(fs::read_to_string(out.join("report.json")).unwrap(), rep.to_json() + "\n");
    let (grid, u) = read_grid_function(&mut fs::File::open(out.join("u.qgrid")).unwrap()).unwrap();
    assert_eq!(grid.n(), 9);
    assert!(u.values().iter().all(|v| v.is_finite()));
    let csv = fs::read_to_string(out.join("u.csv")).unwrap();
    assert_eq!(csv.lines().count(), u.len() + 1);
}

#[test]
fn grid_commands_pass_on_a_small_grid() {
    let paraboloid = "x0^2+x1^2+x2^2+x3^2-1";
    assert_all_pass(&run_small(Command::Envelope, "[envelope]\nobstacle = 3*(x0^2+x1^2+x2^2+x3^2) - 1\n"));
    assert_all_pass(&run_small(Command::Sandwich, &format!("[sandwich]\nu = {paraboloid}\ns = 0.1, 0.3\nt = 0.2, 0.4\n")));
    assert_all_pass(&run_small(Command::Capacity, "[capacity]\nregion = cube\nhalf_width = 0.3\n"));
    let e = run_small(Command::Energy, &format!("[energy]\nu = {paraboloid}\n[weight]\nkind = power\np = 0.5\n"));
    assert_all_pass(&e);
    assert!(e.results["E_chi"].as_f64().unwrap() > 0.0);
    assert_eq!(e.results["profile"].as_array().unwrap().len(), 32);
    assert_all_pass(&run_small(Command::Condition4, "[condition4]\nphi = random\nsamples = 24\n[weight]\np = 0.5\n"));
    assert_all_pass(&run_small(Command::SolveMa, "[solve-ma]\nphi = random\n[weight]\nkind = log\n"));
    let dens = run_small(Command::SolveMa, "[solve-ma]\ndensity = 2\n");
    assert_all_pass(&dens);
}

#[test]
fn config_errors_are_reported() {
    assert!(run(Command::Energy, "[energy]\nu = x0\n[weight]\nkind = cubic\n", &Options::default()).is_err());
    assert!(run(Command::Capacity, "[capacity]\nradius = -0.5\n", &Options::default()).is_err());
    assert!(run(Command::Sandwich, "[sandwich]\nu = x0^2-2\n", &Options::default()).is_err());
    assert!(run(Command::MaEval, "[field]\n", &Options::default()).is_err());
}

#[test]
fn verify_all_passes_at_seventeen_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let out = qpot(dir.path(), &["verify-all", "--grid-n", "17"], "");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert!(r["verdicts"].as_array().unwrap().len() >= 30);
    assert!(r["wall_time"].as_f64().unwrap() < 300.0);
    let again = qpot(dir.path(), &["verify-all", "--grid-n", "17"], "");
    assert_eq!(without_wall_time(&out), without_wall_time(&again));
}
