use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lpsparse::operators::{DiagonalOperator, ForwardOperator};
use lpsparse::penalty::WeightedPenalty;
use lpsparse::seqspace::WeightSequence;
use lpsparse::solvers::{solve_diagonal, RegularizedProblem};

fn lpsparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpsparse")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no '{key}' in {text}"))
        .to_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn threshold_soft_and_hard() {
    let o = lpsparse(&["threshold", "--p", "1", "--alpha", "2", "--x", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "H 2\n");
    let o = lpsparse(&["threshold", "--p", "0", "--alpha", "4", "--x", "1.9"]);
    assert_eq!(stdout(&o), "H 0\n");
}

#[test]
fn threshold_with_oracle() {
    let o = lpsparse(&["threshold", "--p", "0.5", "--alpha", "1", "--x", "2", "--oracle"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let h: f64 = value(&text, "H").parse().unwrap();
    let rest = value(&text, "oracle");
    let mut parts = rest.split_whitespace();
    let oracle: f64 = parts.next().unwrap().parse().unwrap();
    assert_eq!(parts.next(), Some("diff"));
    let spacing: f64 = value(&text, "grid_spacing").parse().unwrap();
    assert!((h - oracle).abs() <= spacing);
}

#[test]
fn threshold_rejects_bad_parameters() {
    assert_eq!(lpsparse(&["threshold", "--p", "2.5", "--alpha", "1", "--x", "1"]).status.code(), Some(2));
    assert_eq!(lpsparse(&["threshold", "--p", "1", "--alpha", "-1", "--x", "1"]).status.code(), Some(2));
    assert_eq!(lpsparse(&["threshold", "--alpha", "1", "--x", "1"]).status.code(), Some(2));
}

#[test]
fn solve_diagonal_problem_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k.txt", "diag 3\n1 0.5 0.25\n");
    let prob = write(dir.path(), "prob.txt", "alpha 0.2\np 1\ndata 1.0 -0.4 0.05\noperator k.txt\n");
    let sol = dir.path().join("u.txt");
    let o = lpsparse(&["solve", &prob, "--out", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let got: Vec<f64> = fs::read_to_string(&sol).unwrap().lines().map(|l| l.parse().unwrap()).collect();

    let op = ForwardOperator::Diagonal(DiagonalOperator::new(vec![1.0, 0.5, 0.25]).unwrap());
    let pen = WeightedPenalty::new(1.0, WeightSequence::uniform(3, 1.0).unwrap()).unwrap();
    let expect = solve_diagonal(&RegularizedProblem::new(op, vec![1.0, -0.4, 0.05], 0.0, 0.2, pen).unwrap()).unwrap();
    assert_eq!(got, expect.u.as_slice());
    assert_eq!(value(&stdout(&o), "support_size"), "2");
    assert_eq!(value(&stdout(&o), "iterations"), "1");
}

#[test]
fn solve_dense_identity_ridge() {
    let dir = tempfile::tempdir().unwrap();
    let k = write(dir.path(), "k.txt", "3 3\n1 0 0\n0 1 0\n0 0 1\n");
    let prob = write(dir.path(), "prob.txt", "alpha 0.5\np 2\ndata 3 -1.5 0.3\n");
    let sol = dir.path().join("u.txt");
    let o = lpsparse(&["solve", &prob, "--operator", &k, "--out", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let got: Vec<f64> = fs::read_to_string(&sol).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    for (g, x) in got.iter().zip([3.0, -1.5, 0.3]) {
        assert!((g - x / 1.5).abs() < 1e-9);
    }
    assert_eq!(value(&stdout(&o), "converged"), "true");
    let cert: f64 = value(&stdout(&o), "certificate_residual").parse().unwrap();
    assert!(cert <= 1e-9);
}

#[test]
fn solve_nonconvex_dense_is_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let k = write(dir.path(), "k.txt", "2 2\n1 0.5\n0 1\n");
    let prob = write(dir.path(), "prob.txt", "alpha 0.5\np 0.5\ndata 1 2\n");
    let o = lpsparse(&["solve", &prob, "--operator", &k]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no minimizer"));
}

#[test]
fn solve_reports_parse_errors_and_iteration_limit() {
    let dir = tempfile::tempdir().unwrap();
    let k = write(dir.path(), "k.txt", "2 2\n1 0.5\n0 1\n");
    let bad = write(dir.path(), "bad.txt", "alpha 0.5\np 1\ndata 1 2\ncolour blue\n");
    let o = lpsparse(&["solve", &bad, "--operator", &k]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
    let missing = dir.path().join("nope.txt");
    assert_eq!(lpsparse(&["solve", missing.to_str().unwrap(), "--operator", &k]).status.code(), Some(2));
    let prob = write(dir.path(), "prob.txt", "alpha 0.01\np 1.5\ndata 1 2\n");
    let o = lpsparse(&["solve", &prob, "--operator", &k, "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(value(&stdout(&o), "converged"), "false");
    let o = lpsparse(&["solve", &prob, "--operator", &k, "--method", "diagonal"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rate_reports_bounds_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.cfg",
        "# small sweep\np 1.5\nn 50\ndelta_points 4\ntrials 2\nband_slope2 0 2\nband_slope2_weighted_sq 0 3\n",
    );
    let csv = dir.path().join("r.csv");
    let o = lpsparse(&["rate", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "bounds_ok"), "true");
    value(&text, "slope1");
    value(&text, "slope2");
    let body = fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("delta,alpha,residual_norm,err2_weighted,err1,bound_data,bound_recon\n"));
    assert_eq!(body.lines().filter(|l| !l.starts_with('#')).count(), 1 + 8);
}

#[test]
fn rate_exits_5_when_slopes_leave_band() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", "p 1\nn 50\ndelta_points 4\ntrials 2\nband_slope1 0.4 0.6\n");
    let csv = dir.path().join("r.csv");
    let o = lpsparse(&["rate", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(value(&stdout(&o), "bounds_ok"), "true");
    assert!(String::from_utf8_lossy(&o.stderr).contains("slope1"));
    assert!(csv.exists());
}

#[test]
fn rate_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let csv = csv.to_str().unwrap();
    for text in ["p 1\nalpha_c 0\n", "p 1\nunknown 3\n", "p 0.5\n", "p 1\ndelta_grid 0.01 0.1\n"] {
        let cfg = write(dir.path(), "r.cfg", text);
        assert_eq!(lpsparse(&["rate", &cfg, "--out", csv]).status.code(), Some(2), "{text}");
    }
}

#[test]
fn experiment_demos() {
    let o = lpsparse(&["pinv-sweep", "--p", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("alpha,error\n"));
    assert!(stdout(&o).contains("# checks_ok true"));

    let o = lpsparse(&["nonexist", "--net-sizes", "4,16,64,256,1024"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("L,resolution,m,gap\n"));

    let o = lpsparse(&["nonexist", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = lpsparse(&["constrained-demo", "--l", "256", "--deltas", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("increase L"));

    let o = lpsparse(&["constrained-demo", "--deltas", "0.1,0.01"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn seeded_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", "p 2\nn 40\ndelta_points 3\ntrials 4\n");
    let run = |seed: &str, name: &str| {
        let csv = dir.path().join(name);
        lpsparse(&["rate", &cfg, "--seed", seed, "--out", csv.to_str().unwrap()]);
        fs::read(csv).unwrap()
    };
    let a = run("3", "a.csv");
    assert_eq!(a, run("3", "b.csv"));
    assert_ne!(a, run("4", "c.csv"));
    assert!(!a.contains(&b'\r'));
}
