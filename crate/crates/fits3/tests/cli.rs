//! End-to-end checks of the command-line interface: bundle round trips,
//! report formats, sweep output and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn fits3_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fits3"))
}

fn run(args: &[&str]) -> Output {
    fits3_bin().args(args).output().expect("spawn fits3")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn gen_small(dir: &Path) {
    let out = run(&[
        "gen",
        "--n",
        "64",
        "--m",
        "32",
        "--l",
        "4",
        "--S",
        "2",
        "--kind",
        "gaussian",
        "--seed",
        "7",
        "--sigma",
        "0.001",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
}

#[test]
fn gen_writes_bundle_with_meta_echoing_flags() {
    let dir = tempdir().unwrap();
    let bundle = dir.path().join("inst");
    gen_small(&bundle);
    for f in ["A.csv", "b.csv", "xtrue.csv", "meta"] {
        assert!(bundle.join(f).exists(), "missing {f}");
    }
    let meta = std::fs::read_to_string(bundle.join("meta")).unwrap();
    for line in ["m=32", "n=64", "kind=gaussian", "seed=7", "S=2"] {
        assert!(meta.contains(line), "meta missing '{line}':\n{meta}");
    }
    let inst = fits3::probgen::load_instance(&bundle).unwrap();
    assert_eq!(inst.part.num_groups(), 16);
}

#[test]
fn solve_writes_report_and_solution() {
    let dir = tempdir().unwrap();
    let bundle = dir.path().join("inst");
    let outdir = dir.path().join("sol");
    gen_small(&bundle);
    let out = run(&[
        "solve",
        "--instance",
        bundle.to_str().unwrap(),
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let report = std::fs::read_to_string(outdir.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,E,H,support_size,step_norm,seconds"
    );
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());

    // Stopping contract: final relative step below the tolerance, or the
    // iteration cap was reached.
    let x = fits3::io::read_vector(&outdir.join("x.csv")).unwrap();
    assert_eq!(x.len(), 64);
    let last = rows.last().unwrap().split(',').collect::<Vec<_>>();
    let step: f64 = last[4].parse().unwrap();
    let maxit_reached = rows.len() >= 300;
    let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(maxit_reached || step / xnorm.max(1e-300) < 5e-5 || xnorm == 0.0);
}

#[test]
fn solve_supports_the_admm_baseline() {
    let dir = tempdir().unwrap();
    let bundle = dir.path().join("inst");
    let outdir = dir.path().join("sol");
    gen_small(&bundle);
    let out = run(&[
        "solve",
        "--instance",
        bundle.to_str().unwrap(),
        "--baseline",
        "admm-gl",
        "--out",
        outdir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("admm-gl"));
}

#[test]
fn trace_emits_per_iteration_series_with_recovery_error() {
    let dir = tempdir().unwrap();
    let bundle = dir.path().join("inst");
    let csv = dir.path().join("trace.csv");
    gen_small(&bundle);
    let out = run(&[
        "trace",
        "--instance",
        bundle.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "k,E,H,support_size,step_norm,seconds,rel_err");
    assert!(text.lines().count() > 1);
}

#[test]
fn bench_scale_emits_one_row_per_cell_and_solver() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let out = run(&[
        "bench-scale",
        "--n",
        "64,128",
        "--sparsity",
        "0.1",
        "--group-sizes",
        "4",
        "--solvers",
        "fits3,admm-gl",
        "--trials",
        "2",
        "--seed",
        "3",
        "--jobs",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "cell_id,n,m,sparsity,q,p,kind,solver,success_rate,median_rel_err,median_seconds,trials"
    );
    assert_eq!(lines.count(), 4); // 2 sizes x 2 solvers
}

#[test]
fn bench_success_sweeps_q() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    let out = run(&[
        "bench-success",
        "--n",
        "64",
        "--sparsity",
        "0.125",
        "--group-sizes",
        "4",
        "--q",
        "0.3,0.5",
        "--trials",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines().skip(1) {
        let rate: f64 = line.split(',').nth(8).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
}

#[test]
fn unknown_flag_exits_with_usage_code() {
    let out = run(&["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--no-such-flag"), "{stderr}");
}

#[test]
fn missing_instance_exits_with_usage_code() {
    let dir = tempdir().unwrap();
    let out = run(&[
        "solve",
        "--instance",
        dir.path().join("nope").to_str().unwrap(),
        "--out",
        dir.path().join("sol").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nope"), "{stderr}");
}

#[test]
fn invalid_solver_parameter_exits_with_usage_code() {
    let dir = tempdir().unwrap();
    let bundle = dir.path().join("inst");
    gen_small(&bundle);
    let out = run(&[
        "solve",
        "--instance",
        bundle.to_str().unwrap(),
        "--q",
        "1.5",
        "--out",
        dir.path().join("sol").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_every_solver_flag_with_default() {
    let out = run(&["solve", "--help"]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--p",
        "--q",
        "--penalty",
        "--alpha-scale",
        "--beta",
        "--tau",
        "--tol",
        "--maxit",
        "--epsilon",
        "--schedule",
        "--warmstart-iters",
        "--baseline",
    ] {
        assert!(text.contains(flag), "help missing {flag}");
    }
    for default in ["0.0005", "1.0001", "0.2", "0.00005", "300"] {
        assert!(
            text.contains(&format!("default: {default}")),
            "help missing default {default}"
        );
    }
}

#[test]
fn gen_rejects_indivisible_group_size() {
    let dir = tempdir().unwrap();
    let out = run(&[
        "gen",
        "--n",
        "100",
        "--l",
        "16",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
