//! Basic group-sparse recovery: generate a synthetic instance, warm-start
//! from a few l1 ADMM iterations, solve, and report the recovery quality.
//!
//!     cargo run --release --example recover

use fits3::bench::{rel_error, solve_instance, Solver, TrialConfig};
use fits3::grouping::GroupPartition;
use fits3::probgen::{gen_instance, MatrixKind};

fn main() -> fits3::Result<()> {
    // 512 measurements of a length-1024 signal with 12 of 64 groups active.
    let part = GroupPartition::uniform(16, 64)?;
    let seed = 7;
    let inst = gen_instance(
        MatrixKind::Gaussian,
        512,
        1024,
        &part,
        12,
        None,
        0.001,
        seed,
    )?;
    let truth = inst.ground_truth.as_ref().unwrap();

    let cfg = TrialConfig::default();
    let report = solve_instance(&inst, Solver::Fits3, &cfg, seed)?;

    println!(
        "solved in {} iterations ({:?}), {:.3}s",
        report.iterations, report.stop_reason, report.total_seconds
    );
    println!(
        "relative recovery error: {:.4e}",
        rel_error(&report.x_final, truth)
    );
    println!(
        "active groups: start {}, end {} (truth has {})",
        report.support_history.first().unwrap(),
        report.support_history.last().unwrap(),
        fits3::grouping::group_support(truth, &part)?.len()
    );
    println!(
        "objective: first {:.6e}, last {:.6e}",
        report.objective_history.first().unwrap(),
        report.objective_history.last().unwrap()
    );
    Ok(())
}
