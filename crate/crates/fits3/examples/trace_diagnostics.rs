//! Per-iteration diagnostics: objective, descent value function, active
//! group count, step norm and recovery error, exported as CSV.
//!
//!     cargo run --release --example trace_diagnostics

use fits3::bench::{export_trace, traced_solve, Solver, TrialConfig};
use fits3::grouping::GroupPartition;
use fits3::probgen::{gen_instance, MatrixKind};

fn main() -> fits3::Result<()> {
    let part = GroupPartition::uniform(16, 64)?;
    let inst = gen_instance(MatrixKind::Gaussian, 512, 1024, &part, 12, None, 0.001, 3)?;
    let (report, recovery) = traced_solve(&inst, Solver::Fits3, &TrialConfig::default(), 3)?;

    let sizes = &report.support_history;
    let stable_from = sizes
        .iter()
        .position(|s| s == sizes.last().unwrap())
        .unwrap();
    println!(
        "support: {} -> {} groups, stable from iteration {stable_from}",
        sizes.first().unwrap(),
        sizes.last().unwrap()
    );

    let h = &report.value_fn_history;
    let monotone_after =
        (stable_from + 1..h.len()).all(|k| h[k] <= h[k - 1] + 1e-9 * (1.0 + h[k - 1].abs()));
    println!("value function nonincreasing after stabilization: {monotone_after}");

    let path = std::env::temp_dir().join("fits3_trace.csv");
    export_trace(&report, recovery.as_deref(), &path)?;
    println!(
        "wrote {} iterations to {}",
        report.iterations,
        path.display()
    );
    Ok(())
}
