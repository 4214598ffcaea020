//! Accuracy and time against the convex group-lasso baseline on paired
//! instances.
//!
//!     cargo run --release --example baseline_comparison

use fits3::bench::{median, run_trial, Solver, TrialConfig};
use fits3::grouping::GroupPartition;
use fits3::probgen::{gen_instance, MatrixKind};

fn main() -> fits3::Result<()> {
    let part = GroupPartition::uniform(16, 64)?;
    let cfg = TrialConfig::default();
    let mut rows: Vec<(Solver, Vec<f64>, Vec<f64>)> = vec![
        (Solver::Fits3, Vec::new(), Vec::new()),
        (Solver::AdmmGl, Vec::new(), Vec::new()),
    ];
    for seed in 0..6u64 {
        let inst = gen_instance(MatrixKind::Gaussian, 512, 1024, &part, 3, None, 0.001, seed)?;
        for (solver, errs, secs) in rows.iter_mut() {
            let r = run_trial(&inst, *solver, &cfg, seed)?;
            errs.push(r.relative_error);
            secs.push(r.seconds);
        }
    }
    println!(
        "{:<10} {:>16} {:>14}",
        "solver", "median rel err", "median time"
    );
    for (solver, errs, secs) in &rows {
        println!(
            "{:<10} {:>16.4e} {:>13.3}s",
            solver.to_string(),
            median(errs),
            median(secs)
        );
    }
    Ok(())
}
