//! Recovery across the four measurement-matrix families.
//!
//!     cargo run --release --example matrix_kinds

use fits3::bench::{median, run_trial, Solver, TrialConfig};
use fits3::grouping::GroupPartition;
use fits3::probgen::{gen_instance, MatrixKind};

fn main() -> fits3::Result<()> {
    let part = GroupPartition::uniform(16, 64)?;
    let cfg = TrialConfig::default();
    println!("{:<14} {:>10} {:>16}", "kind", "success", "median rel err");
    for kind in [
        MatrixKind::Gaussian,
        MatrixKind::Bernoulli,
        MatrixKind::PartHadamard,
        MatrixKind::PartFourier,
    ] {
        let mut errs = Vec::new();
        let mut succ = 0;
        for seed in 0..6u64 {
            let inst = gen_instance(kind, 512, 1024, &part, 12, None, 0.001, seed)?;
            let r = run_trial(&inst, Solver::Fits3, &cfg, seed)?;
            if r.success {
                succ += 1;
            }
            errs.push(r.relative_error);
        }
        println!(
            "{:<14} {:>7}/6 {:>16.4e}",
            kind.to_string(),
            succ,
            median(&errs)
        );
    }
    Ok(())
}
