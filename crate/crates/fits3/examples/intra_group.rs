//! Signals that are sparse *within* active groups: the within-group l1
//! norm (p = 1) recovers them, the l2 group norm (p = 2) does not.
//!
//!     cargo run --release --example intra_group

use fits3::bench::{median, run_trial, Solver, TrialConfig};
use fits3::grouping::GroupPartition;
use fits3::probgen::{gen_instance, MatrixKind};

fn main() -> fits3::Result<()> {
    // 32 groups of 32; 16 active groups carry only 6 nonzeros each.
    let part = GroupPartition::uniform(32, 32)?;
    let base = TrialConfig::default();
    let mut with_p1 = base.clone();
    with_p1.p = 1.0;

    let mut errs1 = Vec::new();
    let mut errs2 = Vec::new();
    for seed in 0..8u64 {
        let inst = gen_instance(
            MatrixKind::Gaussian,
            512,
            1024,
            &part,
            16,
            Some(6),
            0.001,
            seed,
        )?;
        errs1.push(run_trial(&inst, Solver::Fits3, &with_p1, seed)?.relative_error);
        errs2.push(run_trial(&inst, Solver::Fits3, &base, seed)?.relative_error);
    }
    println!("median relative error with p = 1: {:.4e}", median(&errs1));
    println!("median relative error with p = 2: {:.4e}", median(&errs2));
    Ok(())
}
