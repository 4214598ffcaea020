//! Success-rate sweep over the penalty exponent q (a scaled-down version
//! of the full benchmark; use the `bench-success` subcommand for the real
//! thing).
//!
//!     cargo run --release --example success_sweep

use fits3::bench::{run_sweep, Solver, SweepSpec};

fn main() -> fits3::Result<()> {
    let mut spec = SweepSpec::new(vec![Solver::Fits3]);
    spec.ns = vec![256];
    spec.group_sizes = vec![8];
    spec.sparsity_levels = vec![0.1875];
    spec.qs = vec![0.1, 0.3, 0.5, 0.7, 0.9];
    spec.trials = 10;
    spec.base_seed = 42;

    let rows = run_sweep(&spec)?;
    println!("{:<6} {:>14} {:>16}", "q", "success rate", "median rel err");
    for row in rows {
        println!(
            "{:<6} {:>14.2} {:>16.4e}",
            row.q, row.success_rate, row.median_rel_err
        );
    }
    Ok(())
}
