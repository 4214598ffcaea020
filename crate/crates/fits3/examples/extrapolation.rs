//! Effect of extrapolation: the same instance solved with the frozen
//! momentum schedule and with no extrapolation at all.
//!
//!     cargo run --release --example extrapolation

use fits3::bench::{rel_error, solve_instance, Solver, TrialConfig};
use fits3::grouping::GroupPartition;
use fits3::probgen::{gen_instance, MatrixKind};

fn main() -> fits3::Result<()> {
    let part = GroupPartition::uniform(16, 64)?;
    let cfg = TrialConfig::default();
    println!(
        "{:<6} {:>12} {:>12} {:>12}",
        "seed", "accelerated", "plain", "rel err"
    );
    let mut wins = 0;
    for seed in 0..8u64 {
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
        let accel = solve_instance(&inst, Solver::Fits3, &cfg, seed)?;
        let plain = solve_instance(&inst, Solver::Its3, &cfg, seed)?;
        if accel.iterations < plain.iterations {
            wins += 1;
        }
        println!(
            "{:<6} {:>12} {:>12} {:>12.3e}",
            seed,
            accel.iterations,
            plain.iterations,
            rel_error(&accel.x_final, inst.ground_truth.as_ref().unwrap())
        );
    }
    println!("extrapolation reached the tolerance first in {wins}/8 runs");
    Ok(())
}
