//! The group-norm lower bound: nonzero groups of a local minimizer cannot
//! be arbitrarily small, and solved instances respect the bound.
//!
//!     cargo run --release --example lower_bound

use fits3::bench::{solve_instance, Solver, TrialConfig};
use fits3::grouping::{group_norms, group_support, GroupPartition};
use fits3::penalty::{lower_bound_kappa, Penalty};
use fits3::probgen::{gen_instance, MatrixKind};
use fits3::solver::alpha_max;

fn main() -> fits3::Result<()> {
    let part = GroupPartition::uniform(16, 64)?;
    let inst = gen_instance(MatrixKind::Gaussian, 512, 1024, &part, 12, None, 0.001, 11)?;

    let cfg = TrialConfig::default();
    let alpha = cfg.alpha_scale * alpha_max(&inst.a, &inst.b, &inst.part)?;
    for q in [0.3, 0.5, 0.7] {
        let pen = Penalty::power(q)?;
        // Orthonormal rows: squared spectral norm is 1.
        let kappa = lower_bound_kappa(&pen, 1.0, alpha, 2.0, 16)?;
        println!("q = {q}: nonzero groups of any local minimizer have norm >= {kappa:.4e}");
    }

    let report = solve_instance(&inst, Solver::Fits3, &cfg, 11)?;
    let norms = group_norms(&report.x_final, &part, 2.0)?;
    let support = group_support(&report.x_final, &part)?;
    let smallest = support
        .iter()
        .map(|g| norms[g])
        .fold(f64::INFINITY, f64::min);
    let pen = Penalty::power(0.5)?;
    let kappa = lower_bound_kappa(&pen, 1.0, alpha, 2.0, 16)?;
    println!(
        "solved instance (q = 0.5): smallest surviving group norm {smallest:.4e} vs bound {kappa:.4e}"
    );
    Ok(())
}
