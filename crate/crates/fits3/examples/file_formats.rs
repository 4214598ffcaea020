//! Instance bundles and report files on disk: write, reload, solve from
//! the reloaded copy.
//!
//!     cargo run --release --example file_formats

use fits3::bench::{solve_instance, write_report, Solver, TrialConfig};
use fits3::grouping::GroupPartition;
use fits3::probgen::{gen_instance, load_instance, save_instance, MatrixKind};

fn main() -> fits3::Result<()> {
    let dir = std::env::temp_dir().join("fits3_bundle_demo");
    let part = GroupPartition::uniform(8, 32)?;
    let inst = gen_instance(MatrixKind::Bernoulli, 128, 256, &part, 4, None, 0.001, 5)?;
    save_instance(&inst, &dir)?;
    println!("bundle at {}: A.csv, b.csv, xtrue.csv, meta", dir.display());

    let reloaded = load_instance(&dir)?;
    assert_eq!(inst.a, reloaded.a);
    assert_eq!(inst.b, reloaded.b);
    println!("round trip is bit-exact (17 significant digits per value)");

    let report = solve_instance(&reloaded, Solver::Fits3, &TrialConfig::default(), 5)?;
    write_report(&report, &dir.join("report.csv"), &dir.join("x.csv"))?;
    println!(
        "report.csv has {} rows (k,E,H,support_size,step_norm,seconds)",
        report.iterations
    );
    Ok(())
}
