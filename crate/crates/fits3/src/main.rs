//! Command-line front end: generate instances, solve them, run benchmark
//! sweeps, export per-iteration traces. All defaults reproduce the
//! reference experiment setup.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fits3::bench::{self, run_sweep, Solver, SweepSpec, TrialConfig, DEFAULT_SUCCESS_THRESHOLD};
use fits3::error::Error;
use fits3::grouping::GroupPartition;
use fits3::io;
use fits3::penalty::Penalty;
use fits3::probgen::{gen_instance, load_instance, save_instance, MatrixKind};

#[derive(Parser)]
#[command(
    name = "fits3",
    about = "Group-sparse recovery via iterative thresholding with support-and-scale shrinking",
    version
)]
struct Cli {
    /// Worker threads for benchmark sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance bundle (A.csv, b.csv, xtrue.csv, meta).
    Gen(GenArgs),
    /// Solve an instance bundle and write the solution and report.
    Solve(SolveArgs),
    /// Success-rate sweep over q / group size / matrix kind grids.
    BenchSuccess(SweepArgs),
    /// Accuracy and timing sweep over problem sizes.
    BenchScale(SweepArgs),
    /// Per-iteration diagnostics of one solve as CSV.
    Trace(TraceArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Signal length.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Measurement count (default: n/2).
    #[arg(long)]
    m: Option<usize>,
    /// Uniform group size.
    #[arg(long, default_value_t = 16)]
    l: usize,
    /// Number of active groups.
    #[arg(long = "S", default_value_t = 12)]
    s_count: usize,
    /// Nonzeros per active group (default: dense active groups).
    #[arg(long = "s")]
    intra_s: Option<usize>,
    /// Matrix kind: gaussian, bernoulli, parthadamard, partfourier.
    #[arg(long, default_value = "gaussian")]
    kind: String,
    /// Noise level.
    #[arg(long, default_value_t = 0.001)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Solver tuning shared by every subcommand; the defaults reproduce the
/// reference experiment configuration.
#[derive(Args, Clone)]
struct Tuning {
    /// Penalty kind: tq (t^q) or logtq (log(t^q+1)).
    #[arg(long, default_value = "tq")]
    penalty: String,
    /// Regularization weight as a multiple of max_i ||A_gi^T b||.
    #[arg(long, default_value_t = 5e-4)]
    alpha_scale: f64,
    /// Proximal weight as a multiple of the squared spectral norm.
    #[arg(long, default_value_t = 1.0001)]
    beta: f64,
    /// Group threshold.
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    /// Relative-step stopping tolerance.
    #[arg(long, default_value_t = 5e-5)]
    tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = 300)]
    maxit: usize,
    /// Inner inexactness for p outside {1, 2} (ignored otherwise).
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Extrapolation schedule: fista, zero, or const:<t>.
    #[arg(long, default_value = "fista")]
    schedule: String,
    /// Freeze index of the fista schedule.
    #[arg(long, default_value_t = 300)]
    freeze: usize,
    /// Warm-start iterations of the l1 solver.
    #[arg(long, default_value_t = 10)]
    warmstart_iters: usize,
    /// Warm-start l1 weight as a multiple of the max correlation.
    #[arg(long, default_value_t = 0.1)]
    warmstart_alpha_scale: f64,
    /// ADMM penalty parameter.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Group-lasso weight as a multiple of max_i ||A_gi^T b||.
    #[arg(long, default_value_t = 1e-3)]
    gl_alpha_scale: f64,
    /// ADMM iteration cap.
    #[arg(long, default_value_t = 1000)]
    gl_maxit: usize,
}

impl Tuning {
    fn trial_config(&self, p: f64, q: f64) -> Result<TrialConfig, Error> {
        Ok(TrialConfig {
            p,
            penalty: Penalty::parse(&self.penalty, q)?,
            alpha_scale: self.alpha_scale,
            beta_multiplier: self.beta,
            tau: self.tau,
            tol: self.tol,
            max_iter: self.maxit,
            epsilon: self.epsilon,
            warmstart_iters: self.warmstart_iters,
            warmstart_alpha_scale: self.warmstart_alpha_scale,
            gl_alpha_scale: self.gl_alpha_scale,
            rho: self.rho,
            gl_max_iter: self.gl_maxit,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
        })
    }
}

/// Flags of the single-instance subcommands (solve, trace).
#[derive(Args, Clone)]
struct SolveFlags {
    /// Group norm exponent.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Penalty exponent.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Warm-start seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run a baseline instead: admm-gl.
    #[arg(long)]
    baseline: Option<String>,
    #[command(flatten)]
    tuning: Tuning,
}

impl SolveFlags {
    fn trial_config(&self) -> Result<TrialConfig, Error> {
        self.tuning.trial_config(self.p, self.q)
    }

    fn solver(&self) -> Result<Solver, Error> {
        match &self.baseline {
            None => {
                if self.tuning.schedule == "zero" {
                    Ok(Solver::Its3)
                } else {
                    Ok(Solver::Fits3)
                }
            }
            Some(b) => Solver::parse(b),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Instance bundle directory.
    #[arg(long)]
    instance: PathBuf,
    /// Output directory for x.csv and report.csv.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: SolveFlags,
}

#[derive(Args)]
struct TraceArgs {
    /// Instance bundle directory.
    #[arg(long)]
    instance: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: SolveFlags,
}

#[derive(Args)]
struct SweepArgs {
    /// Problem sizes (m = n/2), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1024")]
    n: Vec<usize>,
    /// Active-group fractions, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    sparsity: Vec<f64>,
    /// Penalty exponents, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    q: Vec<f64>,
    /// Group sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    group_sizes: Vec<usize>,
    /// Matrix kinds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "gaussian")]
    kinds: Vec<String>,
    /// Group norm exponents, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    p: Vec<f64>,
    /// Solvers to compare, comma separated: fits3, its3, admm-gl.
    #[arg(long, value_delimiter = ',', default_value = "fits3")]
    solvers: Vec<String>,
    /// Trials per grid cell.
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Base seed; trial seeds derive from it and the cell parameters.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise level.
    #[arg(long, default_value_t = 0.001)]
    sigma: f64,
    /// Success threshold on the relative error.
    #[arg(long, default_value_t = DEFAULT_SUCCESS_THRESHOLD)]
    success_threshold: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
}

impl SweepArgs {
    fn spec(&self) -> Result<SweepSpec, Error> {
        let solvers = self
            .solvers
            .iter()
            .map(|s| Solver::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        // Per-cell p and q override these placeholders inside the sweep.
        let mut base = self.tuning.trial_config(2.0, 0.5)?;
        base.success_threshold = self.success_threshold;
        let mut spec = SweepSpec::new(solvers);
        spec.ns = self.n.clone();
        spec.sparsity_levels = self.sparsity.clone();
        spec.qs = self.q.clone();
        spec.group_sizes = self.group_sizes.clone();
        spec.kinds = self
            .kinds
            .iter()
            .map(|k| MatrixKind::parse(k))
            .collect::<Result<Vec<_>, _>>()?;
        spec.ps = self.p.clone();
        spec.trials = self.trials;
        spec.base_seed = self.seed;
        spec.sigma = self.sigma;
        spec.base = base;
        Ok(spec)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Gen(args) => {
            let kind = MatrixKind::parse(&args.kind)?;
            let m = args.m.unwrap_or(args.n / 2);
            if args.l == 0 || args.n % args.l != 0 {
                return Err(Error::InvalidArgument(format!(
                    "--l {} must divide --n {}",
                    args.l, args.n
                )));
            }
            let part = GroupPartition::uniform(args.l, args.n / args.l)?;
            let inst = gen_instance(
                kind,
                m,
                args.n,
                &part,
                args.s_count,
                args.intra_s,
                args.sigma,
                args.seed,
            )?;
            save_instance(&inst, &args.out)?;
            println!(
                "wrote {} ({}x{}, {} groups of {}, {} active, sigma {}, seed {})",
                args.out.display(),
                m,
                args.n,
                part.num_groups(),
                args.l,
                args.s_count,
                args.sigma,
                args.seed
            );
            Ok(())
        }
        Command::Solve(args) => {
            let inst = load_instance(&args.instance)?;
            let cfg = args.flags.trial_config()?;
            let solver = args.flags.solver()?;
            let report = bench::solve_instance(&inst, solver, &cfg, args.flags.seed)?;
            std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
                path: args.out.clone(),
                source,
            })?;
            bench::write_report(
                &report,
                &args.out.join("report.csv"),
                &args.out.join("x.csv"),
            )?;
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            let summary = match inst.ground_truth.as_ref() {
                Some(truth) => {
                    format!(", rel_err {:.6e}", bench::rel_error(&report.x_final, truth))
                }
                None => String::new(),
            };
            println!(
                "{solver}: {} iterations, stop {:?}, {:.3}s{summary}",
                report.iterations, report.stop_reason, report.total_seconds
            );
            Ok(())
        }
        Command::BenchSuccess(args) | Command::BenchScale(args) => {
            let spec = args.spec()?;
            let rows = run_sweep(&spec)?;
            io::write_atomic(&args.out, bench::sweep_csv(&rows).as_bytes())?;
            println!("wrote {} rows to {}", rows.len(), args.out.display());
            Ok(())
        }
        Command::Trace(args) => {
            let inst = load_instance(&args.instance)?;
            let cfg = args.flags.trial_config()?;
            let solver = args.flags.solver()?;
            let (report, recovery) = bench::traced_solve(&inst, solver, &cfg, args.flags.seed)?;
            bench::export_trace(&report, recovery.as_deref(), &args.out)?;
            println!(
                "wrote {} iterations to {}",
                report.iterations,
                args.out.display()
            );
            Ok(())
        }
    }
}
