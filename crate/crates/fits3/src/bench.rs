//! Experiment harness: single trials, seeded sweeps over problem grids,
//! and per-iteration trace export.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::baselines::{admm_group_lasso, l1_admm_init, AdmmConfig};
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::io;
use crate::linalg::{norm2, spectral_norm_sq_default};
use crate::penalty::Penalty;
use crate::probgen::{gen_instance, mix_seed, MatrixKind, ProblemInstance};
use crate::solver::{
    alpha_max, fits3_solve, ExtrapolationSchedule, Fits3Config, Fits3Solver, SolveReport,
    StepStatus, StopReason, DEFAULT_ALPHA_SCALE, DEFAULT_BETA_MULTIPLIER, DEFAULT_MAX_ITER,
    DEFAULT_TAU, DEFAULT_TOL,
};

/// Success threshold on the relative recovery error.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.01;

/// Which algorithm a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Thresholding solver with the frozen momentum schedule.
    Fits3,
    /// Same iteration without extrapolation (zero schedule).
    Its3,
    /// Convex group lasso by ADMM.
    AdmmGl,
}

impl Solver {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fits3" => Ok(Solver::Fits3),
            "its3" => Ok(Solver::Its3),
            "admm-gl" | "admmgl" => Ok(Solver::AdmmGl),
            other => Err(Error::InvalidArgument(format!(
                "unknown solver '{other}' (expected fits3, its3 or admm-gl)"
            ))),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Fits3 => "fits3",
            Solver::Its3 => "its3",
            Solver::AdmmGl => "admm-gl",
        })
    }
}

/// Shared per-trial knobs for all solvers.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub p: f64,
    pub penalty: Penalty,
    /// Regularization weight as a multiple of `alpha_max`.
    pub alpha_scale: f64,
    /// Proximal weight as a multiple of the squared spectral norm.
    pub beta_multiplier: f64,
    pub tau: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub epsilon: f64,
    /// Iterations of the l1 warm start (0 = start from the random draw).
    pub warmstart_iters: usize,
    /// Warm-start l1 weight as a multiple of `||A^T b||_inf`. This wants a
    /// lasso-scale value: large enough that a handful of ADMM iterations
    /// suppress the null-space part of the random initialization, small
    /// enough not to erase true groups.
    pub warmstart_alpha_scale: f64,
    /// Group-lasso weight as a multiple of `alpha_max`.
    pub gl_alpha_scale: f64,
    pub rho: f64,
    pub gl_max_iter: usize,
    pub success_threshold: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            p: 2.0,
            penalty: Penalty::PowerQ { q: 0.5 },
            alpha_scale: DEFAULT_ALPHA_SCALE,
            beta_multiplier: DEFAULT_BETA_MULTIPLIER,
            tau: DEFAULT_TAU,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            epsilon: crate::solver::DEFAULT_EPSILON,
            warmstart_iters: 10,
            warmstart_alpha_scale: 0.1,
            gl_alpha_scale: 1e-3,
            rho: 1.0,
            gl_max_iter: 1000,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
        }
    }
}

impl TrialConfig {
    /// Solver configuration for an instance with the given squared
    /// spectral norm and correlation scale.
    pub fn fits3_config(
        &self,
        amax: f64,
        spec_norm_sq: f64,
        schedule: ExtrapolationSchedule,
    ) -> Fits3Config {
        let mut cfg = Fits3Config::new(self.alpha_scale * amax, spec_norm_sq);
        cfg.beta = self.beta_multiplier * spec_norm_sq;
        cfg.tau = self.tau;
        cfg.p = self.p;
        cfg.penalty = self.penalty;
        cfg.tol = self.tol;
        cfg.max_iter = self.max_iter;
        cfg.epsilon = self.epsilon;
        cfg.schedule = schedule;
        cfg
    }
}

/// `||x - x_true||_2 / ||x_true||_2`; 0 when the vectors coincide.
pub fn rel_error(x: &[f64], x_true: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), x_true.len());
    let num: f64 = x
        .iter()
        .zip(x_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if num == 0.0 {
        return 0.0;
    }
    let denom = norm2(x_true);
    if denom == 0.0 {
        f64::INFINITY
    } else {
        num / denom
    }
}

/// Outcome of one (instance, solver) run.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub seed: u64,
    pub solver: Solver,
    pub relative_error: f64,
    pub success: bool,
    pub iterations: usize,
    pub seconds: f64,
    pub stop_reason: StopReason,
}

impl TrialResult {
    /// Scores a solution vector against the instance ground truth.
    #[allow(clippy::too_many_arguments)]
    pub fn from_solution(
        x: &[f64],
        x_true: &[f64],
        seed: u64,
        solver: Solver,
        iterations: usize,
        seconds: f64,
        stop_reason: StopReason,
        success_threshold: f64,
    ) -> Self {
        let relative_error = rel_error(x, x_true);
        TrialResult {
            seed,
            solver,
            relative_error,
            success: relative_error < success_threshold,
            iterations,
            seconds,
            stop_reason,
        }
    }
}

/// Runs one solver on one instance: warm start (for the thresholding
/// solvers), solve, score. Degenerate stops are recorded as failed trials,
/// not errors.
pub fn run_trial(
    inst: &ProblemInstance,
    solver: Solver,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<TrialResult> {
    let x_true = inst.ground_truth.as_ref().ok_or_else(|| {
        Error::InvalidArgument("trial needs an instance with a ground truth".into())
    })?;
    let report = solve_instance(inst, solver, cfg, seed)?;
    Ok(TrialResult::from_solution(
        &report.x_final,
        x_true,
        seed,
        solver,
        report.iterations,
        report.total_seconds,
        report.stop_reason,
        cfg.success_threshold,
    ))
}

/// Warm start + solve without scoring; `total_seconds` covers both stages.
pub fn solve_instance(
    inst: &ProblemInstance,
    solver: Solver,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<SolveReport> {
    inst.validate()?;
    let started = std::time::Instant::now();
    let amax = alpha_max(&inst.a, &inst.b, &inst.part)?;
    let mut report = match solver {
        Solver::AdmmGl => {
            let mut admm = AdmmConfig::new(cfg.gl_alpha_scale * amax);
            admm.rho = cfg.rho;
            admm.max_iter = cfg.gl_max_iter;
            admm_group_lasso(&inst.a, &inst.b, &inst.part, &admm)?
        }
        Solver::Fits3 | Solver::Its3 => {
            let schedule = match solver {
                Solver::Fits3 => ExtrapolationSchedule::default_frozen(),
                _ => ExtrapolationSchedule::Zero,
            };
            let est = spectral_norm_sq_default(&inst.a)?;
            let fcfg = cfg.fits3_config(amax, est.value, schedule);
            let x0 = warm_start(inst, cfg, seed)?;
            fits3_solve(&inst.a, &inst.b, &inst.part, fcfg, &x0)?
        }
    };
    report.total_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

/// The seeded l1 warm start with the configured weight scale.
pub fn warm_start(inst: &ProblemInstance, cfg: &TrialConfig, seed: u64) -> Result<Vec<f64>> {
    let atb = crate::linalg::matvec_transpose(&inst.a, &inst.b)?;
    let ws_alpha = cfg.warmstart_alpha_scale * crate::linalg::norm_inf(&atb);
    l1_admm_init(
        &inst.a,
        &inst.b,
        ws_alpha,
        cfg.warmstart_iters,
        mix_seed(seed, 4),
    )
}

/// Grid of experiment cells; `m = n / 2` and the group size must divide
/// `n`. Cell seeds derive from `base_seed` and the cell parameters, so
/// cells can run in any order (or in parallel) with identical results.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub ns: Vec<usize>,
    /// Fraction of active groups; the count is the rounded product.
    pub sparsity_levels: Vec<f64>,
    pub qs: Vec<f64>,
    pub group_sizes: Vec<usize>,
    pub kinds: Vec<MatrixKind>,
    pub ps: Vec<f64>,
    pub solvers: Vec<Solver>,
    pub trials: usize,
    pub base_seed: u64,
    pub sigma: f64,
    pub base: TrialConfig,
}

impl SweepSpec {
    pub fn new(solvers: Vec<Solver>) -> Self {
        SweepSpec {
            ns: vec![1024],
            sparsity_levels: vec![0.05],
            qs: vec![0.5],
            group_sizes: vec![16],
            kinds: vec![MatrixKind::Gaussian],
            ps: vec![2.0],
            solvers,
            trials: 50,
            base_seed: 0,
            sigma: 0.001,
            base: TrialConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidArgument("need at least one solver".into()));
        }
        for &n in &self.ns {
            if n % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "n = {n} must be even (m = n/2)"
                )));
            }
            for &l in &self.group_sizes {
                if l == 0 || n % l != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "group size {l} must divide n = {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        let mut id = 0usize;
        for &n in &self.ns {
            for &sparsity in &self.sparsity_levels {
                for &q in &self.qs {
                    for &l in &self.group_sizes {
                        for &kind in &self.kinds {
                            for &p in &self.ps {
                                cells.push(Cell {
                                    id,
                                    n,
                                    m: n / 2,
                                    sparsity,
                                    q,
                                    group_size: l,
                                    kind,
                                    p,
                                });
                                id += 1;
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    id: usize,
    n: usize,
    m: usize,
    sparsity: f64,
    q: f64,
    group_size: usize,
    kind: MatrixKind,
    p: f64,
}

impl Cell {
    /// Stable seed from the cell parameters (not its position in the grid).
    fn seed(&self, base: u64) -> u64 {
        let mut s = mix_seed(base, self.n as u64);
        s = mix_seed(s, (self.sparsity * 1e6).round() as u64);
        s = mix_seed(s, (self.q * 1e6).round() as u64);
        s = mix_seed(s, self.group_size as u64);
        s = mix_seed(s, self.kind as u64);
        s = mix_seed(s, (self.p * 1e6).round() as u64);
        s
    }

    fn active_groups(&self) -> usize {
        let r = self.n / self.group_size;
        ((self.sparsity * r as f64).round() as usize).min(r)
    }
}

/// One aggregated row of a sweep: a (cell, solver) pair.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cell_id: usize,
    pub n: usize,
    pub m: usize,
    pub sparsity: f64,
    pub q: f64,
    pub p: f64,
    pub kind: MatrixKind,
    pub solver: Solver,
    pub success_rate: f64,
    pub median_rel_err: f64,
    pub median_seconds: f64,
    pub trials: usize,
}

/// Median of an unordered sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in medians"));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Runs every (cell, trial, solver) combination. Trials are independent
/// and run on the global thread pool; aggregation is order-independent, so
/// the result equals sequential execution.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&c| (0..spec.trials).map(move |t| (c, t)))
        .collect();

    let outcomes: Vec<Result<(usize, Vec<TrialResult>)>> = jobs
        .par_iter()
        .map(|&(cell, t)| {
            let trial_seed = mix_seed(cell.seed(spec.base_seed), t as u64 + 1);
            let part = GroupPartition::uniform(cell.group_size, cell.n / cell.group_size)?;
            let inst = gen_instance(
                cell.kind,
                cell.m,
                cell.n,
                &part,
                cell.active_groups(),
                None,
                spec.sigma,
                trial_seed,
            )?;
            let mut cfg = spec.base.clone();
            cfg.p = cell.p;
            cfg.penalty = spec.base.penalty.with_q(cell.q)?;
            let mut results = Vec::with_capacity(spec.solvers.len());
            for &solver in &spec.solvers {
                results.push(run_trial(&inst, solver, &cfg, trial_seed)?);
            }
            Ok((cell.id, results))
        })
        .collect();

    let mut per_cell: Vec<Vec<Vec<TrialResult>>> =
        vec![vec![Vec::new(); spec.solvers.len()]; cells.len()];
    for outcome in outcomes {
        let (cell_id, results) = outcome?;
        for (si, r) in results.into_iter().enumerate() {
            per_cell[cell_id][si].push(r);
        }
    }

    let mut rows = Vec::new();
    for cell in &cells {
        for (si, &solver) in spec.solvers.iter().enumerate() {
            let trials = &per_cell[cell.id][si];
            let successes = trials.iter().filter(|t| t.success).count();
            let errs: Vec<f64> = trials.iter().map(|t| t.relative_error).collect();
            let secs: Vec<f64> = trials.iter().map(|t| t.seconds).collect();
            rows.push(SweepRow {
                cell_id: cell.id,
                n: cell.n,
                m: cell.m,
                sparsity: cell.sparsity,
                q: cell.q,
                p: cell.p,
                kind: cell.kind,
                solver,
                success_rate: successes as f64 / trials.len() as f64,
                median_rel_err: median(&errs),
                median_seconds: median(&secs),
                trials: trials.len(),
            });
        }
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str =
    "cell_id,n,m,sparsity,q,p,kind,solver,success_rate,median_rel_err,median_seconds,trials";

/// Serializes sweep rows; all floats carry full precision. The
/// `median_seconds` column is wall-clock and not reproducible across runs.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.cell_id,
            r.n,
            r.m,
            io::format_float(r.sparsity),
            io::format_float(r.q),
            io::format_float(r.p),
            r.kind,
            r.solver,
            io::format_float(r.success_rate),
            io::format_float(r.median_rel_err),
            io::format_float(r.median_seconds),
            r.trials
        ));
    }
    out
}

pub const TRACE_CSV_HEADER: &str = "k,E,H,support_size,step_norm,seconds";

/// Per-iteration diagnostics as CSV; appends a `rel_err` column when a
/// per-iteration recovery-error series is supplied.
pub fn trace_csv(report: &SolveReport, recovery: Option<&[f64]>) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    if recovery.is_some() {
        out.push_str(",rel_err");
    }
    out.push('\n');
    for k in 0..report.iterations {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            k,
            io::format_float(report.objective_history[k]),
            io::format_float(report.value_fn_history[k]),
            report.support_history[k],
            io::format_float(report.step_norm_history[k]),
            io::format_float(report.seconds_history[k]),
        ));
        if let Some(r) = recovery {
            out.push_str(&format!(",{}", io::format_float(r[k])));
        }
        out.push('\n');
    }
    out
}

/// Writes [`trace_csv`] atomically.
pub fn export_trace(report: &SolveReport, recovery: Option<&[f64]>, path: &Path) -> Result<()> {
    if let Some(r) = recovery {
        if r.len() != report.iterations {
            return Err(Error::DimensionMismatch(format!(
                "recovery series length {} vs {} iterations",
                r.len(),
                report.iterations
            )));
        }
    }
    io::write_atomic(path, trace_csv(report, recovery).as_bytes())
}

/// Solves step by step, recording the relative recovery error at every
/// iteration; the returned series aligns with the report histories.
pub fn traced_solve(
    inst: &ProblemInstance,
    solver: Solver,
    cfg: &TrialConfig,
    seed: u64,
) -> Result<(SolveReport, Option<Vec<f64>>)> {
    inst.validate()?;
    if solver == Solver::AdmmGl {
        let report = solve_instance(inst, solver, cfg, seed)?;
        return Ok((report, None));
    }
    let started = std::time::Instant::now();
    let amax = alpha_max(&inst.a, &inst.b, &inst.part)?;
    let est = spectral_norm_sq_default(&inst.a)?;
    let schedule = match solver {
        Solver::Fits3 => ExtrapolationSchedule::default_frozen(),
        _ => ExtrapolationSchedule::Zero,
    };
    let fcfg = cfg.fits3_config(amax, est.value, schedule);
    let x0 = warm_start(inst, cfg, seed)?;
    let max_iter = fcfg.max_iter;
    let mut driver = Fits3Solver::new(&inst.a, &inst.b, &inst.part, fcfg, &x0)?;
    let mut recovery = inst.ground_truth.as_ref().map(|_| Vec::new());
    let mut reason = StopReason::MaxIter;
    for _ in 0..max_iter {
        let status = driver.step()?;
        if let (Some(rec), Some(truth)) = (recovery.as_mut(), inst.ground_truth.as_ref()) {
            rec.push(rel_error(driver.state().x(), truth));
        }
        if let StepStatus::Stopped(r) = status {
            reason = r;
            break;
        }
    }
    let converged = reason == StopReason::TolReached;
    let s = driver.state().clone();
    let report = SolveReport {
        x_final: s.x().to_vec(),
        iterations: s.iteration(),
        converged,
        stop_reason: reason,
        objective_history: s.objective_history.clone(),
        value_fn_history: s.value_fn_history.clone(),
        support_history: s.support_history.clone(),
        step_norm_history: s.step_norm_history.clone(),
        seconds_history: s.seconds_history.clone(),
        total_seconds: started.elapsed().as_secs_f64(),
        notes: Vec::new(),
    };
    Ok((report, recovery))
}

/// Serializes a solve report in the `k,E,H,support_size,step_norm,seconds`
/// format and writes the final iterate as a vector file next to it.
pub fn write_report(report: &SolveReport, report_path: &Path, x_path: &Path) -> Result<()> {
    io::write_atomic(report_path, trace_csv(report, None).as_bytes())?;
    io::write_vector(x_path, &report.x_final)
}
