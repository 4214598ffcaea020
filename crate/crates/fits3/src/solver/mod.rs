//! Iterative thresholding with support-and-scale shrinking.
//!
//! Each iteration (a) zeroes every group of the current iterate whose
//! p-norm falls below the threshold `tau`, (b) restricts the problem to the
//! surviving groups, (c) extrapolates the thresholded iterate, (d) takes a
//! gradient step of the least-squares term on the restricted columns, and
//! (e) applies the per-group proximal operator of the linearized penalty.
//! Groups that die never come back, so the working problem keeps shrinking
//! in both support and scale.

mod prox;
mod schedule;

pub use prox::{
    group_prox_general, group_prox_p1, group_prox_p2, subgradient_residual, ProxCertificate,
};
pub use schedule::{ExtrapolationSchedule, ScheduleState};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::grouping::{group_support, threshold_groups, GroupPartition, GroupSet};
use crate::linalg::{
    matvec, matvec_group_cols, matvec_transpose_group_cols, norm2, norm_p,
    spectral_norm_sq_default, DenseMatrix,
};
use crate::penalty::Penalty;

/// Scale applied to `alpha_max` by the reference regularization rule.
pub const DEFAULT_ALPHA_SCALE: f64 = 5e-4;
/// Proximal weight as a multiple of the squared spectral norm.
pub const DEFAULT_BETA_MULTIPLIER: f64 = 1.0001;
/// Group threshold.
pub const DEFAULT_TAU: f64 = 0.2;
/// Relative-step stopping tolerance.
pub const DEFAULT_TOL: f64 = 5e-5;
/// Iteration cap.
pub const DEFAULT_MAX_ITER: usize = 300;
/// Inner inexactness for general p (unused for p = 1 and p = 2).
pub const DEFAULT_EPSILON: f64 = 0.5;

/// All solver parameters. `beta` is the absolute proximal weight and must
/// exceed the squared spectral norm of the measurement matrix.
#[derive(Debug, Clone)]
pub struct Fits3Config {
    /// Regularization weight.
    pub alpha: f64,
    /// Proximal weight; must satisfy `beta > ||A^T A||_2`.
    pub beta: f64,
    /// Group threshold applied to every iterate.
    pub tau: f64,
    /// Exponent of the within-group norm.
    pub p: f64,
    pub penalty: Penalty,
    /// Relative-step stopping tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Inner inexactness in `[0, 1)`; forced to 0 when `p` is 1 or 2,
    /// required positive otherwise (an exact certificate is unattainable
    /// in floating point).
    pub epsilon: f64,
    pub schedule: ExtrapolationSchedule,
    pub inner_max_iter: usize,
    pub inner_tol: f64,
}

impl Fits3Config {
    /// Reference configuration for a matrix with the given squared
    /// spectral norm: `beta = 1.0001 * spec_norm_sq`, `tau = 0.2`,
    /// `p = 2`, penalty `t^0.5`, tolerance `5e-5`, 300 iterations,
    /// frozen momentum schedule.
    pub fn new(alpha: f64, spec_norm_sq: f64) -> Self {
        Fits3Config {
            alpha,
            beta: DEFAULT_BETA_MULTIPLIER * spec_norm_sq,
            tau: DEFAULT_TAU,
            p: 2.0,
            penalty: Penalty::PowerQ { q: 0.5 },
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            epsilon: DEFAULT_EPSILON,
            schedule: ExtrapolationSchedule::default_frozen(),
            inner_max_iter: 200,
            inner_tol: 1e-12,
        }
    }

    /// The inexactness actually used: 0 for the closed-form cases.
    pub fn effective_epsilon(&self) -> f64 {
        if self.p == 1.0 || self.p == 2.0 {
            0.0
        } else {
            self.epsilon
        }
    }

    fn validate(&self, spec_norm_sq: f64) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "p must be finite and >= 1, got {}",
                self.p
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        let eps = self.effective_epsilon();
        if self.p != 1.0 && self.p != 2.0 && eps == 0.0 {
            return Err(Error::InvalidArgument(
                "epsilon must be positive for p outside {1, 2}: the inner solver cannot \
                 certify an exact solution in floating point"
                    .into(),
            ));
        }
        if !(self.beta > spec_norm_sq) {
            return Err(Error::InvalidArgument(format!(
                "beta = {} must exceed the squared spectral norm {spec_norm_sq:.6e}",
                self.beta
            )));
        }
        if let ExtrapolationSchedule::Constant { t } = self.schedule {
            let ceiling = t_bar(eps, self.beta, spec_norm_sq)?;
            if !(0.0..ceiling).contains(&t) {
                return Err(Error::InvalidArgument(format!(
                    "constant extrapolation weight {t} must lie in [0, {ceiling:.6}) for \
                     beta = {} and spectral norm {spec_norm_sq:.6e}",
                    self.beta
                )));
            }
        }
        if self.inner_max_iter == 0 || !(self.inner_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "inner solver needs inner_max_iter >= 1 and inner_tol > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Extrapolation ceiling under which the iteration is guaranteed to
/// converge; equals 1 when the inner subproblems are solved exactly.
pub fn t_bar(epsilon: f64, beta: f64, spec_norm_sq: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    if !(spec_norm_sq > 0.0) || !(beta > spec_norm_sq) {
        return Err(Error::InvalidArgument(format!(
            "need beta > spec_norm_sq > 0, got beta = {beta}, spec_norm_sq = {spec_norm_sq}"
        )));
    }
    if epsilon == 0.0 {
        // The discriminant is a perfect square; the ratio simplifies to 1.
        return Ok(1.0);
    }
    let s = spec_norm_sq;
    let disc = (beta + s) * (beta + s) - 4.0 * beta * epsilon * s;
    Ok((disc.sqrt() - (beta - s)) / (2.0 * s))
}

/// Least-squares data term plus the penalized group norms:
/// `0.5 ||Ax - b||^2 + alpha * sum_i psi(||x_gi||_p)`.
pub fn objective(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    part: &GroupPartition,
    p: f64,
    penalty: &Penalty,
    alpha: f64,
) -> Result<f64> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "observation length {} vs {} rows",
            b.len(),
            a.rows()
        )));
    }
    let ax = matvec(a, x)?;
    let fidelity: f64 = ax
        .iter()
        .zip(b)
        .map(|(u, v)| {
            let d = u - v;
            d * d
        })
        .sum();
    let mut reg = 0.0;
    for g in 0..part.num_groups() {
        let n = norm_p(part.slice(x, g), p);
        reg += penalty.value(n)?;
    }
    Ok(0.5 * fidelity + alpha * reg)
}

/// Descent quantity `E(x) + beta (1 - epsilon) / 2 * ||x - u||^2`, which is
/// monotonically nonincreasing along the iteration once the support has
/// stabilized.
pub fn value_function_h(e_x: f64, x: &[f64], u: &[f64], beta: f64, epsilon: f64) -> f64 {
    debug_assert_eq!(x.len(), u.len());
    let d: f64 = x
        .iter()
        .zip(u)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum();
    e_x + 0.5 * beta * (1.0 - epsilon) * d
}

/// Largest group-wise correlation `max_i ||A_gi^T b||_2`; the reference
/// regularization weight is a small multiple of it.
pub fn alpha_max(a: &DenseMatrix, b: &[f64], part: &GroupPartition) -> Result<f64> {
    if b.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument(
            "alpha rule needs a nonzero observation".into(),
        ));
    }
    let atb = crate::linalg::matvec_transpose(a, b)?;
    if part.total_len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "partition length {} vs {} columns",
            part.total_len(),
            a.cols()
        )));
    }
    Ok((0..part.num_groups())
        .map(|g| norm2(part.slice(&atb, g)))
        .fold(0.0, f64::max))
}

/// `5e-4 * alpha_max`: the reference choice of the regularization weight.
pub fn default_alpha(a: &DenseMatrix, b: &[f64], part: &GroupPartition) -> Result<f64> {
    Ok(DEFAULT_ALPHA_SCALE * alpha_max(a, b, part)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative step fell below the tolerance.
    TolReached,
    /// Iteration cap hit first.
    MaxIter,
    /// Thresholding removed every group; the iterate is the zero vector.
    EmptySupport,
    /// The stopping ratio was undefined because the iterate vanished.
    ZeroIterate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Continue,
    Stopped(StopReason),
}

/// Per-iteration records and the running iterate.
#[derive(Debug, Clone)]
pub struct SolverState {
    k: usize,
    x: Vec<f64>,
    x_tilde_prev: Vec<f64>,
    active: GroupSet,
    schedule: ScheduleState,
    stopped: Option<StopReason>,
    pub objective_history: Vec<f64>,
    pub value_fn_history: Vec<f64>,
    pub support_history: Vec<usize>,
    pub step_norm_history: Vec<f64>,
    pub seconds_history: Vec<f64>,
}

impl SolverState {
    pub fn iteration(&self) -> usize {
        self.k
    }

    /// Current iterate.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Active group set of the most recent step.
    pub fn active(&self) -> &GroupSet {
        &self.active
    }

    pub fn stopped(&self) -> Option<StopReason> {
        self.stopped
    }
}

/// Final iterate plus the full per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_final: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub objective_history: Vec<f64>,
    pub value_fn_history: Vec<f64>,
    pub support_history: Vec<usize>,
    pub step_norm_history: Vec<f64>,
    pub seconds_history: Vec<f64>,
    pub total_seconds: f64,
    /// Free-form remarks (e.g. fallback paths taken).
    pub notes: Vec<String>,
}

/// Driver owning the iteration state; [`step`](Fits3Solver::step) runs one
/// iteration, [`solve`](Fits3Solver::solve) runs to termination.
pub struct Fits3Solver<'a> {
    a: &'a DenseMatrix,
    b: &'a [f64],
    part: &'a GroupPartition,
    config: Fits3Config,
    spec_norm_sq: f64,
    t_cap: Option<f64>,
    state: SolverState,
    notes: Vec<String>,
}

impl<'a> Fits3Solver<'a> {
    pub fn new(
        a: &'a DenseMatrix,
        b: &'a [f64],
        part: &'a GroupPartition,
        config: Fits3Config,
        x0: &[f64],
    ) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "observation length {} vs {} rows",
                b.len(),
                a.rows()
            )));
        }
        if part.total_len() != a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "partition length {} vs {} columns",
                part.total_len(),
                a.cols()
            )));
        }
        if x0.len() != a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "start vector length {} vs {} columns",
                x0.len(),
                a.cols()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "start vector has non-finite entries".into(),
            ));
        }
        if b.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument(
                "zero observation: the model's minimizer is trivially 0".into(),
            ));
        }
        let mut notes = Vec::new();
        let est = spectral_norm_sq_default(a)?;
        if !est.converged {
            notes.push(format!(
                "power iteration unconverged after {} iterations; using best estimate",
                est.iterations
            ));
        }
        config.validate(est.value)?;
        let eps = config.effective_epsilon();
        let t_cap = if eps > 0.0 {
            // The momentum schedule approaches 1, which can exceed the
            // ceiling when the inner solves are inexact; cap it.
            Some(0.99 * t_bar(eps, config.beta, est.value)?)
        } else {
            None
        };
        let state = SolverState {
            k: 0,
            x: x0.to_vec(),
            x_tilde_prev: x0.to_vec(),
            active: GroupSet::empty(),
            schedule: config.schedule.state(),
            stopped: None,
            objective_history: Vec::new(),
            value_fn_history: Vec::new(),
            support_history: Vec::new(),
            step_norm_history: Vec::new(),
            seconds_history: Vec::new(),
        };
        Ok(Fits3Solver {
            a,
            b,
            part,
            config,
            spec_norm_sq: est.value,
            t_cap,
            state,
            notes,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn config(&self) -> &Fits3Config {
        &self.config
    }

    /// Estimated squared spectral norm of the measurement matrix.
    pub fn spec_norm_sq(&self) -> f64 {
        self.spec_norm_sq
    }

    /// Runs one iteration: threshold, shrink, extrapolate, gradient step on
    /// the active columns, per-group prox. Appends one record to every
    /// history.
    pub fn step(&mut self) -> Result<StepStatus> {
        if let Some(r) = self.state.stopped {
            return Ok(StepStatus::Stopped(r));
        }
        let started = Instant::now();
        let cfg = &self.config;
        let eps = cfg.effective_epsilon();
        let n = self.a.cols();

        let (x_tilde, active) = threshold_groups(&self.state.x, self.part, cfg.p, cfg.tau)?;
        // Consume the schedule even on the terminal step so that emitted
        // weights stay aligned with iteration indices.
        let mut t = self.state.schedule.next_t();
        if let Some(cap) = self.t_cap {
            t = t.min(cap);
        }

        if active.is_empty() {
            let x_next = vec![0.0; n];
            let e = 0.5 * self.b.iter().map(|v| v * v).sum::<f64>();
            self.record(&x_next, &active, e, started);
            self.state.x_tilde_prev = x_tilde;
            self.state.x = x_next;
            self.state.active = active;
            self.state.k += 1;
            self.state.stopped = Some(StopReason::EmptySupport);
            return Ok(StepStatus::Stopped(StopReason::EmptySupport));
        }

        // Reduced coordinates: concatenation of the active groups.
        let width: usize = active.iter().map(|g| self.part.size(g)).sum();
        let mut z = Vec::with_capacity(width);
        for g in active.iter() {
            for j in self.part.range(g) {
                let cur = x_tilde[j];
                z.push(cur + t * (cur - self.state.x_tilde_prev[j]));
            }
        }
        let bz = matvec_group_cols(self.a, self.part, &active, &z)?;
        let resid: Vec<f64> = bz.iter().zip(self.b).map(|(u, v)| u - v).collect();
        let grad = matvec_transpose_group_cols(self.a, self.part, &active, &resid)?;
        let y: Vec<f64> = z
            .iter()
            .zip(&grad)
            .map(|(zi, gi)| zi - gi / cfg.beta)
            .collect();

        let mut x_next = vec![0.0; n];
        let mut slot = 0usize;
        for g in active.iter() {
            let r = self.part.range(g);
            let d = r.len();
            let y_g = &y[slot..slot + d];
            let tilde_g = &x_tilde[r.clone()];
            let tilde_norm = norm_p(tilde_g, cfg.p);
            let w = cfg.alpha * cfg.penalty.deriv(tilde_norm)? / cfg.beta;
            let x_g = if cfg.p == 1.0 {
                group_prox_p1(y_g, w)
            } else if cfg.p == 2.0 {
                group_prox_p2(y_g, w)
            } else {
                let budget = |cand: &[f64]| {
                    let diff: f64 = cand
                        .iter()
                        .zip(tilde_g)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    0.5 * cfg.beta * eps * diff.sqrt()
                };
                let (x_g, _cert) = prox::group_prox_with_budget(
                    y_g,
                    w,
                    cfg.p,
                    cfg.beta,
                    budget,
                    cfg.inner_tol,
                    cfg.inner_max_iter,
                )?;
                x_g
            };
            x_next[r].copy_from_slice(&x_g);
            slot += d;
        }

        // The new iterate lives on the active columns, so the data term of
        // the objective only needs the shrunk product.
        let x_red: Vec<f64> = active
            .iter()
            .flat_map(|g| x_next[self.part.range(g)].to_vec())
            .collect();
        let ax = matvec_group_cols(self.a, self.part, &active, &x_red)?;
        let fid: f64 = ax
            .iter()
            .zip(self.b)
            .map(|(u, v)| {
                let d = u - v;
                d * d
            })
            .sum();
        let mut reg = 0.0;
        for g in active.iter() {
            reg += cfg
                .penalty
                .value(norm_p(&x_next[self.part.range(g)], cfg.p))?;
        }
        let e = 0.5 * fid + cfg.alpha * reg;

        let tol = cfg.tol;
        let step_norm = self.record(&x_next, &active, e, started);
        let prev_norm = norm2(&self.state.x);
        self.state.x_tilde_prev = x_tilde;
        self.state.x = x_next;
        self.state.active = active;
        self.state.k += 1;

        let status = if prev_norm == 0.0 {
            Some(StopReason::ZeroIterate)
        } else if step_norm / prev_norm < tol {
            Some(StopReason::TolReached)
        } else {
            None
        };
        if let Some(r) = status {
            self.state.stopped = Some(r);
            return Ok(StepStatus::Stopped(r));
        }
        Ok(StepStatus::Continue)
    }

    /// Appends the diagnostics for the transition `x -> x_next`; returns
    /// the step norm.
    fn record(&mut self, x_next: &[f64], active: &GroupSet, e: f64, started: Instant) -> f64 {
        let cfg = &self.config;
        let h = value_function_h(e, x_next, &self.state.x, cfg.beta, cfg.effective_epsilon());
        let step_norm = x_next
            .iter()
            .zip(&self.state.x)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum::<f64>()
            .sqrt();
        self.state.objective_history.push(e);
        self.state.value_fn_history.push(h);
        self.state.support_history.push(active.len());
        self.state.step_norm_history.push(step_norm);
        self.state
            .seconds_history
            .push(started.elapsed().as_secs_f64());
        step_norm
    }

    /// Iterates to termination and packages the report.
    pub fn solve(mut self) -> Result<SolveReport> {
        let started = Instant::now();
        let mut reason = StopReason::MaxIter;
        for _ in 0..self.config.max_iter {
            match self.step()? {
                StepStatus::Continue => {}
                StepStatus::Stopped(r) => {
                    reason = r;
                    break;
                }
            }
        }
        let converged = reason == StopReason::TolReached;
        let s = self.state;
        Ok(SolveReport {
            x_final: s.x,
            iterations: s.k,
            converged,
            stop_reason: reason,
            objective_history: s.objective_history,
            value_fn_history: s.value_fn_history,
            support_history: s.support_history,
            step_norm_history: s.step_norm_history,
            seconds_history: s.seconds_history,
            total_seconds: started.elapsed().as_secs_f64(),
            notes: self.notes,
        })
    }
}

/// One-call convenience wrapper around [`Fits3Solver`].
pub fn fits3_solve(
    a: &DenseMatrix,
    b: &[f64],
    part: &GroupPartition,
    config: Fits3Config,
    x0: &[f64],
) -> Result<SolveReport> {
    Fits3Solver::new(a, b, part, config, x0)?.solve()
}

/// Support set of a report's final iterate.
pub fn final_support(report: &SolveReport, part: &GroupPartition) -> Result<GroupSet> {
    group_support(&report.x_final, part)
}
