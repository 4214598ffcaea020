//! Extrapolation weight sequences for the accelerated iteration.

/// How the per-iteration extrapolation weight `t_k` is produced.
///
/// The accelerated sequence follows the classical momentum recursion
/// `t_k = (a_{k-1} - 1) / a_k`, `a_{k+1} = (1 + sqrt(1 + 4 a_k^2)) / 2`
/// with `a_{-1} = a_0 = 1`, frozen after `freeze_at` so that the supremum
/// of the emitted weights stays strictly below 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtrapolationSchedule {
    /// Momentum recursion frozen after `freeze_at` updates.
    FistaFrozen { freeze_at: usize },
    /// Fixed weight every iteration.
    Constant { t: f64 },
    /// No extrapolation; recovers the plain (unaccelerated) iteration.
    Zero,
}

impl ExtrapolationSchedule {
    /// The frozen momentum schedule with the reference freeze index.
    pub fn default_frozen() -> Self {
        ExtrapolationSchedule::FistaFrozen { freeze_at: 300 }
    }

    pub fn state(&self) -> ScheduleState {
        ScheduleState {
            kind: *self,
            a_prev: 1.0,
            a_curr: 1.0,
            k: 0,
        }
    }
}

/// Running state; `next_t` emits `t_0, t_1, ...` in order.
#[derive(Debug, Clone)]
pub struct ScheduleState {
    kind: ExtrapolationSchedule,
    a_prev: f64,
    a_curr: f64,
    k: usize,
}

impl ScheduleState {
    pub fn next_t(&mut self) -> f64 {
        match self.kind {
            ExtrapolationSchedule::Zero => 0.0,
            ExtrapolationSchedule::Constant { t } => t,
            ExtrapolationSchedule::FistaFrozen { freeze_at } => {
                let t = (self.a_prev - 1.0) / self.a_curr;
                let a_next = if self.k <= freeze_at {
                    0.5 * (1.0 + (1.0 + 4.0 * self.a_curr * self.a_curr).sqrt())
                } else {
                    self.a_curr
                };
                self.a_prev = self.a_curr;
                self.a_curr = a_next;
                self.k += 1;
                t
            }
        }
    }
}
