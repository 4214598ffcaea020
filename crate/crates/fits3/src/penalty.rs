//! Concave, non-Lipschitz penalty functions on group norms.
//!
//! Two kinds are built in: `t^q` and `log(t^q + 1)` with exponent
//! `0 < q < 1`. Both are strictly increasing and coercive, have an
//! unbounded derivative at zero, and have a negative second derivative
//! that increases towards zero. The closed enumeration keeps the inverse
//! of the second derivative computable, which the group-norm lower bound
//! relies on.

use crate::error::{Error, Result};

/// Penalty applied to each group norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// `t^q` with `0 < q < 1`.
    PowerQ { q: f64 },
    /// `log(t^q + 1)` with `0 < q < 1`.
    LogPowerQ { q: f64 },
}

impl Penalty {
    pub fn power(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(Penalty::PowerQ { q })
    }

    pub fn log_power(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(Penalty::LogPowerQ { q })
    }

    /// Parses the CLI spelling: `tq` or `logtq`.
    pub fn parse(kind: &str, q: f64) -> Result<Self> {
        match kind {
            "tq" => Self::power(q),
            "logtq" => Self::log_power(q),
            other => Err(Error::InvalidArgument(format!(
                "unknown penalty '{other}' (expected 'tq' or 'logtq')"
            ))),
        }
    }

    pub fn q(&self) -> f64 {
        match *self {
            Penalty::PowerQ { q } | Penalty::LogPowerQ { q } => q,
        }
    }

    /// Same kind, different exponent.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        match self {
            Penalty::PowerQ { .. } => Self::power(q),
            Penalty::LogPowerQ { .. } => Self::log_power(q),
        }
    }

    /// Penalty value at `t >= 0`; exactly 0 at the origin.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "penalty argument must be >= 0, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            Penalty::PowerQ { q } => t.powf(q),
            Penalty::LogPowerQ { q } => t.powf(q).ln_1p(),
        })
    }

    /// First derivative at `t > 0`; blows up as `t` approaches 0.
    pub fn deriv(&self, t: f64) -> Result<f64> {
        check_positive_t(t)?;
        Ok(match *self {
            Penalty::PowerQ { q } => q * t.powf(q - 1.0),
            Penalty::LogPowerQ { q } => q * t.powf(q - 1.0) / (t.powf(q) + 1.0),
        })
    }

    /// Second derivative at `t > 0`; negative everywhere.
    pub fn second_deriv(&self, t: f64) -> Result<f64> {
        check_positive_t(t)?;
        Ok(match *self {
            Penalty::PowerQ { q } => q * (q - 1.0) * t.powf(q - 2.0),
            Penalty::LogPowerQ { q } => {
                // d/dt [ q t^{q-1} / (t^q + 1) ]
                //   = q t^{q-2} (q - 1 - t^q) / (t^q + 1)^2
                let tq = t.powf(q);
                let denom = (tq + 1.0) * (tq + 1.0);
                q * t.powf(q - 2.0) * (q - 1.0 - tq) / denom
            }
        })
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "penalty exponent q must lie in (0, 1), got {q}"
        )));
    }
    Ok(())
}

fn check_positive_t(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "penalty derivative needs t > 0, got {t}"
        )));
    }
    Ok(())
}

/// Uniform lower bound on the p-norm of any nonzero group of a local
/// minimizer: the solution `kappa > 0` of `psi''(kappa) = target` with
/// `target = -spec_norm_sq / alpha` for `1 <= p <= 2`, and
/// `target = -spec_norm_sq / (alpha * group_size^{1 - 2/p})` for `p > 2`.
pub fn lower_bound_kappa(
    pen: &Penalty,
    spec_norm_sq: f64,
    alpha: f64,
    p: f64,
    group_size: usize,
) -> Result<f64> {
    if !(spec_norm_sq > 0.0) || !(alpha > 0.0) {
        return Err(Error::InvalidArgument(
            "lower bound needs positive spectral norm and alpha".into(),
        ));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    if group_size == 0 {
        return Err(Error::InvalidArgument("group_size must be >= 1".into()));
    }
    let target = if p <= 2.0 {
        -spec_norm_sq / alpha
    } else {
        -spec_norm_sq / (alpha * (group_size as f64).powf(1.0 - 2.0 / p))
    };
    invert_second_deriv(pen, target)
}

/// Solves `psi''(t) = target` for `target < 0`. Closed form for the power
/// penalty; bracketed bisection otherwise (well-posed because the second
/// derivative is continuous, negative and increasing).
pub fn invert_second_deriv(pen: &Penalty, target: f64) -> Result<f64> {
    if !(target < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "second derivative is negative on (0, inf); target must be < 0, got {target}"
        )));
    }
    if let Penalty::PowerQ { q } = *pen {
        return Ok((target / (q * (q - 1.0))).powf(1.0 / (q - 2.0)));
    }

    let f = |t: f64| pen.second_deriv(t).expect("t > 0 by construction") - target;
    let (mut lo, mut hi) = (1e-12, 1e12);
    // Expand geometrically until the root is bracketed: f(lo) < 0 < f(hi).
    let mut expand = 0;
    while f(lo) >= 0.0 && expand < 60 {
        lo /= 1e3;
        expand += 1;
    }
    while f(hi) <= 0.0 && expand < 120 {
        hi *= 1e3;
        expand += 1;
    }
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(Error::Numeric(format!(
            "no bracket for psi''(t) = {target}"
        )));
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-10 * hi.abs().max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn both(q: f64) -> [Penalty; 2] {
        [Penalty::power(q).unwrap(), Penalty::log_power(q).unwrap()]
    }

    #[test]
    fn rejects_q_outside_unit_interval() {
        assert!(Penalty::power(0.0).is_err());
        assert!(Penalty::power(1.0).is_err());
        assert!(Penalty::log_power(-0.1).is_err());
        assert!(Penalty::parse("tq", 2.0).is_err());
        assert!(Penalty::parse("scad", 0.5).is_err());
    }

    #[test]
    fn value_at_known_points() {
        let pow = Penalty::power(0.5).unwrap();
        assert!((pow.value(4.0).unwrap() - 2.0).abs() < 1e-15);
        for pen in both(0.5) {
            assert_eq!(pen.value(0.0).unwrap(), 0.0);
        }
        let log = Penalty::log_power(0.5).unwrap();
        assert!((log.value(4.0).unwrap() - 3.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_value_against_exp_bisection_oracle() {
        // Independent route: invert exp(x) = 3 by bisection instead of ln.
        let (mut lo, mut hi) = (0.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.exp() < 3.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let log = Penalty::log_power(0.5).unwrap();
        assert!((log.value(4.0).unwrap() - oracle).abs() <= 1e-12);
    }

    #[test]
    fn deriv_at_known_points() {
        let pow = Penalty::power(0.5).unwrap();
        assert!((pow.deriv(4.0).unwrap() - 0.25).abs() < 1e-15);
        for q in [0.3, 0.5, 0.9] {
            let pen = Penalty::power(q).unwrap();
            assert!((pen.deriv(1.0).unwrap() - q).abs() < 1e-15);
        }
    }

    #[test]
    fn deriv_matches_finite_difference() {
        let h = 1e-6;
        for q in [0.3, 0.5, 0.8] {
            for pen in both(q) {
                for t in [0.3, 1.7, 9.0] {
                    let fd = (pen.value(t + h).unwrap() - pen.value(t - h).unwrap()) / (2.0 * h);
                    let an = pen.deriv(t).unwrap();
                    assert!(
                        ((fd - an) / an).abs() <= 1e-5,
                        "{pen:?} t={t}: fd {fd} vs analytic {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn second_deriv_at_known_points() {
        let pow = Penalty::power(0.5).unwrap();
        assert!((pow.second_deriv(1.0).unwrap() + 0.25).abs() < 1e-15);
        assert!((pow.second_deriv(4.0).unwrap() + 0.03125).abs() < 1e-15);
    }

    #[test]
    fn second_deriv_matches_finite_difference() {
        let h = 1e-6;
        for q in [0.3, 0.5, 0.8] {
            for pen in both(q) {
                for t in [0.5, 2.0, 8.0] {
                    let fd = (pen.deriv(t + h).unwrap() - pen.deriv(t - h).unwrap()) / (2.0 * h);
                    let an = pen.second_deriv(t).unwrap();
                    assert!(
                        ((fd - an) / an).abs() <= 1e-4,
                        "{pen:?} t={t}: fd {fd} vs analytic {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        let pen = Penalty::power(0.5).unwrap();
        assert!(pen.value(-1.0).is_err());
        assert!(pen.deriv(0.0).is_err());
        assert!(pen.second_deriv(-2.0).is_err());
    }

    #[test]
    fn deriv_is_nonincreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for pen in both(0.5) {
            for _ in 0..300 {
                let s = rng.random_range(1e-6..10.0);
                let t = rng.random_range(s..20.0);
                assert!(pen.deriv(t).unwrap() <= pen.deriv(s).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn value_grows_without_bound() {
        for pen in both(0.4) {
            let seq: Vec<f64> = [1e2, 1e4, 1e6]
                .iter()
                .map(|&t| pen.value(t).unwrap())
                .collect();
            assert!(seq[0] < seq[1] && seq[1] < seq[2]);
        }
    }

    #[test]
    fn second_deriv_is_increasing_and_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for q in [0.2, 0.5, 0.8] {
            for pen in both(q) {
                for _ in 0..300 {
                    let s = rng.random_range(1e-5..10.0);
                    let t = rng.random_range(s..30.0);
                    let ds = pen.second_deriv(s).unwrap();
                    let dt = pen.second_deriv(t).unwrap();
                    assert!(ds < 0.0 && dt < 0.0);
                    assert!(
                        ds <= dt + 1e-12,
                        "{pen:?}: psi''({s})={ds} > psi''({t})={dt}"
                    );
                }
            }
        }
    }

    #[test]
    fn deriv_lipschitz_away_from_zero() {
        // On [c, inf) the derivative is Lipschitz with constant |psi''(c)|.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let c = 0.2;
        for pen in both(0.5) {
            let lc = pen.second_deriv(c).unwrap().abs();
            for _ in 0..300 {
                let s = rng.random_range(c..10.0);
                let t = rng.random_range(c..10.0);
                let lhs = (pen.deriv(t).unwrap() - pen.deriv(s).unwrap()).abs();
                assert!(lhs <= lc * (t - s).abs() + 1e-12);
            }
        }
    }

    #[test]
    fn kappa_matches_bisection_oracle() {
        let pen = Penalty::power(0.5).unwrap();
        let kappa = lower_bound_kappa(&pen, 1.0, 1.0, 2.0, 16).unwrap();
        // Oracle: direct bisection on psi''(t) = -1.
        let (mut lo, mut hi) = (1e-8, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pen.second_deriv(mid).unwrap() < -1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((kappa - oracle).abs() <= 1e-8);
        assert!((kappa - 4.0f64.powf(-2.0 / 3.0)).abs() <= 1e-12);
    }

    #[test]
    fn kappa_scales_with_alpha() {
        let pen = Penalty::power(0.5).unwrap();
        let k1 = lower_bound_kappa(&pen, 1.0, 1.0, 2.0, 16).unwrap();
        let k2 = lower_bound_kappa(&pen, 1.0, 2.0, 2.0, 16).unwrap();
        assert!((k2 / k1 - 2.0f64.powf(2.0 / 3.0)).abs() <= 1e-12);
    }

    #[test]
    fn kappa_ignores_group_size_for_small_p() {
        let pen = Penalty::power(0.5).unwrap();
        let a = lower_bound_kappa(&pen, 1.0, 1.0, 2.0, 16).unwrap();
        let b = lower_bound_kappa(&pen, 1.0, 1.0, 1.5, 4).unwrap();
        assert_eq!(a, b);
        // p > 2 does depend on the group size.
        let c = lower_bound_kappa(&pen, 1.0, 1.0, 3.0, 16).unwrap();
        assert!(c != a);
    }

    #[test]
    fn kappa_residual_for_both_kinds() {
        for pen in both(0.5) {
            for &(s, alpha) in &[(1.0, 1.0), (2.5, 0.3), (0.7, 4.0)] {
                let kappa = lower_bound_kappa(&pen, s, alpha, 2.0, 8).unwrap();
                let target = -s / alpha;
                let res = pen.second_deriv(kappa).unwrap() - target;
                assert!(res.abs() <= 1e-8 * target.abs(), "{pen:?}: residual {res}");
            }
        }
    }

    #[test]
    fn kappa_rejects_nonnegative_target() {
        let pen = Penalty::power(0.5).unwrap();
        assert!(invert_second_deriv(&pen, 0.0).is_err());
        assert!(invert_second_deriv(&pen, 1.0).is_err());
        assert!(lower_bound_kappa(&pen, 0.0, 1.0, 2.0, 4).is_err());
    }
}
