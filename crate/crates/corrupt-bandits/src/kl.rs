//! Bernoulli KL divergence and the confidence-bound solvers built on it.
//!
//! Everything downstream (indices, regret bounds) reduces to evaluating
//! `d(x, y) = x ln(x/y) + (1-x) ln((1-x)/(1-y))` and inverting it in its
//! second argument by bisection.

use thiserror::Error;

/// Absolute tolerance on the returned bound for the bisection solvers.
const BISECTION_TOL: f64 = 1e-9;

/// Hard cap on bisection iterations; with a unit-length start interval the
/// tolerance is reached after ~30 halvings, so this never binds in practice.
const MAX_BISECTION_ITERS: u32 = 100;

/// Errors for KL-divergence evaluation and bound solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KlError {
    /// An argument left the closed unit interval.
    #[error("{name} must lie in [0, 1], got {value}")]
    OutOfUnitInterval { name: &'static str, value: f64 },
    /// The derivative is only defined strictly inside the unit square.
    #[error("{name} must lie strictly inside (0, 1), got {value}")]
    AtBoundary { name: &'static str, value: f64 },
    /// The exploration schedule is only defined from 1 onwards.
    #[error("exploration schedule argument must be >= 1, got {value}")]
    ScheduleArgBelowOne { value: f64 },
    /// Budgets are nonnegative finite reals.
    #[error("KL budget must be finite and nonnegative, got {value}")]
    InvalidBudget { value: f64 },
    /// Bound solvers need at least one observation.
    #[error("sample count must be at least 1")]
    ZeroCount,
}

/// A nonnegative finite KL exploration budget (the right-hand side `f(t)` in
/// the index definition).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlBudget(f64);

impl KlBudget {
    /// Wraps a budget value, rejecting NaN, infinities and negatives.
    pub fn new(value: f64) -> Result<Self, KlError> {
        if !value.is_finite() || value < 0.0 {
            return Err(KlError::InvalidBudget { value });
        }
        Ok(Self(value))
    }

    /// The raw budget value.
    #[must_use]
    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), KlError> {
    // NaN fails both comparisons and is rejected here too.
    if !(0.0..=1.0).contains(&value) {
        return Err(KlError::OutOfUnitInterval { name, value });
    }
    Ok(())
}

/// KL divergence between Bernoulli(x) and Bernoulli(y), with the usual
/// conventions: terms with a zero numerator vanish, and the divergence is
/// `+inf` when `y` is degenerate (0 or 1) but `x` is not.
///
/// Both arguments must lie in `[0, 1]`.
pub fn bern_kl(x: f64, y: f64) -> Result<f64, KlError> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    Ok(bern_kl_unchecked(x, y))
}

/// `bern_kl` without domain checks; callers guarantee `x, y` are in `[0, 1]`.
fn bern_kl_unchecked(x: f64, y: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    // x != y from here on, so a degenerate y puts positive mass on an
    // impossible outcome.
    if y <= 0.0 || y >= 1.0 {
        return f64::INFINITY;
    }
    let mut div = 0.0;
    if x > 0.0 {
        div += x * (x / y).ln();
    }
    if x < 1.0 {
        div += (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln();
    }
    div
}

/// Partial derivative of `bern_kl` with respect to its first argument:
/// `ln(x/y) - ln((1-x)/(1-y))`.
///
/// Defined for `x` and `y` strictly inside `(0, 1)`; boundary values are
/// rejected because the derivative diverges there.
pub fn bern_kl_deriv(x: f64, y: f64) -> Result<f64, KlError> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    for (name, v) in [("x", x), ("y", y)] {
        if v == 0.0 || v == 1.0 {
            return Err(KlError::AtBoundary { name, value: v });
        }
    }
    Ok((x / y).ln() - ((1.0 - x) / (1.0 - y)).ln())
}

/// The exploration budget schedule `f(x) = ln(x) + 3 ln(ln(x))`.
///
/// The schedule is clamped below 3 (where `ln(ln(x))` turns negative or
/// undefined) to its value at 3, keeping budgets positive for the very first
/// decision steps. Arguments below 1 are a caller error.
pub fn exploration_fn(x: f64) -> Result<f64, KlError> {
    if x.is_nan() || x < 1.0 {
        return Err(KlError::ScheduleArgBelowOne { value: x });
    }
    let x = x.max(3.0);
    let ln_x = x.ln();
    Ok(ln_x + 3.0 * ln_x.ln())
}

/// Largest `q` in `[lambda_hat, 1]` with `n * bern_kl(lambda_hat, q) <= budget`,
/// i.e. the upper KL confidence bound after `n` observations with empirical
/// mean `lambda_hat`.
///
/// Solved by bisection to absolute tolerance 1e-9; the divergence is
/// increasing in `q` above `lambda_hat`, so the feasible set is an interval
/// anchored at `lambda_hat`.
pub fn kl_upper_bound(lambda_hat: f64, n: u64, budget: KlBudget) -> Result<f64, KlError> {
    check_unit("lambda_hat", lambda_hat)?;
    if n == 0 {
        return Err(KlError::ZeroCount);
    }
    let b = budget.value();
    if b == 0.0 {
        return Ok(lambda_hat);
    }
    // d(lambda_hat, 1) is infinite unless lambda_hat == 1, where it is 0.
    if lambda_hat == 1.0 {
        return Ok(1.0);
    }
    let n = n as f64;
    let mut lo = lambda_hat; // always feasible
    let mut hi = 1.0; // always infeasible (d is +inf at 1 here)
    for _ in 0..MAX_BISECTION_ITERS {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if n * bern_kl_unchecked(lambda_hat, mid) <= b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest `q` in `[0, lambda_hat]` with `n * bern_kl(lambda_hat, q) <= budget`,
/// the lower KL confidence bound. Mirror image of [`kl_upper_bound`]:
/// `kl_lower_bound(x, n, b) = 1 - kl_upper_bound(1 - x, n, b)` up to the
/// solver tolerance.
pub fn kl_lower_bound(lambda_hat: f64, n: u64, budget: KlBudget) -> Result<f64, KlError> {
    check_unit("lambda_hat", lambda_hat)?;
    if n == 0 {
        return Err(KlError::ZeroCount);
    }
    let b = budget.value();
    if b == 0.0 {
        return Ok(lambda_hat);
    }
    if lambda_hat == 0.0 {
        return Ok(0.0);
    }
    let n = n as f64;
    let mut lo = 0.0; // always infeasible (d is +inf at 0 here)
    let mut hi = lambda_hat; // always feasible
    for _ in 0..MAX_BISECTION_ITERS {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if n * bern_kl_unchecked(lambda_hat, mid) <= b {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn budget(b: f64) -> KlBudget {
        KlBudget::new(b).unwrap()
    }

    #[test]
    fn kl_matches_frozen_value() {
        // 0.25 ln(0.5) + 0.75 ln(1.5), computed with 40-digit arithmetic
        assert_abs_diff_eq!(
            bern_kl(0.25, 0.5).unwrap(),
            0.13081203594113698,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kl_zero_iff_equal() {
        for x in [0.0, 0.3, 0.5, 1.0] {
            assert_eq!(bern_kl(x, x).unwrap(), 0.0);
        }
        assert!(bern_kl(0.3, 0.31).unwrap() > 0.0);
    }

    #[test]
    fn kl_degenerate_conventions() {
        assert_eq!(bern_kl(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(bern_kl(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(bern_kl(0.5, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(bern_kl(0.5, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(bern_kl(0.0, 1.0).unwrap(), f64::INFINITY);
        // one-sided terms stay finite: d(0, 0.5) = d(1, 0.5) = ln 2
        assert_abs_diff_eq!(bern_kl(0.0, 0.5).unwrap(), 2.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(bern_kl(1.0, 0.5).unwrap(), 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn kl_rejects_out_of_domain() {
        assert!(bern_kl(-0.1, 0.5).is_err());
        assert!(bern_kl(0.5, 1.5).is_err());
        assert!(bern_kl(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn kl_symmetry_identity() {
        // d(1-x, 1-y) == d(x, y), bit-for-bit with the symmetric evaluation order
        for (x, y) in [(0.25, 0.5), (0.1, 0.9), (0.7, 0.2)] {
            let a = bern_kl(x, y).unwrap();
            let b = bern_kl(1.0 - x, 1.0 - y).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn deriv_matches_frozen_value() {
        // ln(0.5) - ln(1.5) = -ln(3)
        assert_abs_diff_eq!(
            bern_kl_deriv(0.25, 0.5).unwrap(),
            -(3.0f64.ln()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn deriv_rejects_boundary() {
        assert!(matches!(
            bern_kl_deriv(0.0, 0.5),
            Err(KlError::AtBoundary { .. })
        ));
        assert!(matches!(
            bern_kl_deriv(0.5, 1.0),
            Err(KlError::AtBoundary { .. })
        ));
    }

    #[test]
    fn deriv_antisymmetry() {
        for (x, y) in [(0.25, 0.5), (0.1, 0.9), (0.7, 0.2)] {
            let a = bern_kl_deriv(x, y).unwrap();
            let b = bern_kl_deriv(1.0 - x, 1.0 - y).unwrap();
            assert_abs_diff_eq!(a, -b, epsilon = 1e-12);
        }
    }

    #[test]
    fn schedule_matches_frozen_values() {
        assert_abs_diff_eq!(
            exploration_fn(100.0).unwrap(),
            9.186709063411795,
            epsilon = 1e-12
        );
        // value at the clamp point: ln(3) + 3 ln(ln(3))
        assert_abs_diff_eq!(
            exploration_fn(3.0).unwrap(),
            1.3807557715130394,
            epsilon = 1e-9
        );
    }

    #[test]
    fn schedule_clamps_below_three() {
        let f3 = exploration_fn(3.0).unwrap();
        assert_eq!(exploration_fn(1.0).unwrap(), f3);
        assert_eq!(exploration_fn(2.0).unwrap(), f3);
        assert_eq!(exploration_fn(2.999).unwrap(), f3);
        assert!(exploration_fn(3.001).unwrap() > f3);
    }

    #[test]
    fn schedule_rejects_below_one() {
        assert!(exploration_fn(0.99).is_err());
        assert!(exploration_fn(-5.0).is_err());
        assert!(exploration_fn(f64::NAN).is_err());
    }

    #[test]
    fn schedule_monotone_from_three() {
        let mut prev = exploration_fn(3.0).unwrap();
        for i in 1..200 {
            let x = 3.0 + i as f64;
            let cur = exploration_fn(x).unwrap();
            assert!(cur > prev, "schedule must increase at {x}");
            prev = cur;
        }
    }

    #[test]
    fn budget_rejects_invalid() {
        assert!(KlBudget::new(-1e-12).is_err());
        assert!(KlBudget::new(f64::INFINITY).is_err());
        assert!(KlBudget::new(f64::NAN).is_err());
        assert_eq!(KlBudget::new(0.0).unwrap().value(), 0.0);
    }

    #[test]
    fn upper_bound_matches_frozen_value() {
        // largest q with 10 * d(0.2, q) <= 3, from a 40-digit reference solve
        let u = kl_upper_bound(0.2, 10, budget(3.0)).unwrap();
        assert_abs_diff_eq!(u, 0.578365119037, epsilon = 2e-9);
    }

    #[test]
    fn lower_bound_matches_frozen_value() {
        let l = kl_lower_bound(0.5, 10, budget(0.5)).unwrap();
        assert_abs_diff_eq!(l, 0.345757834912, epsilon = 2e-9);
    }

    #[test]
    fn upper_bound_closed_form_at_zero_mean() {
        // d(0, q) = -ln(1-q), so the bound solves to 1 - exp(-b/n)
        let u = kl_upper_bound(0.0, 10, budget(2.0)).unwrap();
        assert_abs_diff_eq!(u, 1.0 - (-0.2f64).exp(), epsilon = 2e-9);
    }

    #[test]
    fn lower_bound_closed_form_at_one_mean() {
        // d(1, q) = -ln(q), so the bound solves to exp(-b/n)
        let l = kl_lower_bound(1.0, 10, budget(2.0)).unwrap();
        assert_abs_diff_eq!(l, (-0.2f64).exp(), epsilon = 2e-9);
    }

    #[test]
    fn zero_budget_returns_mean_exactly() {
        assert_eq!(kl_upper_bound(0.7, 5, budget(0.0)).unwrap(), 0.7);
        assert_eq!(kl_lower_bound(0.7, 5, budget(0.0)).unwrap(), 0.7);
    }

    #[test]
    fn degenerate_means_short_circuit() {
        assert_eq!(kl_upper_bound(1.0, 3, budget(1.0)).unwrap(), 1.0);
        assert_eq!(kl_lower_bound(0.0, 3, budget(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn bounds_bracket_the_mean() {
        for lam in [0.0, 0.1, 0.5, 0.9, 1.0] {
            for n in [1u64, 7, 100, 10_000] {
                for b in [0.0, 0.5, 3.0, 20.0] {
                    let u = kl_upper_bound(lam, n, budget(b)).unwrap();
                    let l = kl_lower_bound(lam, n, budget(b)).unwrap();
                    assert!((lam..=1.0).contains(&u), "u={u} lam={lam} n={n} b={b}");
                    assert!((0.0..=lam).contains(&l), "l={l} lam={lam} n={n} b={b}");
                }
            }
        }
    }

    #[test]
    fn upper_bound_monotone_in_budget_and_count() {
        let lam = 0.3;
        let mut prev = kl_upper_bound(lam, 10, budget(0.0)).unwrap();
        for b in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let cur = kl_upper_bound(lam, 10, budget(b)).unwrap();
            assert!(cur >= prev - 1e-9, "bound must grow with budget");
            prev = cur;
        }
        let mut prev = kl_upper_bound(lam, 1, budget(2.0)).unwrap();
        for n in [2u64, 5, 10, 100, 1000] {
            let cur = kl_upper_bound(lam, n, budget(2.0)).unwrap();
            assert!(cur <= prev + 1e-9, "bound must shrink with samples");
            prev = cur;
        }
    }

    #[test]
    fn reflection_identity_holds() {
        for lam in [0.0, 0.2, 0.5, 0.8, 1.0] {
            for (n, b) in [(1u64, 0.7), (10, 3.0), (500, 0.05)] {
                let l = kl_lower_bound(lam, n, budget(b)).unwrap();
                let u = kl_upper_bound(1.0 - lam, n, budget(b)).unwrap();
                assert_abs_diff_eq!(l, 1.0 - u, epsilon = 3e-9);
            }
        }
    }

    #[test]
    fn solvers_reject_zero_count() {
        assert!(matches!(
            kl_upper_bound(0.5, 0, budget(1.0)),
            Err(KlError::ZeroCount)
        ));
        assert!(matches!(
            kl_lower_bound(0.5, 0, budget(1.0)),
            Err(KlError::ZeroCount)
        ));
    }
}
