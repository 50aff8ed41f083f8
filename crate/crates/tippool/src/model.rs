//! Analytic tip-pool model for DAGs with several coexisting message delay
//! classes.
//!
//! Messages of class `i` become visible (enter the tip pool) a fixed delay
//! `d_i` after issuance, reference `k_i` parents, and make up a fraction
//! `p_i` of the total Poisson arrival stream of rate `lambda`. From the
//! point of view of a single tip, incoming references of class `i` form a
//! Poisson process of rate `mu_i = p_i * lambda * k_i / L`, so the time
//! until the tip is removed is
//!
//! ```text
//! T = min_i (d_i + S_i),   S_i ~ Exp(mu_i)
//! ```
//!
//! With `a_i = sum_{j<=i} mu_j` and `b_i = sum_{j<=i} mu_j d_j` the mean is
//!
//! ```text
//! E(T) = d_1 + 1/a_1 - sum_{i=2..n} exp(-d_i a_{i-1} + b_{i-1}) (1/a_{i-1} - 1/a_i)
//! ```
//!
//! and the steady-state pool size is the root of `lambda * E(T; L) = L`
//! (Little's law), solved here by bracketed bisection.

use thiserror::Error;

/// Errors from model construction and evaluation.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pool size must be positive and finite, got {0}")]
    NonPositivePoolSize(f64),
    #[error("model has no class with positive fraction")]
    NoActiveClass,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no sign change while bracketing the fixed point (last bracket [{lo}, {hi}], residuals [{f_lo}, {f_hi}])")]
    BracketFailed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error(
        "bisection did not reach tolerance {tol} (best residual {residual} at L = {pool_size})"
    )]
    NoConvergence {
        pool_size: f64,
        residual: f64,
        tol: f64,
    },
}

/// One message class: its visibility delay, parent count and share of traffic.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DelayClass {
    delay: f64,
    parent_count: u32,
    fraction: f64,
}

impl DelayClass {
    pub fn new(delay: f64, parent_count: u32, fraction: f64) -> Result<Self, ModelError> {
        if !delay.is_finite() || delay < 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "class delay must be finite and >= 0, got {delay}"
            )));
        }
        if parent_count < 2 {
            return Err(ModelError::InvalidParameter(format!(
                "parent_count must be >= 2, got {parent_count}"
            )));
        }
        if !fraction.is_finite() || !(0.0..=1.0).contains(&fraction) {
            return Err(ModelError::InvalidParameter(format!(
                "class fraction must be in [0, 1], got {fraction}"
            )));
        }
        Ok(Self {
            delay,
            parent_count,
            fraction,
        })
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn parent_count(&self) -> u32 {
        self.parent_count
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }
}

/// Total arrival rate plus the ordered list of delay classes.
///
/// Construction validates the model invariants: positive rate, fractions
/// summing to one, and delays sorted in non-decreasing order (ties allowed).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModelParams {
    rate: f64,
    classes: Vec<DelayClass>,
}

const FRACTION_SUM_TOL: f64 = 1e-12;

impl ModelParams {
    pub fn new(rate: f64, classes: Vec<DelayClass>) -> Result<Self, ModelError> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "rate must be finite and > 0, got {rate}"
            )));
        }
        if classes.is_empty() {
            return Err(ModelError::InvalidParameter(
                "classes must be non-empty".into(),
            ));
        }
        let sum: f64 = classes.iter().map(|c| c.fraction).sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(ModelError::InvalidParameter(format!(
                "class fractions must sum to 1, got {sum}"
            )));
        }
        for pair in classes.windows(2) {
            if pair[1].delay < pair[0].delay {
                return Err(ModelError::InvalidParameter(format!(
                    "class delays must be non-decreasing, got {} after {}",
                    pair[1].delay, pair[0].delay
                )));
            }
        }
        Ok(Self { rate, classes })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn classes(&self) -> &[DelayClass] {
        &self.classes
    }

    /// Classes that actually contribute references (fraction > 0), with their
    /// per-tip reference rates `mu_i = p_i * lambda * k_i / L`.
    fn active_rates(&self, pool_size: f64) -> Vec<(f64, f64)> {
        self.classes
            .iter()
            .filter(|c| c.fraction > 0.0)
            .map(|c| {
                (
                    c.delay,
                    c.fraction * self.rate * c.parent_count as f64 / pool_size,
                )
            })
            .collect()
    }
}

/// The two-class parameterization: a short-delay class (delay `h`) and a
/// long-delay class (delay `h + d_Q`) sharing one parent count `k`, with the
/// long class making up fraction `p` of the traffic.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TwoClassParams {
    rate: f64,
    base_delay: f64,
    quarantine: f64,
    parent_count: u32,
    value_fraction: f64,
}

impl TwoClassParams {
    pub fn new(
        rate: f64,
        base_delay: f64,
        quarantine: f64,
        parent_count: u32,
        value_fraction: f64,
    ) -> Result<Self, ModelError> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "rate must be finite and > 0, got {rate}"
            )));
        }
        if !base_delay.is_finite() || base_delay <= 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "base_delay must be finite and > 0, got {base_delay}"
            )));
        }
        if !quarantine.is_finite() || quarantine < 0.0 {
            return Err(ModelError::InvalidParameter(format!(
                "quarantine must be finite and >= 0, got {quarantine}"
            )));
        }
        if parent_count < 2 {
            return Err(ModelError::InvalidParameter(format!(
                "parent_count must be >= 2, got {parent_count}"
            )));
        }
        if !value_fraction.is_finite() || !(0.0..=1.0).contains(&value_fraction) {
            return Err(ModelError::InvalidParameter(format!(
                "value_fraction must be in [0, 1], got {value_fraction}"
            )));
        }
        if !(base_delay + quarantine).is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "base_delay + quarantine overflows: {base_delay} + {quarantine}"
            )));
        }
        Ok(Self {
            rate,
            base_delay,
            quarantine,
            parent_count,
            value_fraction,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn base_delay(&self) -> f64 {
        self.base_delay
    }

    pub fn quarantine(&self) -> f64 {
        self.quarantine
    }

    pub fn parent_count(&self) -> u32 {
        self.parent_count
    }

    pub fn value_fraction(&self) -> f64 {
        self.value_fraction
    }

    pub fn with_value_fraction(&self, value_fraction: f64) -> Result<Self, ModelError> {
        Self::new(
            self.rate,
            self.base_delay,
            self.quarantine,
            self.parent_count,
            value_fraction,
        )
    }

    /// The equivalent general model: classes `(h, k, 1-p)` and `(h+d_Q, k, p)`.
    pub fn to_model_params(&self) -> ModelParams {
        let p = self.value_fraction;
        let classes = vec![
            DelayClass::new(self.base_delay, self.parent_count, 1.0 - p).expect("valid class"),
            DelayClass::new(self.base_delay + self.quarantine, self.parent_count, p)
                .expect("valid class"),
        ];
        ModelParams::new(self.rate, classes).expect("valid params")
    }
}

fn check_pool_size(pool_size: f64) -> Result<(), ModelError> {
    if !pool_size.is_finite() || pool_size <= 0.0 {
        return Err(ModelError::NonPositivePoolSize(pool_size));
    }
    Ok(())
}

/// Distribution function of the tip removal time `T = min_i (d_i + S_i)`
/// when the pool holds `pool_size` tips:
/// `F_T(x) = 1 - prod_i [1 - F_{d_i + S_i}(x)]`.
pub fn removal_time_cdf(params: &ModelParams, pool_size: f64, x: f64) -> Result<f64, ModelError> {
    check_pool_size(pool_size)?;
    if !x.is_finite() {
        return Err(ModelError::Domain(format!("x must be finite, got {x}")));
    }
    let mut survival = 1.0;
    for class in params.classes() {
        if x > class.delay {
            let mu = class.fraction * params.rate * class.parent_count as f64 / pool_size;
            survival *= (-mu * (x - class.delay)).exp();
        }
    }
    Ok(1.0 - survival)
}

/// Mean tip removal time `E(T)` at the given pool size, in closed form.
pub fn expected_removal_time(params: &ModelParams, pool_size: f64) -> Result<f64, ModelError> {
    check_pool_size(pool_size)?;
    let active = params.active_rates(pool_size);
    let Some(&(d1, mu1)) = active.first() else {
        return Err(ModelError::NoActiveClass);
    };
    if mu1 <= 0.0 {
        return Err(ModelError::Domain(
            "first active class has zero reference rate".into(),
        ));
    }
    let mut expected = d1 + 1.0 / mu1;
    // Running prefix sums over the active classes.
    let mut a_prev = mu1;
    let mut b_prev = mu1 * d1;
    for &(d_i, mu_i) in &active[1..] {
        let a_i = a_prev + mu_i;
        expected -= (-d_i * a_prev + b_prev).exp() * (1.0 / a_prev - 1.0 / a_i);
        b_prev += mu_i * d_i;
        a_prev = a_i;
    }
    Ok(expected)
}

/// Little's-law residual `lambda * E(T; L) - L`; the model's pool size is a
/// root of this function.
pub fn pool_size_residual(pool_size: f64, params: &ModelParams) -> Result<f64, ModelError> {
    let expected = expected_removal_time(params, pool_size)?;
    Ok(params.rate() * expected - pool_size)
}

const MAX_BRACKET_EXPANSIONS: u32 = 60;
const MAX_BISECTION_STEPS: u32 = 200;

/// Relative residual tolerance for the fixed-point solvers, scaled by
/// `lambda * d_max`.
pub const SOLVER_TOL: f64 = 1e-9;

fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, f: F) -> Result<f64, ModelError>
where
    F: Fn(f64) -> Result<f64, ModelError>,
{
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let mut f_hi = f(hi)?;
    let mut expansions = 0;
    while f_lo.signum() == f_hi.signum() {
        if expansions >= MAX_BRACKET_EXPANSIONS {
            return Err(ModelError::BracketFailed { lo, hi, f_lo, f_hi });
        }
        hi *= 2.0;
        f_hi = f(hi)?;
        expansions += 1;
    }
    // Run the interval down to float exhaustion; the residual tolerance is
    // only the post-hoc acceptance bound, not the stopping rule.
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTION_STEPS {
        mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let residual = f(mid)?;
    if residual.abs() <= tol {
        Ok(mid)
    } else {
        Err(ModelError::NoConvergence {
            pool_size: mid,
            residual,
            tol,
        })
    }
}

/// Steady-state tip pool size: the root of `pool_size_residual`.
///
/// The initial bracket is `[0.5 * lambda d_1 k_min / (k_min - 1),
/// 4 * lambda d_n k_max / (k_max - 1)]`; the upper end doubles until the
/// residual changes sign.
pub fn solve_pool_size(params: &ModelParams) -> Result<f64, ModelError> {
    let active: Vec<&DelayClass> = params
        .classes()
        .iter()
        .filter(|c| c.fraction() > 0.0)
        .collect();
    if active.is_empty() {
        return Err(ModelError::NoActiveClass);
    }
    let d_first = active.first().unwrap().delay();
    let d_last = active.last().unwrap().delay();
    if d_last <= 0.0 {
        return Err(ModelError::Domain(
            "every active class has zero delay; the pool size degenerates to 0".into(),
        ));
    }
    let k_min = active.iter().map(|c| c.parent_count()).min().unwrap() as f64;
    let k_max = active.iter().map(|c| c.parent_count()).max().unwrap() as f64;
    let rate = params.rate();
    let lo_guess = 0.5 * rate * d_first * k_min / (k_min - 1.0);
    // d_1 = 0 would put the lower end outside the residual's domain.
    let lo = if lo_guess > 0.0 {
        lo_guess
    } else {
        1e-9 * rate * d_last
    };
    let hi = 4.0 * rate * d_last * k_max / (k_max - 1.0);
    let tol = SOLVER_TOL * rate * d_last;
    let root = bisect(lo, hi, tol, |pool| pool_size_residual(pool, params))?;
    // Don't trust the loop's exit condition; re-check the contract.
    let residual = pool_size_residual(root, params)?;
    if residual.abs() > tol {
        return Err(ModelError::NoConvergence {
            pool_size: root,
            residual,
            tol,
        });
    }
    Ok(root)
}

/// Steady-state pool size of the two-class model, from its specialized
/// implicit equation
/// `L = h lambda + L / (k (1-p)) * [1 - p exp(-(1-p) lambda k d_Q / L)]`.
///
/// At `p = 1` the equation degenerates (division by `1 - p`); that case is
/// the single class with delay `h + d_Q` and is delegated to
/// [`solve_pool_size`].
pub fn solve_pool_size_two_class(params: &TwoClassParams) -> Result<f64, ModelError> {
    let lambda = params.rate();
    let h = params.base_delay();
    let d_q = params.quarantine();
    let k = params.parent_count() as f64;
    let p = params.value_fraction();
    if p >= 1.0 {
        let single = ModelParams::new(
            lambda,
            vec![DelayClass::new(h + d_q, params.parent_count(), 1.0)?],
        )?;
        return solve_pool_size(&single);
    }
    let residual = move |pool: f64| -> Result<f64, ModelError> {
        check_pool_size(pool)?;
        let damped = p * (-(1.0 - p) * lambda * k * d_q / pool).exp();
        Ok(h * lambda + pool / (k * (1.0 - p)) * (1.0 - damped) - pool)
    };
    let lo = 0.5 * lambda * h * k / (k - 1.0);
    let hi = 4.0 * lambda * (h + d_q) * k / (k - 1.0);
    let tol = SOLVER_TOL * lambda * (h + d_q);
    bisect(lo, hi, tol, residual)
}

/// Linear approximation of the pool size near `p = 0` (the data-dominated
/// regime):
/// `lambda h k/(k-1) + p lambda h k/(k-1)^2 [1 - exp(-d_Q (k-1)/h)]`.
pub fn l_minus(params: &TwoClassParams) -> f64 {
    let lambda = params.rate();
    let h = params.base_delay();
    let k = params.parent_count() as f64;
    let slope = lambda * h * k / ((k - 1.0) * (k - 1.0))
        * (1.0 - (-params.quarantine() * (k - 1.0) / h).exp());
    l_minus_constant(params) + params.value_fraction() * slope
}

/// The constant term of [`l_minus`]: `L^- = k lambda h / (k - 1)`, the
/// single-class pool size. The critical fraction [`p_star`] is defined by
/// the intersection of this constant with [`l_plus`].
pub fn l_minus_constant(params: &TwoClassParams) -> f64 {
    let k = params.parent_count() as f64;
    k * params.rate() * params.base_delay() / (k - 1.0)
}

/// Linear approximation of the pool size at large `p` (the regime dominated
/// by the long-delay class):
/// `k lambda (h + p d_Q)/(k-1) - k lambda d_Q^2 (1-p) / (2 (d_Q + h))`.
pub fn l_plus(params: &TwoClassParams) -> f64 {
    let lambda = params.rate();
    let h = params.base_delay();
    let d_q = params.quarantine();
    let k = params.parent_count() as f64;
    let p = params.value_fraction();
    k * lambda / (k - 1.0) * (h + p * d_q) - k * lambda * d_q * d_q * (1.0 - p) / (2.0 * (d_q + h))
}

/// Critical fraction of long-delay messages, `d_Q (k-1) / (2h + (k+1) d_Q)`:
/// below it the short-delay class dominates the pool size, above it the
/// long-delay class does.
///
/// Callers must pass `h > 0`, `d_q >= 0` and `k >= 2`.
pub fn p_star(base_delay: f64, quarantine: f64, parent_count: u32) -> f64 {
    debug_assert!(base_delay > 0.0 && quarantine >= 0.0 && parent_count >= 2);
    let k = parent_count as f64;
    quarantine * (k - 1.0) / (2.0 * base_delay + (k + 1.0) * quarantine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn single_class(rate: f64, delay: f64, k: u32) -> ModelParams {
        ModelParams::new(rate, vec![DelayClass::new(delay, k, 1.0).unwrap()]).unwrap()
    }

    fn canonical(p: f64) -> TwoClassParams {
        TwoClassParams::new(200.0, 0.1, 4.0, 2, p).unwrap()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(DelayClass::new(-0.1, 2, 1.0).is_err());
        assert!(DelayClass::new(0.1, 1, 1.0).is_err());
        assert!(DelayClass::new(0.1, 2, 1.5).is_err());
        assert!(ModelParams::new(0.0, vec![DelayClass::new(0.1, 2, 1.0).unwrap()]).is_err());
        assert!(ModelParams::new(200.0, vec![]).is_err());
        // Fractions must sum to 1.
        assert!(ModelParams::new(
            200.0,
            vec![
                DelayClass::new(0.1, 2, 0.5).unwrap(),
                DelayClass::new(4.1, 2, 0.4).unwrap()
            ],
        )
        .is_err());
        // Delays must be non-decreasing.
        assert!(ModelParams::new(
            200.0,
            vec![
                DelayClass::new(4.1, 2, 0.5).unwrap(),
                DelayClass::new(0.1, 2, 0.5).unwrap()
            ],
        )
        .is_err());
        assert!(TwoClassParams::new(200.0, 0.0, 4.0, 2, 0.5).is_err());
        assert!(TwoClassParams::new(200.0, 0.1, -1.0, 2, 0.5).is_err());
        // Individually finite delays whose sum overflows.
        assert!(TwoClassParams::new(200.0, 1e308, 1e308, 2, 0.5).is_err());
    }

    #[test]
    fn cdf_is_zero_below_first_delay() {
        let params = single_class(200.0, 0.1, 2);
        assert_eq!(removal_time_cdf(&params, 40.0, 0.05).unwrap(), 0.0);
        assert_eq!(removal_time_cdf(&params, 40.0, 0.1).unwrap(), 0.0);
        assert_eq!(removal_time_cdf(&params, 40.0, -3.0).unwrap(), 0.0);
    }

    #[test]
    fn cdf_one_mean_past_the_offset() {
        let params = single_class(200.0, 0.1, 2);
        let pool = 40.0;
        let mu = 200.0 * 2.0 / pool;
        let got = removal_time_cdf(&params, pool, 0.1 + 1.0 / mu).unwrap();
        assert_relative_eq!(got, 1.0 - (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn cdf_two_class_below_second_delay() {
        let params = canonical(0.5).to_model_params();
        let pool = 363.0;
        let mu1 = 0.5 * 200.0 * 2.0 / pool;
        let got = removal_time_cdf(&params, pool, 2.0).unwrap();
        assert_relative_eq!(got, 1.0 - (-mu1 * 1.9).exp(), max_relative = 1e-12);
    }

    #[test]
    fn cdf_rejects_bad_pool_size() {
        let params = single_class(200.0, 0.1, 2);
        assert!(removal_time_cdf(&params, 0.0, 1.0).is_err());
        assert!(removal_time_cdf(&params, -5.0, 1.0).is_err());
        assert!(removal_time_cdf(&params, 40.0, f64::INFINITY).is_err());
    }

    #[test]
    fn expected_removal_time_pure_exponential() {
        // Zero delay reduces to the plain exponential waiting time 1/mu.
        let params = single_class(100.0, 0.0, 3);
        let pool = 25.0;
        let mu = 100.0 * 3.0 / pool;
        assert_relative_eq!(
            expected_removal_time(&params, pool).unwrap(),
            1.0 / mu,
            max_relative = 1e-12
        );
    }

    #[test]
    fn expected_removal_time_single_class_fixed_point() {
        let params = single_class(200.0, 0.1, 2);
        assert_relative_eq!(
            expected_removal_time(&params, 40.0).unwrap(),
            0.2,
            max_relative = 1e-12
        );
    }

    #[test]
    fn expected_removal_time_needs_an_active_class() {
        let params = ModelParams::new(
            200.0,
            vec![
                DelayClass::new(0.1, 2, 0.0).unwrap(),
                DelayClass::new(4.1, 2, 1.0).unwrap(),
            ],
        )
        .unwrap();
        // The zero-fraction class is dropped, not treated as a_1 = 0.
        let expected = expected_removal_time(&params, 100.0).unwrap();
        assert!(expected >= 4.1);
    }

    #[test]
    fn residual_signs_around_the_fixed_point() {
        let params = single_class(200.0, 0.1, 2);
        assert_abs_diff_eq!(
            pool_size_residual(40.0, &params).unwrap(),
            0.0,
            epsilon = 1e-10
        );
        assert!(pool_size_residual(20.0, &params).unwrap() > 0.0);
        assert!(pool_size_residual(1e6, &params).unwrap() < 0.0);
    }

    #[test]
    fn solves_single_class_closed_form() {
        for k in 2..=8u32 {
            let params = single_class(200.0, 0.1, k);
            let expected = k as f64 * 200.0 * 0.1 / (k as f64 - 1.0);
            assert_relative_eq!(
                solve_pool_size(&params).unwrap(),
                expected,
                max_relative = 1e-9
            );
        }
        let slow = single_class(200.0, 4.1, 2);
        assert_relative_eq!(solve_pool_size(&slow).unwrap(), 1640.0, max_relative = 1e-9);
    }

    #[test]
    fn solves_two_class_canonical_point() {
        // Independent route: at (lambda=200, h=0.1, d_Q=4, k=2, p=0.5) the
        // implicit equation reduces to L exp(-800/L) = 40.
        let mut lo = 100.0f64;
        let mut hi = 5000.0f64;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (-800.0f64 / mid).exp() < 40.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let general = solve_pool_size(&canonical(0.5).to_model_params()).unwrap();
        let special = solve_pool_size_two_class(&canonical(0.5)).unwrap();
        assert_relative_eq!(general, oracle, max_relative = 1e-7);
        assert_relative_eq!(special, oracle, max_relative = 1e-7);
    }

    #[test]
    fn two_class_endpoints() {
        assert_relative_eq!(
            solve_pool_size_two_class(&canonical(0.0)).unwrap(),
            40.0,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            solve_pool_size_two_class(&canonical(1.0)).unwrap(),
            1640.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn special_and_general_solvers_agree() {
        for i in 0..10 {
            let p = i as f64 / 10.0;
            let params = canonical(p);
            let special = solve_pool_size_two_class(&params).unwrap();
            let general = solve_pool_size(&params.to_model_params()).unwrap();
            assert_relative_eq!(special, general, max_relative = 1e-6);
        }
    }

    #[test]
    fn solver_reports_degenerate_all_zero_delays() {
        let params = single_class(200.0, 0.0, 2);
        assert!(solve_pool_size(&params).is_err());
    }

    #[test]
    fn l_minus_values() {
        assert_relative_eq!(l_minus(&canonical(0.0)), 40.0, max_relative = 1e-12);
        let k4 = TwoClassParams::new(200.0, 0.1, 4.0, 4, 0.0).unwrap();
        assert_relative_eq!(l_minus(&k4), 80.0 / 3.0, max_relative = 1e-12);
        let expected = 40.0 + 0.1 * 40.0 * (1.0 - (-40.0f64).exp());
        assert_relative_eq!(l_minus(&canonical(0.1)), expected, max_relative = 1e-12);
    }

    #[test]
    fn l_plus_values() {
        assert_relative_eq!(l_plus(&canonical(1.0)), 1640.0, max_relative = 1e-12);
        assert_relative_eq!(
            l_plus(&canonical(0.5)),
            400.0 * 2.1 - 400.0 * 16.0 * 0.5 / 8.2,
            max_relative = 1e-12
        );
        let no_quarantine = TwoClassParams::new(200.0, 0.1, 0.0, 2, 0.7).unwrap();
        assert_relative_eq!(l_plus(&no_quarantine), 40.0, max_relative = 1e-12);
    }

    #[test]
    fn p_star_values() {
        assert_relative_eq!(p_star(0.1, 4.0, 2), 4.0 / 12.2, max_relative = 1e-12);
        assert_relative_eq!(p_star(0.1, 4.0, 8), 28.0 / 36.2, max_relative = 1e-12);
        assert_eq!(p_star(0.3, 0.0, 5), 0.0);
    }

    #[test]
    fn p_star_is_the_intersection_of_the_approximations() {
        for k in 2..=8u32 {
            let base = TwoClassParams::new(200.0, 0.1, 4.0, k, 0.0).unwrap();
            let crossing = p_star(0.1, 4.0, k);
            let at_crossing = base.with_value_fraction(crossing).unwrap();
            assert_relative_eq!(
                l_minus_constant(&at_crossing),
                l_plus(&at_crossing),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn equal_delays_are_permitted() {
        let params = ModelParams::new(
            200.0,
            vec![
                DelayClass::new(0.1, 2, 0.5).unwrap(),
                DelayClass::new(0.1, 2, 0.5).unwrap(),
            ],
        )
        .unwrap();
        // Two identical classes behave like one.
        assert_relative_eq!(solve_pool_size(&params).unwrap(), 40.0, max_relative = 1e-9);
    }
}
