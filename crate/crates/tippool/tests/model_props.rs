//! Property tests for the analytic model: distribution-function shape,
//! solver identities and monotonicity of the critical fraction.

use proptest::prelude::*;
use tippool::{
    l_minus_constant, l_plus, p_star, pool_size_residual, removal_time_cdf, solve_pool_size,
    solve_pool_size_two_class, DelayClass, ModelParams, TwoClassParams,
};

/// Up to five classes with sorted delays and normalized fractions.
fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (
        1.0f64..500.0,
        proptest::collection::vec((0.01f64..5.0, 2u32..=8, 0.05f64..1.0), 1..=5),
    )
        .prop_map(|(rate, raw)| {
            let total: f64 = raw.iter().map(|(_, _, w)| w).sum();
            let mut delays: Vec<f64> = raw.iter().map(|(d, _, _)| *d).collect();
            delays.sort_by(f64::total_cmp);
            let mut classes: Vec<DelayClass> = Vec::new();
            let mut assigned = 0.0;
            for (i, (_, k, w)) in raw.iter().enumerate() {
                // Hand the last class the exact remainder so the fractions
                // sum to 1 within the model's tolerance.
                let fraction = if i + 1 == raw.len() {
                    1.0 - assigned
                } else {
                    w / total
                };
                assigned += fraction;
                classes.push(DelayClass::new(delays[i], *k, fraction.clamp(0.0, 1.0)).unwrap());
            }
            ModelParams::new(rate, classes).unwrap()
        })
}

fn two_class_strategy() -> impl Strategy<Value = TwoClassParams> {
    (
        1.0f64..500.0,
        0.01f64..1.0,
        0.0f64..8.0,
        2u32..=8,
        0.0f64..=1.0,
    )
        .prop_map(|(rate, h, d_q, k, p)| TwoClassParams::new(rate, h, d_q, k, p).unwrap())
}

proptest! {
    /// The removal-time CDF stays within [0, 1], vanishes at or below the
    /// first delay and never decreases.
    #[test]
    fn cdf_shape(params in params_strategy(), pool in 1.0f64..5000.0) {
        let d1 = params.classes()[0].delay();
        prop_assert_eq!(removal_time_cdf(&params, pool, d1).unwrap(), 0.0);
        prop_assert_eq!(removal_time_cdf(&params, pool, d1 - 1.0).unwrap(), 0.0);
        let d_max = params.classes().last().unwrap().delay();
        let mut previous = 0.0;
        for i in 0..=200 {
            let x = d1 + (i as f64 / 200.0) * (d_max - d1 + 10.0);
            let value = removal_time_cdf(&params, pool, x).unwrap();
            prop_assert!((0.0..=1.0).contains(&value));
            prop_assert!(value >= previous - 1e-15, "CDF decreased at x={x}");
            previous = value;
        }
    }

    /// The solved pool size really is a root of the residual, and the
    /// residual brackets it with the documented signs.
    #[test]
    fn solver_returns_a_root(params in params_strategy()) {
        let solved = solve_pool_size(&params).unwrap();
        let rate = params.rate();
        let d_max = params.classes().last().unwrap().delay();
        let residual = pool_size_residual(solved, &params).unwrap();
        prop_assert!(residual.abs() <= 1e-9 * rate * d_max, "residual {residual}");
        prop_assert!(pool_size_residual(solved * 0.5, &params).unwrap() > 0.0);
        prop_assert!(pool_size_residual(solved * 4.0, &params).unwrap() < 0.0);
    }

    /// Single-class closed form k*lambda*d/(k-1), to full precision.
    #[test]
    fn single_class_closed_form(
        rate in 1.0f64..500.0,
        delay in 0.01f64..5.0,
        k in 2u32..=8,
    ) {
        let params =
            ModelParams::new(rate, vec![DelayClass::new(delay, k, 1.0).unwrap()]).unwrap();
        let expected = k as f64 * rate * delay / (k as f64 - 1.0);
        let solved = solve_pool_size(&params).unwrap();
        prop_assert!((solved - expected).abs() <= 1e-9 * expected);
    }

    /// The specialized two-class equation and the general n-class solver
    /// agree on the equivalent parameterization.
    #[test]
    fn two_class_solvers_agree(two in two_class_strategy()) {
        let special = solve_pool_size_two_class(&two).unwrap();
        let general = solve_pool_size(&two.to_model_params()).unwrap();
        prop_assert!(
            (special - general).abs() <= 1e-6 * general.abs(),
            "special {special} vs general {general}"
        );
    }

    /// The defining identity of the critical fraction: the short-delay
    /// level crosses the long-delay linearization at p_star.
    #[test]
    fn p_star_is_the_crossing(
        rate in 1.0f64..500.0,
        h in 0.01f64..1.0,
        d_q in 0.0f64..8.0,
        k in 2u32..=8,
    ) {
        let crossing = p_star(h, d_q, k);
        prop_assert!((0.0..1.0).contains(&crossing));
        let at_crossing = TwoClassParams::new(rate, h, d_q, k, crossing).unwrap();
        let level = l_minus_constant(&at_crossing);
        prop_assert!(
            (level - l_plus(&at_crossing)).abs() <= 1e-9 * level.abs(),
            "constant {level} vs l_plus {}",
            l_plus(&at_crossing)
        );
    }

    /// p_star grows with k and d_Q and shrinks with h.
    #[test]
    fn p_star_monotonicity(
        h in 0.01f64..1.0,
        d_q in 0.001f64..8.0,
        k in 2u32..=7,
        bump in 0.01f64..2.0,
    ) {
        prop_assert!(p_star(h, d_q, k + 1) > p_star(h, d_q, k));
        prop_assert!(p_star(h, d_q + bump, k) > p_star(h, d_q, k));
        prop_assert!(p_star(h + bump, d_q, k) < p_star(h, d_q, k));
    }
}
