use mqsim::cable::ReducedCableParams;
use mqsim::capacity::{
    average_rate, evaluate_policy, myopic_intensity, myopic_policy, optimize_policy, rate_term, steady_state,
    ActionGrid, SignalingBounds, SignalingPolicy, SolveOptions,
};
use mqsim::engine::{stationary_distribution, Generator};
use proptest::prelude::*;

fn bounds() -> impl Strategy<Value = SignalingBounds> {
    (0.01f64..1.0, 1.05f64..20.0).prop_map(|(lo, ratio)| SignalingBounds::new(lo, lo * ratio).unwrap())
}

fn policy_in(b: SignalingBounds, e_max: usize) -> impl Strategy<Value = SignalingPolicy> {
    prop::collection::vec(0.0f64..=1.0, e_max + 1).prop_map(move |u| SignalingPolicy {
        lambda_bar: u
            .iter()
            .map(|f| b.lambda_min + f * (b.lambda_max - b.lambda_min))
            .collect(),
    })
}

fn case() -> impl Strategy<Value = (SignalingBounds, ReducedCableParams, SignalingPolicy)> {
    (bounds(), 1usize..30, 0.0f64..1.0).prop_flat_map(|(b, e, a)| {
        let p = ReducedCableParams::linear(e, a).unwrap();
        policy_in(b, e).prop_map(move |pol| (b, p.clone(), pol))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_form_matches_nullspace_solve((_, p, pol) in case()) {
        let up: Vec<f64> = (0..p.e_max).map(|k| p.alpha[k] * pol.lambda_bar[k]).collect();
        let down: Vec<f64> = p.mu[1..].to_vec();
        let lu = stationary_distribution(&Generator::birth_death(&up, &down).unwrap()).unwrap();
        let pf = steady_state(&pol, &p).unwrap();
        for (x, y) in lu.iter().zip(&pf) {
            prop_assert!((x - y).abs() <= 1e-10, "{} vs {}", x, y);
        }
    }

    #[test]
    fn bias_solves_the_poisson_equation((b, p, pol) in case()) {
        let (gain, d) = evaluate_policy(&pol, &p, &b).unwrap();
        let e = p.e_max;
        let scale = b.lambda_max * (b.lambda_max / b.lambda_min).log2();
        for i in 0..=e {
            let r = rate_term(pol.lambda_bar[i], p.alpha[i], &b);
            let out = if i < e { p.alpha[i] * pol.lambda_bar[i] * d[i] } else { 0.0 };
            let back = if i > 0 { p.mu[i] * d[i - 1] } else { 0.0 };
            let resid = r - gain + out - back;
            prop_assert!(resid.abs() <= 1e-8 * scale.max(1.0), "state {}: {}", i, resid);
        }
    }

    #[test]
    fn optimum_beats_myopic_and_any_sampled_policy((b, p, pol) in case()) {
        let grid = ActionGrid::with_myopic(&b, 41);
        let opt = optimize_policy(&p, &b, &grid, &SolveOptions::default()).unwrap();
        let mp = average_rate(&myopic_policy(&b, p.e_max), &p, &b).unwrap();
        let snapped = SignalingPolicy { lambda_bar: pol.lambda_bar.iter().map(|&x| grid.nearest(x)).collect() };
        let other = average_rate(&snapped, &p, &b).unwrap();
        let tol = 1e-10 * opt.rate.abs().max(1.0);
        prop_assert!(opt.rate >= mp - tol, "opt {} < myopic {}", opt.rate, mp);
        prop_assert!(opt.rate >= other - tol, "opt {} < sampled {}", opt.rate, other);
        prop_assert!((opt.steady_state.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_scales_with_time((b, p, pol) in case(), c in 0.1f64..10.0) {
        let r = average_rate(&pol, &p, &b).unwrap();
        let fast = ReducedCableParams { mu: p.mu.iter().map(|m| m * c).collect(), ..p.clone() };
        let fast_pol = SignalingPolicy { lambda_bar: pol.lambda_bar.iter().map(|x| x * c).collect() };
        let rc = average_rate(&fast_pol, &fast, &b.scaled(c)).unwrap();
        prop_assert!((rc - c * r).abs() <= 1e-9 * (c * r).abs().max(1e-12));
    }

    #[test]
    fn myopic_intensity_maximises_the_instantaneous_rate(b in bounds(), f in 0.0f64..=1.0) {
        let x = b.lambda_min + f * (b.lambda_max - b.lambda_min);
        let star = myopic_intensity(&b);
        prop_assert!(star > b.lambda_min && star < b.lambda_max);
        prop_assert!(rate_term(star, 1.0, &b) >= rate_term(x, 1.0, &b) - 1e-12);
    }
}

/// Exhaustive search over every policy on a tiny chain and grid.
#[test]
fn policy_iteration_finds_the_exhaustive_optimum() {
    let b = SignalingBounds::new(0.2, 1.5).unwrap();
    let grid = ActionGrid::uniform(&b, 6);
    let xs = grid.values().to_vec();
    for alpha_min in [0.05, 0.4, 0.9] {
        let p = ReducedCableParams::linear(3, alpha_min).unwrap();
        let mut best = f64::NEG_INFINITY;
        for code in 0..xs.len().pow(3) {
            let mut lambda_bar = vec![xs[0]; 4];
            let mut c = code;
            for slot in lambda_bar.iter_mut().take(3) {
                *slot = xs[c % xs.len()];
                c /= xs.len();
            }
            best = best.max(average_rate(&SignalingPolicy { lambda_bar }, &p, &b).unwrap());
        }
        let opt = optimize_policy(&p, &b, &grid, &SolveOptions::default()).unwrap();
        assert!(
            (opt.rate - best).abs() <= 1e-12 * best,
            "alpha_min {alpha_min}: {} vs {best}",
            opt.rate
        );
    }
}
