use advlabel::solver::{step_labels, step_multipliers};
use advlabel::{
    constraint_value, expected_error, is_feasible, primal_value, solve_exact, train, Dataset, DirectModel,
    LabelDistribution, ModelState, MultiplierRule, SolverConfig, WeakSignalSet,
};
use proptest::prelude::*;

fn probs(n: usize) -> impl Strategy<Value = LabelDistribution> {
    prop::collection::vec(0.0..=1.0f64, n).prop_map(|v| LabelDistribution::new(v).unwrap())
}

fn bits(n: usize) -> impl Strategy<Value = LabelDistribution> {
    prop::collection::vec(any::<bool>(), n)
        .prop_map(|v| LabelDistribution::new(v.into_iter().map(|b| b as u8 as f64).collect()).unwrap())
}

/// Predictions, signals, and a hidden labeling whose errors (plus slack) are the bounds.
fn instance() -> impl Strategy<Value = (LabelDistribution, WeakSignalSet, LabelDistribution)> {
    (2usize..=6, 1usize..=3).prop_flat_map(|(n, m)| {
        (
            probs(n),
            prop::collection::vec(probs(n), m),
            probs(n),
            prop::collection::vec(0.0..0.1f64, m),
        )
            .prop_map(|(p, signals, hidden, slack)| {
                let bounds = signals
                    .iter()
                    .zip(&slack)
                    .map(|(q, s)| (constraint_value(q, &hidden).unwrap() + s).min(1.0))
                    .collect();
                (p, WeakSignalSet::unnamed(signals, bounds).unwrap(), hidden)
            })
    })
}

proptest! {
    #[test]
    fn error_is_symmetric((a, b) in (1usize..20).prop_flat_map(|n| (probs(n), probs(n)))) {
        let ab = expected_error(&a, &b).unwrap();
        prop_assert!((ab - expected_error(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((ab + expected_error(&a, &b.complement()).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn binary_error_is_hamming((a, b) in (1usize..=8).prop_flat_map(|n| (bits(n), bits(n)))) {
        let differ = a.iter().zip(b.iter()).filter(|(x, y)| x != y).count();
        let e = expected_error(&a, &b).unwrap();
        prop_assert!((e - differ as f64 / a.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn primal_bounds_the_true_error((p, ws, hidden) in instance()) {
        let g = primal_value(&p, &ws).unwrap();
        prop_assert!(g >= expected_error(&p, &hidden).unwrap() - 1e-9);
    }

    #[test]
    fn primal_is_convex_in_the_predictions(
        ((p1, ws, _), t, seed) in (instance(), 0.0..=1.0f64, any::<u64>())
    ) {
        // A second prediction vector of the same length, from the seed.
        let n = p1.len();
        let p2 = LabelDistribution::new((0..n).map(|j| ((seed >> (j * 8)) & 0xff) as f64 / 255.0).collect()).unwrap();
        let mix = LabelDistribution::new(p1.iter().zip(p2.iter()).map(|(a, b)| t * a + (1.0 - t) * b).collect()).unwrap();
        let lhs = primal_value(&mix, &ws).unwrap();
        let rhs = t * primal_value(&p1, &ws).unwrap() + (1.0 - t) * primal_value(&p2, &ws).unwrap();
        prop_assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
    }

    #[test]
    fn oracle_returns_a_feasible_vertex((p, ws, _) in instance()) {
        let r = solve_exact(&p, &ws).unwrap();
        prop_assert!(r.is_optimal());
        for (q, b) in ws.iter() {
            let c = constraint_value(q, &r.labels).unwrap();
            prop_assert!(c <= b + 1e-7, "{c} > {b} at {:?}", r.labels);
        }
        // A vertex has at most one fractional coordinate per weak-signal constraint.
        let interior = r.labels.iter().filter(|&y| y > 1e-9 && y < 1.0 - 1e-9).count();
        prop_assert!(interior <= ws.len(), "{:?}", r.labels);
        prop_assert!((r.value - expected_error(&p, &r.labels).unwrap()).abs() < 1e-7);
        prop_assert!(is_feasible(&ws).unwrap());
    }

    #[test]
    fn oracle_is_deterministic((p, ws, _) in instance()) {
        let a = solve_exact(&p, &ws).unwrap();
        let b = solve_exact(&p, &ws).unwrap();
        prop_assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn updates_stay_in_their_domains(
        ((p, ws, hidden), gammas, alpha, rho, slack_driven) in
            (instance(), prop::collection::vec(0.0..5.0f64, 3), 0.0..10.0f64, 0.0..2.0f64, any::<bool>())
    ) {
        let rule = if slack_driven { MultiplierRule::SlackDriven } else { MultiplierRule::Lagrangian };
        let state = ModelState {
            params: vec![],
            multipliers: gammas[..ws.len()].to_vec(),
            adversarial: hidden,
        };
        let y = step_labels(&state, &p, &ws, alpha, rho, rule).unwrap();
        prop_assert!(y.iter().all(|v| (0.0..=1.0).contains(&v)));
        let g = step_multipliers(&state, &ws, rho, rule).unwrap();
        prop_assert!(g.iter().all(|v| *v >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn training_is_deterministic((_, ws, _) in instance()) {
        let n = ws.n_examples().unwrap();
        let data = Dataset::from_rows(&vec![vec![0.0]; n], None).unwrap();
        let cfg = SolverConfig { max_iters: 300, ..SolverConfig::direct() };
        let a = train(&data, &ws, DirectModel::zeros(n), &cfg).unwrap();
        let b = train(&data, &ws, DirectModel::zeros(n), &cfg).unwrap();
        prop_assert_eq!(a.model, b.model);
        prop_assert_eq!(a.state.adversarial, b.state.adversarial);
    }

    /// Projected ascent from a feasible start, with the predictions held
    /// fixed and the multipliers updated, ends near the exact inner optimum.
    #[test]
    fn label_ascent_approaches_the_oracle((p, ws, hidden) in instance()) {
        let exact = solve_exact(&p, &ws).unwrap();
        let mut state = ModelState { params: vec![], multipliers: vec![0.0; ws.len()], adversarial: hidden };
        let mut best = f64::NEG_INFINITY;
        for _ in 0..20_000 {
            state.adversarial = step_labels(&state, &p, &ws, 0.05, 0.1, MultiplierRule::Lagrangian).unwrap();
            state.multipliers = step_multipliers(&state, &ws, 0.1, MultiplierRule::Lagrangian).unwrap();
            let feasible = ws.iter().all(|(q, b)| constraint_value(q, &state.adversarial).unwrap() <= b + 1e-4);
            if feasible {
                best = best.max(expected_error(&p, &state.adversarial).unwrap());
            }
        }
        prop_assert!(best <= exact.value + 1e-3, "{best} above {}", exact.value);
        prop_assert!(best >= exact.value - 2e-2, "{best} well below {}", exact.value);
    }
}
