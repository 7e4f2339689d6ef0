use factfind::distributions::{
    binomial_connections, check_fosd, check_polarization_order, derive_value_distribution, polarize, value_fosd,
    value_of_information, Atom, ConnectionDistribution, PreferenceDistribution, DEFAULT_CHECK_GRID,
};
use factfind::equilibrium::{Responder, Scenario, Settings, Solver};
use factfind::technology::{CostFunction, SuccessTechnology};
use proptest::prelude::*;

fn types() -> impl Strategy<Value = PreferenceDistribution<f64>> {
    prop_oneof![
        (0.0..0.9f64, 0.05..1.0f64).prop_map(|(lo, w)| PreferenceDistribution::uniform(lo, (lo + w).min(1.0)).unwrap()),
        prop::collection::vec(0.01..1.0f64, 2..6).prop_map(|mut steps| {
            let total: f64 = steps.iter().sum();
            let mut acc = 0.0;
            let mut pts = vec![(0.0, 0.0)];
            let n = steps.len();
            for (i, s) in steps.iter_mut().enumerate() {
                acc += *s / total;
                pts.push(((i + 1) as f64 / n as f64, if i + 1 == n { 1.0 } else { acc }));
            }
            PreferenceDistribution::tabulated(pts).unwrap()
        }),
        (0.0..1.0f64, 0.0..1.0f64, 0.05..0.95f64).prop_map(|(a, b, w)| {
            PreferenceDistribution::discrete(vec![Atom::new(a, w), Atom::new(b, 1.0 - w)]).unwrap()
        }),
    ]
}

fn connections() -> impl Strategy<Value = ConnectionDistribution<f64>> {
    prop::collection::vec(0.0..1.0f64, 1..8).prop_filter_map("positive mass", |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-3).then(|| ConnectionDistribution::new(w.iter().map(|x| x / total).collect()).unwrap())
    })
}

fn scenario(
    types: PreferenceDistribution<f64>,
    conn: ConnectionDistribution<f64>,
    gamma: f64,
    shape: f64,
) -> Scenario<f64> {
    Scenario::new(
        0.5,
        types,
        SuccessTechnology::weibull(1.0, shape).unwrap(),
        CostFunction::linear(gamma).unwrap(),
        conn,
        Settings {
            grid: 32,
            ..Settings::default()
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn value_is_bounded(lambda in 0.0..=1.0f64, p in 0.001..0.999f64) {
        let v = value_of_information(lambda, p).unwrap();
        prop_assert!(v >= 0.0 && v <= p * (1.0 - p) + 1e-15);
    }

    #[test]
    fn value_distribution_is_a_cdf(t in types(), p in 0.05..0.95f64) {
        let f = derive_value_distribution(&t, p).unwrap();
        prop_assert!((f.total_mass() - 1.0).abs() < 1e-12);
        let vmax = p * (1.0 - p);
        prop_assert!((f.cdf(vmax) - 1.0).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..=200 {
            let c = f.cdf(vmax * i as f64 / 200.0);
            prop_assert!(c >= prev - 1e-15 && c <= 1.0 + 1e-12);
            prev = c;
        }
    }

    #[test]
    fn polarization_orders_types_and_values(t in types(), d1 in 0.0..0.5f64, d2 in 0.0..0.49f64) {
        let p = 0.5;
        let a = polarize(&t, d1, p).unwrap();
        let b = polarize(&t, d1 + d2, p).unwrap();
        prop_assert!(check_polarization_order(&a, &b, p, DEFAULT_CHECK_GRID));
        let fa = derive_value_distribution(&a, p).unwrap();
        let fb = derive_value_distribution(&b, p).unwrap();
        prop_assert!(value_fosd(&fa, &fb, DEFAULT_CHECK_GRID));
    }

    #[test]
    fn fosd_is_reflexive_and_transitive(q1 in 0.0..1.0f64, d1 in 0.0..0.3f64, d2 in 0.0..0.3f64, n in 1usize..12) {
        let a = binomial_connections(n, q1 * 0.4).unwrap();
        let b = binomial_connections(n, q1 * 0.4 + d1).unwrap();
        let c = binomial_connections(n, q1 * 0.4 + d1 + d2).unwrap();
        prop_assert!(check_fosd(&a, &a));
        prop_assert!(check_fosd(&a, &b) && check_fosd(&b, &c) && check_fosd(&a, &c));
    }

    #[test]
    fn fixed_point_map_is_monotone(t in types(), conn in connections(), gamma in 0.005..0.2f64, k in prop_oneof![Just(0.5), Just(1.0)]) {
        let solver = Solver::new(&scenario(t, conn, gamma, k)).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let t = solver.no_signal_prob(i as f64 / 20.0).unwrap();
            prop_assert!(t <= prev + 1e-13);
            prev = t;
        }
    }

    #[test]
    fn cost_scaling_isomorphism(v in 0.01..0.25f64, q in 0.05..1.0f64, alpha in 0.2..5.0f64, gamma in 0.01..0.1f64) {
        let tech = SuccessTechnology::weibull(1.0, 0.5).unwrap();
        let base = CostFunction::root_shift(gamma).unwrap();
        let settings = Settings::default();
        let scaled = Responder::new(tech, base.scaled(alpha), 1.0, &settings).unwrap();
        let plain = Responder::new(tech, base, 1.0, &settings).unwrap();
        let a = scaled.best_effort(v, q).unwrap().effort;
        let b = plain.best_effort(v / alpha, q).unwrap().effort;
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-3));
    }

    #[test]
    fn solutions_are_monotone_and_consistent(t in types(), conn in connections(), gamma in 0.005..0.2f64, k in prop_oneof![Just(0.5), Just(1.0)]) {
        let sol = Solver::new(&scenario(t, conn, gamma, k)).unwrap().solve().unwrap();
        prop_assert!(sol.fixed_point.converged);
        prop_assert!(sol.max_policy_decrease() <= 0.0);
        prop_assert!(sol.pi >= 1.0 - sol.q - 1e-12);
        prop_assert!((sol.pi - sol.pi_closed_form).abs() < 1e-8);
    }
}
