//! Solver output against closed forms computed independently of the solver.

use approx::assert_abs_diff_eq;
use factfind::distributions::{binomial_connections, ConnectionDistribution, PreferenceDistribution};
use factfind::equilibrium::{
    deviation_grid, epsilon_equilibrium_check, exponential_linear_effort, interior_identity_check, Scenario, Settings,
    Solver,
};
use factfind::statics::{connectivity_experiment, volunteer_experiment};
use factfind::technology::{CostFunction, HClass, SuccessTechnology};

fn exp_linear(gamma: f64) -> Scenario<f64> {
    Scenario::new(
        0.5,
        PreferenceDistribution::uniform(0.0, 1.0).unwrap(),
        SuccessTechnology::exponential(1.0).unwrap(),
        CostFunction::linear(gamma).unwrap(),
        binomial_connections(5, 0.5).unwrap(),
        Settings::default(),
    )
    .unwrap()
}

/// Integrated success for exponential success, linear cost and values
/// uniform on [0, 1/4]: types below the cutoff `γ/Q` stay idle, the rest
/// succeed with probability `1 − γ/(Qv)`.
fn closed_form_success(gamma: f64, q: f64) -> f64 {
    let vc = gamma / q;
    if vc >= 0.25 {
        return 0.0;
    }
    4.0 * ((0.25 - vc) - vc * (0.25 / vc).ln())
}

fn damped_oracle(gamma: f64) -> f64 {
    let mut q = 0.5;
    for _ in 0..10_000 {
        let t = (1.0 - closed_form_success(gamma, q) / 2.0).powi(5);
        q = 0.5 * q + 0.5 * t;
    }
    q
}

#[test]
fn fixed_point_matches_damped_iteration() {
    for gamma in [1.0, 0.05, 0.02, 0.01] {
        let sol = Solver::new(&exp_linear(gamma)).unwrap().solve().unwrap();
        let oracle = damped_oracle(gamma);
        assert_abs_diff_eq!(sol.q, oracle, epsilon = 1e-8);
        let i = closed_form_success(gamma, oracle);
        assert_abs_diff_eq!(sol.pi, 1.0 - (1.0 - i) * (1.0 - i / 2.0).powi(5), epsilon = 1e-8);
    }
}

#[test]
fn literal_scenario_is_all_corner() {
    let sol = Solver::new(&exp_linear(1.0)).unwrap().solve().unwrap();
    assert_eq!(sol.q, 1.0);
    assert_eq!(sol.pi, 0.0);
    assert_eq!(sol.corner_count(), sol.nodes.len());
}

#[test]
fn efforts_match_closed_form_at_nodes() {
    let sol = Solver::new(&exp_linear(0.02)).unwrap().solve().unwrap();
    for n in &sol.nodes {
        assert_abs_diff_eq!(
            n.effort,
            exponential_linear_effort(1.0, 0.02, n.v, sol.q),
            epsilon = 1e-9
        );
    }
}

#[test]
fn identities_hold() {
    let sc = exp_linear(0.02);
    let sol = Solver::new(&sc).unwrap().solve().unwrap();
    assert!(interior_identity_check(&sol, &sc.tech, &sc.cost) < 1e-6);
    assert!((sol.pi - sol.pi_closed_form).abs() < 1e-8);
    assert!(sol.pi >= 1.0 - sol.q);
    let gain = epsilon_equilibrium_check(&sol, &sc, &deviation_grid(5.0, 2001));
    assert!(gain < 1e-6, "gain {gain}");
}

#[test]
fn quadrature_refinement_is_stable() {
    for sc in [
        exp_linear(0.02),
        exp_linear(0.02).with_cost(CostFunction::root_shift(0.01).unwrap()),
    ] {
        let coarse = Solver::new(&sc).unwrap().solve().unwrap();
        let mut fine = sc.clone();
        fine.settings.grid *= 2;
        let fine = Solver::new(&fine).unwrap().solve().unwrap();
        assert!((coarse.pi - fine.pi).abs() < 1e-6);
    }
}

#[test]
fn constant_h_keeps_interior_types_fixed() {
    let sc = exp_linear(0.02);
    let steps: Vec<_> = [0.3, 0.6]
        .iter()
        .map(|&q| (q, binomial_connections(5, q).unwrap()))
        .collect();
    let rep = connectivity_experiment(&sc, &steps).unwrap();
    assert_eq!(rep.h_class, HClass::Constant);
    assert!(rep.all_hold(), "{:#?}", rep.verdicts);
    // Interior types satisfy 1 − π(v) = γ/v whatever the network.
    for step in &rep.steps {
        for n in step.solution.nodes.iter().filter(|n| !n.corner) {
            assert_abs_diff_eq!(1.0 - n.pi, 0.02 / n.v, epsilon = 1e-9);
        }
    }
}

#[test]
fn single_player_maximizes_alone() {
    let cost = CostFunction::power(1.0, 25.0).unwrap();
    let cost = cost.scaled(0.25 / (3.0 * cost.cost(1.0)));
    let rep = volunteer_experiment(1.0, 0.2, cost, 0.25, 1..=1, Settings::default()).unwrap();
    let row = &rep.rows[0];
    let tech = SuccessTechnology::smooth_step(1.0, 0.2).unwrap();
    let u = |x: f64| tech.psi(x) * 0.25 - cost.cost(x);
    let best = (0..=40_000)
        .map(|i| i as f64 * 3e-5)
        .fold(0.0f64, |b, x| if u(x) > u(b) { x } else { b });
    assert!(u(row.effort) >= u(best) - 1e-12);
    assert_abs_diff_eq!(row.success, tech.psi(row.effort), epsilon = 1e-15);
    assert_eq!(row.q, 1.0);
}

#[test]
fn steep_cost_volunteer_success_rises() {
    let cost = CostFunction::power(1.0, 25.0).unwrap();
    let cost = cost.scaled(0.25 / (3.0 * cost.cost(1.0)));
    let rep = volunteer_experiment(1.0, 0.2, cost, 0.25, 2..=10, Settings::default()).unwrap();
    assert!(rep.rows.iter().all(|r| !r.corner_only));
    assert_eq!(rep.h_class, HClass::Decreasing);
    assert_eq!(rep.success_trend, 1);
    assert!(rep.all_hold());
}

#[test]
fn linear_cost_volunteer_has_no_pure_equilibrium() {
    let rep = volunteer_experiment(
        1.0,
        0.2,
        CostFunction::linear(0.25 / 3.0).unwrap(),
        0.25,
        2..=4,
        Settings::default(),
    )
    .unwrap();
    assert!(rep.rows.iter().all(|r| r.corner_only));
    assert!(!rep.all_hold());
}

#[test]
fn single_precision_smoke() {
    let sc = Scenario::<f32>::new(
        0.5,
        PreferenceDistribution::uniform(0.0, 1.0).unwrap(),
        SuccessTechnology::exponential(1.0).unwrap(),
        CostFunction::linear(0.02).unwrap(),
        ConnectionDistribution::new(vec![0.25, 0.5, 0.25]).unwrap(),
        Settings::default(),
    )
    .unwrap();
    let sol = Solver::new(&sc).unwrap().solve().unwrap();
    let reference =
        Solver::new(&exp_linear(0.02).with_connections(ConnectionDistribution::new(vec![0.25, 0.5, 0.25]).unwrap()))
            .unwrap()
            .solve()
            .unwrap();
    assert!((sol.q as f64 - reference.q).abs() < 1e-4);
    assert!((sol.pi as f64 - reference.pi).abs() < 1e-4);
}
