//! A small instance where re-planning after clear nights strictly beats the
//! static plan. Values were computed with the exhaustive oracle.

use nightsched::oracle::{brute_force_reactive, OracleOptions};
use nightsched::reactive::{reactive_vs_stochastic_expectation, sweep_binomial, uniform_grid, BinomialWeather};
use nightsched::{Execution, Observation, SolverConfig};

fn fixture() -> Vec<Observation> {
    vec![
        Observation::new("o1", 0, 2, 1, 4),
        Observation::new("o2", 1, 3, 2, 4),
        Observation::new("o3", 0, 2, 2, 3),
        Observation::new("o4", 0, 3, 3, 10),
        Observation::new("o5", 2, 5, 1, 10),
        Observation::new("o6", 2, 5, 3, 9),
    ]
}

#[test]
fn reactive_beats_static_at_half() {
    let cmp = reactive_vs_stochastic_expectation(&fixture(), 3, BinomialWeather::new(0.5).unwrap(), &SolverConfig::default());
    assert_eq!(cmp.reactive.static_night_gains, vec![20, 13, 4]);
    assert_eq!(cmp.etg_stochastic, 24.5);
    assert_eq!(cmp.etg_reactive, 24.625);
    assert!(cmp.reactive.solver_calls <= 7);
    let oracle = brute_force_reactive(&fixture(), 3, 0.5, OracleOptions::decreasing_gain()).unwrap();
    assert_eq!(oracle, 24.625);
}

#[test]
fn sweep_is_zero_at_the_ends_and_positive_inside() {
    let grid = uniform_grid(21);
    let points = sweep_binomial(&fixture(), 3, &grid, &SolverConfig::default()).unwrap();
    assert_eq!(points.len(), 21);
    assert_eq!(points[0].upgrade, 0.0);
    assert_eq!(points[20].upgrade, 0.0);
    assert!(points.iter().all(|p| p.upgrade >= -1e-12));
    assert!(points[1..20].iter().any(|p| p.upgrade > 0.0));
    let seq = nightsched::reactive::sweep_binomial_with(&fixture(), 3, &grid, &SolverConfig::default(), Execution::Sequential)
        .unwrap();
    assert_eq!(seq, points);
}
