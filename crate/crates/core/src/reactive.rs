//! Rolling-horizon reactive strategy under independent, identically
//! distributed night weather.
//!
//! The simulator walks the full binary tree of clear/bad outcomes. A stochastic
//! solve plans the pending night at the root and after every clear night; after
//! a bad night the pending plan is kept as is. The number of observable nights
//! among the `m` remaining ones follows `Binomial(m, p_clear)`.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{etg_from_gains, Instance, NightPlan, Observation, ProbabilityVector, TOLERANCE};
use crate::par::Execution;
use crate::single_night::NightPool;
use crate::solver::{solve_stochastic, SolverConfig};
use crate::strategies::upgrade;

/// Probability that any single night is observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialWeather {
    p_clear: f64,
}

impl BinomialWeather {
    pub fn new(p_clear: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&p_clear) {
            return Err(Error::InvalidParameters(format!("p_clear {p_clear} outside [0, 1]")));
        }
        Ok(BinomialWeather { p_clear })
    }

    pub fn p_clear(&self) -> f64 {
        self.p_clear
    }
}

/// `pi[k] = C(m, k) p^k (1 - p)^(m - k)` for `k = 0..=m`.
pub fn binomial_pi(m: usize, p_clear: f64) -> ProbabilityVector {
    let mut pi = Vec::with_capacity(m + 1);
    let mut choose = 1.0_f64;
    for k in 0..=m {
        if k > 0 {
            choose = choose * (m - k + 1) as f64 / k as f64;
        }
        pi.push(choose * p_clear.powi(k as i32) * (1.0 - p_clear).powi((m - k) as i32));
    }
    ProbabilityVector(pi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    /// `true` for a clear night, night 1 first.
    pub outcome_mask: Vec<bool>,
    pub probability: f64,
    pub total_gain: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactiveResult {
    /// All `2^M` leaves, clear branches before bad ones.
    pub scenarios: Vec<ScenarioResult>,
    pub expected_gain: f64,
    pub solver_calls: u64,
    pub proven_optimal: bool,
    /// Night gains of the root solve, which is the static stochastic schedule.
    pub static_night_gains: Vec<i64>,
}

struct Subtree {
    scenarios: Vec<ScenarioResult>,
    solver_calls: u64,
    proven_optimal: bool,
    root_gains: Option<Vec<i64>>,
}

struct Walk<'a> {
    weather: BinomialWeather,
    config: &'a SolverConfig,
    exec: Execution,
    total_nights: usize,
}

impl Walk<'_> {
    fn node(&self, pool: NightPool, pending: Option<NightPlan>, mask: Vec<bool>, probability: f64, gain: i64) -> Subtree {
        let remaining = self.total_nights - mask.len();
        if remaining == 0 {
            return Subtree {
                scenarios: vec![ScenarioResult {
                    outcome_mask: mask,
                    probability,
                    total_gain: gain,
                }],
                solver_calls: 0,
                proven_optimal: true,
                root_gains: None,
            };
        }
        let mut calls = 0;
        let mut proven = true;
        let mut root_gains = None;
        let plan = match pending {
            Some(plan) => plan,
            None => {
                let instance = Instance {
                    nights: remaining,
                    probabilities: binomial_pi(remaining, self.weather.p_clear),
                    observations: pool.candidates.clone(),
                };
                let result = solve_stochastic(&instance, self.config);
                calls += 1;
                proven &= result.proven_optimal;
                if mask.is_empty() {
                    root_gains = Some(result.night_gains(&instance));
                }
                result.schedule.nights.into_iter().next().unwrap_or_default()
            }
        };
        let plan_gain: i64 = plan
            .ids()
            .filter_map(|id| pool.candidates.iter().find(|o| &o.id == id))
            .map(|o| o.gain)
            .sum();
        let mut clear_pool = pool.clone();
        clear_pool.remove_planned(&plan);
        let mut clear_mask = mask.clone();
        clear_mask.push(true);
        let mut bad_mask = mask;
        bad_mask.push(false);
        let p = self.weather.p_clear;
        let (clear, bad) = self.exec.join(
            || self.node(clear_pool, None, clear_mask, probability * p, gain + plan_gain),
            || self.node(pool, Some(plan), bad_mask, probability * (1.0 - p), gain),
        );
        let mut scenarios = clear.scenarios;
        scenarios.extend(bad.scenarios);
        Subtree {
            scenarios,
            solver_calls: calls + clear.solver_calls + bad.solver_calls,
            proven_optimal: proven && clear.proven_optimal && bad.proven_optimal,
            root_gains,
        }
    }
}

pub fn simulate_reactive(
    observations: &[Observation],
    nights: usize,
    weather: BinomialWeather,
    config: &SolverConfig,
) -> ReactiveResult {
    simulate_reactive_with(observations, nights, weather, config, Execution::default())
}

/// Runs the scenario tree; sibling subtrees may run in parallel.
pub fn simulate_reactive_with(
    observations: &[Observation],
    nights: usize,
    weather: BinomialWeather,
    config: &SolverConfig,
    exec: Execution,
) -> ReactiveResult {
    let walk = Walk {
        weather,
        config,
        exec,
        total_nights: nights,
    };
    let tree = walk.node(NightPool::new(observations.to_vec()), None, Vec::new(), 1.0, 0);
    let expected_gain = tree
        .scenarios
        .iter()
        .map(|s| s.probability * s.total_gain as f64)
        .sum();
    ReactiveResult {
        scenarios: tree.scenarios,
        expected_gain,
        solver_calls: tree.solver_calls,
        proven_optimal: tree.proven_optimal,
        static_night_gains: tree.root_gains.unwrap_or_else(|| vec![0; nights]),
    }
}

/// Expectation of the static schedule evaluated over the scenario leaves: in a
/// leaf with `k` clear nights the first `k` planned nights are realized.
pub fn static_expectation(scenarios: &[ScenarioResult], static_gains: &[i64]) -> f64 {
    scenarios
        .iter()
        .map(|s| {
            let clear = s.outcome_mask.iter().filter(|&&c| c).count();
            let realized: i64 = static_gains.iter().take(clear).sum();
            s.probability * realized as f64
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactiveComparison {
    pub p_clear: f64,
    pub etg_reactive: f64,
    pub etg_stochastic: f64,
    pub reactive: ReactiveResult,
}

impl ReactiveComparison {
    /// Upgrade of reactive over static; 0 when the static expectation is 0,
    /// where both expectations vanish together.
    pub fn upgrade(&self) -> f64 {
        if self.etg_stochastic == 0.0 {
            return 0.0;
        }
        upgrade(self.etg_reactive, self.etg_stochastic).unwrap_or(0.0)
    }

    pub fn reactive_dominates(&self) -> bool {
        self.etg_reactive >= self.etg_stochastic - TOLERANCE
    }
}

pub fn reactive_vs_stochastic_expectation(
    observations: &[Observation],
    nights: usize,
    weather: BinomialWeather,
    config: &SolverConfig,
) -> ReactiveComparison {
    reactive_vs_stochastic_expectation_with(observations, nights, weather, config, Execution::default())
}

pub fn reactive_vs_stochastic_expectation_with(
    observations: &[Observation],
    nights: usize,
    weather: BinomialWeather,
    config: &SolverConfig,
    exec: Execution,
) -> ReactiveComparison {
    let reactive = simulate_reactive_with(observations, nights, weather, config, exec);
    ReactiveComparison {
        p_clear: weather.p_clear,
        etg_reactive: reactive.expected_gain,
        etg_stochastic: static_expectation(&reactive.scenarios, &reactive.static_night_gains),
        reactive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p_clear: f64,
    pub etg_stochastic: f64,
    pub etg_reactive: f64,
    pub upgrade: f64,
    pub proven_optimal: bool,
}

pub fn sweep_binomial(
    observations: &[Observation],
    nights: usize,
    grid: &[f64],
    config: &SolverConfig,
) -> Result<Vec<SweepPoint>, Error> {
    sweep_binomial_with(observations, nights, grid, config, Execution::default())
}

pub fn sweep_binomial_with(
    observations: &[Observation],
    nights: usize,
    grid: &[f64],
    config: &SolverConfig,
    exec: Execution,
) -> Result<Vec<SweepPoint>, Error> {
    let weathers = grid.iter().map(|&p| BinomialWeather::new(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(exec.map(&weathers, |&weather| {
        let cmp = reactive_vs_stochastic_expectation_with(observations, nights, weather, config, exec);
        SweepPoint {
            p_clear: weather.p_clear,
            etg_stochastic: cmp.etg_stochastic,
            etg_reactive: cmp.etg_reactive,
            upgrade: cmp.upgrade(),
            proven_optimal: cmp.reactive.proven_optimal,
        }
    }))
}

/// `n` evenly spaced points on `[0, 1]`, endpoints included.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Expected gain of the static plan when clear nights are drawn i.i.d.
pub fn static_etg(night_gains: &[i64], weather: BinomialWeather) -> f64 {
    etg_from_gains(&binomial_pi(night_gains.len(), weather.p_clear), night_gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::counterexample_observations;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn binomial_examples() {
        assert!(close(&binomial_pi(2, 0.5).0, &[0.25, 0.5, 0.25]));
        assert!(close(&binomial_pi(3, 1.0).0, &[0.0, 0.0, 0.0, 1.0]));
        assert!(close(&binomial_pi(0, 0.3).0, &[1.0]));
        let pi = binomial_pi(4, 0.3);
        assert!(close(&pi.0, &[0.2401, 0.4116, 0.2646, 0.0756, 0.0081]));
        assert!((pi.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weather_range() {
        assert!(BinomialWeather::new(-0.1).is_err());
        assert!(BinomialWeather::new(1.5).is_err());
        assert!(BinomialWeather::new(1.0).is_ok());
    }

    #[test]
    fn never_observable() {
        let w = BinomialWeather::new(0.0).unwrap();
        let r = simulate_reactive(&counterexample_observations(), 3, w, &SolverConfig::default());
        assert_eq!(r.expected_gain, 0.0);
        assert_eq!(r.scenarios.len(), 8);
        assert_eq!(r.scenarios.iter().filter(|s| s.probability > 0.0).count(), 1);
    }

    #[test]
    fn always_observable() {
        let w = BinomialWeather::new(1.0).unwrap();
        let cmp = reactive_vs_stochastic_expectation(&counterexample_observations(), 3, w, &SolverConfig::default());
        assert_eq!(cmp.etg_reactive, 6.0);
        assert_eq!(cmp.etg_stochastic, 6.0);
        assert_eq!(cmp.upgrade(), 0.0);
        assert_eq!(cmp.reactive.static_night_gains.iter().sum::<i64>(), 6);
    }

    #[test]
    fn tree_shape_and_calls() {
        let w = BinomialWeather::new(0.5).unwrap();
        for m in 1..=3 {
            let r = simulate_reactive(&counterexample_observations(), m, w, &SolverConfig::default());
            assert_eq!(r.scenarios.len(), 1 << m);
            assert!(r.solver_calls < 1 << m);
            assert!((r.scenarios.iter().map(|s| s.probability).sum::<f64>() - 1.0).abs() < 1e-12);
            for s in &r.scenarios {
                let clear = s.outcome_mask.iter().filter(|&&c| c).count() as i32;
                let expected = 0.5f64.powi(clear) * 0.5f64.powi(m as i32 - clear);
                assert!((s.probability - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn static_expectation_matches_binomial_etg() {
        let w = BinomialWeather::new(0.37).unwrap();
        let cmp = reactive_vs_stochastic_expectation(&counterexample_observations(), 3, w, &SolverConfig::default());
        let direct = static_etg(&cmp.reactive.static_night_gains, w);
        assert!((cmp.etg_stochastic - direct).abs() < 1e-9);
        assert!(cmp.reactive_dominates());
    }

    #[test]
    fn sweep_endpoints() {
        let points =
            sweep_binomial(&counterexample_observations(), 3, &[0.0, 1.0], &SolverConfig::default()).unwrap();
        assert_eq!(points[0].upgrade, 0.0);
        assert_eq!(points[1].upgrade, 0.0);
        assert!(sweep_binomial(&counterexample_observations(), 2, &[1.2], &SolverConfig::default()).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let w = BinomialWeather::new(0.6).unwrap();
        let obs = counterexample_observations();
        let a = simulate_reactive_with(&obs, 3, w, &SolverConfig::default(), Execution::Sequential);
        let b = simulate_reactive_with(&obs, 3, w, &SolverConfig::default(), Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn grid() {
        assert_eq!(uniform_grid(3), vec![0.0, 0.5, 1.0]);
        assert_eq!(uniform_grid(21).len(), 21);
    }
}
