//! The comparison algorithms (greedy, stochastic, omniscient) and the
//! Upgrade / Improvement metrics.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{etg_from_gains, gain_curve, GainCurve, Instance, ProbabilityVector, Schedule};
use crate::par::Execution;
use crate::single_night::{best_single_night, NightPool};
use crate::solver::{solve_stochastic, SolveResult, SolverConfig};

/// Per-night gains and ETG of one algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub per_night_gains: Vec<i64>,
    /// `None` for the omniscient envelope, which is not a single schedule.
    pub schedule: Option<Schedule>,
    pub etg: f64,
    pub proven_optimal: bool,
}

impl StrategyOutcome {
    pub fn curve(&self, instance: &Instance) -> GainCurve {
        gain_curve(instance, &self.per_night_gains)
    }

    pub fn cumulative(&self) -> Vec<i64> {
        self.per_night_gains
            .iter()
            .scan(0, |acc, g| {
                *acc += g;
                Some(*acc)
            })
            .collect()
    }
}

/// Plans each night as if it were the last: the best single night over the
/// observations left by earlier nights, repeated `M` times.
pub fn greedy_schedule(instance: &Instance) -> StrategyOutcome {
    let mut pool = NightPool::new(instance.observations.clone());
    let mut nights = Vec::with_capacity(instance.nights);
    let mut gains = Vec::with_capacity(instance.nights);
    for _ in 0..instance.nights {
        let plan = best_single_night(&pool);
        pool.remove_planned(&plan);
        gains.push(crate::model::night_gain(&plan, instance));
        nights.push(plan);
    }
    StrategyOutcome {
        etg: etg_from_gains(&instance.probabilities, &gains),
        per_night_gains: gains,
        schedule: Some(Schedule { nights }),
        proven_optimal: true,
    }
}

pub fn stochastic_outcome(instance: &Instance, result: &SolveResult) -> StrategyOutcome {
    StrategyOutcome {
        per_night_gains: result.night_gains(instance),
        schedule: Some(result.schedule.clone()),
        etg: result.etg,
        proven_optimal: result.proven_optimal,
    }
}

pub fn stochastic_schedule(instance: &Instance, config: &SolverConfig) -> StrategyOutcome {
    stochastic_outcome(instance, &solve_stochastic(instance, config))
}

/// Optimal total gain with exactly `m` certain nights, for `m = 1..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmniscientCurve {
    pub optimum: Vec<i64>,
    pub proven_optimal: bool,
}

impl OmniscientCurve {
    /// Evaluated on the increments, the same route as any schedule's ETG, so
    /// equal curves give bit-identical values.
    pub fn etg(&self, pi: &ProbabilityVector) -> f64 {
        etg_from_gains(pi, &self.increments())
    }

    pub fn increments(&self) -> Vec<i64> {
        let mut previous = 0;
        self.optimum
            .iter()
            .map(|&g| {
                let step = g - previous;
                previous = g;
                step
            })
            .collect()
    }

    pub fn curve(&self, pi: &ProbabilityVector) -> GainCurve {
        GainCurve::from_cumulative(pi, &self.optimum)
    }

    /// Increments between consecutive optima, so the envelope fits the
    /// per-night shape of [`StrategyOutcome`].
    pub fn as_outcome(&self, pi: &ProbabilityVector) -> StrategyOutcome {
        StrategyOutcome {
            per_night_gains: self.increments(),
            schedule: None,
            etg: self.etg(pi),
            proven_optimal: self.proven_optimal,
        }
    }
}

pub fn omniscient_curve(instance: &Instance, config: &SolverConfig) -> OmniscientCurve {
    omniscient_curve_with(instance, config, Execution::default())
}

/// Solves the `M` certain-night problems independently, possibly in parallel.
pub fn omniscient_curve_with(instance: &Instance, config: &SolverConfig, exec: Execution) -> OmniscientCurve {
    let results = exec.map_range(instance.nights, |i| {
        let m = i + 1;
        let certain = instance.with_probabilities(ProbabilityVector::certain(instance.nights, m));
        let result = solve_stochastic(&certain, config);
        let total: i64 = result.night_gains(&certain).iter().take(m).sum();
        (total, result.proven_optimal)
    });
    OmniscientCurve {
        optimum: results.iter().map(|r| r.0).collect(),
        proven_optimal: results.iter().all(|r| r.1),
    }
}

/// Relative ETG gain of `a1` over `a2`.
pub fn upgrade(etg_a1: f64, etg_a2: f64) -> Result<f64, Error> {
    if etg_a2 == 0.0 {
        return Err(Error::UndefinedMetric("upgrade over a zero ETG"));
    }
    Ok((etg_a1 - etg_a2) / etg_a2)
}

/// Fraction of the gap between `a2` and the omniscient envelope closed by `a1`.
pub fn improvement(etg_a1: f64, etg_a2: f64, etg_omniscient: f64) -> Result<f64, Error> {
    if etg_omniscient == etg_a2 {
        return Err(Error::UndefinedMetric("improvement with no gap to the omniscient envelope"));
    }
    Ok((etg_a1 - etg_a2) / (etg_omniscient - etg_a2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{counterexample_instance, validate_schedule, Observation};

    #[test]
    fn greedy_on_counterexample() {
        let inst = counterexample_instance(vec![0.0, 0.0, 1.0, 0.0]);
        let greedy = greedy_schedule(&inst);
        assert_eq!(greedy.per_night_gains, vec![4, 1, 1]);
        assert_eq!(greedy.cumulative(), vec![4, 5, 6]);
        assert_eq!(greedy.etg, 5.0);
        assert!(validate_schedule(&inst, greedy.schedule.as_ref().unwrap()).is_valid());
    }

    #[test]
    fn greedy_edge_cases() {
        let one = Instance::new(3, vec![0.0, 0.0, 0.0, 1.0], vec![Observation::new("x", 0, 4, 2, 7)]);
        assert_eq!(greedy_schedule(&one).per_night_gains, vec![7, 0, 0]);
        let none = Instance::new(2, vec![0.0, 0.0, 1.0], vec![]);
        assert_eq!(greedy_schedule(&none).per_night_gains, vec![0, 0]);
    }

    #[test]
    fn omniscient_on_counterexample() {
        let inst = counterexample_instance(vec![0.0, 0.0, 1.0, 0.0]);
        let curve = omniscient_curve(&inst, &SolverConfig::default());
        assert_eq!(curve.optimum, vec![4, 6, 6]);
        assert!(curve.proven_optimal);
        assert_eq!(curve.etg(&inst.probabilities), 6.0);
        let seq = omniscient_curve_with(&inst, &SolverConfig::default(), Execution::Sequential);
        assert_eq!(seq, curve);
    }

    #[test]
    fn omniscient_saturates() {
        let obs = vec![Observation::new("a", 0, 5, 1, 3), Observation::new("b", 0, 5, 2, 2)];
        let inst = Instance::new(3, vec![0.25, 0.25, 0.25, 0.25], obs);
        assert_eq!(omniscient_curve(&inst, &SolverConfig::default()).optimum, vec![5, 5, 5]);
    }

    #[test]
    fn metrics() {
        assert!((upgrade(6.0, 5.0).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(upgrade(3.5, 3.5).unwrap(), 0.0);
        assert!(upgrade(5.0, 0.0).is_err());
        assert_eq!(improvement(6.0, 5.0, 6.0).unwrap(), 1.0);
        assert_eq!(improvement(5.0, 5.0, 7.0).unwrap(), 0.0);
        assert!(improvement(5.0, 6.0, 6.0).is_err());
    }
}
