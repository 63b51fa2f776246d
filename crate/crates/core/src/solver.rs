//! Exact branch-and-bound for the full stochastic problem: maximize the
//! Expected Total Gain over all M-night schedules.
//!
//! The search branches on observations in [`canonical_order`], trying nights
//! `1..=M` and then "unscheduled" for each one. A node is bounded by the
//! current ETG plus the LP relaxation of packing the remaining observations
//! into the residual night capacities: the densest observations go to the
//! nights with the largest tail probabilities, which is optimal for that
//! relaxation because the tails are non-increasing.
//!
//! Three redundant rules can be toggled:
//!
//! * **DG** (decreasing gain): only schedules whose night gains are
//!   non-increasing are accepted. A partial assignment is cut as soon as an
//!   earlier night can no longer catch up with a later one.
//! * **BO** (bounded observations): at most [`bound_max_obs`] observations per
//!   night.
//! * **ICG** (increasing cumulative gain): cumulative gains must be
//!   non-decreasing. Always true for positive gains, so it only re-checks
//!   candidate incumbents.
//!
//! Ties are resolved by keeping the first schedule met in enumeration order;
//! a later schedule replaces the incumbent only if it is better by more than
//! [`TOLERANCE`]. Nodes are pruned only when no leaf below them could do
//! that, so the returned schedule does not depend on the pruning rules beyond
//! the DG filter.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::model::{
    canonical_order, etg_from_gains, expected_total_gain, night_gains, tail_probabilities, Instance, NightPlan,
    Observation, ProbabilityVector, Schedule, TOLERANCE,
};
use crate::single_night::{is_sequence_feasible, sequence_feasible};

/// Search limits and redundant-constraint toggles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Wall-clock limit in seconds; 0 means unlimited.
    pub time_limit: f64,
    pub use_dg: bool,
    pub use_bo: bool,
    pub use_icg: bool,
    pub node_limit: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit: 0.0,
            use_dg: true,
            use_bo: true,
            use_icg: true,
            node_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn with_toggles(use_dg: bool, use_bo: bool, use_icg: bool) -> Self {
        SolverConfig {
            use_dg,
            use_bo,
            use_icg,
            ..SolverConfig::default()
        }
    }

    /// All eight DG/BO/ICG combinations, DG-BO-ICG all on first.
    pub fn all_toggle_combinations() -> Vec<SolverConfig> {
        let mut configs = Vec::with_capacity(8);
        for dg in [true, false] {
            for bo in [true, false] {
                for icg in [true, false] {
                    configs.push(SolverConfig::with_toggles(dg, bo, icg));
                }
            }
        }
        configs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// A time or node limit stopped the search; the schedule is the best found.
    LimitReached,
    /// The instance has no observations; the schedule is empty.
    NoObservations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub schedule: Schedule,
    pub etg: f64,
    pub proven_optimal: bool,
    pub nodes_explored: u64,
    /// Seconds.
    pub elapsed: f64,
    pub status: SolveStatus,
}

impl SolveResult {
    pub fn night_gains(&self, instance: &Instance) -> Vec<i64> {
        night_gains(&self.schedule, instance)
    }
}

/// Horizon used by the cardinality bound: latest deadline minus earliest release.
pub fn horizon(observations: &[Observation]) -> i64 {
    let earliest = observations.iter().map(|o| o.release).min().unwrap_or(0);
    let latest = observations.iter().map(|o| o.deadline).max().unwrap_or(0);
    latest - earliest
}

/// Largest `k` such that the `k` shortest processing times fit in the horizon.
pub fn bound_max_obs(instance: &Instance) -> usize {
    let h = horizon(&instance.observations);
    let mut processing: Vec<i64> = instance.observations.iter().map(|o| o.processing).collect();
    processing.sort_unstable();
    let mut total = 0;
    processing
        .iter()
        .take_while(|&&p| {
            total += p;
            total <= h
        })
        .count()
}

fn non_increasing(gains: &[i64]) -> bool {
    gains.windows(2).all(|w| w[0] >= w[1])
}

/// True iff night gains are non-increasing with the night index.
pub fn check_decreasing_gain(schedule: &Schedule, instance: &Instance) -> bool {
    non_increasing(&night_gains(schedule, instance))
}

/// Stable sort of the nights by non-increasing gain. Never lowers the ETG.
pub fn normalize_night_order(schedule: &Schedule, instance: &Instance) -> Schedule {
    let gains = night_gains(schedule, instance);
    let mut order: Vec<usize> = (0..schedule.nights.len()).collect();
    order.sort_by(|&a, &b| gains[b].cmp(&gains[a]));
    Schedule {
        nights: order.into_iter().map(|i| schedule.nights[i].clone()).collect(),
    }
}

#[derive(Debug, Clone, Default)]
struct NightState {
    members: Vec<usize>,
    mask: u128,
    gain: i64,
    used: i64,
}

struct Incumbent {
    etg: f64,
    nights: Vec<Vec<usize>>,
}

struct Search<'a> {
    observations: &'a [Observation],
    pi: &'a ProbabilityVector,
    config: SolverConfig,
    order: Vec<usize>,
    /// `suffix_gain[d]` is the total gain of `order[d..]`.
    suffix_gain: Vec<i64>,
    tails: Vec<f64>,
    horizon: i64,
    max_per_night: usize,
    nights: Vec<NightState>,
    fits_cache: HashMap<u128, bool>,
    best: Option<Incumbent>,
    nodes: u64,
    started: Instant,
    aborted: bool,
}

impl<'a> Search<'a> {
    fn new(instance: &'a Instance, config: SolverConfig) -> Self {
        let order = canonical_order(instance);
        let mut suffix_gain = vec![0; order.len() + 1];
        for d in (0..order.len()).rev() {
            suffix_gain[d] = suffix_gain[d + 1] + instance.observations[order[d]].gain;
        }
        Search {
            observations: &instance.observations,
            pi: &instance.probabilities,
            config,
            order,
            suffix_gain,
            tails: tail_probabilities(&instance.probabilities),
            horizon: horizon(&instance.observations),
            max_per_night: if config.use_bo { bound_max_obs(instance) } else { usize::MAX },
            nights: vec![NightState::default(); instance.nights],
            fits_cache: HashMap::new(),
            best: None,
            nodes: 0,
            started: Instant::now(),
            aborted: false,
        }
    }

    fn limit_hit(&self) -> bool {
        if let Some(limit) = self.config.node_limit {
            if self.nodes > limit {
                return true;
            }
        }
        self.config.time_limit > 0.0
            && self.nodes.is_multiple_of(256)
            && self.started.elapsed().as_secs_f64() >= self.config.time_limit
    }

    fn fits(&mut self, night: usize, x: usize) -> bool {
        let state = &self.nights[night];
        if state.members.len() >= self.max_per_night {
            return false;
        }
        if state.used + self.observations[x].processing > self.horizon {
            return false;
        }
        let cacheable = self.observations.len() <= 128;
        let key = state.mask | (1u128 << (x % 128));
        if cacheable {
            if let Some(&known) = self.fits_cache.get(&key) {
                return known;
            }
        }
        let jobs: Vec<&Observation> = state
            .members
            .iter()
            .chain(std::iter::once(&x))
            .map(|&j| &self.observations[j])
            .collect();
        let ok = is_sequence_feasible(&jobs);
        if cacheable {
            self.fits_cache.insert(key, ok);
        }
        ok
    }

    fn assign(&mut self, night: usize, x: usize) {
        let o = &self.observations[x];
        let state = &mut self.nights[night];
        state.members.push(x);
        state.mask |= 1u128 << (x % 128);
        state.gain += o.gain;
        state.used += o.processing;
    }

    fn unassign(&mut self, night: usize, x: usize) {
        let o = &self.observations[x];
        let state = &mut self.nights[night];
        state.members.pop();
        state.mask &= !(1u128 << (x % 128));
        state.gain -= o.gain;
        state.used -= o.processing;
    }

    /// Under DG, true if some earlier night can no longer reach the gain of
    /// the night after it with the observations still unassigned.
    fn violates_dg(&self, next_depth: usize) -> bool {
        let remaining = self.suffix_gain[next_depth];
        self.nights.windows(2).any(|w| w[0].gain + remaining < w[1].gain)
    }

    fn upper_bound(&self, next_depth: usize) -> f64 {
        let mut bound: f64 = self.tails.iter().zip(&self.nights).map(|(t, n)| t * n.gain as f64).sum();
        let mut k = next_depth;
        let mut left = 1.0;
        for (tail, night) in self.tails.iter().zip(&self.nights) {
            if *tail <= 0.0 || k >= self.order.len() {
                break;
            }
            let mut capacity = (self.horizon - night.used) as f64;
            while capacity > 0.0 && k < self.order.len() {
                let o = &self.observations[self.order[k]];
                let need = o.processing as f64 * left;
                if need <= capacity {
                    bound += tail * o.gain as f64 * left;
                    capacity -= need;
                    k += 1;
                    left = 1.0;
                } else {
                    let fraction = capacity / o.processing as f64;
                    bound += tail * o.gain as f64 * fraction;
                    left -= fraction;
                    capacity = 0.0;
                }
            }
        }
        bound
    }

    fn can_improve(&self, next_depth: usize) -> bool {
        match &self.best {
            None => true,
            Some(best) => {
                let slack = 1e-11 * (1.0 + best.etg.abs());
                self.upper_bound(next_depth) > best.etg + TOLERANCE - slack
            }
        }
    }

    fn leaf(&mut self) {
        let gains: Vec<i64> = self.nights.iter().map(|n| n.gain).collect();
        if self.config.use_dg && !non_increasing(&gains) {
            return;
        }
        if self.config.use_icg {
            let cumulative_ok = gains.iter().all(|&g| g >= 0);
            if !cumulative_ok {
                return;
            }
        }
        let etg = etg_from_gains(self.pi, &gains);
        let improves = match &self.best {
            None => true,
            Some(best) => etg > best.etg + TOLERANCE,
        };
        if improves {
            self.best = Some(Incumbent {
                etg,
                nights: self.nights.iter().map(|n| n.members.clone()).collect(),
            });
        }
    }

    fn descend(&mut self, next_depth: usize) {
        if self.config.use_dg && self.violates_dg(next_depth) {
            return;
        }
        if self.can_improve(next_depth) {
            self.search(next_depth);
        }
    }

    fn search(&mut self, depth: usize) {
        self.nodes += 1;
        if self.limit_hit() {
            self.aborted = true;
        }
        if self.aborted {
            return;
        }
        if depth == self.order.len() {
            self.leaf();
            return;
        }
        let x = self.order[depth];
        for night in 0..self.nights.len() {
            if !self.config.use_dg && self.symmetric_to_earlier(night) {
                continue;
            }
            if !self.fits(night, x) {
                continue;
            }
            self.assign(night, x);
            self.descend(depth + 1);
            self.unassign(night, x);
            if self.aborted {
                return;
            }
        }
        self.descend(depth + 1);
    }

    /// An empty night whose tail equals that of an earlier empty night leads
    /// to the same schedules, up to swapping the two nights, as that earlier
    /// night, which is explored first.
    fn symmetric_to_earlier(&self, night: usize) -> bool {
        if !self.nights[night].members.is_empty() {
            return false;
        }
        (0..night).any(|j| self.nights[j].members.is_empty() && self.tails[j] == self.tails[night])
    }
}

fn build_schedule(instance: &Instance, nights: &[Vec<usize>]) -> Schedule {
    Schedule {
        nights: nights
            .iter()
            .map(|members| {
                let chosen: Vec<Observation> = members.iter().map(|&j| instance.observations[j].clone()).collect();
                sequence_feasible(&chosen).expect("night members were checked feasible")
            })
            .collect(),
    }
}

/// Maximizes the Expected Total Gain of `instance`.
///
/// Deterministic for a given instance and configuration unless a time limit
/// interrupts the search.
pub fn solve_stochastic(instance: &Instance, config: &SolverConfig) -> SolveResult {
    let started = Instant::now();
    if instance.observations.is_empty() {
        return SolveResult {
            schedule: Schedule::empty(instance.nights),
            etg: 0.0,
            proven_optimal: true,
            nodes_explored: 0,
            elapsed: started.elapsed().as_secs_f64(),
            status: SolveStatus::NoObservations,
        };
    }
    let mut search = Search::new(instance, *config);
    search.search(0);
    let aborted = search.aborted;
    let nodes = search.nodes;
    let schedule = match search.best {
        Some(best) => build_schedule(instance, &best.nights),
        None => Schedule {
            nights: vec![NightPlan::empty(); instance.nights],
        },
    };
    SolveResult {
        etg: expected_total_gain(instance, &schedule),
        schedule,
        proven_optimal: !aborted,
        nodes_explored: nodes,
        elapsed: started.elapsed().as_secs_f64(),
        status: if aborted { SolveStatus::LimitReached } else { SolveStatus::Optimal },
    }
}
