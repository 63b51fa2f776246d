//! Exact solver for one night: choose and sequence a maximum-gain subset of
//! observations (`1 | r_j, d_j | sum w_j U_j`).

use std::collections::HashSet;

use crate::model::{NightPlan, Observation, ObservationId, PlacedObservation};

/// Observations still available for planning.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NightPool {
    pub candidates: Vec<Observation>,
}

impl NightPool {
    pub fn new(candidates: Vec<Observation>) -> Self {
        NightPool { candidates }
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    /// Drops every candidate whose id is planned in `plan`.
    pub fn remove_planned(&mut self, plan: &NightPlan) {
        let planned: HashSet<&ObservationId> = plan.ids().collect();
        self.candidates.retain(|o| !planned.contains(&o.id));
    }
}

fn edf_cmp(a: &Observation, b: &Observation) -> std::cmp::Ordering {
    a.deadline
        .cmp(&b.deadline)
        .then(a.release.cmp(&b.release))
        .then_with(|| a.id.cmp(&b.id))
}

/// Depth-first sequencing. `jobs` must already be in EDF order; each chosen job
/// starts as early as possible after the previous one, which is exact for a
/// fixed sequence.
fn sequence_dfs(jobs: &[&Observation], used: &mut [bool], starts: &mut [i64], now: i64, placed: usize) -> bool {
    if placed == jobs.len() {
        return true;
    }
    for (j, o) in jobs.iter().enumerate() {
        if !used[j] && now.max(o.release) + o.processing > o.deadline {
            return false;
        }
    }
    for j in 0..jobs.len() {
        if used[j] {
            continue;
        }
        let start = now.max(jobs[j].release);
        used[j] = true;
        starts[j] = start;
        if sequence_dfs(jobs, used, starts, start + jobs[j].processing, placed + 1) {
            return true;
        }
        used[j] = false;
    }
    false
}

/// Start times (aligned with the EDF-sorted jobs) if the jobs fit one night.
fn sequence_sorted(jobs: &[&Observation]) -> Option<Vec<i64>> {
    if jobs.is_empty() {
        return Some(Vec::new());
    }
    let earliest = jobs.iter().map(|o| o.release).min().unwrap();
    let latest = jobs.iter().map(|o| o.deadline).max().unwrap();
    if jobs.iter().map(|o| o.processing).sum::<i64>() > latest - earliest {
        return None;
    }
    let mut used = vec![false; jobs.len()];
    let mut starts = vec![0; jobs.len()];
    sequence_dfs(jobs, &mut used, &mut starts, earliest, 0).then_some(starts)
}

/// True iff all `jobs` can be placed in one night without overlap.
pub fn is_sequence_feasible(jobs: &[&Observation]) -> bool {
    let mut sorted = jobs.to_vec();
    sorted.sort_by(|a, b| edf_cmp(a, b));
    sequence_sorted(&sorted).is_some()
}

/// Places every observation of `subset` in a single night, or `None` if that is
/// impossible. The result is deterministic for a given set.
pub fn sequence_feasible(subset: &[Observation]) -> Option<NightPlan> {
    let mut sorted: Vec<&Observation> = subset.iter().collect();
    sorted.sort_by(|a, b| edf_cmp(a, b));
    let starts = sequence_sorted(&sorted)?;
    Some(NightPlan::new(
        sorted
            .iter()
            .zip(starts)
            .map(|(o, start)| PlacedObservation { id: o.id.clone(), start })
            .collect(),
    ))
}

struct BestSubset<'a> {
    candidates: Vec<&'a Observation>,
    suffix_gain: Vec<i64>,
    current: Vec<&'a Observation>,
    best: Vec<&'a Observation>,
    best_gain: i64,
    best_key: Vec<&'a ObservationId>,
}

impl<'a> BestSubset<'a> {
    fn consider(&mut self, gain: i64) {
        let better = match gain.cmp(&self.best_gain) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                if self.current.len() != self.best.len() {
                    self.current.len() < self.best.len()
                } else {
                    let mut key: Vec<&ObservationId> = self.current.iter().map(|o| &o.id).collect();
                    key.sort();
                    key < self.best_key
                }
            }
        };
        if better {
            self.best_gain = gain;
            self.best = self.current.clone();
            self.best_key = self.best.iter().map(|o| &o.id).collect();
            self.best_key.sort();
        }
    }

    fn search(&mut self, depth: usize, gain: i64) {
        if gain + self.suffix_gain[depth] < self.best_gain {
            return;
        }
        if depth == self.candidates.len() {
            self.consider(gain);
            return;
        }
        let next = self.candidates[depth];
        self.current.push(next);
        if is_sequence_feasible(&self.current) {
            self.search(depth + 1, gain + next.gain);
        }
        self.current.pop();
        self.search(depth + 1, gain);
    }
}

/// Maximum-gain plan for one night drawn from `pool`.
///
/// Ties on gain prefer fewer observations, then the lexicographically smallest
/// sorted id sequence.
pub fn best_single_night(pool: &NightPool) -> NightPlan {
    let mut candidates: Vec<&Observation> = pool.candidates.iter().collect();
    candidates.sort_by(|a, b| b.gain.cmp(&a.gain).then_with(|| a.id.cmp(&b.id)));
    let mut suffix_gain = vec![0; candidates.len() + 1];
    for i in (0..candidates.len()).rev() {
        suffix_gain[i] = suffix_gain[i + 1] + candidates[i].gain;
    }
    let mut search = BestSubset {
        candidates,
        suffix_gain,
        current: Vec::new(),
        best: Vec::new(),
        best_gain: 0,
        best_key: Vec::new(),
    };
    search.search(0, 0);
    let chosen: Vec<Observation> = search.best.into_iter().cloned().collect();
    sequence_feasible(&chosen).expect("chosen subset was checked feasible")
}
