//! Domain types shared by every algorithm: observations, instances, night
//! plans and schedules, plus validation and Expected Total Gain evaluation.
//!
//! All times live on a shared integer grid that starts at 0 every night. An
//! observation occupies `[start, start + processing)` and must complete by its
//! deadline.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Absolute tolerance used when comparing probabilities and gains.
pub const TOLERANCE: f64 = 1e-9;

/// Identifier of an observation, unique within an instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObservationId(pub String);

impl ObservationId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObservationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObservationId {
    fn from(s: &str) -> Self {
        ObservationId(s.to_owned())
    }
}

/// One schedulable target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub id: ObservationId,
    pub release: i64,
    pub deadline: i64,
    pub processing: i64,
    pub gain: i64,
}

impl Observation {
    pub fn new(id: impl Into<String>, release: i64, deadline: i64, processing: i64, gain: i64) -> Self {
        Observation {
            id: ObservationId(id.into()),
            release,
            deadline,
            processing,
            gain,
        }
    }

    /// Latest start that still completes by the deadline.
    pub fn latest_start(&self) -> i64 {
        self.deadline - self.processing
    }
}

/// `pi[m]` is the probability that exactly `m` nights are observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(pub Vec<f64>);

impl ProbabilityVector {
    /// All mass on exactly `m` observable nights out of `nights`.
    pub fn certain(nights: usize, m: usize) -> Self {
        let mut pi = vec![0.0; nights + 1];
        pi[m] = 1.0;
        ProbabilityVector(pi)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of nights `M` this vector describes.
    pub fn nights(&self) -> usize {
        self.0.len().saturating_sub(1)
    }
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub nights: usize,
    pub probabilities: ProbabilityVector,
    pub observations: Vec<Observation>,
}

impl Instance {
    pub fn new(nights: usize, probabilities: Vec<f64>, observations: Vec<Observation>) -> Self {
        Instance {
            nights,
            probabilities: ProbabilityVector(probabilities),
            observations,
        }
    }

    /// Same observations and night count, different probabilities.
    pub fn with_probabilities(&self, probabilities: ProbabilityVector) -> Self {
        Instance {
            nights: probabilities.nights(),
            probabilities,
            observations: self.observations.clone(),
        }
    }

    pub fn observation(&self, id: &ObservationId) -> Option<&Observation> {
        self.observations.iter().find(|o| &o.id == id)
    }

    pub fn index_of(&self) -> HashMap<&ObservationId, usize> {
        self.observations.iter().enumerate().map(|(i, o)| (&o.id, i)).collect()
    }

    pub fn total_gain(&self) -> i64 {
        self.observations.iter().map(|o| o.gain).sum()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// An observation placed at a start time within a night.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedObservation {
    pub id: ObservationId,
    pub start: i64,
}

/// The placements of a single night, sorted by start time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NightPlan {
    pub placements: Vec<PlacedObservation>,
}

impl NightPlan {
    pub fn empty() -> Self {
        NightPlan::default()
    }

    pub fn new(mut placements: Vec<PlacedObservation>) -> Self {
        placements.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.id.cmp(&b.id)));
        NightPlan { placements }
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ObservationId> {
        self.placements.iter().map(|p| &p.id)
    }

    pub fn contains(&self, id: &ObservationId) -> bool {
        self.placements.iter().any(|p| &p.id == id)
    }
}

/// One plan per night, night 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub nights: Vec<NightPlan>,
}

impl Schedule {
    pub fn empty(nights: usize) -> Self {
        Schedule {
            nights: vec![NightPlan::empty(); nights],
        }
    }

    pub fn placed_ids(&self) -> impl Iterator<Item = &ObservationId> {
        self.nights.iter().flat_map(|n| n.ids())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("schedule serializes")
    }
}

/// A single broken invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoNights,
    DuplicateObservationId { id: ObservationId },
    ReleaseNotBeforeDeadline { id: ObservationId, release: i64, deadline: i64 },
    ProcessingOutOfRange { id: ObservationId, processing: i64, window: i64 },
    GainNotPositive { id: ObservationId, gain: i64 },
    ProbabilityLength { expected: usize, actual: usize },
    ProbabilityOutOfRange { index: usize, value: f64 },
    ProbabilitiesDoNotSumToOne { sum: f64 },
    NightCount { expected: usize, actual: usize },
    UnknownObservation { night: usize, id: ObservationId },
    StartsBeforeRelease { night: usize, id: ObservationId, start: i64, release: i64 },
    EndsAfterDeadline { night: usize, id: ObservationId, end: i64, deadline: i64 },
    Overlap { night: usize, first: ObservationId, second: ObservationId },
    NotSortedByStart { night: usize },
    ScheduledMoreThanOnce { id: ObservationId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoNights => write!(f, "nights must be at least 1"),
            DuplicateObservationId { id } => write!(f, "observation id {id} is not unique"),
            ReleaseNotBeforeDeadline { id, release, deadline } => {
                write!(f, "{id}: release < deadline violated ({release} >= {deadline})")
            }
            ProcessingOutOfRange { id, processing, window } => {
                write!(f, "{id}: processing {processing} outside [1, {window}]")
            }
            GainNotPositive { id, gain } => write!(f, "{id}: gain {gain} is not >= 1"),
            ProbabilityLength { expected, actual } => {
                write!(f, "probabilities have length {actual}, expected nights + 1 = {expected}")
            }
            ProbabilityOutOfRange { index, value } => {
                write!(f, "probability pi[{index}] = {value} outside [0, 1]")
            }
            ProbabilitiesDoNotSumToOne { sum } => write!(f, "probabilities sum to {sum}, not 1"),
            NightCount { expected, actual } => {
                write!(f, "schedule has {actual} nights, instance has {expected}")
            }
            UnknownObservation { night, id } => write!(f, "night {night}: unknown observation {id}"),
            StartsBeforeRelease { night, id, start, release } => {
                write!(f, "night {night}: {id} starts at {start} before release {release}")
            }
            EndsAfterDeadline { night, id, end, deadline } => {
                write!(f, "night {night}: {id} ends at {end} after deadline {deadline}")
            }
            Overlap { night, first, second } => write!(f, "night {night}: {first} overlaps {second}"),
            NotSortedByStart { night } => write!(f, "night {night}: placements not sorted by start"),
            ScheduledMoreThanOnce { id } => write!(f, "{id} is scheduled in more than one night"),
        }
    }
}

/// Outcome of a validation pass. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_probabilities(pi: &ProbabilityVector, nights: usize) -> Vec<Violation> {
    let mut violations = Vec::new();
    if pi.0.len() != nights + 1 {
        violations.push(Violation::ProbabilityLength {
            expected: nights + 1,
            actual: pi.0.len(),
        });
    }
    for (index, &value) in pi.0.iter().enumerate() {
        if !(-TOLERANCE..=1.0 + TOLERANCE).contains(&value) {
            violations.push(Violation::ProbabilityOutOfRange { index, value });
        }
    }
    let sum: f64 = pi.0.iter().sum();
    if !((sum - 1.0).abs() <= TOLERANCE) {
        violations.push(Violation::ProbabilitiesDoNotSumToOne { sum });
    }
    violations
}

/// Checks every instance invariant and reports all violations found.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    if instance.nights == 0 {
        violations.push(Violation::NoNights);
    }
    let mut seen = HashSet::new();
    for o in &instance.observations {
        if !seen.insert(&o.id) {
            violations.push(Violation::DuplicateObservationId { id: o.id.clone() });
        }
        if o.release >= o.deadline {
            violations.push(Violation::ReleaseNotBeforeDeadline {
                id: o.id.clone(),
                release: o.release,
                deadline: o.deadline,
            });
        }
        let window = o.deadline - o.release;
        if o.processing < 1 || o.processing > window {
            violations.push(Violation::ProcessingOutOfRange {
                id: o.id.clone(),
                processing: o.processing,
                window,
            });
        }
        if o.gain < 1 {
            violations.push(Violation::GainNotPositive { id: o.id.clone(), gain: o.gain });
        }
    }
    violations.extend(validate_probabilities(&instance.probabilities, instance.nights));
    ValidationReport { violations }
}

fn validate_night(
    night: usize,
    plan: &NightPlan,
    index: &HashMap<&ObservationId, usize>,
    instance: &Instance,
    violations: &mut Vec<Violation>,
) {
    let mut previous: Option<(&ObservationId, i64, i64)> = None;
    for placed in &plan.placements {
        let Some(&j) = index.get(&placed.id) else {
            violations.push(Violation::UnknownObservation { night, id: placed.id.clone() });
            continue;
        };
        let o = &instance.observations[j];
        let end = placed.start + o.processing;
        if placed.start < o.release {
            violations.push(Violation::StartsBeforeRelease {
                night,
                id: o.id.clone(),
                start: placed.start,
                release: o.release,
            });
        }
        if end > o.deadline {
            violations.push(Violation::EndsAfterDeadline {
                night,
                id: o.id.clone(),
                end,
                deadline: o.deadline,
            });
        }
        if let Some((prev_id, prev_start, prev_end)) = previous {
            if placed.start < prev_start {
                violations.push(Violation::NotSortedByStart { night });
            } else if prev_end > placed.start {
                violations.push(Violation::Overlap {
                    night,
                    first: prev_id.clone(),
                    second: o.id.clone(),
                });
            }
        }
        previous = Some((&o.id, placed.start, end));
    }
}

/// Checks a schedule against an instance. Nights are reported 1-indexed.
pub fn validate_schedule(instance: &Instance, schedule: &Schedule) -> ValidationReport {
    let mut violations = Vec::new();
    if schedule.nights.len() != instance.nights {
        violations.push(Violation::NightCount {
            expected: instance.nights,
            actual: schedule.nights.len(),
        });
    }
    let index = instance.index_of();
    for (i, plan) in schedule.nights.iter().enumerate() {
        validate_night(i + 1, plan, &index, instance, &mut violations);
    }
    let mut seen = HashSet::new();
    let mut reported = HashSet::new();
    for id in schedule.placed_ids() {
        if !seen.insert(id) && reported.insert(id) {
            violations.push(Violation::ScheduledMoreThanOnce { id: id.clone() });
        }
    }
    ValidationReport { violations }
}

/// Sum of the gains of the observations placed in `plan`. Unknown ids count 0.
pub fn night_gain(plan: &NightPlan, instance: &Instance) -> i64 {
    plan.ids()
        .filter_map(|id| instance.observation(id))
        .map(|o| o.gain)
        .sum()
}

pub fn night_gains(schedule: &Schedule, instance: &Instance) -> Vec<i64> {
    let index = instance.index_of();
    schedule
        .nights
        .iter()
        .map(|plan| {
            plan.ids()
                .filter_map(|id| index.get(id))
                .map(|&j| instance.observations[j].gain)
                .sum()
        })
        .collect()
}

/// `tail[i - 1]` is the probability that night `i` is realized, i.e. that at
/// least `i` nights are observable. Non-increasing in `i`.
pub fn tail_probabilities(pi: &ProbabilityVector) -> Vec<f64> {
    let m = pi.nights();
    let mut tails = vec![0.0; m];
    let mut acc = 0.0;
    for i in (1..=m).rev() {
        acc += pi.0[i];
        tails[i - 1] = acc;
    }
    tails
}

/// Expected Total Gain of per-night gains under `pi`, via tail probabilities.
///
/// Every exact search in this crate evaluates leaves through this function so
/// that equal gain vectors always produce bit-identical values.
pub fn etg_from_gains(pi: &ProbabilityVector, gains: &[i64]) -> f64 {
    tail_probabilities(pi)
        .iter()
        .zip(gains)
        .map(|(t, &g)| t * g as f64)
        .sum()
}

/// Same value as [`etg_from_gains`] computed as the double sum over the
/// number of observable nights `m` of `pi[m]` times the cumulative gain.
pub fn etg_double_sum(pi: &ProbabilityVector, gains: &[i64]) -> f64 {
    let mut total = 0.0;
    for m in 1..=pi.nights() {
        let cumulative: i64 = gains.iter().take(m).sum();
        total += pi.0[m] * cumulative as f64;
    }
    total
}

pub fn expected_total_gain(instance: &Instance, schedule: &Schedule) -> f64 {
    etg_from_gains(&instance.probabilities, &night_gains(schedule, instance))
}

/// One step of a cumulative gain curve: `cumulative_gain` when exactly
/// `nights` are observable, which happens with probability `probability`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveStep {
    pub nights: usize,
    pub cumulative_gain: i64,
    pub probability: f64,
}

/// Step curve whose weighted area equals the Expected Total Gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCurve {
    pub steps: Vec<CurveStep>,
}

impl GainCurve {
    /// Builds the curve from cumulative values `G_1..G_M`; `G_0 = 0` is added.
    pub fn from_cumulative(pi: &ProbabilityVector, cumulative: &[i64]) -> Self {
        let mut steps = Vec::with_capacity(cumulative.len() + 1);
        steps.push(CurveStep {
            nights: 0,
            cumulative_gain: 0,
            probability: pi.0.first().copied().unwrap_or(0.0),
        });
        for (i, &g) in cumulative.iter().enumerate() {
            steps.push(CurveStep {
                nights: i + 1,
                cumulative_gain: g,
                probability: pi.0.get(i + 1).copied().unwrap_or(0.0),
            });
        }
        GainCurve { steps }
    }

    pub fn cumulative(&self) -> Vec<i64> {
        self.steps.iter().map(|s| s.cumulative_gain).collect()
    }

    pub fn area(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.probability * s.cumulative_gain as f64)
            .sum()
    }
}

pub fn gain_curve(instance: &Instance, per_night_gains: &[i64]) -> GainCurve {
    let cumulative: Vec<i64> = per_night_gains
        .iter()
        .scan(0, |acc, &g| {
            *acc += g;
            Some(*acc)
        })
        .collect();
    GainCurve::from_cumulative(&instance.probabilities, &cumulative)
}

/// Compares two observations by non-increasing gain density `w / p`, ties by id.
pub fn density_order(a: &Observation, b: &Observation) -> Ordering {
    // w_a / p_a > w_b / p_b  <=>  w_a * p_b > w_b * p_a
    (b.gain * a.processing)
        .cmp(&(a.gain * b.processing))
        .then_with(|| a.id.cmp(&b.id))
}

/// Canonical enumeration order of observation indices shared by every exact
/// search: non-increasing `w / p`, ties by id.
///
/// Exact solvers branch on observations in this order and try nights
/// `1..=M` before "unscheduled"; among schedules whose Expected Total Gain
/// ties within [`TOLERANCE`], the first one met in that order is returned.
pub fn canonical_order(instance: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.observations.len()).collect();
    order.sort_by(|&a, &b| density_order(&instance.observations[a], &instance.observations[b]));
    order
}

/// The counterexample from the original study: four stars over three nights.
pub fn counterexample_observations() -> Vec<Observation> {
    vec![
        Observation::new("A", 0, 3, 2, 1),
        Observation::new("B", 1, 3, 2, 1),
        Observation::new("C", 0, 2, 1, 2),
        Observation::new("D", 1, 3, 1, 2),
    ]
}

pub fn counterexample_instance(probabilities: Vec<f64>) -> Instance {
    Instance::new(probabilities.len() - 1, probabilities, counterexample_observations())
}
