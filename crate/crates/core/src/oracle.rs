//! Exhaustive reference implementations for certifying the solvers on small
//! inputs. Nothing here reuses the search, sequencing or scenario code of the
//! other modules; only the core model types and ETG evaluation are shared.
//!
//! Night feasibility is decided by trying every integer start time of every
//! observation. Schedules are enumerated as full assignments in
//! [`canonical_order`], nights `1..=M` before "unscheduled", and the first
//! schedule that beats the incumbent by more than [`TOLERANCE`] is kept, the
//! same tie convention the branch-and-bound documents.

use crate::error::Error;
use crate::model::{
    canonical_order, etg_from_gains, Instance, NightPlan, Observation, PlacedObservation, ProbabilityVector, Schedule,
    TOLERANCE,
};

pub const MAX_OBSERVATIONS: usize = 8;
pub const MAX_NIGHTS: usize = 3;
pub const MAX_NIGHT_LENGTH: i64 = 5;

/// Which schedules the enumeration accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleOptions {
    /// Only accept schedules with non-increasing night gains.
    pub decreasing_gain: bool,
}

impl OracleOptions {
    pub fn decreasing_gain() -> Self {
        OracleOptions { decreasing_gain: true }
    }
}

fn check_guard(observations: &[Observation], nights: usize) -> Result<(), Error> {
    if observations.len() > MAX_OBSERVATIONS {
        return Err(Error::OracleGuard(format!(
            "{} observations (max {MAX_OBSERVATIONS})",
            observations.len()
        )));
    }
    if nights > MAX_NIGHTS {
        return Err(Error::OracleGuard(format!("{nights} nights (max {MAX_NIGHTS})")));
    }
    if let Some(o) = observations
        .iter()
        .find(|o| o.release < 0 || o.deadline > MAX_NIGHT_LENGTH)
    {
        return Err(Error::OracleGuard(format!(
            "{} has window [{}, {}] outside [0, {MAX_NIGHT_LENGTH}]",
            o.id, o.release, o.deadline
        )));
    }
    Ok(())
}

/// Tries every start time of `members[k..]`, keeping pairwise disjointness.
fn place_all(observations: &[Observation], members: &[usize], starts: &mut Vec<i64>) -> bool {
    let k = starts.len();
    if k == members.len() {
        return true;
    }
    let o = &observations[members[k]];
    for start in o.release..=o.deadline - o.processing {
        let end = start + o.processing;
        let clash = starts.iter().zip(members).any(|(&s, &j)| {
            let other_end = s + observations[j].processing;
            start < other_end && s < end
        });
        if clash {
            continue;
        }
        starts.push(start);
        if place_all(observations, members, starts) {
            return true;
        }
        starts.pop();
    }
    false
}

fn placement(observations: &[Observation], mask: usize) -> Option<Vec<(usize, i64)>> {
    let members: Vec<usize> = (0..observations.len()).filter(|j| mask & (1 << j) != 0).collect();
    let mut starts = Vec::with_capacity(members.len());
    place_all(observations, &members, &mut starts).then(|| members.into_iter().zip(starts).collect())
}

struct Enumeration<'a> {
    observations: &'a [Observation],
    pi: &'a ProbabilityVector,
    options: OracleOptions,
    feasible: Vec<bool>,
    order: Vec<usize>,
    nights: usize,
    night_of: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Enumeration<'_> {
    fn visit(&mut self, k: usize) {
        if k == self.order.len() {
            self.leaf();
            return;
        }
        // nights first, then `self.nights` meaning unscheduled
        for value in 0..=self.nights {
            self.night_of[self.order[k]] = value;
            self.visit(k + 1);
        }
    }

    fn leaf(&mut self) {
        let mut masks = vec![0usize; self.nights];
        let mut gains = vec![0i64; self.nights];
        for (j, &night) in self.night_of.iter().enumerate() {
            if night < self.nights {
                masks[night] |= 1 << j;
                gains[night] += self.observations[j].gain;
            }
        }
        if masks.iter().any(|&m| !self.feasible[m]) {
            return;
        }
        if self.options.decreasing_gain && gains.windows(2).any(|w| w[0] < w[1]) {
            return;
        }
        let value = etg_from_gains(self.pi, &gains);
        let better = match &self.best {
            None => true,
            Some((best, _)) => value > best + TOLERANCE,
        };
        if better {
            self.best = Some((value, self.night_of.clone()));
        }
    }
}

/// Maximum Expected Total Gain by exhaustive enumeration, with a maximizer.
pub fn brute_force_etg(instance: &Instance, options: OracleOptions) -> Result<(f64, Schedule), Error> {
    check_guard(&instance.observations, instance.nights)?;
    let s = instance.observations.len();
    let feasible = (0..1usize << s)
        .map(|mask| placement(&instance.observations, mask).is_some())
        .collect();
    let mut search = Enumeration {
        observations: &instance.observations,
        pi: &instance.probabilities,
        options,
        feasible,
        order: canonical_order(instance),
        nights: instance.nights,
        night_of: vec![instance.nights; s],
        best: None,
    };
    search.visit(0);
    let (value, night_of) = search.best.expect("the empty schedule is always feasible");
    let nights = (0..instance.nights)
        .map(|i| {
            let mask = night_of
                .iter()
                .enumerate()
                .filter(|&(_, &n)| n == i)
                .fold(0usize, |m, (j, _)| m | (1 << j));
            let placed = placement(&instance.observations, mask).expect("leaf nights are feasible");
            NightPlan::new(
                placed
                    .into_iter()
                    .map(|(j, start)| PlacedObservation {
                        id: instance.observations[j].id.clone(),
                        start,
                    })
                    .collect(),
            )
        })
        .collect();
    Ok((value, Schedule { nights }))
}

fn binomial(m: usize, p: f64) -> ProbabilityVector {
    // C(m, k) by Pascal's triangle
    let mut row = vec![1.0f64];
    for _ in 0..m {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    ProbabilityVector(
        row.iter()
            .enumerate()
            .map(|(k, c)| c * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32))
            .collect(),
    )
}

fn reactive_walk(
    pool: Vec<Observation>,
    nights_left: usize,
    pending: Option<Vec<Observation>>,
    probability: f64,
    gain: i64,
    p: f64,
    options: OracleOptions,
) -> Result<f64, Error> {
    if nights_left == 0 {
        return Ok(probability * gain as f64);
    }
    let plan = match pending {
        Some(plan) => plan,
        None => {
            let sub = Instance {
                nights: nights_left,
                probabilities: binomial(nights_left, p),
                observations: pool.clone(),
            };
            let (_, schedule) = brute_force_etg(&sub, options)?;
            schedule.nights[0]
                .ids()
                .map(|id| pool.iter().find(|o| &o.id == id).cloned().expect("planned from pool"))
                .collect()
        }
    };
    let planned_gain: i64 = plan.iter().map(|o| o.gain).sum();
    let rest: Vec<Observation> = pool.iter().filter(|o| !plan.iter().any(|q| q.id == o.id)).cloned().collect();
    let clear = reactive_walk(rest, nights_left - 1, None, probability * p, gain + planned_gain, p, options)?;
    let bad = reactive_walk(pool, nights_left - 1, Some(plan), probability * (1.0 - p), gain, p, options)?;
    Ok(clear + bad)
}

/// Expected gain of the reactive strategy by walking every scenario, with
/// exhaustive inner solves.
pub fn brute_force_reactive(
    observations: &[Observation],
    nights: usize,
    p_clear: f64,
    options: OracleOptions,
) -> Result<f64, Error> {
    check_guard(observations, nights)?;
    if !(0.0..=1.0).contains(&p_clear) {
        return Err(Error::InvalidParameters(format!("p_clear {p_clear} outside [0, 1]")));
    }
    reactive_walk(observations.to_vec(), nights, None, 1.0, 0, p_clear, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{counterexample_instance, counterexample_observations, validate_schedule};

    #[test]
    fn counterexample_certain_three() {
        let inst = counterexample_instance(vec![0.0, 0.0, 1.0, 0.0]);
        let (value, schedule) = brute_force_etg(&inst, OracleOptions::default()).unwrap();
        assert_eq!(value, 6.0);
        assert!(validate_schedule(&inst, &schedule).is_valid());
    }

    #[test]
    fn counterexample_half_and_half() {
        let inst = counterexample_instance(vec![0.0, 0.5, 0.5, 0.0]);
        let (value, _) = brute_force_etg(&inst, OracleOptions::default()).unwrap();
        assert!((value - 4.5).abs() < 1e-12);
    }

    #[test]
    fn empty_instance() {
        let inst = Instance::new(2, vec![0.0, 0.0, 1.0], vec![]);
        let (value, schedule) = brute_force_etg(&inst, OracleOptions::default()).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(schedule, Schedule::empty(2));
    }

    #[test]
    fn guard_refuses_large_inputs() {
        let obs: Vec<Observation> = (0..9).map(|i| Observation::new(format!("x{i}"), 0, 5, 1, 1)).collect();
        assert!(brute_force_etg(&Instance::new(1, vec![0.0, 1.0], obs), OracleOptions::default()).is_err());
        let long = vec![Observation::new("x", 0, 6, 1, 1)];
        assert!(brute_force_etg(&Instance::new(1, vec![0.0, 1.0], long), OracleOptions::default()).is_err());
        assert!(brute_force_reactive(&counterexample_observations(), 4, 0.5, OracleOptions::default()).is_err());
    }

    #[test]
    fn reactive_endpoints() {
        let obs = counterexample_observations();
        assert_eq!(brute_force_reactive(&obs, 3, 0.0, OracleOptions::default()).unwrap(), 0.0);
        let certain = counterexample_instance(vec![0.0, 0.0, 0.0, 1.0]);
        let (opt, _) = brute_force_etg(&certain, OracleOptions::default()).unwrap();
        assert_eq!(brute_force_reactive(&obs, 3, 1.0, OracleOptions::default()).unwrap(), opt);
    }

    #[test]
    fn pascal_binomial() {
        let pi = binomial(4, 0.3);
        let expected = [0.2401, 0.4116, 0.2646, 0.0756, 0.0081];
        assert!(pi.0.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
