//! Seeded random instances.
//!
//! Every draw comes from a PCG XSL RR 128/64 generator (`rand_pcg::Pcg64`)
//! seeded with `seed_from_u64`; integers are drawn with `rand` 0.9's
//! `random_range` and reals with `random::<f64>()`. Draw order, per
//! observation `j = 1..=S`: `(release, deadline)` together, rejected until
//! `release < deadline`; then processing; then gain. The probability block is
//! drawn after all observations.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{Instance, Observation, ProbabilityVector};
use crate::reactive::binomial_pi;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbabilityModel {
    /// `q_m ~ U[0, 1]` for `m = 0..=M`, normalized.
    UniformNormalized,
    /// `Binomial(M, p_clear)`; `p_clear ~ U[0, 1]` when not fixed.
    Binomial { p_clear: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub nights: usize,
    pub observations: usize,
    pub len_night: i64,
    pub max_gain: i64,
    pub seed: u64,
    pub probability_model: ProbabilityModel,
}

impl GenParams {
    pub fn new(nights: usize, observations: usize, len_night: i64, max_gain: i64, seed: u64) -> Self {
        GenParams {
            nights,
            observations,
            len_night,
            max_gain,
            seed,
            probability_model: ProbabilityModel::UniformNormalized,
        }
    }

    pub fn binomial(self, p_clear: Option<f64>) -> Self {
        GenParams {
            probability_model: ProbabilityModel::Binomial { p_clear },
            ..self
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GenParams { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let mut problems = Vec::new();
        if self.nights < 1 {
            problems.push("nights must be >= 1");
        }
        if self.observations < 1 {
            problems.push("observations must be >= 1");
        }
        if self.len_night < 1 {
            problems.push("len_night must be >= 1");
        }
        if self.max_gain < 1 {
            problems.push("max_gain must be >= 1");
        }
        if let ProbabilityModel::Binomial { p_clear: Some(p) } = self.probability_model {
            if !(0.0..=1.0).contains(&p) {
                problems.push("p_clear must lie in [0, 1]");
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameters(problems.join("; ")))
        }
    }
}

/// A generated instance and, for the binomial model, its night probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    pub p_clear: Option<f64>,
}

fn observation_id(j: usize, count: usize) -> String {
    let width = count.to_string().len();
    format!("o{:0width$}", j + 1)
}

pub fn draw_observation<R: Rng>(rng: &mut R, id: String, len_night: i64, max_gain: i64) -> Observation {
    let (release, deadline) = loop {
        let r = rng.random_range(0..=len_night);
        let d = rng.random_range(0..=len_night);
        if r < d {
            break (r, d);
        }
    };
    let processing = rng.random_range(1..=deadline - release);
    let gain = rng.random_range(1..=max_gain);
    Observation {
        id: crate::model::ObservationId(id),
        release,
        deadline,
        processing,
        gain,
    }
}

pub fn generate_probabilities_uniform<R: Rng>(nights: usize, rng: &mut R) -> ProbabilityVector {
    loop {
        let q: Vec<f64> = (0..=nights).map(|_| rng.random::<f64>()).collect();
        let total: f64 = q.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let mut pi: Vec<f64> = q.iter().map(|x| x / total).collect();
        let rest: f64 = pi[1..].iter().sum();
        pi[0] = (1.0 - rest).max(0.0);
        return ProbabilityVector(pi);
    }
}

pub fn generate_probabilities_binomial<R: Rng>(nights: usize, rng: &mut R) -> (ProbabilityVector, f64) {
    let p_clear = rng.random::<f64>();
    (binomial_pi(nights, p_clear), p_clear)
}

pub fn generate(params: &GenParams) -> Result<Generated, Error> {
    params.validate()?;
    let mut rng = Pcg64::seed_from_u64(params.seed);
    let observations = (0..params.observations)
        .map(|j| draw_observation(&mut rng, observation_id(j, params.observations), params.len_night, params.max_gain))
        .collect();
    let (probabilities, p_clear) = match params.probability_model {
        ProbabilityModel::UniformNormalized => (generate_probabilities_uniform(params.nights, &mut rng), None),
        ProbabilityModel::Binomial { p_clear: Some(p) } => (binomial_pi(params.nights, p), Some(p)),
        ProbabilityModel::Binomial { p_clear: None } => {
            let (pi, p) = generate_probabilities_binomial(params.nights, &mut rng);
            (pi, Some(p))
        }
    };
    Ok(Generated {
        instance: Instance {
            nights: params.nights,
            probabilities,
            observations,
        },
        p_clear,
    })
}

pub fn generate_instance(params: &GenParams) -> Result<Instance, Error> {
    generate(params).map(|g| g.instance)
}

/// Per-instance seeds derived from a master seed.
pub fn derive_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = Pcg64::seed_from_u64(master);
    (0..count).map(|_| rng.random::<u64>()).collect()
}

/// `count` instances from `params`, the i-th seeded with `derive_seeds(params.seed, count)[i]`.
pub fn generate_batch(params: &GenParams, count: usize) -> Result<Vec<(GenParams, Generated)>, Error> {
    derive_seeds(params.seed, count)
        .into_iter()
        .map(|seed| {
            let p = params.with_seed(seed);
            generate(&p).map(|g| (p, g))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    #[test]
    fn deterministic() {
        let params = GenParams::new(4, 20, 5, 10, 42);
        let a = generate_instance(&params).unwrap();
        let b = generate_instance(&params).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a, generate_instance(&params.with_seed(43)).unwrap());
    }

    #[test]
    fn unit_night_forces_values() {
        let inst = generate_instance(&GenParams::new(2, 30, 1, 3, 7)).unwrap();
        for o in &inst.observations {
            assert_eq!((o.release, o.deadline, o.processing), (0, 1, 1));
        }
    }

    #[test]
    fn generated_instances_are_valid() {
        for seed in 0..200 {
            let params = GenParams::new(1 + (seed as usize % 5), 1 + (seed as usize % 13), 1 + (seed as i64 % 6), 10, seed);
            assert!(validate_instance(&generate_instance(&params).unwrap()).is_valid());
            assert!(validate_instance(&generate_instance(&params.binomial(None)).unwrap()).is_valid());
        }
    }

    #[test]
    fn uniform_probabilities_sum_to_one() {
        let mut rng = Pcg64::seed_from_u64(1);
        for m in 1..8 {
            let pi = generate_probabilities_uniform(m, &mut rng);
            assert_eq!(pi.0.len(), m + 1);
            assert!((pi.0.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(pi.0.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn binomial_model() {
        let g = generate(&GenParams::new(2, 3, 5, 10, 3).binomial(Some(0.5))).unwrap();
        assert_eq!(g.instance.probabilities.0, vec![0.25, 0.5, 0.25]);
        let g = generate(&GenParams::new(3, 3, 5, 10, 3).binomial(Some(1.0))).unwrap();
        assert_eq!(g.instance.probabilities.0, vec![0.0, 0.0, 0.0, 1.0]);
        let g = generate(&GenParams::new(3, 3, 5, 10, 3).binomial(None)).unwrap();
        assert!((0.0..=1.0).contains(&g.p_clear.unwrap()));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(generate(&GenParams::new(0, 3, 5, 10, 0)).is_err());
        assert!(generate(&GenParams::new(1, 3, 0, 10, 0)).is_err());
        assert!(generate(&GenParams::new(1, 3, 5, 10, 0).binomial(Some(2.0))).is_err());
    }

    #[test]
    fn ids_sort_numerically() {
        let inst = generate_instance(&GenParams::new(1, 12, 5, 10, 0)).unwrap();
        let ids: Vec<&str> = inst.observations.iter().map(|o| o.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        assert_eq!(ids[0], "o01");
    }
}
