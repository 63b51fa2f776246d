//! Batch runs over many instances and the gap / Improvement / Upgrade
//! statistics aggregated over them.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{Instance, TOLERANCE};
use crate::par::Execution;
use crate::reactive::{reactive_vs_stochastic_expectation_with, BinomialWeather};
use crate::report::{fmt_sig, round_sig};
use crate::solver::{solve_stochastic, SolverConfig};
use crate::strategies::{greedy_schedule, improvement, omniscient_curve_with, upgrade};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Greedy,
    Stochastic,
    Omniscient,
    Reactive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Greedy,
        Algorithm::Stochastic,
        Algorithm::Omniscient,
        Algorithm::Reactive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Stochastic => "stochastic",
            Algorithm::Omniscient => "omniscient",
            Algorithm::Reactive => "reactive",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s)
    }
}

/// The `(A1, A2)` pairs reported, in order.
pub const PAIRS: [(Algorithm, Algorithm); 4] = [
    (Algorithm::Stochastic, Algorithm::Greedy),
    (Algorithm::Omniscient, Algorithm::Stochastic),
    (Algorithm::Reactive, Algorithm::Stochastic),
    (Algorithm::Omniscient, Algorithm::Reactive),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignInput {
    pub name: String,
    pub instance: Instance,
    pub seed: Option<u64>,
    /// Required by the reactive strategy.
    pub p_clear: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub solver: SolverConfig,
    pub algorithms: Vec<Algorithm>,
    pub exec: Execution,
}

impl CampaignConfig {
    pub fn all(solver: SolverConfig) -> Self {
        CampaignConfig {
            solver,
            algorithms: Algorithm::ALL.to_vec(),
            exec: Execution::default(),
        }
    }

    fn runs(&self, a: Algorithm) -> bool {
        self.algorithms.contains(&a)
    }
}

/// One CSV row. ETGs are rounded to 12 significant digits so the CSV is an
/// exact copy of what the aggregates are computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub name: String,
    pub seed: Option<u64>,
    pub p_clear: Option<f64>,
    pub nights: usize,
    pub observations: usize,
    pub etg_greedy: Option<f64>,
    pub etg_stochastic: Option<f64>,
    pub etg_omniscient: Option<f64>,
    pub etg_reactive: Option<f64>,
    pub proven_optimal: bool,
    pub stochastic_nodes: Option<u64>,
}

impl InstanceRecord {
    pub fn etg(&self, a: Algorithm) -> Option<f64> {
        match a {
            Algorithm::Greedy => self.etg_greedy,
            Algorithm::Stochastic => self.etg_stochastic,
            Algorithm::Omniscient => self.etg_omniscient,
            Algorithm::Reactive => self.etg_reactive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub a1: Algorithm,
    pub a2: Algorithm,
    /// Instances where both ETGs are known.
    pub n_compared: usize,
    /// Instances with `|ETG[A1] - ETG[A2]| > 1e-9`.
    pub n_nonzero_gap: usize,
    pub proportion_nonzero_gap: Option<f64>,
    /// Mean Improvement over nonzero-gap instances with a defined denominator.
    pub mean_improvement: Option<f64>,
    pub n_improvement: usize,
    /// Mean Upgrade over nonzero-gap instances with `ETG[A2] != 0`.
    pub mean_upgrade: Option<f64>,
    pub n_upgrade: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStats {
    pub n_instances: usize,
    pub gap_tolerance: f64,
    pub filters: String,
    pub pairs: Vec<PairStats>,
    pub records: Vec<InstanceRecord>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn aggregate_pair(records: &[InstanceRecord], a1: Algorithm, a2: Algorithm) -> PairStats {
    let mut n_compared = 0;
    let mut n_nonzero = 0;
    let mut improvements = Vec::new();
    let mut upgrades = Vec::new();
    for r in records {
        let (Some(e1), Some(e2)) = (r.etg(a1), r.etg(a2)) else {
            continue;
        };
        n_compared += 1;
        if (e1 - e2).abs() <= TOLERANCE {
            continue;
        }
        n_nonzero += 1;
        if let Some(omniscient) = r.etg_omniscient {
            if let Ok(v) = improvement(e1, e2, omniscient) {
                improvements.push(v);
            }
        }
        if let Ok(v) = upgrade(e1, e2) {
            upgrades.push(v);
        }
    }
    PairStats {
        a1,
        a2,
        n_compared,
        n_nonzero_gap: n_nonzero,
        proportion_nonzero_gap: (n_compared > 0).then(|| n_nonzero as f64 / n_compared as f64),
        mean_improvement: mean(&improvements),
        n_improvement: improvements.len(),
        mean_upgrade: mean(&upgrades),
        n_upgrade: upgrades.len(),
    }
}

pub fn aggregate(records: Vec<InstanceRecord>) -> CampaignStats {
    let pairs = PAIRS
        .iter()
        .map(|&(a1, a2)| aggregate_pair(&records, a1, a2))
        .filter(|p| p.n_compared > 0)
        .collect();
    CampaignStats {
        n_instances: records.len(),
        gap_tolerance: TOLERANCE,
        filters: "gap: |ETG[A1]-ETG[A2]| > 1e-9; improvement: nonzero gap and ETG[Omniscient] != ETG[A2]; \
                  upgrade: nonzero gap and ETG[A2] != 0"
            .to_owned(),
        pairs,
        records,
    }
}

pub fn run_instance(input: &CampaignInput, config: &CampaignConfig) -> Result<InstanceRecord, Error> {
    let instance = &input.instance;
    let mut proven = true;
    let etg_greedy = config.runs(Algorithm::Greedy).then(|| greedy_schedule(instance).etg);
    let (etg_stochastic, nodes) = if config.runs(Algorithm::Stochastic) {
        let result = solve_stochastic(instance, &config.solver);
        proven &= result.proven_optimal;
        (Some(result.etg), Some(result.nodes_explored))
    } else {
        (None, None)
    };
    let etg_omniscient = if config.runs(Algorithm::Omniscient) {
        let curve = omniscient_curve_with(instance, &config.solver, config.exec);
        proven &= curve.proven_optimal;
        Some(curve.etg(&instance.probabilities))
    } else {
        None
    };
    let etg_reactive = if config.runs(Algorithm::Reactive) {
        let p = input.p_clear.ok_or_else(|| {
            Error::InvalidParameters(format!("{}: reactive strategy needs p_clear", input.name))
        })?;
        let cmp = reactive_vs_stochastic_expectation_with(
            &instance.observations,
            instance.nights,
            BinomialWeather::new(p)?,
            &config.solver,
            config.exec,
        );
        proven &= cmp.reactive.proven_optimal;
        Some(cmp.etg_reactive)
    } else {
        None
    };
    let round = |v: Option<f64>| v.map(|x| round_sig(x, 12));
    Ok(InstanceRecord {
        name: input.name.clone(),
        seed: input.seed,
        p_clear: round(input.p_clear),
        nights: instance.nights,
        observations: instance.observations.len(),
        etg_greedy: round(etg_greedy),
        etg_stochastic: round(etg_stochastic),
        etg_omniscient: round(etg_omniscient),
        etg_reactive: round(etg_reactive),
        proven_optimal: proven,
        stochastic_nodes: nodes,
    })
}

/// Runs the selected algorithms on every input. Instances are spread over the
/// worker pool; records keep input order.
pub fn run_campaign(inputs: &[CampaignInput], config: &CampaignConfig) -> Result<CampaignStats, Error> {
    let records = config
        .exec
        .map(inputs, |input| run_instance(input, config))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(records))
}

pub const RECORD_COLUMNS: [&str; 11] = [
    "name",
    "seed",
    "p_clear",
    "nights",
    "observations",
    "etg_greedy",
    "etg_stochastic",
    "etg_omniscient",
    "etg_reactive",
    "proven_optimal",
    "stochastic_nodes",
];

/// Writes the records as CSV after `# `-prefixed header comment lines.
pub fn write_records_csv<W: Write>(mut out: W, header: &[String], records: &[InstanceRecord]) -> Result<(), Error> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    let opt = |v: Option<f64>| v.map(|x| fmt_sig(x, 12)).unwrap_or_default();
    for r in records {
        w.write_record([
            r.name.clone(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            opt(r.p_clear),
            r.nights.to_string(),
            r.observations.to_string(),
            opt(r.etg_greedy),
            opt(r.etg_stochastic),
            opt(r.etg_omniscient),
            opt(r.etg_reactive),
            r.proven_optimal.to_string(),
            r.stochastic_nodes.map(|n| n.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<InstanceRecord>, Error> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let float = |i: usize| -> Result<Option<f64>, Error> {
            let s = field(i);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::InvalidParameters(format!("bad number {s:?} in column {}", RECORD_COLUMNS[i])))
            }
        };
        let int = |i: usize| -> Result<Option<u64>, Error> {
            let s = field(i);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::InvalidParameters(format!("bad integer {s:?} in column {}", RECORD_COLUMNS[i])))
            }
        };
        records.push(InstanceRecord {
            name: field(0).to_owned(),
            seed: int(1)?,
            p_clear: float(2)?,
            nights: int(3)?.unwrap_or(0) as usize,
            observations: int(4)?.unwrap_or(0) as usize,
            etg_greedy: float(5)?,
            etg_stochastic: float(6)?,
            etg_omniscient: float(7)?,
            etg_reactive: float(8)?,
            proven_optimal: field(9) == "true",
            stochastic_nodes: int(10)?,
        });
    }
    Ok(records)
}
