//! Output formats: fixed-column CSVs with `# ` header lines, 12 significant
//! digits for reals, and the generation manifest.
//!
//! Curve CSV columns: `m,cumulative_gain,pi_m`, one file per algorithm.
//! Sweep CSV columns: `p_clear,etg_stochastic,etg_reactive,upgrade`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::generator::GenParams;
use crate::model::GainCurve;
use crate::reactive::SweepPoint;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `x` rounded to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("scientific notation parses")
}

/// Shortest decimal text of `round_sig(x, digits)`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let r = round_sig(x, digits);
    if r == 0.0 {
        // drops the sign of -0
        return "0".to_owned();
    }
    format!("{r}")
}

/// Provenance lines written at the top of every output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seeds: Vec<u64>,
    pub config: BTreeMap<String, String>,
}

impl RunHeader {
    pub fn new(command: impl Into<String>) -> Self {
        RunHeader {
            tool: "nightsched".to_owned(),
            version: VERSION.to_owned(),
            command: command.into(),
            seeds: Vec::new(),
            config: BTreeMap::new(),
        }
    }

    pub fn seeds(mut self, seeds: impl IntoIterator<Item = u64>) -> Self {
        self.seeds.extend(seeds);
        self
    }

    pub fn set(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.config.insert(key.into(), value.to_string());
        self
    }

    pub fn lines(&self) -> Vec<String> {
        let mut lines = vec![format!("{} {} {}", self.tool, self.version, self.command)];
        if !self.seeds.is_empty() {
            let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
            lines.push(format!("seeds: {}", seeds.join(" ")));
        }
        for (k, v) in &self.config {
            lines.push(format!("{k}: {v}"));
        }
        lines
    }
}

fn write_header<W: Write>(out: &mut W, header: &[String]) -> Result<(), Error> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

pub const CURVE_COLUMNS: [&str; 3] = ["m", "cumulative_gain", "pi_m"];

pub fn write_curve_csv<W: Write>(mut out: W, header: &[String], curve: &GainCurve) -> Result<(), Error> {
    write_header(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_COLUMNS)?;
    for step in &curve.steps {
        w.write_record([
            step.nights.to_string(),
            step.cumulative_gain.to_string(),
            fmt_sig(step.probability, 12),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_COLUMNS: [&str; 4] = ["p_clear", "etg_stochastic", "etg_reactive", "upgrade"];

pub fn write_sweep_csv<W: Write>(mut out: W, header: &[String], points: &[SweepPoint]) -> Result<(), Error> {
    write_header(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for p in points {
        w.write_record([
            fmt_sig(p.p_clear, 12),
            fmt_sig(p.etg_stochastic, 12),
            fmt_sig(p.etg_reactive, 12),
            fmt_sig(p.upgrade, 12),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One generated instance: its file, the parameters and seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub params: GenParams,
    pub p_clear: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub header: RunHeader,
    pub master_seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
