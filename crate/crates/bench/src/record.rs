use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};

pub const ALGO_AKALLS: &str = "akalls";
pub const ALGO_PASSIVE: &str = "passive-knn";

/// One algorithm run at one `(budget, trial)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub budget: usize,
    pub trial: usize,
    pub seed: u64,
    pub algo: String,
    pub charged_requests: usize,
    pub distinct_reveals: usize,
    /// Points the output classifier votes over.
    pub s_size: usize,
    pub s_nois_size: usize,
    /// `NaN` for a failed trial.
    #[serde(deserialize_with = "f64_or_nan")]
    pub excess_risk: f64,
    #[serde(deserialize_with = "f64_or_nan")]
    pub std_error: f64,
    /// Training time in milliseconds, evaluation excluded.
    pub wall_ms: f64,
    #[serde(default)]
    pub error: Option<String>,
    /// The learner certified nothing and a constant classifier was evaluated.
    #[serde(default)]
    pub fallback: bool,
    #[serde(default)]
    pub eval_method: String,
    /// Baseline neighbor count.
    #[serde(default)]
    pub k: Option<usize>,
    /// Informative points added per smoothness level.
    #[serde(default)]
    pub level_sizes: Vec<usize>,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.excess_risk.is_finite()
    }

    /// Same record with the timing zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_ms: 0.0,
            ..self.clone()
        }
    }
}

/// The fixed CSV columns.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    config_hash: String,
    budget: usize,
    trial: usize,
    seed: u64,
    algo: String,
    charged_requests: usize,
    distinct_reveals: usize,
    s_size: usize,
    s_nois_size: usize,
    excess_risk: f64,
    std_error: f64,
    wall_ms: f64,
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow {
            config_hash: r.config_hash.clone(),
            budget: r.budget,
            trial: r.trial,
            seed: r.seed,
            algo: r.algo.clone(),
            charged_requests: r.charged_requests,
            distinct_reveals: r.distinct_reveals,
            s_size: r.s_size,
            s_nois_size: r.s_nois_size,
            excess_risk: r.excess_risk,
            std_error: r.std_error,
            wall_ms: r.wall_ms,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let row: CsvRow = row?;
        let failed = row.excess_risk.is_nan();
        out.push(RunRecord {
            config_hash: row.config_hash,
            budget: row.budget,
            trial: row.trial,
            seed: row.seed,
            algo: row.algo,
            charged_requests: row.charged_requests,
            distinct_reveals: row.distinct_reveals,
            s_size: row.s_size,
            s_nois_size: row.s_nois_size,
            excess_risk: row.excess_risk,
            std_error: row.std_error,
            wall_ms: row.wall_ms,
            error: failed.then(|| "failed".to_string()),
            fallback: false,
            eval_method: String::new(),
            k: None,
            level_sizes: Vec::new(),
        });
    }
    Ok(out)
}

/// Records plus the config that produced them, as written by `run`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordSet {
    #[serde(default)]
    pub config: Option<ExperimentConfig>,
    pub records: Vec<RunRecord>,
}

/// Loads a `.json` record set or a `.csv` table (which carries no config).
pub fn load_records(path: &Path) -> Result<RecordSet> {
    let file = std::fs::File::open(path)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    } else {
        Ok(RecordSet {
            config: None,
            records: read_csv(file)?,
        })
    }
}

// JSON has no NaN; serde_json writes it as null.
fn f64_or_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

pub(crate) fn ensure_nonempty(records: &[RunRecord]) -> Result<()> {
    if records.is_empty() {
        Err(BenchError::NoRecords)
    } else {
        Ok(())
    }
}
