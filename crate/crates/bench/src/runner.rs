use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use akalls::classifier::{default_k, ConstantClassifier};
use akalls::eval::{excess_risk_mc, excess_risk_quadrature_1d, QuadratureOptions, RiskEstimate};
use akalls::{draw_pool, run_akalls, Classifier, Label, NeighborIndex, Oracle, PassiveKnn, Points, Pool, Problem};
use rayon::prelude::*;

use crate::config::{sub_seed, trial_seed, EvalMethod, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::record::{RunRecord, ALGO_AKALLS, ALGO_PASSIVE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

/// Runs every `(budget, trial)` of the config. Failed trials become records
/// with an error instead of aborting the experiment. Records come back sorted
/// by budget, trial and algorithm, independent of `exec`.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let fixed_pool = match &cfg.pool_file {
        Some(path) => {
            let pool = load_pool_csv(path)?;
            if pool.dim() != problem.dim() {
                return Err(BenchError::Config(format!(
                    "pool file has dimension {}, problem has {}",
                    pool.dim(),
                    problem.dim()
                )));
            }
            Some(Arc::new(pool))
        }
        None => None,
    };
    let hash = cfg.hash();
    let units: Vec<(usize, usize)> = cfg
        .budgets
        .iter()
        .flat_map(|&b| (0..cfg.trials).map(move |t| (b, t)))
        .collect();
    let work = |&(budget, trial): &(usize, usize)| {
        run_unit(cfg, problem.as_ref(), fixed_pool.as_deref(), &hash, budget, trial)
    };
    let mut records: Vec<RunRecord> = match exec {
        Execution::Parallel => units.par_iter().flat_map_iter(work).collect(),
        Execution::Serial => units.iter().flat_map(work).collect(),
    };
    records.sort_by(|a, b| (a.budget, a.trial, &a.algo).cmp(&(b.budget, b.trial, &b.algo)));
    Ok(records)
}

/// True when records exist and none of them succeeded.
pub fn all_failed(records: &[RunRecord]) -> bool {
    !records.is_empty() && records.iter().all(|r| !r.ok())
}

fn run_unit(
    cfg: &ExperimentConfig,
    problem: &dyn Problem,
    fixed_pool: Option<&Pool>,
    hash: &str,
    budget: usize,
    trial: usize,
) -> Vec<RunRecord> {
    let seed = trial_seed(cfg.base_seed, budget, trial);
    let blank = |algo: &str| RunRecord {
        config_hash: hash.to_string(),
        budget,
        trial,
        seed,
        algo: algo.to_string(),
        charged_requests: 0,
        distinct_reveals: 0,
        s_size: 0,
        s_nois_size: 0,
        excess_risk: f64::NAN,
        std_error: f64::NAN,
        wall_ms: 0.0,
        error: None,
        fallback: false,
        eval_method: String::new(),
        k: None,
        level_sizes: Vec::new(),
    };
    let failed = |algo: &str, e: akalls::Error| RunRecord {
        error: Some(e.to_string()),
        ..blank(algo)
    };

    let drawn;
    let pool = match fixed_pool {
        Some(p) => p,
        None => match draw_pool(problem, cfg.pool_size_for(budget, problem), sub_seed(seed, "pool")) {
            Ok(p) => {
                drawn = p;
                &drawn
            }
            Err(e) => {
                let mut out = vec![failed(ALGO_AKALLS, e.clone())];
                if cfg.baseline {
                    out.push(failed(ALGO_PASSIVE, e));
                }
                return out;
            }
        },
    };
    let oracle_seed = sub_seed(seed, "oracle");
    let eval_seed = sub_seed(seed, "eval");

    let mut out = Vec::with_capacity(2);
    out.push(
        run_active(cfg, problem, pool, budget, oracle_seed, eval_seed, blank(ALGO_AKALLS))
            .unwrap_or_else(|e| failed(ALGO_AKALLS, e)),
    );
    if cfg.baseline {
        out.push(
            run_passive(cfg, problem, pool, budget, oracle_seed, eval_seed, blank(ALGO_PASSIVE))
                .unwrap_or_else(|e| failed(ALGO_PASSIVE, e)),
        );
    }
    out
}

fn run_active(
    cfg: &ExperimentConfig,
    problem: &dyn Problem,
    pool: &Pool,
    budget: usize,
    oracle_seed: u64,
    eval_seed: u64,
    rec: RunRecord,
) -> akalls::Result<RunRecord> {
    let start = Instant::now();
    let index = NeighborIndex::build(pool.points().clone());
    let mut oracle = Oracle::new(problem, pool, oracle_seed);
    let run = run_akalls(problem, pool, &index, &mut oracle, &cfg.engine_params(budget))?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let fallback = run.classifier.is_empty();
    let risk = if fallback {
        let label = majority(oracle.revealed().map(|(_, y)| y));
        evaluate(cfg, problem, &ConstantClassifier(label), eval_seed)?
    } else {
        evaluate(cfg, problem, &run.classifier, eval_seed)?
    };
    Ok(RunRecord {
        charged_requests: run.metrics.charged_requests,
        distinct_reveals: run.metrics.distinct_reveals,
        s_size: run.state.informative.len(),
        s_nois_size: run.state.noisy.len(),
        excess_risk: risk.excess_risk,
        std_error: risk.std_error,
        wall_ms,
        fallback,
        eval_method: risk.method.as_str().to_string(),
        level_sizes: run.state.levels.iter().map(|l| l.added_informative).collect(),
        ..rec
    })
}

fn run_passive(
    cfg: &ExperimentConfig,
    problem: &dyn Problem,
    pool: &Pool,
    budget: usize,
    oracle_seed: u64,
    eval_seed: u64,
    rec: RunRecord,
) -> akalls::Result<RunRecord> {
    let alpha = problem.declared_smoothness().map(|s| s.alpha);
    let k = cfg
        .baseline_k
        .unwrap_or_else(|| default_k(budget, alpha, problem.dim()))
        .min(budget);
    let start = Instant::now();
    let mut oracle = Oracle::new(problem, pool, oracle_seed);
    let knn = PassiveKnn::train(&mut oracle, budget, k)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let risk = evaluate(cfg, problem, &knn, eval_seed)?;
    Ok(RunRecord {
        charged_requests: oracle.total_queries(),
        distinct_reveals: oracle.distinct_reveals(),
        s_size: knn.n(),
        s_nois_size: 0,
        excess_risk: risk.excess_risk,
        std_error: risk.std_error,
        wall_ms,
        eval_method: risk.method.as_str().to_string(),
        k: Some(k),
        ..rec
    })
}

/// Majority label, ties (and no labels at all) to 1.
fn majority(labels: impl Iterator<Item = Label>) -> Label {
    let (mut ones, mut total) = (0usize, 0usize);
    for y in labels {
        ones += y as usize;
        total += 1;
    }
    Label::from(2 * ones >= total)
}

pub fn evaluate(
    cfg: &ExperimentConfig,
    problem: &dyn Problem,
    classifier: &dyn Classifier,
    seed: u64,
) -> akalls::Result<RiskEstimate> {
    let quadrature = match cfg.eval {
        EvalMethod::Quadrature => true,
        EvalMethod::MonteCarlo => false,
        EvalMethod::Auto => problem.dim() == 1 && problem.density(&[0.0]).is_some(),
    };
    if quadrature {
        let opts = QuadratureOptions {
            tol: cfg.eval_tol,
            ..QuadratureOptions::default()
        };
        excess_risk_quadrature_1d(problem, classifier, &opts)
    } else {
        excess_risk_mc(problem, classifier, cfg.eval_samples, seed)
    }
}

/// Reads pool points from a headerless CSV file, one point per row. A first
/// row that does not parse as numbers is taken as a header and skipped.
pub fn load_pool_csv(path: &Path) -> Result<Pool> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(BenchError::Config(format!("{}: row {}: {e}", path.display(), i + 1))),
        }
    }
    let dim = rows.first().map_or(0, Vec::len);
    let points = Points::from_rows(dim, &rows).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    Pool::from_points(points).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))
}
