use std::path::{Path, PathBuf};
use std::sync::Arc;

use akalls::engine::BallMassMode;
use akalls::problem::parse_problem;
use akalls::{EngineParams, Problem, StatParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

/// How excess risk is measured after training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    /// Quadrature for one-dimensional problems with a known density,
    /// Monte Carlo otherwise.
    #[default]
    Auto,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BallMassSource {
    #[default]
    Auto,
    Empirical,
}

impl From<BallMassSource> for BallMassMode {
    fn from(s: BallMassSource) -> Self {
        match s {
            BallMassSource::Auto => BallMassMode::Auto,
            BallMassSource::Empirical => BallMassMode::Empirical,
        }
    }
}

/// One experiment: a problem, a list of label budgets and the number of
/// seeded trials per budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Problem name and parameters, e.g. `example1d:alpha=0.6`.
    pub problem: String,
    /// Label budgets, strictly increasing.
    pub budgets: Vec<usize>,
    /// Pool size. When absent it is derived per budget from the problem's
    /// declared exponents, or ten times the largest budget.
    #[serde(default)]
    pub pool_size: Option<usize>,
    /// CSV file of pool points (one row per point). Overrides `pool_size`
    /// and is shared by every trial.
    #[serde(default)]
    pub pool_file: Option<PathBuf>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "one", alias = "L")]
    pub l: f64,
    #[serde(default = "one", alias = "C")]
    pub c: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_c_scale")]
    pub c_scale: f64,
    /// Also run the passive k-NN baseline on the same pool and labels.
    #[serde(default = "yes")]
    pub baseline: bool,
    /// Fixed k for the baseline; the default rule is used when absent.
    #[serde(default)]
    pub baseline_k: Option<usize>,
    #[serde(default)]
    pub eval: EvalMethod,
    /// Monte Carlo sample size.
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    /// Absolute tolerance for quadrature.
    #[serde(default = "default_eval_tol")]
    pub eval_tol: f64,
    #[serde(default)]
    pub ball_mass: BallMassSource,
}

fn default_trials() -> usize {
    20
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_delta() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_c_scale() -> f64 {
    akalls::stats::DEFAULT_C_SCALE
}
fn default_eval_samples() -> usize {
    100_000
}
fn default_eval_tol() -> f64 {
    1e-8
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(problem: impl Into<String>, budgets: Vec<usize>) -> Self {
        Self {
            problem: problem.into(),
            budgets,
            pool_size: None,
            pool_file: None,
            trials: default_trials(),
            base_seed: 0,
            l: 1.0,
            c: 1.0,
            delta: default_delta(),
            epsilon: default_epsilon(),
            c_scale: default_c_scale(),
            baseline: true,
            baseline_k: None,
            eval: EvalMethod::Auto,
            eval_samples: default_eval_samples(),
            eval_tol: default_eval_tol(),
            ball_mass: BallMassSource::Auto,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn problem(&self) -> Result<Arc<dyn Problem>> {
        parse_problem(&self.problem).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        let problem = self.problem()?;
        if self.budgets.is_empty() {
            return bad("budgets must not be empty".into());
        }
        if self.budgets[0] == 0 {
            return bad("budgets must be positive".into());
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return bad("budgets must be strictly increasing".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.pool_size == Some(0) {
            return bad("pool_size must be positive".into());
        }
        if self.baseline_k == Some(0) {
            return bad("baseline_k must be positive".into());
        }
        if self.eval_samples == 0 || !(self.eval_tol > 0.0) {
            return bad("eval_samples and eval_tol must be positive".into());
        }
        if self.eval == EvalMethod::Quadrature && (problem.dim() != 1 || problem.density(&[0.0]).is_none()) {
            return bad("quadrature needs a one-dimensional problem with a known density".into());
        }
        self.engine_params(self.budgets[0])
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn engine_params(&self, budget: usize) -> EngineParams {
        EngineParams {
            budget,
            l: self.l,
            c: self.c,
            delta: self.delta,
            epsilon: self.epsilon,
            stats: StatParams {
                c_scale: self.c_scale,
                ..StatParams::default()
            },
            ball_mass: self.ball_mass.into(),
        }
    }

    /// Pool size used at `budget` when no pool file is given:
    /// `ceil(n^((2a + d)/(2a + d - a b)))` from the declared exponents, or
    /// `10 * max(budgets)`.
    pub fn pool_size_for(&self, budget: usize, problem: &dyn Problem) -> usize {
        if let Some(w) = self.pool_size {
            return w;
        }
        let fallback = 10 * self.budgets.iter().copied().max().unwrap_or(budget);
        match (problem.declared_smoothness(), problem.declared_noise()) {
            (Some(s), Some(m)) => {
                let d = problem.dim() as f64;
                let den = 2.0 * s.alpha + d - s.alpha * m.beta;
                if den <= 0.0 {
                    return fallback;
                }
                let w = (budget as f64).powf((2.0 * s.alpha + d) / den).ceil();
                if w.is_finite() && w < usize::MAX as f64 {
                    (w as usize).max(budget)
                } else {
                    fallback
                }
            }
            _ => fallback,
        }
    }

    /// Short stable digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Seed of one trial: the base seed xor a hash of `(budget, trial)`.
pub fn trial_seed(base_seed: u64, budget: usize, trial: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"trial");
    h.update((budget as u64).to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    base_seed ^ first_u64(&h.finalize())
}

/// Independent seed for one consumer (`"pool"`, `"oracle"`, `"eval"`) of a trial.
pub fn sub_seed(seed: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    first_u64(&h.finalize())
}

fn first_u64(bytes: &[u8]) -> u64 {
    u64::from_le_bytes(bytes[..8].try_into().expect("digest has at least 8 bytes"))
}
