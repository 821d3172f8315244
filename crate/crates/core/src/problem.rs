//! Synthetic classification problems with known ground truth, the unlabeled
//! pool drawn from them, and the memoizing label oracle.
//!
//! A problem is the pair (marginal `P_X`, regression function `eta`). Every
//! built-in problem uses a standard Gaussian marginal on `R^d`, so one
//! dimensional problems also expose the ball mass `P_X(B(x, r))` in closed
//! form.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};

/// Binary label in `{0, 1}`.
pub type Label = u8;

/// Declared `(alpha, L)` for the local smoothness condition
/// `|eta(x) - eta(x')| <= L * P_X(B(x, |x - x'|))^(alpha / d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothness {
    pub alpha: f64,
    pub l: f64,
}

/// Declared `(beta, C)` for the margin condition
/// `P_X(|eta(X) - 1/2| < eps) <= C * eps^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginNoise {
    pub beta: f64,
    pub c: f64,
}

/// A fully known binary classification problem.
///
/// The engine only ever touches `eta` through the [`Oracle`]; everything else
/// is for ball-mass lookups, evaluation and audits.
pub trait Problem: Send + Sync + fmt::Debug {
    /// Canonical `name:key=value,...` form, parseable by [`parse_problem`].
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    /// Writes one draw from `P_X` into `out` (length `dim`).
    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]);

    /// Regression function `P(Y = 1 | X = x)`, always in `[0, 1]`.
    fn eta(&self, x: &[f64]) -> f64;

    /// Marginal density at `x`, when known in closed form.
    fn density(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// `P_X(B(x, r))` for the open Euclidean ball, when known in closed form.
    fn ball_prob(&self, _x: &[f64], _r: f64) -> Option<f64> {
        None
    }

    fn declared_smoothness(&self) -> Option<Smoothness> {
        None
    }

    fn declared_noise(&self) -> Option<MarginNoise> {
        None
    }

    /// Bayes classifier `1{eta(x) >= 1/2}`.
    fn bayes(&self, x: &[f64]) -> Label {
        Label::from(self.eta(x) >= 0.5)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Mass of the open interval `(x - r, x + r)` under `N(0, 1)`.
///
/// Evaluated on the side of the origin where the tail is small, so masses far
/// out in the tails keep their relative accuracy.
pub fn normal_interval_mass(x: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let (lo, hi) = (x - r, x + r);
    let mass = if lo >= 0.0 {
        normal_cdf(-lo) - normal_cdf(-hi)
    } else if hi <= 0.0 {
        normal_cdf(hi) - normal_cdf(lo)
    } else {
        1.0 - normal_cdf(lo) - normal_cdf(-hi)
    };
    mass.clamp(0.0, 1.0)
}

fn sample_standard_normal(rng: &mut dyn RngCore, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

fn gaussian_density(x: &[f64]) -> f64 {
    x.iter().map(|&v| normal_pdf(v)).product()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Regression function of the one-dimensional example:
/// `1 - (2^(alpha+1)/3) |x - 1/2|^alpha` on `[0, 1]` and `1/3` elsewhere.
///
/// Continuous at 0 and 1 since `(2^(alpha+1)/3) (1/2)^alpha = 2/3`.
pub fn eta_example(x: f64, alpha: f64) -> f64 {
    if (0.0..=1.0).contains(&x) {
        let scale = 2f64.powf(alpha + 1.0) / 3.0;
        (1.0 - scale * (x - 0.5).abs().powf(alpha)).clamp(0.0, 1.0)
    } else {
        1.0 / 3.0
    }
}

/// Gaussian marginal on the real line with the piecewise `eta_example`
/// regression function. Satisfies the local smoothness condition without a
/// density bounded from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleDistribution {
    alpha: f64,
}

impl ExampleDistribution {
    /// Margin exponent fitted on `eps` in `[0.02, 0.5]` with `C = 1`. The
    /// flat `eta = 1/3` branch carries ~66% of the mass at margin exactly
    /// 1/6, and `P(|eta - 1/2| < 1/2) = 1`, which pins the exponent to 0.
    pub const FITTED_NOISE: MarginNoise = MarginNoise { beta: 0.0, c: 1.0 };

    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Points where `eta` crosses 1/2: `1/2 -+ (3 / 2^(alpha+2))^(1/alpha)`.
    pub fn decision_boundary(&self) -> (f64, f64) {
        let half_width = (3.0 / 2f64.powf(self.alpha + 2.0)).powf(1.0 / self.alpha);
        (0.5 - half_width, 0.5 + half_width)
    }
}

impl Problem for ExampleDistribution {
    fn name(&self) -> String {
        format!("example1d:alpha={}", self.alpha)
    }

    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        sample_standard_normal(rng, out);
    }

    fn eta(&self, x: &[f64]) -> f64 {
        eta_example(x[0], self.alpha)
    }

    fn density(&self, x: &[f64]) -> Option<f64> {
        Some(normal_pdf(x[0]))
    }

    fn ball_prob(&self, x: &[f64], r: f64) -> Option<f64> {
        Some(normal_interval_mass(x[0], r))
    }

    fn declared_smoothness(&self) -> Option<Smoothness> {
        Some(Smoothness {
            alpha: self.alpha,
            l: 1.0,
        })
    }

    fn declared_noise(&self) -> Option<MarginNoise> {
        Some(Self::FITTED_NOISE)
    }
}

/// Standard Gaussian marginal on `R^d` with the example regression function
/// applied to the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleNd {
    alpha: f64,
    dim: usize,
}

impl ExampleNd {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        Ok(Self { alpha, dim })
    }
}

impl Problem for ExampleNd {
    fn name(&self) -> String {
        format!("examplend:alpha={},dim={}", self.alpha, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        sample_standard_normal(rng, out);
    }

    fn eta(&self, x: &[f64]) -> f64 {
        eta_example(x[0], self.alpha)
    }

    fn density(&self, x: &[f64]) -> Option<f64> {
        Some(gaussian_density(x))
    }

    fn ball_prob(&self, x: &[f64], r: f64) -> Option<f64> {
        (self.dim == 1).then(|| normal_interval_mass(x[0], r))
    }
}

/// Gaussian marginal with a constant regression function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEta {
    p: f64,
    dim: usize,
}

impl ConstantEta {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", format!("must lie in [0, 1], got {p}")));
        }
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        Ok(Self { p, dim })
    }
}

impl Problem for ConstantEta {
    fn name(&self) -> String {
        format!("constant:p={},dim={}", self.p, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        sample_standard_normal(rng, out);
    }

    fn eta(&self, _x: &[f64]) -> f64 {
        self.p
    }

    fn density(&self, x: &[f64]) -> Option<f64> {
        Some(gaussian_density(x))
    }

    fn ball_prob(&self, x: &[f64], r: f64) -> Option<f64> {
        (self.dim == 1).then(|| normal_interval_mass(x[0], r))
    }

    fn declared_smoothness(&self) -> Option<Smoothness> {
        Some(Smoothness { alpha: 1.0, l: 1.0 })
    }
}

/// Deterministic labels: `eta(x) = 1{x_1 >= 0}` under a Gaussian marginal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    dim: usize,
}

impl Threshold {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        Ok(Self { dim })
    }
}

impl Problem for Threshold {
    fn name(&self) -> String {
        format!("threshold:dim={}", self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        sample_standard_normal(rng, out);
    }

    fn eta(&self, x: &[f64]) -> f64 {
        if x[0] >= 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn density(&self, x: &[f64]) -> Option<f64> {
        Some(gaussian_density(x))
    }

    fn ball_prob(&self, x: &[f64], r: f64) -> Option<f64> {
        (self.dim == 1).then(|| normal_interval_mass(x[0], r))
    }

    fn declared_noise(&self) -> Option<MarginNoise> {
        // |eta - 1/2| = 1/2 everywhere.
        Some(MarginNoise { beta: 10.0, c: 1.0 })
    }
}

/// Parses `name[:key=value,...]` into a shared problem.
///
/// Known names: `example1d` (`alpha`), `examplend` (`alpha`, `dim`),
/// `constant` (`p`, `dim`), `threshold` (`dim`).
pub fn parse_problem(text: &str) -> Result<Arc<dyn Problem>> {
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (text.trim(), ""),
    };
    let mut params: Vec<(&str, f64)> = Vec::new();
    for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| invalid("problem", format!("expected key=value, got `{part}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| invalid("problem", format!("bad number in `{part}`")))?;
        params.push((k.trim(), v));
    }
    let allowed: &[&str] = match name {
        "example1d" => &["alpha"],
        "examplend" => &["alpha", "dim"],
        "constant" => &["p", "dim"],
        "threshold" => &["dim"],
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(invalid("problem", format!("unknown key `{k}` for `{name}`")));
    }
    let get = |key: &str, default: f64| {
        params
            .iter()
            .rev()
            .find(|(k, _)| *k == key)
            .map_or(default, |(_, v)| *v)
    };
    let dim = get("dim", 1.0);
    if dim < 1.0 || dim.fract() != 0.0 {
        return Err(invalid("dim", format!("must be a positive integer, got {dim}")));
    }
    let dim = dim as usize;
    Ok(match name {
        "example1d" => Arc::new(ExampleDistribution::new(get("alpha", 0.6))?),
        "examplend" => Arc::new(ExampleNd::new(get("alpha", 0.6), dim)?),
        "constant" => Arc::new(ConstantEta::new(get("p", 0.5), dim)?),
        _ => Arc::new(Threshold::new(dim)?),
    })
}

/// Row-major point storage of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coords.len() % dim,
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::Generation("non-finite coordinate".into()));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn select(&self, indices: &[usize]) -> Points {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.get(i));
        }
        Points { dim: self.dim, coords }
    }
}

/// Squared Euclidean distance. Every ordering in the crate goes through this
/// one function so that index and brute-force paths agree bit for bit.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// The unlabeled i.i.d. sample `X_1..X_w`, addressed by 0-based index.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    points: Points,
    seed: Option<u64>,
}

impl Pool {
    /// Wraps externally supplied points (e.g. loaded from CSV).
    pub fn from_points(points: Points) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPool);
        }
        Ok(Self { points, seed: None })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.get(i)
    }

    /// Seed the pool was drawn with; `None` for loaded pools.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Draws `w` i.i.d. points from the problem's marginal.
pub fn draw_pool(problem: &dyn Problem, w: usize, seed: u64) -> Result<Pool> {
    if w == 0 {
        return Err(invalid("w", "pool size must be at least 1"));
    }
    let dim = problem.dim();
    if dim == 0 {
        return Err(Error::Generation("problem has dimension 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![0.0; w * dim];
    for chunk in coords.chunks_exact_mut(dim) {
        problem.sample(&mut rng, chunk);
    }
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(Error::Generation("marginal produced a non-finite sample".into()));
    }
    Ok(Pool {
        points: Points { dim, coords },
        seed: Some(seed),
    })
}

/// Fraction of pool points strictly inside the open ball `B(x, r)`.
pub fn ball_prob_empirical(pool: &Pool, x: &[f64], r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let r2 = r * r;
    let inside = pool.points.iter().filter(|p| sq_dist(p, x) < r2).count();
    inside as f64 / pool.len() as f64
}

/// Budget-tracked label oracle over a pool.
///
/// The label of pool point `i` is drawn once as `Bernoulli(eta(X_i))` and then
/// fixed. Draws come from stream `i` of a ChaCha generator keyed by the oracle
/// seed, so the realized labels do not depend on query order.
pub struct Oracle<'a> {
    problem: &'a dyn Problem,
    pool: &'a Pool,
    seed: u64,
    base: ChaCha8Rng,
    revealed: Vec<Option<Label>>,
    distinct_reveals: usize,
    queries: usize,
}

impl<'a> Oracle<'a> {
    pub fn new(problem: &'a dyn Problem, pool: &'a Pool, seed: u64) -> Self {
        Self {
            problem,
            pool,
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
            revealed: vec![None; pool.len()],
            distinct_reveals: 0,
            queries: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pool(&self) -> &'a Pool {
        self.pool
    }

    pub fn problem(&self) -> &'a dyn Problem {
        self.problem
    }

    /// Label of pool point `index` (0-based). Only the first call per index
    /// counts as a distinct reveal.
    pub fn query(&mut self, index: usize) -> Result<Label> {
        let len = self.pool.len();
        let slot = self
            .revealed
            .get_mut(index)
            .ok_or(Error::IndexOutOfRange { index, len })?;
        self.queries += 1;
        if let Some(label) = *slot {
            return Ok(label);
        }
        let mut rng = self.base.clone();
        rng.set_stream(index as u64);
        let u: f64 = rng.random();
        let label = Label::from(u < self.problem.eta(self.pool.point(index)));
        *slot = Some(label);
        self.distinct_reveals += 1;
        Ok(label)
    }

    /// Label if already revealed, without charging anything.
    pub fn peek(&self, index: usize) -> Option<Label> {
        self.revealed.get(index).copied().flatten()
    }

    pub fn distinct_reveals(&self) -> usize {
        self.distinct_reveals
    }

    /// Total calls to [`Oracle::query`], repeats included.
    pub fn total_queries(&self) -> usize {
        self.queries
    }

    /// Revealed labels as `(index, label)` in index order.
    pub fn revealed(&self) -> impl Iterator<Item = (usize, Label)> + '_ {
        self.revealed.iter().enumerate().filter_map(|(i, l)| l.map(|l| (i, l)))
    }
}

impl fmt::Debug for Oracle<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("seed", &self.seed)
            .field("distinct_reveals", &self.distinct_reveals)
            .field("queries", &self.queries)
            .finish()
    }
}
