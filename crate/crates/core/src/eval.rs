//! Ground-truth evaluation against a known problem.
//!
//! Excess risk is computed through the identity
//! `R(f) - R(f*) = E[|2 eta(X) - 1| 1{f(X) != f*(X)}]`, either by Monte Carlo
//! or, for one-dimensional problems, by quadrature over the disagreement
//! region. The module also holds the empirical audits of the smoothness and
//! margin conditions and the log-log rate fit used by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::Classifier;
use crate::error::{invalid, Error, Result};
use crate::problem::{ball_prob_empirical, normal_cdf, sq_dist, Label, Pool, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskMethod {
    MonteCarlo,
    Quadrature,
}

impl RiskMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RiskMethod::MonteCarlo => "monte-carlo",
            RiskMethod::Quadrature => "quadrature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub excess_risk: f64,
    /// Zero for quadrature.
    pub std_error: f64,
    pub method: RiskMethod,
    /// Sample size, or integrand evaluations for quadrature.
    pub n_eval: usize,
}

fn weighted_disagreement(problem: &dyn Problem, classifier: &dyn Classifier, x: &[f64]) -> Result<f64> {
    let eta = problem.eta(x);
    let bayes = Label::from(eta >= 0.5);
    Ok(if classifier.classify(x)? != bayes {
        (2.0 * eta - 1.0).abs()
    } else {
        0.0
    })
}

/// Monte Carlo excess risk over `m` fresh draws from `P_X`.
pub fn excess_risk_mc(problem: &dyn Problem, classifier: &dyn Classifier, m: usize, seed: u64) -> Result<RiskEstimate> {
    if m == 0 {
        return Err(invalid("m", "sample size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; problem.dim()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..m {
        problem.sample(&mut rng, &mut x);
        let v = weighted_disagreement(problem, classifier, &x)?;
        sum += v;
        sum_sq += v * v;
    }
    let mf = m as f64;
    let mean = sum / mf;
    let var = if m > 1 {
        ((sum_sq - mf * mean * mean) / (mf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(RiskEstimate {
        excess_risk: mean,
        std_error: (var / mf).sqrt(),
        method: RiskMethod::MonteCarlo,
        n_eval: m,
    })
}

/// Settings for [`excess_risk_quadrature_1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Absolute error target for the whole integral.
    pub tol: f64,
    /// Grid nodes used to locate where `f` and `f*` change.
    pub scan_nodes: usize,
    /// Half-width of the integration window in marginal standard deviations.
    pub truncation: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            scan_nodes: 1 << 16,
            truncation: 8.0,
            max_depth: 50,
        }
    }
}

struct Integrand<'a> {
    problem: &'a dyn Problem,
    evals: usize,
}

impl Integrand<'_> {
    fn value(&mut self, x: f64) -> f64 {
        self.evals += 1;
        let p = [x];
        let density = self.problem.density(&p).unwrap_or(0.0);
        (2.0 * self.problem.eta(&p) - 1.0).abs() * density
    }

    fn simpson(&mut self, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (fa, fm, fb) = (self.value(a), self.value(0.5 * (a + b)), self.value(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.refine(a, b, fa, fm, fb, whole, tol, depth)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (self.value(lm), self.value(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= 15.0 * tol {
            return left + right + err / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + self.refine(m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Excess risk of a classifier on a one-dimensional problem by quadrature.
///
/// The window `[-8, 8]` (times the marginal scale, which is 1 for every
/// built-in problem) is scanned for points where `1{f != f*}` flips; each flip
/// is located by bisection and the smooth integrand `|2 eta - 1| p_X` is
/// integrated by adaptive Simpson over the disagreement segments only.
pub fn excess_risk_quadrature_1d(
    problem: &dyn Problem,
    classifier: &dyn Classifier,
    opts: &QuadratureOptions,
) -> Result<RiskEstimate> {
    if problem.dim() != 1 {
        return Err(Error::NotOneDimensional(problem.dim()));
    }
    if problem.density(&[0.0]).is_none() {
        return Err(invalid("problem", "quadrature needs a closed-form density"));
    }
    if opts.scan_nodes < 2 || !(opts.tol > 0.0) {
        return Err(invalid("quadrature", "need scan_nodes >= 2 and tol > 0"));
    }
    let disagree = |x: f64| -> Result<bool> {
        let p = [x];
        Ok(classifier.classify(&p)? != problem.bayes(&p))
    };
    let (lo, hi) = (-opts.truncation, opts.truncation);
    let step = (hi - lo) / (opts.scan_nodes - 1) as f64;
    let mut evals = 0usize;
    let mut segments: Vec<(f64, f64)> = Vec::new();
    let mut prev_x = lo;
    let mut prev = disagree(lo)?;
    let mut seg_start = prev.then_some(lo);
    for i in 1..opts.scan_nodes {
        let x = if i + 1 == opts.scan_nodes {
            hi
        } else {
            lo + i as f64 * step
        };
        let cur = disagree(x)?;
        evals += 1;
        if cur != prev {
            // bisect on [prev_x, x] for the flip of the indicator
            let (mut a, mut b) = (prev_x, x);
            while b - a > 1e-14 * (1.0 + a.abs()) {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if disagree(m)? == prev {
                    a = m;
                } else {
                    b = m;
                }
                evals += 1;
            }
            let flip = 0.5 * (a + b);
            match seg_start.take() {
                Some(start) => segments.push((start, flip)),
                None => seg_start = Some(flip),
            }
        }
        prev = cur;
        prev_x = x;
    }
    if let Some(start) = seg_start {
        segments.push((start, hi));
    }
    let mut integrand = Integrand { problem, evals: 0 };
    let width = hi - lo;
    let mut total = 0.0;
    for (a, b) in segments {
        if b > a {
            total += integrand.simpson(a, b, opts.tol * ((b - a) / width).max(1e-3), opts.max_depth);
        }
    }
    Ok(RiskEstimate {
        excess_risk: total.max(0.0),
        std_error: 0.0,
        method: RiskMethod::Quadrature,
        n_eval: evals + integrand.evals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    Smoothness,
    MarginNoise,
}

impl Assumption {
    pub fn as_str(&self) -> &'static str {
        match self {
            Assumption::Smoothness => "H2-smoothness",
            Assumption::MarginNoise => "H4-margin-noise",
        }
    }
}

/// Worst observed case of an audit.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// Pair `(x, x')` with `|eta(x) - eta(x')|` against
    /// `L P_X(B(x, |x - x'|))^(alpha/d)`.
    Pair {
        x: Vec<f64>,
        x_prime: Vec<f64>,
        lhs: f64,
        rhs: f64,
    },
    /// Margin level with estimated mass against `C eps^beta`.
    Level {
        epsilon: f64,
        estimate: f64,
        std_error: f64,
        bound: f64,
    },
}

/// Estimated `P_X(|eta - 1/2| < eps)` at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginEstimate {
    pub epsilon: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub assumption: Assumption,
    /// Pairs (smoothness) or margin levels (noise) tested.
    pub tested: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen (smoothness) or largest excess over the
    /// bound (noise), with its inputs.
    pub worst: Option<Witness>,
    /// Smallest `L` consistent with every tested pair (smoothness only).
    pub required_l: Option<f64>,
    pub levels: Vec<MarginEstimate>,
}

/// Ball-mass source for the smoothness audit: closed form when the problem
/// has one, otherwise the fraction of `pool` inside the ball.
pub fn audit_h2(
    problem: &dyn Problem,
    alpha: f64,
    l: f64,
    pairs: usize,
    seed: u64,
    pool: Option<&Pool>,
) -> Result<AuditReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    if !(l > 0.0) {
        return Err(invalid("L", "must be positive"));
    }
    let d = problem.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
    let mut violations = 0;
    let mut worst: Option<(f64, Witness)> = None;
    let mut required_l = 0.0f64;
    for _ in 0..pairs {
        problem.sample(&mut rng, &mut x);
        problem.sample(&mut rng, &mut y);
        let r = sq_dist(&x, &y).sqrt();
        let mass = match (problem.ball_prob(&x, r), pool) {
            (Some(m), _) => m,
            (None, Some(pool)) => ball_prob_empirical(pool, &x, r),
            (None, None) => return Err(invalid("ball_prob", "no closed form and no pool given")),
        };
        let lhs = (problem.eta(&x) - problem.eta(&y)).abs();
        let scale = mass.powf(alpha / d as f64);
        let rhs = l * scale;
        if lhs > rhs {
            violations += 1;
        }
        if lhs > 0.0 {
            let need = if scale > 0.0 { lhs / scale } else { f64::INFINITY };
            required_l = required_l.max(need);
            let ratio = lhs / rhs;
            if worst.as_ref().is_none_or(|w| ratio > w.0) {
                worst = Some((
                    ratio,
                    Witness::Pair {
                        x: x.clone(),
                        x_prime: y.clone(),
                        lhs,
                        rhs,
                    },
                ));
            }
        }
    }
    Ok(AuditReport {
        assumption: Assumption::Smoothness,
        tested: pairs,
        violations,
        worst: worst.map(|w| w.1),
        required_l: Some(required_l),
        levels: Vec::new(),
    })
}

/// Monte Carlo check of `P_X(|eta - 1/2| < eps) <= C eps^beta` on a grid of
/// levels. A level counts as violated when the estimate exceeds the bound by
/// more than three standard errors.
pub fn audit_h4(
    problem: &dyn Problem,
    beta: f64,
    c: f64,
    epsilons: &[f64],
    m: usize,
    seed: u64,
) -> Result<AuditReport> {
    let margins = sample_margins(problem, m, seed)?;
    audit_h4_on(&margins, beta, c, epsilons)
}

fn sample_margins(problem: &dyn Problem, m: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(invalid("m", "sample size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; problem.dim()];
    Ok((0..m)
        .map(|_| {
            problem.sample(&mut rng, &mut x);
            (problem.eta(&x) - 0.5).abs()
        })
        .collect())
}

fn audit_h4_on(margins: &[f64], beta: f64, c: f64, epsilons: &[f64]) -> Result<AuditReport> {
    if !(beta >= 0.0) || !(c > 0.0) {
        return Err(invalid("beta/C", "need beta >= 0 and C > 0"));
    }
    let m = margins.len() as f64;
    let mut levels = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1], got {eps}")));
        }
        let p = margins.iter().filter(|&&v| v < eps).count() as f64 / m;
        let se = (p * (1.0 - p) / m).sqrt();
        let bound = c * eps.powf(beta);
        levels.push(MarginEstimate {
            epsilon: eps,
            estimate: p,
            std_error: se,
            bound,
            violated: p - bound > 3.0 * se,
        });
    }
    let worst = levels
        .iter()
        .max_by(|a, b| (a.estimate - a.bound).total_cmp(&(b.estimate - b.bound)))
        .map(|l| Witness::Level {
            epsilon: l.epsilon,
            estimate: l.estimate,
            std_error: l.std_error,
            bound: l.bound,
        });
    Ok(AuditReport {
        assumption: Assumption::MarginNoise,
        tested: levels.len(),
        violations: levels.iter().filter(|l| l.violated).count(),
        worst,
        required_l: None,
        levels,
    })
}

/// Largest `beta` on the grid `0, step, 2 step, ..., max_beta` passing
/// [`audit_h4`] with constant `c`; `None` if even `beta = 0` fails.
pub fn fit_margin_exponent(
    problem: &dyn Problem,
    c: f64,
    epsilons: &[f64],
    m: usize,
    seed: u64,
    step: f64,
    max_beta: f64,
) -> Result<Option<f64>> {
    if !(step > 0.0) {
        return Err(invalid("step", "must be positive"));
    }
    let margins = sample_margins(problem, m, seed)?;
    let mut best = None;
    let steps = (max_beta / step).floor() as usize;
    for i in 0..=steps {
        let beta = i as f64 * step;
        if audit_h4_on(&margins, beta, c, epsilons)?.violations == 0 {
            best = Some(beta);
        } else {
            // the bound only shrinks as beta grows when eps <= 1
            break;
        }
    }
    Ok(best)
}

/// Least-squares line through `(ln n, ln e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    if points.iter().any(|&(n, e)| !(n > 0.0 && e > 0.0)) {
        return Err(invalid("points", "budgets and excess risks must be positive"));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "budgets must not all be equal"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Minimax exponent `-alpha (beta + 1) / (2 alpha + d - alpha beta)`.
pub fn theoretical_slope(alpha: f64, beta: f64, dim: usize) -> f64 {
    -alpha * (beta + 1.0) / (2.0 * alpha + dim as f64 - alpha * beta)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// One-sided Wilcoxon rank-sum (Mann-Whitney) test of the alternative that
/// `lower` tends to be smaller than `upper`. Normal approximation with tie
/// and continuity corrections. Returns the p-value.
pub fn rank_sum_less(lower: &[f64], upper: &[f64]) -> Result<f64> {
    let (n1, n2) = (lower.len(), upper.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut all: Vec<(f64, bool)> = lower
        .iter()
        .map(|&v| (v, true))
        .chain(upper.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut rank_sum_lower = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_lower += all[i..=j].iter().filter(|e| e.1).count() as f64 * avg_rank;
        i = j + 1;
    }
    let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_lower - f1 * (f1 + 1.0) / 2.0;
    let mean = f1 * f2 / 2.0;
    let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)).max(1.0));
    if var <= 0.0 {
        return Ok(if u < mean { 0.0 } else { 1.0 });
    }
    let z = (u - mean + 0.5) / var.sqrt();
    Ok(normal_cdf(z))
}
