//! The adaptive active learner.
//!
//! The outer loop walks a decreasing grid of smoothness exponents
//! `alpha_i = 2^(1-i)`. At each level the pool is scanned in order; a point is
//! skipped when it was already labeled at an earlier level, or when a point
//! with a known margin guarantee is close enough in `P_X`-mass for its label to
//! carry over ([`reliable`]). Otherwise its label is inferred by a sequential
//! majority vote over its nearest neighbors ([`confident_adapt`]) and the point
//! goes to the informative set if the vote's lower bound on `|eta - 1/2|` is
//! large enough, to the noisy set otherwise. The final classifier is 1-NN on
//! the informative set.
//!
//! Budget bookkeeping charges every neighbor label requested, including labels
//! the oracle already revealed for an earlier point.

use crate::classifier::{LabeledPoint, OneNNClassifier};
use crate::error::{invalid, Error, Result};
use crate::neighbors::NeighborIndex;
use crate::problem::{sq_dist, Label, Oracle, Pool, Problem};
use crate::stats::{self, build_grids, confidence_radius, GridSpec, StatParams};

/// Threshold factor on the confidence radius for admitting a point into the
/// informative set.
pub const INFORMATIVE_FACTOR: f64 = 0.1;

/// Denominator in the reliability radius `(c / (64 L))^(d / alpha)`.
pub const RELIABLE_SCALE: f64 = 64.0;

/// Where `P_X(B(x, r))` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BallMassMode {
    /// Closed form when the problem has one, pool estimate otherwise.
    #[default]
    Auto,
    Empirical,
}

#[derive(Debug, Clone, Copy)]
pub enum BallMass<'a> {
    Analytic(&'a dyn Problem),
    /// Fraction of indexed pool points strictly inside the ball.
    Empirical(&'a NeighborIndex),
}

impl<'a> BallMass<'a> {
    pub fn select(mode: BallMassMode, problem: &'a dyn Problem, index: &'a NeighborIndex) -> Self {
        let analytic = !index.is_empty() && problem.ball_prob(index.points().get(0), 0.0).is_some();
        match mode {
            BallMassMode::Auto if analytic => BallMass::Analytic(problem),
            _ => BallMass::Empirical(index),
        }
    }
}

/// A point whose label was inferred with margin lower bound `lower_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guarantee {
    pub index: usize,
    pub lower_bound: f64,
    /// Labels requested for the vote and the confidence level it ran at.
    pub requests: usize,
    pub delta: f64,
}

impl Guarantee {
    /// Guarantee with no recorded vote, for feeding [`reliable`] directly.
    pub fn new(index: usize, lower_bound: f64) -> Self {
        Self {
            index,
            lower_bound,
            requests: 0,
            delta: f64::NAN,
        }
    }
}

/// Largest count `m` with `m / w <= tau`.
fn max_count_within(tau: f64, w: usize) -> usize {
    let wf = w as f64;
    let mut m = (tau * wf).floor().clamp(0.0, wf) as usize;
    while m < w && ((m + 1) as f64) / wf <= tau {
        m += 1;
    }
    while m > 0 && (m as f64) / wf > tau {
        m -= 1;
    }
    m
}

/// True iff some guarantee `(x', c)` satisfies
/// `P_X(B(x, |x - x'|)) <= (c / (64 L))^(d / alpha)`.
pub fn reliable(
    x: &[f64],
    alpha: f64,
    l: f64,
    guarantees: &[Guarantee],
    pool: &Pool,
    mass: BallMass<'_>,
) -> Result<bool> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    if !(l >= 1.0) {
        return Err(invalid("L", format!("must be >= 1, got {l}")));
    }
    if guarantees.is_empty() {
        return Ok(false);
    }
    let exponent = x.len() as f64 / alpha;
    let thresholds = guarantees.iter().map(|g| {
        (
            sq_dist(x, pool.point(g.index)),
            (g.lower_bound / (RELIABLE_SCALE * l)).powf(exponent),
        )
    });
    match mass {
        BallMass::Analytic(problem) => {
            for (d2, tau) in thresholds {
                let mass = problem
                    .ball_prob(x, d2.sqrt())
                    .ok_or_else(|| invalid("ball_prob", "problem has no closed-form ball mass"))?;
                if mass <= tau {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        BallMass::Empirical(index) => {
            let w = index.len();
            let checks: Vec<(f64, usize)> = thresholds.map(|(d2, tau)| (d2, max_count_within(tau, w))).collect();
            if checks.iter().any(|&(d2, m)| d2 == 0.0 || m >= w) {
                return Ok(true);
            }
            // sq distance of the (m+1)-th neighbor decides "at most m inside"
            let deepest = checks.iter().map(|c| c.1).max().unwrap_or(0);
            let ring: Vec<f64> = index.stream(x).take(deepest + 1).map(|n| n.sq_dist).collect();
            Ok(checks.iter().any(|&(d2, m)| ring.get(m).is_none_or(|&r2| r2 >= d2)))
        }
    }
}

/// Outcome of the sequential neighbor vote at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidentResult {
    /// Majority vote, `1` iff the mean requested label is at least 1/2.
    pub label: Label,
    /// Neighbors whose labels were requested, nearest first.
    pub queried: Vec<LabeledPoint>,
    /// `|mean - 1/2| - b(delta, |Q|)`; `-inf` when nothing was requested.
    pub lower_bound: f64,
    pub stopped_by_cutoff: bool,
    /// No request was possible (`t = 0`).
    pub budget_exhausted: bool,
    /// Largest noise-grid index whose bound covers `|Q|`.
    pub certified_level: Option<usize>,
}

impl ConfidentResult {
    pub fn requests(&self) -> usize {
        self.queried.len()
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.queried.is_empty())
            .then(|| self.queried.iter().map(|q| q.label as f64).sum::<f64>() / self.queried.len() as f64)
    }
}

/// Infers the label of `x` from the labels of its nearest pool neighbors,
/// requested one at a time in order of distance.
///
/// After the `k`-th request the vote stops if `|mean_k - 1/2| > 2 b(delta, k)`.
/// Otherwise it continues up to `min(k_cap, t)` requests, where `k_cap` is the
/// largest sample-size bound over the noise grid.
#[allow(clippy::too_many_arguments)]
pub fn confident_adapt(
    x: &[f64],
    t: usize,
    delta: f64,
    index: &NeighborIndex,
    oracle: &mut Oracle<'_>,
    grids: &GridSpec,
    params: &StatParams,
) -> Result<ConfidentResult> {
    stats::check_delta(delta)?;
    if index.is_empty() {
        return Err(Error::EmptyPool);
    }
    if t == 0 {
        return Ok(ConfidentResult {
            label: 1,
            queried: Vec::new(),
            lower_bound: f64::NEG_INFINITY,
            stopped_by_cutoff: false,
            budget_exhausted: true,
            certified_level: None,
        });
    }
    let cap = grids.request_cap(params, delta)?;
    let limit = (t as u64).min(cap).max(1);
    let mut queried = Vec::new();
    let mut ones = 0u64;
    let mut cutoff = false;
    for (k, neighbor) in (1u64..).zip(index.stream(x)) {
        let label = oracle.query(neighbor.index)?;
        ones += label as u64;
        queried.push(LabeledPoint {
            index: neighbor.index,
            label,
        });
        let gap = (ones as f64 / k as f64 - 0.5).abs();
        if gap > 2.0 * confidence_radius(delta, k)? {
            cutoff = true;
            break;
        }
        if k >= limit {
            break;
        }
    }
    let k = queried.len() as u64;
    let mean = ones as f64 / k as f64;
    Ok(ConfidentResult {
        label: Label::from(mean >= 0.5),
        lower_bound: (mean - 0.5).abs() - confidence_radius(delta, k)?,
        stopped_by_cutoff: cutoff,
        budget_exhausted: false,
        certified_level: grids.certified_level(params, delta, k)?,
        queried,
    })
}

/// Inputs of a run besides the pool and oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineParams {
    /// Label budget `n`.
    pub budget: usize,
    pub l: f64,
    pub c: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub stats: StatParams,
    pub ball_mass: BallMassMode,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            budget: 1000,
            l: 1.0,
            c: 1.0,
            delta: 0.1,
            epsilon: 0.05,
            stats: StatParams::default(),
            ball_mass: BallMassMode::Auto,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(invalid("n", "label budget must be at least 1"));
        }
        stats::check_epsilon(self.epsilon)?;
        stats::check_delta(self.delta)?;
        self.stats.validate()?;
        if self.delta > self.stats.delta_cap {
            return Err(invalid("delta", format!("exceeds delta_cap {}", self.stats.delta_cap)));
        }
        if !(self.l >= 1.0 && self.l.is_finite()) {
            return Err(invalid("L", format!("must be >= 1, got {}", self.l)));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(invalid("C", format!("must be >= 1, got {}", self.c)));
        }
        Ok(())
    }

    /// Per-level budget `max(1, floor(n / ceil(log2(1/eps))))`.
    pub fn level_budget(&self) -> Result<usize> {
        Ok((self.budget / stats::num_levels(self.epsilon)?).max(1))
    }

    /// `delta_s = delta / (32 s^2 ceil(log2(1/eps)))` for the 1-based scan position `s`.
    pub fn point_delta(&self, s: usize) -> Result<f64> {
        let levels = stats::num_levels(self.epsilon)? as f64;
        let s = s as f64;
        Ok(self.delta / (32.0 * s * s * levels))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Unseen,
    Informative,
    Noisy,
}

/// Per-level bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub alpha: f64,
    pub budget: usize,
    pub charged: usize,
    pub examined: usize,
    pub reliable_skips: usize,
    pub added_informative: usize,
    pub added_noisy: usize,
    pub cutoffs: usize,
    /// `|S_i|` once the level completes.
    pub informative_total: usize,
}

/// Evolving sets of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveState {
    /// Informative points in insertion order; `S_i` is the prefix of length
    /// `levels[i - 1].informative_total`.
    pub informative: Vec<LabeledPoint>,
    pub noisy: Vec<LabeledPoint>,
    /// One entry per informative point, same order.
    pub guarantees: Vec<Guarantee>,
    /// Budget left in the last level run (can be 0, never negative here
    /// since each vote is capped by the remaining budget).
    pub budget_remaining: i64,
    pub level: usize,
    pub levels: Vec<LevelSummary>,
    status: Vec<Status>,
}

impl ActiveState {
    fn new(w: usize) -> Self {
        Self {
            informative: Vec::new(),
            noisy: Vec::new(),
            guarantees: Vec::new(),
            budget_remaining: 0,
            level: 0,
            levels: Vec::new(),
            status: vec![Status::Unseen; w],
        }
    }

    /// `S_i` for a completed level `i` (1-based).
    pub fn informative_at_level(&self, level: usize) -> &[LabeledPoint] {
        let len = match level {
            0 => 0,
            i => self.levels[i - 1].informative_total,
        };
        &self.informative[..len]
    }

    pub fn is_informative(&self, index: usize) -> bool {
        self.status.get(index) == Some(&Status::Informative)
    }

    pub fn is_noisy(&self, index: usize) -> bool {
        self.status.get(index) == Some(&Status::Noisy)
    }
}

/// Counters reported with every run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// `sum_s |Q_s|`.
    pub charged_requests: usize,
    pub distinct_reveals: usize,
    /// Largest per-point request cap met during the run.
    pub max_request_cap: u64,
    pub confident_calls: usize,
    pub cutoffs: usize,
    pub reliable_skips: usize,
}

#[derive(Debug, Clone)]
pub struct AkallsRun {
    pub classifier: OneNNClassifier,
    pub state: ActiveState,
    pub metrics: RunMetrics,
}

/// Runs the full adaptive learner on `pool` with labels from `oracle`.
///
/// `index` must be built over the same pool.
pub fn run_akalls(
    problem: &dyn Problem,
    pool: &Pool,
    index: &NeighborIndex,
    oracle: &mut Oracle<'_>,
    params: &EngineParams,
) -> Result<AkallsRun> {
    params.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    if index.len() != pool.len() || index.points().dim() != pool.dim() {
        return Err(invalid("index", "neighbor index was not built over this pool"));
    }
    let grids = build_grids(params.epsilon, params.c)?;
    let level_budget = params.level_budget()?;
    let mass = BallMass::select(params.ball_mass, problem, index);
    let w = pool.len();

    let mut state = ActiveState::new(w);
    let mut metrics = RunMetrics {
        charged_requests: 0,
        distinct_reveals: 0,
        max_request_cap: 0,
        confident_calls: 0,
        cutoffs: 0,
        reliable_skips: 0,
    };
    let reveals_before = oracle.distinct_reveals();

    for (i, &alpha) in grids.alphas.iter().enumerate() {
        let mut summary = LevelSummary {
            level: i + 1,
            alpha,
            budget: level_budget,
            charged: 0,
            examined: 0,
            reliable_skips: 0,
            added_informative: 0,
            added_noisy: 0,
            cutoffs: 0,
            informative_total: 0,
        };
        let mut t = level_budget as i64;
        // level-i additions are staged so that membership checks see S_{i-1}
        let mut added: Vec<(LabeledPoint, Guarantee)> = Vec::new();
        for s in 1..=w {
            if t <= 0 {
                break;
            }
            let idx = s - 1;
            if state.status[idx] != Status::Unseen {
                continue;
            }
            summary.examined += 1;
            let x = pool.point(idx);
            let delta_s = params.point_delta(s)?;
            let staged: Vec<Guarantee> = added.iter().map(|a| a.1).collect();
            let known = state.guarantees.iter().chain(&staged).copied().collect::<Vec<_>>();
            if reliable(x, alpha, params.l, &known, pool, mass)? {
                summary.reliable_skips += 1;
                continue;
            }
            let res = confident_adapt(x, t as usize, delta_s, index, oracle, &grids, &params.stats)?;
            let q = res.requests();
            metrics.max_request_cap = metrics.max_request_cap.max(grids.request_cap(&params.stats, delta_s)?);
            metrics.confident_calls += 1;
            t -= q as i64;
            summary.charged += q;
            if res.stopped_by_cutoff {
                summary.cutoffs += 1;
            }
            let point = LabeledPoint {
                index: idx,
                label: res.label,
            };
            let threshold = if q > 0 {
                INFORMATIVE_FACTOR * confidence_radius(delta_s, q as u64)?
            } else {
                f64::INFINITY
            };
            if res.lower_bound >= threshold {
                state.status[idx] = Status::Informative;
                added.push((
                    point,
                    Guarantee {
                        index: idx,
                        lower_bound: res.lower_bound,
                        requests: q,
                        delta: delta_s,
                    },
                ));
                summary.added_informative += 1;
            } else {
                state.status[idx] = Status::Noisy;
                state.noisy.push(point);
                summary.added_noisy += 1;
            }
        }
        for (p, g) in added {
            state.informative.push(p);
            state.guarantees.push(g);
        }
        summary.informative_total = state.informative.len();
        metrics.charged_requests += summary.charged;
        metrics.cutoffs += summary.cutoffs;
        metrics.reliable_skips += summary.reliable_skips;
        state.budget_remaining = t;
        state.level = i + 1;
        state.levels.push(summary);
    }
    metrics.distinct_reveals = oracle.distinct_reveals() - reveals_before;
    let classifier = OneNNClassifier::new(pool, &state.informative)?;
    Ok(AkallsRun {
        classifier,
        state,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{draw_pool, ConstantEta, ExampleDistribution, Points, Threshold};

    fn pool_of(values: &[f64]) -> Pool {
        Pool::from_points(Points::new(1, values.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn reliable_empty_and_zero_radius() {
        let p = ExampleDistribution::new(0.6).unwrap();
        let pool = pool_of(&[0.5, 0.7]);
        let index = NeighborIndex::build(pool.points().clone());
        for mass in [BallMass::Analytic(&p), BallMass::Empirical(&index)] {
            assert!(!reliable(&[0.5], 1.0, 1.0, &[], &pool, mass).unwrap());
            let g = [Guarantee::new(0, 0.01)];
            assert!(reliable(&[0.5], 1.0, 1.0, &g, &pool, mass).unwrap());
        }
    }

    #[test]
    fn reliable_normal_mass_threshold() {
        // threshold (0.4/64)^1 = 0.00625; the mass of B(0.5001, 1e-4) is
        // ~7.04e-5 and that of B(0.52, 0.02) is ~1.39e-2 (normal CDF)
        let p = ExampleDistribution::new(0.6).unwrap();
        let pool = pool_of(&[0.5]);
        let g = [Guarantee::new(0, 0.4)];
        let mass = BallMass::Analytic(&p);
        assert!(reliable(&[0.5001], 1.0, 1.0, &g, &pool, mass).unwrap());
        assert!(!reliable(&[0.52], 1.0, 1.0, &g, &pool, mass).unwrap());
        // smaller alpha shrinks the radius: (0.00625)^2 = 3.9e-5 < 7.04e-5
        assert!(!reliable(&[0.5001], 0.5, 1.0, &g, &pool, mass).unwrap());
    }

    #[test]
    fn empirical_reliable_agrees_with_direct_count() {
        let p = ExampleDistribution::new(0.6).unwrap();
        let pool = draw_pool(&p, 3000, 2).unwrap();
        let index = NeighborIndex::build(pool.points().clone());
        let g: Vec<Guarantee> = (0..5).map(|i| Guarantee::new(i, 0.3)).collect();
        for q in 0..200 {
            let x = pool.point(100 + q);
            for alpha in [1.0, 0.5] {
                let direct = g.iter().any(|g| {
                    let r = sq_dist(x, pool.point(g.index)).sqrt();
                    crate::problem::ball_prob_empirical(&pool, x, r) <= (g.lower_bound / 64.0).powf(1.0 / alpha)
                });
                let fast = reliable(x, alpha, 1.0, &g, &pool, BallMass::Empirical(&index)).unwrap();
                assert_eq!(direct, fast);
            }
        }
    }

    #[test]
    fn max_count_within_matches_ratio() {
        for w in [1, 3, 7, 1000] {
            for tau in [0.0, 1e-4, 0.1, 1.0 / 3.0, 0.5, 1.0, 2.0] {
                let m = max_count_within(tau, w);
                assert!(m as f64 / w as f64 <= tau || m == 0);
                assert!(m == w || (m + 1) as f64 / w as f64 > tau);
            }
        }
    }

    fn fixture(problem: &dyn Problem, w: usize, seed: u64) -> (Pool, NeighborIndex) {
        let pool = draw_pool(problem, w, seed).unwrap();
        let index = NeighborIndex::build(pool.points().clone());
        (pool, index)
    }

    #[test]
    fn confident_adapt_single_request_budget() {
        let p = ConstantEta::new(0.5, 1).unwrap();
        let (pool, index) = fixture(&p, 50, 1);
        let mut o = Oracle::new(&p, &pool, 2);
        let grids = build_grids(0.05, 1.0).unwrap();
        let r = confident_adapt(pool.point(0), 1, 0.01, &index, &mut o, &grids, &StatParams::default()).unwrap();
        assert_eq!(r.requests(), 1);
        assert_eq!(r.queried[0].index, 0);
    }

    #[test]
    fn confident_adapt_zero_budget() {
        let p = ConstantEta::new(0.5, 1).unwrap();
        let (pool, index) = fixture(&p, 5, 1);
        let mut o = Oracle::new(&p, &pool, 2);
        let grids = build_grids(0.05, 1.0).unwrap();
        let r = confident_adapt(pool.point(0), 0, 0.01, &index, &mut o, &grids, &StatParams::default()).unwrap();
        assert!(r.budget_exhausted);
        assert_eq!(r.requests(), 0);
        assert_eq!(r.lower_bound, f64::NEG_INFINITY);
        assert_eq!(o.distinct_reveals(), 0);
    }

    #[test]
    fn confident_adapt_cutoff_on_pure_labels() {
        let p = ConstantEta::new(1.0, 1).unwrap();
        let (pool, index) = fixture(&p, 1000, 3);
        let mut o = Oracle::new(&p, &pool, 4);
        let grids = build_grids(0.05, 1.0).unwrap();
        let r = confident_adapt(
            pool.point(0),
            100_000,
            0.01,
            &index,
            &mut o,
            &grids,
            &StatParams::default(),
        )
        .unwrap();
        assert!(r.stopped_by_cutoff);
        assert_eq!(r.requests(), 257);
        assert_eq!(r.label, 1);
        assert!(r.lower_bound > 0.0);
    }

    #[test]
    fn confident_adapt_requests_nearest_first() {
        let p = ConstantEta::new(0.5, 1).unwrap();
        let (pool, index) = fixture(&p, 200, 5);
        let mut o = Oracle::new(&p, &pool, 6);
        let grids = build_grids(0.05, 1.0).unwrap();
        let x = pool.point(17);
        let r = confident_adapt(x, 40, 0.01, &index, &mut o, &grids, &StatParams::default()).unwrap();
        let expected = crate::neighbors::brute_force_order(pool.points(), x);
        let got: Vec<usize> = r.queried.iter().map(|q| q.index).collect();
        assert_eq!(got, expected[..got.len()]);
    }

    #[test]
    fn run_with_single_point_and_unit_budget() {
        let p = ExampleDistribution::new(0.6).unwrap();
        let (pool, index) = fixture(&p, 1, 9);
        let mut o = Oracle::new(&p, &pool, 1);
        let params = EngineParams {
            budget: 1,
            ..EngineParams::default()
        };
        let run = run_akalls(&p, &pool, &index, &mut o, &params).unwrap();
        assert!(run.metrics.charged_requests <= 1);
        assert!(run.classifier.support().len() <= 1);
    }

    #[test]
    fn deterministic_problem_gets_bayes_labels() {
        let p = Threshold::new(1).unwrap();
        let (pool, index) = fixture(&p, 2000, 10);
        let mut o = Oracle::new(&p, &pool, 11);
        let params = EngineParams {
            budget: 3000,
            ..EngineParams::default()
        };
        let run = run_akalls(&p, &pool, &index, &mut o, &params).unwrap();
        assert!(!run.state.informative.is_empty());
        // votes near the threshold mix both sides, so only certified points
        // are guaranteed to carry the Bayes label
        for lp in &run.state.informative {
            assert_eq!(lp.label, p.bayes(pool.point(lp.index)), "point {}", lp.index);
        }
    }

    #[test]
    fn run_rejects_bad_parameters() {
        let p = ExampleDistribution::new(0.6).unwrap();
        let (pool, index) = fixture(&p, 10, 1);
        let mut o = Oracle::new(&p, &pool, 1);
        for bad in [
            EngineParams {
                budget: 0,
                ..EngineParams::default()
            },
            EngineParams {
                epsilon: 0.5,
                ..EngineParams::default()
            },
            EngineParams {
                delta: 0.4,
                ..EngineParams::default()
            },
            EngineParams {
                l: 0.5,
                ..EngineParams::default()
            },
            EngineParams {
                c: 0.5,
                ..EngineParams::default()
            },
        ] {
            assert!(run_akalls(&p, &pool, &index, &mut o, &bad).is_err());
        }
    }

    #[test]
    fn level_budget_and_point_delta() {
        let params = EngineParams {
            budget: 2000,
            epsilon: 0.05,
            delta: 0.1,
            ..EngineParams::default()
        };
        assert_eq!(params.level_budget().unwrap(), 400);
        assert!((params.point_delta(1).unwrap() - 0.1 / 160.0).abs() < 1e-18);
        assert!((params.point_delta(3).unwrap() - 0.1 / 1440.0).abs() < 1e-18);
        let tiny = EngineParams { budget: 2, ..params };
        assert_eq!(tiny.level_budget().unwrap(), 1);
    }
}
