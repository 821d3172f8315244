//! Validation suite for the acceptance criteria. Prints one PASS/FAIL line
//! per criterion and exits non-zero if any fails. Numeric arguments select
//! criteria.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use akalls::classifier::{BayesClassifier, ConstantClassifier};
use akalls::engine::{confident_adapt, BallMassMode};
use akalls::eval::{
    audit_h2, excess_risk_mc, excess_risk_quadrature_1d, fit_margin_exponent, median, rank_sum_less, theoretical_slope,
    QuadratureOptions,
};
use akalls::neighbors::{brute_force_order, SearchStrategy};
use akalls::problem::{sq_dist, ConstantEta, ExampleDistribution, ExampleNd, Threshold};
use akalls::stats::{build_grids, confidence_radius, margin_threshold, phi, sample_bound, sample_bound_raw};
use akalls::{
    draw_pool, run_akalls, AkallsRun, Classifier, EngineParams, Error, NeighborIndex, Oracle, Points, Pool, Problem,
    StatParams,
};
use akalls_bench::record::{ALGO_AKALLS, ALGO_PASSIVE};
use akalls_bench::{run_experiment, summarize, EvalMethod, Execution, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(usize, &str, Check); 8] = [
        (1, "formula fidelity", formula_fidelity),
        (2, "sequential-test coverage", sequential_coverage),
        (3, "structural invariants", structural_invariants),
        (4, "nearest-neighbor exactness", nn_exactness),
        (5, "assumption audits", assumption_audits),
        (6, "evaluator cross-check", evaluator_cross_check),
        (7, "convergence behavior", convergence),
        (8, "degenerate handling", degenerate_handling),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {id} ({name}): {} [{:.1}s]",
            out.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

// 1. Closed forms against the 50-digit fixture, relative error <= 1e-12.
fn formula_fidelity() -> Outcome {
    const FIXTURE: &str = include_str!("../../core/tests/fixtures/formula_oracle.csv");
    let mut worst = 0.0f64;
    let mut rows = 0;
    let mut ceil_mismatch = 0;
    for line in FIXTURE.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| f[i].parse::<f64>().unwrap();
        let (a, b, c, want) = (num(1), num(2), num(3), num(4));
        let got = match f[0] {
            "radius" => confidence_radius(a, b as u64),
            "sample_raw" => {
                let params = StatParams::with_effective_constant(a);
                // the integer bound is the ceiling of the real one
                let k = sample_bound(&params, b, c).unwrap();
                if (want - want.round()).abs() > 1e-12 * want && k as f64 != want.ceil() {
                    ceil_mismatch += 1;
                }
                sample_bound_raw(&params, b, c)
            }
            "margin" => margin_threshold(a, b, c),
            "phi" => phi(a as u64, b),
            other => panic!("unknown formula {other}"),
        }
        .unwrap();
        worst = worst.max(((got - want) / want).abs());
        rows += 1;
    }
    outcome(
        rows == 4000 && worst <= 1e-12 && ceil_mismatch == 0,
        format!("{rows} rows, max relative error {worst:.2e}, integer-bound mismatches {ceil_mismatch}"),
    )
}

// 2. Anytime validity of the cutoff on eta = 1/2 and correctness at margin 0.3.
fn sequential_coverage() -> Outcome {
    const TRIALS: u64 = 500;
    let grids = build_grids(0.1, 1.0).unwrap();
    let params = StatParams::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for delta in [0.05, 0.01] {
        let cap = grids.request_cap(&params, delta).unwrap() as usize;
        for (p, label) in [(0.5, None), (0.8, Some(1u8))] {
            let problem = ConstantEta::new(p, 1).unwrap();
            let pool = draw_pool(&problem, cap + 1, 77).unwrap();
            let index = NeighborIndex::build(pool.points().clone());
            let x = pool.point(0).to_vec();
            let hits: u64 = (0..TRIALS)
                .into_par_iter()
                .map(|trial| {
                    let mut oracle = Oracle::new(&problem, &pool, 1000 + trial);
                    let r = confident_adapt(&x, cap, delta, &index, &mut oracle, &grids, &params).unwrap();
                    u64::from(match label {
                        None => r.stopped_by_cutoff,
                        Some(y) => r.label == y,
                    })
                })
                .sum();
            let freq = hits as f64 / TRIALS as f64;
            match label {
                None => {
                    pass &= freq <= 2.0 * delta;
                    parts.push(format!("delta={delta}: noise cutoff rate {freq:.3} (cap {cap})"));
                }
                Some(_) => {
                    pass &= freq >= 1.0 - 2.0 * delta;
                    parts.push(format!("margin-0.3 correct rate {freq:.3}"));
                }
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn random_problem(rng: &mut ChaCha8Rng) -> Box<dyn Problem> {
    let dim = rng.random_range(1..=2);
    match rng.random_range(0..4) {
        0 if dim == 1 => Box::new(ExampleDistribution::new(rng.random_range(0.3..1.0)).unwrap()),
        0 => Box::new(ExampleNd::new(rng.random_range(0.3..1.0), dim).unwrap()),
        1 => Box::new(Threshold::new(dim).unwrap()),
        2 => Box::new(ConstantEta::new(rng.random_range(0.0..1.0), dim).unwrap()),
        _ => Box::new(ExampleNd::new(0.6, dim).unwrap()),
    }
}

fn run_once(problem: &dyn Problem, pool: &Pool, seed: u64, params: &EngineParams) -> AkallsRun {
    let index = NeighborIndex::build(pool.points().clone());
    let mut oracle = Oracle::new(problem, pool, seed);
    run_akalls(problem, pool, &index, &mut oracle, params).unwrap()
}

// 3. Nesting, disjointness, budget, determinism and guarantee strength.
fn structural_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = Vec::new();
    let (mut with_informative, mut total_informative) = (0, 0);
    for run_id in 0..100 {
        let problem = random_problem(&mut rng);
        let w = rng.random_range(50..3000);
        let params = EngineParams {
            budget: rng.random_range(1..8000),
            l: rng.random_range(1.0..3.0),
            c: rng.random_range(1.0..3.0),
            delta: rng.random_range(0.01..0.3),
            epsilon: rng.random_range(0.05..0.4),
            stats: StatParams::default(),
            ball_mass: if rng.random_bool(0.5) {
                BallMassMode::Auto
            } else {
                BallMassMode::Empirical
            },
        };
        let seed = rng.random::<u64>();
        let pool = draw_pool(problem.as_ref(), w, seed).unwrap();
        let run = run_once(problem.as_ref(), &pool, seed ^ 1, &params);
        let again = run_once(problem.as_ref(), &pool, seed ^ 1, &params);
        let st = &run.state;
        let mut bad = |what: &str| violations.push(format!("run {run_id} ({}): {what}", problem.name()));

        for level in 1..st.levels.len() {
            if !st
                .informative_at_level(level)
                .starts_with(st.informative_at_level(level - 1))
            {
                bad("informative sets not nested");
            }
        }
        let mut seen = std::collections::HashSet::new();
        if !st.informative.iter().chain(&st.noisy).all(|p| seen.insert(p.index)) {
            bad("informative and noisy sets overlap");
        }
        if run.metrics.charged_requests > params.budget + run.metrics.max_request_cap as usize {
            bad("charged requests above n + k_cap");
        }
        if st.informative != again.state.informative || st.noisy != again.state.noisy || run.metrics != again.metrics {
            bad("not deterministic");
        }
        for g in &st.guarantees {
            let b = confidence_radius(g.delta, g.requests as u64).unwrap();
            if g.lower_bound.is_nan() || g.lower_bound < 0.1 * b {
                bad("guarantee below 0.1 b");
            }
        }
        with_informative += usize::from(!st.informative.is_empty());
        total_informative += st.informative.len();
    }
    let detail = format!(
        "100 runs, {with_informative} with informative points ({total_informative} total), {} violations{}",
        violations.len(),
        violations.first().map_or(String::new(), |v| format!("; first: {v}"))
    );
    outcome(violations.is_empty(), detail)
}

// 4. kd-tree against brute force, w <= 200.
fn nn_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for case in 0..1000 {
        let dim = rng.random_range(1..=4);
        let w = rng.random_range(1..=200);
        let ties = case % 4 == 0;
        let coords: Vec<f64> = (0..w * dim)
            .map(|_| {
                if ties {
                    rng.random_range(-2i32..=2) as f64
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let points = Points::new(dim, coords).unwrap();
        let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        let order = brute_force_order(&points, &q);
        let kd = NeighborIndex::with_strategy(points.clone(), SearchStrategy::KdTree);
        let bf = NeighborIndex::with_strategy(points.clone(), SearchStrategy::BruteForce);
        let kd_order: Vec<usize> = kd.stream(&q).map(|n| n.index).collect();
        let bf_order: Vec<usize> = bf.stream(&q).map(|n| n.index).collect();
        let k = rng.random_range(1..=w);
        let r = rng.random_range(0.0..1.5);
        let inside = (0..w).filter(|&i| sq_dist(points.get(i), &q).sqrt() < r).count();
        let m = rng.random_range(0..=w);
        if kd_order != order
            || bf_order != order
            || kd.kth_neighbor(&q, k).unwrap() != order[k - 1]
            || kd.at_most_within(&q, r, m) != (inside <= m)
        {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("1000 instances, {mismatches} mismatches"))
}

// 5. Smoothness audit of the 1-D example at (alpha, 1) and at alpha' = 1.
fn assumption_audits() -> Outcome {
    let p = ExampleDistribution::new(0.6).unwrap();
    let own = audit_h2(&p, 0.6, 1.0, 10_000, 5, None).unwrap();
    let inflated = audit_h2(&p, 1.0, 1.0, 10_000, 5, None).unwrap();
    outcome(
        own.violations == 0 && inflated.violations > 0,
        format!(
            "(0.6, 1): {} violations, smallest consistent L {:.3}; (1, 1): {} violations",
            own.violations,
            own.required_l.unwrap_or(f64::NAN),
            inflated.violations
        ),
    )
}

// 6. Monte Carlo (m = 1e6) against quadrature within 3 standard errors.
fn evaluator_cross_check() -> Outcome {
    let p = ExampleDistribution::new(0.6).unwrap();
    let pool = draw_pool(&p, 100_000, 6).unwrap();
    let index = NeighborIndex::build(pool.points().clone());
    let mut oracle = Oracle::new(&p, &pool, 7);
    let params = EngineParams {
        budget: 100_000,
        ..EngineParams::default()
    };
    let run = run_akalls(&p, &pool, &index, &mut oracle, &params).unwrap();
    if run.classifier.is_empty() {
        return outcome(false, "trained learner certified no points");
    }
    let bayes = BayesClassifier(&p);
    let zero = ConstantClassifier(0);
    let cases: [(&str, &dyn Classifier); 3] = [("f*", &bayes), ("const-0", &zero), ("learner", &run.classifier)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (name, c)) in cases.into_iter().enumerate() {
        let mc = excess_risk_mc(&p, c, 1_000_000, 60 + i as u64).unwrap();
        let quad = excess_risk_quadrature_1d(&p, c, &QuadratureOptions::default()).unwrap();
        let gap = (mc.excess_risk - quad.excess_risk).abs();
        let ok = gap <= 3.0 * mc.std_error || gap <= 1e-12;
        pass &= ok;
        parts.push(format!(
            "{name}: mc {:.6} (se {:.1e}) quad {:.6}",
            mc.excess_risk, mc.std_error, quad.excess_risk
        ));
    }
    parts.push(format!("learner |S| = {}", run.classifier.support().len()));
    outcome(pass, parts.join("; "))
}

// 7. Scaled-down rate experiment with c_eff ~ 10.
fn convergence() -> Outcome {
    let p = ExampleDistribution::new(0.6).unwrap();
    let epsilons = [0.02, 0.05, 0.1, 0.2, 0.5];
    let beta = fit_margin_exponent(&p, 1.0, &epsilons, 1_000_000, 71, 0.05, 5.0)
        .unwrap()
        .unwrap_or(0.0);
    let theory = theoretical_slope(0.6, beta, 1);

    let mut cfg = ExperimentConfig::new("example1d:alpha=0.6", vec![250, 500, 1000, 2000, 4000]);
    cfg.trials = 20;
    cfg.pool_size = Some(40_000);
    cfg.base_seed = 7;
    cfg.eval = EvalMethod::Quadrature;
    let start = Instant::now();
    let records = run_experiment(&cfg, Execution::Parallel).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let summary = summarize(&records, None).unwrap();

    let risks = |algo: &str, n: usize| -> Vec<f64> {
        records
            .iter()
            .filter(|r| r.algo == algo && r.budget == n && r.ok())
            .map(|r| r.excess_risk)
            .collect()
    };
    let p_value = rank_sum_less(&risks(ALGO_AKALLS, 4000), &risks(ALGO_AKALLS, 250)).unwrap_or(1.0);
    let slope = summary.fit_for(ALGO_AKALLS).map_or(f64::NAN, |f| f.slope);
    let active = median(&risks(ALGO_AKALLS, 4000)).unwrap_or(f64::NAN);
    let passive = median(&risks(ALGO_PASSIVE, 4000)).unwrap_or(f64::NAN);
    let informative: Vec<f64> = records
        .iter()
        .filter(|r| r.algo == ALGO_AKALLS)
        .map(|r| r.s_size as f64)
        .collect();

    let a = p_value < 0.05;
    let b = slope < 0.0 && slope <= theory / 2.0 && slope >= theory * 2.0;
    let c = active <= passive;
    let medians: Vec<String> = cfg
        .budgets
        .iter()
        .map(|&n| format!("{n}:{:.4}", summary.median(ALGO_AKALLS, n).unwrap_or(f64::NAN)))
        .collect();
    outcome(
        a && b && c,
        format!(
            "(a) p={p_value:.3} {}; (b) slope {slope:.3} vs theory {theory:.3} (beta={beta}) {}; \
             (c) median {active:.4} vs passive {passive:.4} {}; medians [{}]; median |S| {}; {secs:.0}s",
            ok(a),
            ok(b),
            ok(c),
            medians.join(" "),
            median(&informative).unwrap_or(0.0)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "not met"
    }
}

// 8. Tiny inputs and deterministic labels.
fn degenerate_handling() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    // n = 1, w = 1
    let p = ExampleDistribution::new(0.6).unwrap();
    let pool = draw_pool(&p, 1, 3).unwrap();
    let single = EngineParams {
        budget: 1,
        ..EngineParams::default()
    };
    let run = run_once(&p, &pool, 1, &single);
    pass &= run.metrics.charged_requests <= 1 + run.metrics.max_request_cap as usize;
    parts.push(format!("n=w=1: {} charged", run.metrics.charged_requests));

    // empty informative set: prediction is a declared error
    let noise = ConstantEta::new(0.5, 1).unwrap();
    let pool = draw_pool(&noise, 20, 3).unwrap();
    let run = run_once(&noise, &pool, 2, &EngineParams::default());
    let empty_ok = run.state.informative.is_empty() && run.classifier.predict(&[0.0]) == Err(Error::EmptySupport);
    pass &= empty_ok;
    parts.push(format!("empty support -> {:?}", run.classifier.predict(&[0.0])));

    // deterministic labels: informative points carry the Bayes label
    for p in [ConstantEta::new(0.0, 2).unwrap(), ConstantEta::new(1.0, 1).unwrap()] {
        let pool = draw_pool(&p, 500, 5).unwrap();
        let params = EngineParams {
            budget: 2000,
            ..EngineParams::default()
        };
        let run = run_once(&p, &pool, 5, &params);
        let correct = run
            .state
            .informative
            .iter()
            .all(|pt| pt.label == p.bayes(pool.point(pt.index)));
        pass &= correct && !run.state.informative.is_empty();
        parts.push(format!("{}: |S|={}", p.name(), run.state.informative.len()));
    }
    let t = Threshold::new(1).unwrap();
    let pool = draw_pool(&t, 800, 9).unwrap();
    let run = run_once(
        &t,
        &pool,
        9,
        &EngineParams {
            budget: 5000,
            ..EngineParams::default()
        },
    );
    let correct = run
        .state
        .informative
        .iter()
        .all(|pt| pt.label == t.bayes(pool.point(pt.index)));
    pass &= correct;
    parts.push(format!("threshold: |S|={}", run.state.informative.len()));

    // declared errors instead of crashes
    let errors = [
        run_akalls(
            &p,
            &pool,
            &NeighborIndex::build(pool.points().clone()),
            &mut Oracle::new(&p, &pool, 0),
            &EngineParams {
                budget: 0,
                ..EngineParams::default()
            },
        )
        .is_err(),
        Points::new(1, Vec::new()).and_then(Pool::from_points).is_err(),
        NeighborIndex::build(Points::new(1, vec![0.0]).unwrap())
            .kth_neighbor(&[0.0], 2)
            .is_err(),
    ];
    pass &= errors.iter().all(|&e| e);
    parts.push(format!("declared errors {:?}", errors));
    outcome(pass, parts.join("; "))
}
