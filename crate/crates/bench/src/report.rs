use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use akalls::eval::{fit_rate, median, rank_sum_less, theoretical_slope};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::record::{ensure_nonempty, write_csv, RunRecord, ALGO_AKALLS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            _ => Err(BenchError::UnknownFormat(s.to_string())),
        }
    }
}

/// Declared smoothness and noise exponents of the problem, for the
/// reference rate `n^(-alpha (beta + 1) / (2 alpha + d - alpha beta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
}

impl Exponents {
    pub fn from_config(cfg: &ExperimentConfig) -> Option<Self> {
        let p = cfg.problem().ok()?;
        Some(Self {
            alpha: p.declared_smoothness()?.alpha,
            beta: p.declared_noise()?.beta,
            dim: p.dim(),
        })
    }

    pub fn slope(&self) -> f64 {
        theoretical_slope(self.alpha, self.beta, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetStat {
    pub algo: String,
    pub budget: usize,
    pub trials: usize,
    pub failed: usize,
    pub median_risk: Option<f64>,
    pub median_charged: Option<f64>,
    pub median_s_size: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoFit {
    pub algo: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub stats: Vec<BudgetStat>,
    /// Log-log least-squares fit of median risk on budget, per algorithm.
    /// Algorithms with a non-positive median are left out.
    pub fits: Vec<AlgoFit>,
    pub theoretical_slope: Option<f64>,
    /// One-sided rank-sum p-value that the learner's risks at the largest
    /// budget are below those at the smallest.
    pub rank_sum_p: Option<f64>,
}

impl Summary {
    pub fn fit_for(&self, algo: &str) -> Option<&AlgoFit> {
        self.fits.iter().find(|f| f.algo == algo)
    }

    pub fn median(&self, algo: &str, budget: usize) -> Option<f64> {
        self.stats
            .iter()
            .find(|s| s.algo == algo && s.budget == budget)
            .and_then(|s| s.median_risk)
    }
}

fn by_algo(records: &[RunRecord]) -> BTreeMap<&str, BTreeMap<usize, Vec<&RunRecord>>> {
    let mut map: BTreeMap<&str, BTreeMap<usize, Vec<&RunRecord>>> = BTreeMap::new();
    for r in records {
        map.entry(r.algo.as_str())
            .or_default()
            .entry(r.budget)
            .or_default()
            .push(r);
    }
    map
}

pub fn summarize(records: &[RunRecord], exponents: Option<Exponents>) -> Result<Summary> {
    ensure_nonempty(records)?;
    let grouped = by_algo(records);
    let mut stats = Vec::new();
    let mut fits = Vec::new();
    for (algo, budgets) in &grouped {
        let mut points = Vec::new();
        for (&budget, recs) in budgets {
            let ok: Vec<&RunRecord> = recs.iter().copied().filter(|r| r.ok()).collect();
            let col = |f: fn(&RunRecord) -> f64| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            let median_risk = col(|r| r.excess_risk);
            if let Some(m) = median_risk {
                points.push((budget as f64, m));
            }
            stats.push(BudgetStat {
                algo: algo.to_string(),
                budget,
                trials: recs.len(),
                failed: recs.len() - ok.len(),
                median_risk,
                median_charged: col(|r| r.charged_requests as f64),
                median_s_size: col(|r| r.s_size as f64),
            });
        }
        if let Ok(fit) = fit_rate(&points) {
            fits.push(AlgoFit {
                algo: algo.to_string(),
                slope: fit.slope,
                intercept: fit.intercept,
                r_squared: fit.r_squared,
            });
        }
    }
    let rank_sum_p = grouped.get(ALGO_AKALLS).and_then(|budgets| {
        let risks =
            |recs: &Vec<&RunRecord>| -> Vec<f64> { recs.iter().filter(|r| r.ok()).map(|r| r.excess_risk).collect() };
        let (first, last) = (budgets.values().next()?, budgets.values().next_back()?);
        if budgets.len() < 2 {
            return None;
        }
        rank_sum_less(&risks(last), &risks(first)).ok()
    });
    Ok(Summary {
        stats,
        fits,
        theoretical_slope: exponents.map(|e| e.slope()),
        rank_sum_p,
    })
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: Option<&'a ExperimentConfig>,
    summary: Summary,
    records: &'a [RunRecord],
}

/// Writes the records as a CSV table, a JSON document (config, summary and
/// records) or an SVG log-log plot of median risk against budget.
pub fn emit_report(
    records: &[RunRecord],
    config: Option<&ExperimentConfig>,
    exponents: Option<Exponents>,
    format: ReportFormat,
    out: &mut dyn Write,
) -> Result<()> {
    ensure_nonempty(records)?;
    let exponents = exponents.or_else(|| config.and_then(Exponents::from_config));
    match format {
        ReportFormat::Csv => write_csv(records, out),
        ReportFormat::Json => {
            let report = JsonReport {
                config,
                summary: summarize(records, exponents)?,
                records,
            };
            serde_json::to_writer_pretty(&mut *out, &report)?;
            writeln!(out)?;
            Ok(())
        }
        ReportFormat::Svg => {
            let summary = summarize(records, exponents)?;
            out.write_all(render_svg(&summary).as_bytes())?;
            Ok(())
        }
    }
}

/// Plain-text table of the summary.
pub fn summary_text(summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>8} {:>7} {:>7} {:>12} {:>12} {:>8}",
        "algo", "budget", "trials", "failed", "median_risk", "charged", "|S|"
    );
    for st in &summary.stats {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
        let g = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.0}"));
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>7} {:>7} {:>12} {:>12} {:>8}",
            st.algo,
            st.budget,
            st.trials,
            st.failed,
            f(st.median_risk),
            g(st.median_charged),
            g(st.median_s_size)
        );
    }
    for fit in &summary.fits {
        let _ = writeln!(s, "fit {}: slope {:.4}, R^2 {:.3}", fit.algo, fit.slope, fit.r_squared);
    }
    if let Some(t) = summary.theoretical_slope {
        let _ = writeln!(s, "theoretical slope {t:.4}");
    }
    if let Some(p) = summary.rank_sum_p {
        let _ = writeln!(s, "rank-sum p (largest < smallest budget): {p:.3e}");
    }
    s
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 150.0;
const PAD_T: f64 = 30.0;
const PAD_B: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// SVG class, legend kind, and the two endpoints in log10 coordinates.
type RefLine = (&'static str, &'static str, (f64, f64), (f64, f64));

/// Log-log plot of median risk per algorithm. Draws the fitted line of the
/// learner (or the first algorithm with a fit) and, when exponents are
/// known, the theoretical rate through the same anchor point.
fn render_svg(summary: &Summary) -> String {
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for st in &summary.stats {
        if let Some(m) = st.median_risk.filter(|m| *m > 0.0) {
            series
                .entry(st.algo.as_str())
                .or_default()
                .push(((st.budget as f64).log10(), m.log10()));
        }
    }
    let fit = summary.fit_for(ALGO_AKALLS).or_else(|| summary.fits.first());

    let xs: Vec<f64> = summary.stats.iter().map(|s| (s.budget as f64).log10()).collect();
    let (mut x0, mut x1) = min_max(&xs).unwrap_or((0.0, 1.0));
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }

    let mut lines: Vec<RefLine> = Vec::new();
    if let Some(f) = fit {
        let at = |x: f64| (f.intercept + f.slope * x * std::f64::consts::LN_10) / std::f64::consts::LN_10;
        lines.push(("reference-line fitted", "fitted", (x0, at(x0)), (x1, at(x1))));
        if let Some(t) = summary.theoretical_slope {
            let xm = 0.5 * (x0 + x1);
            let ym = at(xm);
            lines.push((
                "reference-line theoretical",
                "theoretical",
                (x0, ym + t * (x0 - xm)),
                (x1, ym + t * (x1 - xm)),
            ));
        }
    }

    let mut ys: Vec<f64> = series.values().flatten().map(|p| p.1).collect();
    ys.extend(lines.iter().flat_map(|l| [l.2 .1, l.3 .1]));
    let (mut y0, mut y1) = min_max(&ys).unwrap_or((-3.0, 0.0));
    if y1 - y0 < 1e-9 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| PAD_L + (x - x0) / (x1 - x0) * (W - PAD_L - PAD_R);
    let py = |y: f64| H - PAD_B - (y - y0) / (y1 - y0) * (H - PAD_T - PAD_B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (bx0, bx1, by0, by1) = (PAD_L, W - PAD_R, PAD_T, H - PAD_B);
    let _ = writeln!(
        s,
        r#"<rect x="{bx0}" y="{by0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        bx1 - bx0,
        by1 - by0
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{}</text>"#,
            px(x),
            by1 + 16.0,
            fmt_pow(x)
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            bx0 - 6.0,
            py(y) + 4.0,
            fmt_pow(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">label budget n (log scale)</text>"#,
        0.5 * (bx0 + bx1),
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">median excess risk (log scale)</text>"#,
        0.5 * (by0 + by1)
    );

    let mut legend_y = PAD_T + 10.0;
    let mut legend = |s: &mut String, text: &str, color: &str, dash: bool| {
        let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            bx1 + 10.0,
            bx1 + 34.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{text}</text>"#,
            bx1 + 40.0,
            legend_y + 4.0
        );
        legend_y += 18.0;
    };

    for (i, (algo, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        legend(&mut s, algo, color, false);
    }
    for (class, label, (ax, ay), (bx, by)) in &lines {
        let text = match *label {
            "fitted" => format!("fit, slope {:.3}", fit.map_or(0.0, |f| f.slope)),
            _ => format!("theory, slope {:.3}", summary.theoretical_slope.unwrap_or(0.0)),
        };
        let _ = writeln!(
            s,
            r#"<line class="{class}" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="gray" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
            px(*ax),
            py(*ay),
            px(*bx),
            py(*by)
        );
        legend(&mut s, &text, "gray", true);
    }
    s.push_str("</svg>\n");
    s
}

fn min_max(v: &[f64]) -> Option<(f64, f64)> {
    let lo = v.iter().copied().filter(|x| x.is_finite()).reduce(f64::min)?;
    let hi = v.iter().copied().filter(|x| x.is_finite()).reduce(f64::max)?;
    Some((lo, hi))
}

fn fmt_pow(e: f64) -> String {
    format!("{:.3e}", 10f64.powf(e))
}
