use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use akalls::eval::{audit_h2, audit_h4, fit_margin_exponent, AuditReport, Witness};
use akalls::{draw_pool, parse_problem};
use akalls_bench::report::{summary_text, Exponents};
use akalls_bench::runner::all_failed;
use akalls_bench::{
    emit_report, load_records, run_experiment, summarize, BenchError, Execution, ExperimentConfig, ReportFormat, Result,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "akalls-bench",
    version,
    about = "Run and analyse active-learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a JSON experiment config.
    Run {
        config: PathBuf,
        /// Output directory for records.csv, report.json and plot.svg.
        #[arg(long, default_value = "akalls-out")]
        out: PathBuf,
        /// Run trials on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Check the smoothness (--h2) or margin-noise (--h4) condition of a problem.
    Audit(AuditArgs),
    /// Summarise a record file: medians per budget and rate fits.
    Eval {
        records: PathBuf,
        /// Print the log-log rate fit and the rank-sum test.
        #[arg(long)]
        fit: bool,
        #[command(flatten)]
        exponents: ExponentArgs,
    },
    /// Convert a record file to csv, json or svg.
    Report {
        records: PathBuf,
        #[arg(long, default_value = "json")]
        format: String,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        exponents: ExponentArgs,
    },
}

#[derive(Args)]
struct ExponentArgs {
    /// Smoothness exponent for the reference rate (needs --beta too).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

impl ExponentArgs {
    fn get(&self) -> Option<Exponents> {
        Some(Exponents {
            alpha: self.alpha?,
            beta: self.beta?,
            dim: self.dim,
        })
    }
}

#[derive(Args)]
struct AuditArgs {
    /// Problem name and parameters, e.g. `example1d:alpha=0.6`.
    problem: String,
    #[arg(long, conflicts_with = "h4", required_unless_present = "h4")]
    h2: bool,
    #[arg(long)]
    h4: bool,
    /// Smoothness exponent; defaults to the declared one.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    /// Pool size for empirical ball masses when no closed form exists.
    #[arg(long, default_value_t = 100_000)]
    pool_size: usize,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1,0.2,0.5")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    m: usize,
    /// Report the largest margin exponent that passes, on a 0.05 grid.
    #[arg(long)]
    fit: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Run { config, out, serial } => {
            let cfg = ExperimentConfig::load(&config)?;
            let exec = if serial { Execution::Serial } else { Execution::Parallel };
            let records = run_experiment(&cfg, exec)?;
            std::fs::create_dir_all(&out)?;
            for (name, format) in [
                ("records.csv", ReportFormat::Csv),
                ("report.json", ReportFormat::Json),
                ("plot.svg", ReportFormat::Svg),
            ] {
                let mut w = BufWriter::new(File::create(out.join(name))?);
                emit_report(&records, Some(&cfg), None, format, &mut w)?;
                w.flush()?;
            }
            let summary = summarize(&records, Exponents::from_config(&cfg))?;
            print!("{}", summary_text(&summary));
            println!("wrote {}", out.display());
            if all_failed(&records) {
                for r in records.iter().filter_map(|r| r.error.as_deref()).take(3) {
                    eprintln!("trial error: {r}");
                }
                return Err(BenchError::AllTrialsFailed);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit(args) => audit(&args),
        Command::Eval {
            records,
            fit,
            exponents,
        } => {
            let set = load_records(&records)?;
            let exps = exponents
                .get()
                .or_else(|| set.config.as_ref().and_then(Exponents::from_config));
            let mut summary = summarize(&set.records, exps)?;
            if !fit {
                summary.fits.clear();
                summary.rank_sum_p = None;
                summary.theoretical_slope = None;
            }
            print!("{}", summary_text(&summary));
            Ok(ExitCode::SUCCESS)
        }
        Command::Report {
            records,
            format,
            out,
            exponents,
        } => {
            let format: ReportFormat = format.parse()?;
            let set = load_records(&records)?;
            let mut w: Box<dyn Write> = match out {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            emit_report(&set.records, set.config.as_ref(), exponents.get(), format, &mut w)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn audit(args: &AuditArgs) -> Result<ExitCode> {
    let config_err = |e: akalls::Error| BenchError::Config(e.to_string());
    let problem = parse_problem(&args.problem).map_err(config_err)?;
    let report = if args.h2 {
        let declared = problem.declared_smoothness();
        let alpha = args.alpha.or(declared.map(|s| s.alpha)).unwrap_or(1.0);
        let l = args.l.or(declared.map(|s| s.l)).unwrap_or(1.0);
        let pool = if problem.ball_prob(&vec![0.0; problem.dim()], 1.0).is_none() {
            Some(draw_pool(problem.as_ref(), args.pool_size, args.seed ^ 0x5eed).map_err(config_err)?)
        } else {
            None
        };
        println!("smoothness audit of {} with alpha={alpha}, L={l}", problem.name());
        audit_h2(problem.as_ref(), alpha, l, args.pairs, args.seed, pool.as_ref()).map_err(config_err)?
    } else {
        let declared = problem.declared_noise();
        let c = args.c.or(declared.map(|m| m.c)).unwrap_or(1.0);
        if args.fit {
            let beta = fit_margin_exponent(problem.as_ref(), c, &args.epsilons, args.m, args.seed, 0.05, 10.0)
                .map_err(config_err)?;
            match beta {
                Some(b) => println!("largest passing beta with C={c}: {b:.2}"),
                None => println!("no beta >= 0 passes with C={c}"),
            }
        }
        let beta = args.beta.or(declared.map(|m| m.beta)).unwrap_or(0.0);
        println!("margin audit of {} with beta={beta}, C={c}", problem.name());
        audit_h4(problem.as_ref(), beta, c, &args.epsilons, args.m, args.seed).map_err(config_err)?
    };
    print_audit(&report);
    Ok(ExitCode::SUCCESS)
}

fn print_audit(r: &AuditReport) {
    println!(
        "{}: tested {}, violations {}",
        r.assumption.as_str(),
        r.tested,
        r.violations
    );
    if let Some(l) = r.required_l {
        println!("smallest L consistent with the sample: {l:.4}");
    }
    for lvl in &r.levels {
        println!(
            "  eps={:<8} P(|eta-1/2|<eps)={:.5} +- {:.5}  bound {:.5}{}",
            lvl.epsilon,
            lvl.estimate,
            lvl.std_error,
            lvl.bound,
            if lvl.violated { "  VIOLATED" } else { "" }
        );
    }
    match &r.worst {
        Some(Witness::Pair { x, x_prime, lhs, rhs }) => {
            println!("worst pair x={x:?} x'={x_prime:?}: |eta diff| {lhs:.5} vs bound {rhs:.5}")
        }
        Some(Witness::Level {
            epsilon,
            estimate,
            bound,
            ..
        }) => {
            println!("worst level eps={epsilon}: {estimate:.5} vs bound {bound:.5}")
        }
        None => {}
    }
}
