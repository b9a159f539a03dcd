//! `gse`: exact generalized Shannon entropy, plug-in estimates with
//! confidence intervals, coverage sweeps and the verification suite.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gse_core::dist::AnalyticDistribution;
use gse_core::estimate::{sigma_sq_true_analytic, GseEstimate};
use gse_core::gse::{gse_analytic, shannon_entropy_analytic};
use gse_core::ingest::{read_counts_csv, read_raw_labels, write_counts_csv, LabeledCounts};
use gse_core::oracle::{run_verification, DEFAULT_CORPUS_SEED};
use gse_core::sim::{coverage_sweep, parse_grid, render_svg, summarize, write_csv, DEFAULT_REPS};
use gse_core::{GseError, DEFAULT_EPS};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gse",
    version,
    about = "Generalized Shannon entropy: exact values, estimates and coverage"
)]
struct Cli {
    /// Worker threads for simulations (defaults to all cores).
    #[arg(long, global = true, env = "GSE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact GSE, Shannon entropy and asymptotic standard deviation of a distribution.
    Compute(ComputeArgs),
    /// Plug-in estimate and confidence interval from observed data.
    Estimate(EstimateArgs),
    /// Monte Carlo coverage of the confidence interval over a sample-size grid.
    Coverage(CoverageArgs),
    /// Run the gradient / variance / order-1 oracle checks on a random corpus.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// GSE order.
    #[arg(short, long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    /// Series truncation tolerance.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
}

#[derive(Args)]
struct ComputeArgs {
    /// Distribution as inline JSON (e.g. '{"kind":"zeta","s":1.5}') or a path to a JSON file.
    #[arg(long)]
    dist: String,
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct EstimateArgs {
    /// Data file: `category,count` CSV, or one label per line with --raw.
    #[arg(long)]
    data: PathBuf,
    /// Treat the data file as raw observations.
    #[arg(long)]
    raw: bool,
    #[arg(short, long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Also write the tallied counts as a `category,count` CSV.
    #[arg(long)]
    counts_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct CoverageArgs {
    #[arg(long, default_value = r#"{"kind":"zeta","s":1.5}"#)]
    dist: String,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "10:1000:10")]
    grid: String,
    #[arg(long, default_value_t = 2022)]
    seed: u64,
    /// Results file; stdout when absent (the summary then goes to stderr).
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
    /// Also write an SVG plot of coverage against n.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = DEFAULT_CORPUS_SEED)]
    corpus_seed: u64,
    #[arg(long, default_value_t = 100)]
    corpus_size: usize,
    /// Orders to check, `lo..hi` (inclusive) or a single order.
    #[arg(long, default_value = "1..4")]
    m_range: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<GseError> for Failure {
    fn from(e: GseError) -> Self {
        let code = match e {
            GseError::NonConvergence(_) => EXIT_NONCONVERGENCE,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

type CmdResult = Result<u8, Failure>;

fn parse_orders(text: &str) -> Result<Vec<u32>, String> {
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| format!("`{s}` is not an order"))
    };
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let m = parse(text)?;
            (m, m)
        }
    };
    if lo < 1 || hi < lo {
        return Err(format!("`{text}`: need 1 <= lo <= hi"));
    }
    Ok((lo..=hi).collect())
}

/// Six significant digits, trailing zeros dropped.
fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-4..6).contains(&mag) {
        let s = format!("{x:.5e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        return format!("{}e{exp}", trim(mantissa.to_string()));
    }
    trim(format!("{:.*}", (5 - mag).max(0) as usize, x))
}

fn load_dist(spec: &str) -> Result<AnalyticDistribution, Failure> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        let path = Path::new(spec);
        fs::read_to_string(path).map_err(|e| io_failure(path, e))?
    };
    Ok(AnalyticDistribution::from_json(&text)?)
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values serialize")
    );
}

fn compute(args: &ComputeArgs) -> CmdResult {
    let dist = load_dist(&args.dist)?;
    let Common { m, eps } = args.common;
    let h = gse_analytic(&dist, m, eps)?;
    let sigma = sigma_sq_true_analytic(&dist, m, eps)?.sqrt();
    let shannon = match shannon_entropy_analytic(&dist, eps) {
        Ok(v) => Some(v),
        Err(GseError::NonConvergence(_)) => None,
        Err(e) => return Err(e.into()),
    };
    // K is informational for families with closed forms, so a tail too long
    // to bound is not an error here.
    let k_max = match dist.truncation_index(m, eps) {
        Ok(k) => Some(k),
        Err(GseError::NonConvergence(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let note = match dist {
        AnalyticDistribution::Zeta { s } if s <= 2.0 => Some(if m >= 2 {
            format!(
                "with tail exponent s = {s} <= 2 the plug-in Shannon estimator is not asymptotically normal; \
                 the order-{m} estimator is"
            )
        } else {
            format!(
                "with tail exponent s = {s} <= 2 the plug-in Shannon estimator is not asymptotically normal; \
                 use m >= 2 for interval estimates"
            )
        }),
        _ => None,
    };

    if args.format == Format::Json {
        print_json(&json!({
            "distribution": dist,
            "m": m,
            "eps": eps,
            "gse": h,
            "shannon": shannon,
            "sigma": sigma,
            "k_max": k_max,
            "note": note,
        }));
        return Ok(0);
    }
    println!("distribution      {dist}");
    println!("H_{m:<16}{}", sig6(h));
    match shannon {
        Some(v) => println!("Shannon H         {}", sig6(v)),
        None => println!("Shannon H         not finitely defined"),
    }
    println!("sigma_{m:<12}{}", sig6(sigma));
    match k_max {
        Some(k) => println!("K_max             {k}"),
        None => println!("K_max             unbounded at eps = {eps:e}"),
    }
    if let Some(note) = note {
        println!("note: {note}");
    }
    Ok(0)
}

fn read_data(path: &Path, raw: bool) -> Result<LabeledCounts, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    let data = if raw {
        read_raw_labels(BufReader::new(file))
    } else {
        read_counts_csv(file)
    };
    data.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn estimate(args: &EstimateArgs) -> CmdResult {
    let data = read_data(&args.data, args.raw)?;
    if let Some(path) = &args.counts_out {
        let file = File::create(path).map_err(|e| io_failure(path, e))?;
        write_counts_csv(&data, file)?;
    }
    let est = GseEstimate::from_counts(&data.counts, args.m)?;
    let ci = est.interval(args.alpha)?;
    let reason = if !ci.degenerate {
        None
    } else if est.support_observed == 1 {
        Some("a single category was observed; the estimate is 0 with no sampling spread")
    } else {
        Some(
            "all observed categories are equally frequent; the asymptotic variance vanishes for a uniform \
             distribution, so the normal interval does not apply",
        )
    };

    if args.format == Format::Json {
        print_json(&json!({
            "estimate": est,
            "interval": ci,
            "alpha": args.alpha,
            "degenerate_reason": reason,
        }));
        return Ok(0);
    }
    let m = est.m;
    println!("n                 {}", est.n);
    println!("support           {}", est.support_observed);
    println!("H_{m} estimate      {}", sig6(est.h_hat));
    println!("sigma_{m} estimate  {}", sig6(est.sigma_hat));
    println!(
        "{:<18}[{}, {}]{}",
        format!("{}% CI", sig6(100.0 * ci.level)),
        sig6(ci.lower),
        sig6(ci.upper),
        if ci.degenerate { "  (degenerate)" } else { "" }
    );
    if let Some(reason) = reason {
        println!("note: {reason}");
    }
    Ok(0)
}

fn write_to(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_failure(p, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| usage(format!("stdout: {e}"))),
    }
}

fn coverage(args: &CoverageArgs) -> CmdResult {
    let dist = load_dist(&args.dist)?;
    let grid = parse_grid(&args.grid)?;
    let Common { m, eps } = args.common;
    let sweep = coverage_sweep(&dist, m, &grid, args.reps, args.alpha, args.seed, eps)?;
    let summary = summarize(&sweep);

    let body = match args.format {
        TableFormat::Csv => {
            let mut buf = Vec::new();
            write_csv(&sweep, &mut buf)?;
            buf
        }
        TableFormat::Json => {
            let value = json!({ "sweep": sweep, "summary": summary });
            let mut s = serde_json::to_string_pretty(&value).expect("JSON values serialize");
            s.push('\n');
            s.into_bytes()
        }
    };
    write_to(args.output.as_deref(), &body)?;
    if let Some(path) = &args.svg {
        fs::write(path, render_svg(&sweep)).map_err(|e| io_failure(path, e))?;
    }

    let mut lines = vec![
        format!("{dist}, m = {m}, true H_{m} = {}", sig6(sweep.true_gse)),
        format!(
            "coverage min {} max {} (nominal {}, band ±{})",
            sig6(summary.min_coverage),
            sig6(summary.max_coverage),
            sig6(1.0 - args.alpha),
            sig6(summary.band)
        ),
        match summary.settled_from {
            Some(n) => format!("within 3 binomial SEs of nominal from n = {n}"),
            None => "the last grid point is outside 3 binomial SEs of nominal".into(),
        },
    ];
    if !summary.converging() {
        lines.push(format!(
            "warning: the largest sample sizes are not closer to nominal than the smallest \
             (gap {} vs {})",
            sig6(summary.high_quartile_gap),
            sig6(summary.low_quartile_gap)
        ));
    }
    let text = lines.join("\n");
    if args.output.is_some() {
        println!("{text}");
    } else {
        eprintln!("{text}");
    }
    Ok(0)
}

fn verify(args: &VerifyArgs) -> CmdResult {
    if args.corpus_size == 0 {
        return Err(usage("corpus size must be positive"));
    }
    let orders = parse_orders(&args.m_range).map_err(usage)?;
    let report = run_verification(args.corpus_seed, args.corpus_size, &orders)?;
    let ok = report.all_passed();
    if args.format == Format::Json {
        print_json(&json!({ "report": report, "passed": ok }));
    } else {
        println!(
            "corpus seed {}, {} pmfs, orders {:?}",
            report.corpus_seed, report.corpus_size, report.orders
        );
        for c in &report.checks {
            let tag = match (c.diagnostic, c.passed) {
                (true, _) => "INFO",
                (false, true) => "PASS",
                (false, false) => "FAIL",
            };
            println!("[{tag}] {}: {}", c.name, c.detail);
        }
        println!(
            "{}",
            if ok {
                "all checks passed"
            } else {
                "verification FAILED"
            }
        );
    }
    Ok(if ok { 0 } else { EXIT_VERIFY })
}

fn run(cli: &Cli) -> CmdResult {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Compute(a) => compute(a),
        Command::Estimate(a) => estimate(a),
        Command::Coverage(a) => coverage(a),
        Command::Verify(a) => verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("gse: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
