use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use simpson_invex::bounds::{FunctionModel, TheoremId};
use simpson_invex::invexity::{Domain, EtaMap, GridSpec};
use simpson_invex::kernel::{moment_by_quadrature, moment_p};
use simpson_invex::runner::{
    run_config, run_corpus, tightness_scan, CaseConfig, RunOptions, ScanSpec, ScanStatus, ToleranceOverrides, Tolerances,
};

const EXIT_INPUT: u8 = 3;

/// Simpson defect bounds over invex domains.
#[derive(Parser)]
#[command(name = "simpson-invex", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print kernel moments (closed form vs quadrature) as CSV.
    Moments {
        /// Comma-separated exponents, each >= 1.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<String>,
    },
    /// Run one case file and print its JSON report.
    Check {
        config: PathBuf,
        #[command(flatten)]
        common: RunFlags,
    },
    /// Run the bundled corpus.
    Corpus {
        /// Only cases whose name contains this text.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        common: RunFlags,
    },
    /// Grid search for the largest |defect| / rhs per theorem.
    Scan(ScanArgs),
}

#[derive(Args)]
struct RunFlags {
    /// Exit 2 when a hypothesis is unmet.
    #[arg(long)]
    strict: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress progress on stderr.
    #[arg(long)]
    quiet: bool,
    /// Quadrature tolerance [default: 1e-11].
    #[arg(long)]
    oracle_tol: Option<f64>,
    /// Allowed negative slack [default: 1e-12].
    #[arg(long)]
    slack_tol: Option<f64>,
    /// Allowed excess in sampled invexity checks [default: 1e-12].
    #[arg(long)]
    invexity_tol: Option<f64>,
}

impl RunFlags {
    fn overrides(&self) -> ToleranceOverrides {
        ToleranceOverrides { oracle: self.oracle_tol, slack: self.slack_tol, invexity: self.invexity_tol }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ScanArgs {
    /// f as an expression in x.
    #[arg(long)]
    f: String,
    /// f' as an expression in x.
    #[arg(long)]
    df: String,
    /// Antiderivative of f.
    #[arg(long = "F")]
    antiderivative: Option<String>,
    /// sup |f''''| on K, enables the classical bound.
    #[arg(long)]
    d4sup: Option<f64>,
    /// `difference`, `abs_example`, or an expression in v and u.
    #[arg(long, default_value = "difference")]
    eta: String,
    /// Domain as `lo,hi`.
    #[arg(long = "K", value_parser = parse_pair, allow_hyphen_values = true)]
    k: (f64, f64),
    /// Range of a as `lo,hi`; equal ends scan a single value.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    a_range: (f64, f64),
    /// Range of b as `lo,hi`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    b_range: (f64, f64),
    /// Comma-separated exponents q >= 1.
    #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,3")]
    q: Vec<f64>,
    /// Grid points per range.
    #[arg(long, default_value_t = 11)]
    steps: usize,
    /// Comma-separated theorem ids; all supported ones by default.
    #[arg(long, value_delimiter = ',')]
    theorems: Option<Vec<TheoremId>>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Exit 2 when a theorem's hypothesis is unmet.
    #[arg(long)]
    strict: bool,
    /// Quadrature tolerance [default: 1e-11].
    #[arg(long)]
    oracle_tol: Option<f64>,
    /// Allowed negative slack [default: 1e-12].
    #[arg(long)]
    slack_tol: Option<f64>,
    /// Allowed excess in sampled invexity checks [default: 1e-12].
    #[arg(long)]
    invexity_tol: Option<f64>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("cannot parse `{t}` as a number"));
    Ok((num(lo)?, num(hi)?))
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Moments { p } => moments(&p),
        Command::Check { config, common } => check(&config, &common),
        Command::Corpus { filter, format, common } => corpus(filter.as_deref(), format, &common),
        Command::Scan(args) => scan(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn emit(out: Option<&Path>, body: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn moments(ps: &[String]) -> Result<u8, Failure> {
    let ps = ps
        .iter()
        .map(|s| match s.trim().parse::<f64>() {
            Ok(p) if p >= 1.0 && p.is_finite() => Ok(p),
            Ok(p) => Err(Failure(format!("p must be a finite number >= 1, got {p}"))),
            Err(_) => Err(Failure(format!("cannot parse p = `{s}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["p", "closed_form", "numeric", "abs_diff"])?;
    for p in ps {
        let closed = moment_p(p)?;
        let numeric = moment_by_quadrature(p, 1e-14)?.value;
        w.write_record([
            format!("{p:?}"),
            format!("{closed:?}"),
            format!("{numeric:?}"),
            format!("{:e}", (closed - numeric).abs()),
        ])?;
    }
    emit(None, &w.into_inner().map_err(|e| Failure(e.to_string()))?)?;
    Ok(0)
}

fn check(path: &Path, flags: &RunFlags) -> Result<u8, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
    let config = CaseConfig::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let options = RunOptions { overrides: flags.overrides(), grid: GridSpec::default() };
    let start = Instant::now();
    let report = run_config(&config, &options);
    if let Some(err) = &report.error {
        eprintln!("error: {}: {err}", report.case);
    }
    if !flags.quiet {
        eprintln!("{}: {} ({:.2?})", report.case, report.verdict.as_str(), start.elapsed());
    }
    let mut body = report.to_json();
    body.push('\n');
    emit(flags.out.as_deref(), body.as_bytes())?;
    Ok(report.exit_code(flags.strict) as u8)
}

fn corpus(filter: Option<&str>, format: Format, flags: &RunFlags) -> Result<u8, Failure> {
    let options = RunOptions { overrides: flags.overrides(), grid: GridSpec::default() };
    let report = run_corpus(filter, &options);
    if !flags.quiet {
        let s = report.summary;
        eprintln!(
            "{} cases: {} pass, {} hypothesis_unmet, {} violation, {} input_error ({:.2?})",
            s.total, s.pass, s.hypothesis_unmet, s.violation, s.input_error, report.wall_time
        );
    }
    for c in report.cases.iter().filter(|c| c.error.is_some()) {
        eprintln!("error: {}: {}", c.case, c.error.as_deref().unwrap_or_default());
    }
    let body = match format {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            buf
        }
    };
    emit(flags.out.as_deref(), &body)?;
    Ok(report.exit_code(flags.strict) as u8)
}

fn eta_map(src: &str) -> Result<EtaMap, Failure> {
    match src {
        "difference" => Ok(EtaMap::difference()),
        "abs_example" => Ok(EtaMap::abs_example()),
        expr => EtaMap::expression(expr).map_err(|e| Failure(format!("--eta: {e}"))),
    }
}

fn scan(args: &ScanArgs) -> Result<u8, Failure> {
    let domain = Domain::new(args.k.0, args.k.1).map_err(|e| Failure(format!("--K: {e}")))?;
    let model = FunctionModel::from_sources("scan", &args.f, &args.df, args.antiderivative.as_deref(), args.d4sup, domain)?;
    let overrides = ToleranceOverrides { oracle: args.oracle_tol, slack: args.slack_tol, invexity: args.invexity_tol };
    let spec = ScanSpec {
        model,
        eta: eta_map(&args.eta)?,
        a_range: args.a_range,
        b_range: args.b_range,
        q_list: args.q.clone(),
        steps: args.steps,
        theorems: args.theorems.clone(),
        tolerances: overrides.apply(Tolerances::default()),
        grid: GridSpec::default(),
    };
    let results = tightness_scan(&spec)?;
    let body = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&results)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["theorem", "status", "ratio", "a", "b", "q", "evaluated", "skipped", "violations"])?;
            let num = |x: Option<f64>| x.map(|v| format!("{v:?}")).unwrap_or_default();
            for r in &results {
                let status = serde_json::to_value(r.status)?.as_str().unwrap_or_default().to_string();
                w.write_record([
                    r.theorem.to_string(),
                    status,
                    num(r.ratio),
                    num(r.a),
                    num(r.b),
                    num(r.q),
                    r.evaluated.to_string(),
                    r.skipped.to_string(),
                    r.violations.to_string(),
                ])?;
            }
            w.into_inner().map_err(|e| Failure(e.to_string()))?
        }
    };
    emit(None, &body)?;
    let code = if results.iter().any(|r| r.violations > 0) {
        1
    } else if args.strict && results.iter().any(|r| r.status == ScanStatus::HypothesisUnmet) {
        2
    } else {
        0
    };
    Ok(code)
}
