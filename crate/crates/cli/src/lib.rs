//! Command-line front end: argument parsing, dispatch and JSON reports.
//!
//! Exit codes: `0` on success, `1` when a verification finds counterexamples,
//! `2` on usage errors.

pub mod checks;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use overcon::characters::{gauss_sum, run_twist_trials, FiniteField, MultChar};
use overcon::hecke::{saturation_check, verify_sigma_up, SweepConfig};
use overcon::regions::{coverage_check, in_sigma, in_sigma_s, in_vcan, sigma_case, GenericAssumption, SigmaCase};
use overcon::strata::{classify, codim, enumerate_admissible, StratumRecord};
use overcon::{DegreeVector, PrimeProfile, PrimeSet, SCHEMA_VERSION};
use serde_json::{json, Value};

use crate::checks::CheckResult;

/// Environment fallback for `--workers`.
pub const WORKERS_ENV: &str = "TOOL_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "overcon", version, about = "Exact checks for overconvergent Hilbert modular continuation")]
struct Cli {
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Admissible pairs and their classification.
    #[command(subcommand)]
    Strata(StrataCommand),
    /// Membership in the continuation regions.
    #[command(subcommand)]
    Regions(RegionsCommand),
    /// Grid sweeps and identity checks.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Gauss sum of a character of a finite field.
    Gauss(GaussArgs),
    /// Every check for one profile.
    Suite(SuiteArgs),
}

#[derive(Debug, Subcommand)]
enum StrataCommand {
    Enumerate {
        #[arg(long)]
        profile: String,
        #[arg(long)]
        codim: Option<usize>,
        #[arg(long)]
        nowhere_etale: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegionName {
    Sigma,
    Vcan,
    #[value(name = "sigmaS", alias = "sigma-s")]
    SigmaS,
}

#[derive(Debug, Subcommand)]
enum RegionsCommand {
    Check {
        #[arg(long)]
        profile: String,
        /// Degree vector as `{"deg":{"0/0":"1/2",...},"generic":true}`.
        #[arg(long)]
        point: String,
        #[arg(long, value_enum)]
        region: RegionName,
        /// Comma-separated prime ids for `sigmaS`.
        #[arg(long = "S", value_delimiter = ',')]
        s: Vec<usize>,
    },
    Coverage {
        #[arg(long)]
        profile: String,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    profile: String,
    #[arg(long, default_value_t = 24)]
    den: u64,
    #[arg(long)]
    drop_genericity: bool,
    #[arg(long, default_value_t = 20)]
    max_counterexamples: usize,
    /// Sweep every grid point instead of faces of dimension at most one.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Debug, Subcommand)]
enum VerifyCommand {
    SigmaUp(SweepArgs),
    Saturation(SweepArgs),
    Newton {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 24)]
        den: u64,
    },
    Twist {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        max_counterexamples: usize,
    },
}

#[derive(Debug, Args)]
struct GaussArgs {
    #[arg(long)]
    q: u64,
    /// `ψ(g) = ζ_{q−1}^k` for the fixed generator `g`.
    #[arg(long)]
    char_exp: u64,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    #[arg(long)]
    profile: String,
    #[arg(long, default_value_t = 24)]
    den: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    max_counterexamples: usize,
}

/// A usage error, reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl From<overcon::Error> for Usage {
    fn from(e: overcon::Error) -> Self {
        Usage(e.to_string())
    }
}

type Outcome = Result<(Value, bool), Usage>;

fn parse_profile(s: &str) -> Result<Arc<PrimeProfile>, Usage> {
    Ok(Arc::new(PrimeProfile::parse(s, true)?))
}

fn positive(name: &str, value: u64) -> Result<u64, Usage> {
    if value == 0 {
        return Err(Usage(format!("--{name} must be at least 1")));
    }
    Ok(value)
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn strata(cmd: StrataCommand) -> Outcome {
    let StrataCommand::Enumerate { profile, codim: wanted, nowhere_etale } = cmd;
    let pr = parse_profile(&profile)?;
    let mut records = Vec::new();
    for pair in enumerate_admissible(&pr)? {
        if wanted.is_some_and(|c| codim(&pr, &pair).map_or(true, |d| d != c)) {
            continue;
        }
        if nowhere_etale && !classify(&pr, &pair)?.nowhere_etale {
            continue;
        }
        records.push(StratumRecord::new(&pr, &pair)?);
    }
    let report = json!({
        "schema": SCHEMA_VERSION,
        "profile": to_value(&*pr),
        "count": records.len(),
        "strata": to_value(&records),
    });
    Ok((report, true))
}

fn case_name(case: SigmaCase) -> &'static str {
    match case {
        SigmaCase::Deep => "deep",
        SigmaCase::Etale => "etale",
        SigmaCase::Ordinary => "ordinary",
        SigmaCase::Good { .. } => "good",
        SigmaCase::BadUniform { .. } => "bad-uniform",
        SigmaCase::BadWithOne { .. } => "bad-with-one",
    }
}

fn regions(cmd: RegionsCommand) -> Outcome {
    match cmd {
        RegionsCommand::Check { profile, point, region, s } => {
            let pr = parse_profile(&profile)?;
            let h = DegreeVector::from_json(pr.clone(), &point)?;
            if let Some(bad) = s.iter().find(|&&i| i >= pr.num_primes()) {
                return Err(Usage(format!("prime id {bad} out of range")));
            }
            let mut report = json!({
                "schema": SCHEMA_VERSION,
                "profile": to_value(&*pr),
                "point": to_value(&h),
            });
            let (name, membership) = match region {
                RegionName::Vcan => ("vcan", if in_vcan(&h) { "in" } else { "out" }),
                RegionName::Sigma => {
                    report["case"] = json!(case_name(sigma_case(&h)));
                    ("sigma", in_sigma(&h).as_str())
                }
                RegionName::SigmaS => {
                    let set = PrimeSet::of(s.iter().copied());
                    report["S"] = json!(s);
                    ("sigmaS", in_sigma_s(&h, set, &GenericAssumption::KeepFlag).as_str())
                }
            };
            report["region"] = json!(name);
            report["membership"] = json!(membership);
            Ok((report, true))
        }
        RegionsCommand::Coverage { profile } => {
            let pr = parse_profile(&profile)?;
            let report = coverage_check(&pr)?;
            Ok((to_value(&report), report.pass))
        }
    }
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, Usage> {
    let mut cfg = SweepConfig::new(positive("den", args.den)?).max_counterexamples(args.max_counterexamples);
    if args.drop_genericity {
        cfg = cfg.drop_genericity();
    }
    if args.exhaustive {
        cfg = cfg.exhaustive();
    }
    Ok(cfg)
}

fn verify(cmd: VerifyCommand) -> Outcome {
    match cmd {
        VerifyCommand::SigmaUp(args) => {
            let pr = parse_profile(&args.profile)?;
            let report = verify_sigma_up(&pr, &sweep_config(&args)?)?;
            Ok((to_value(&report), report.pass))
        }
        VerifyCommand::Saturation(args) => {
            let pr = parse_profile(&args.profile)?;
            let report = saturation_check(&pr, &sweep_config(&args)?)?;
            Ok((to_value(&report), report.pass))
        }
        VerifyCommand::Newton { profile, den } => {
            let pr = parse_profile(&profile)?;
            let check = checks::newton_consistency(&pr, positive("den", den)?)?;
            let pass = check.pass;
            Ok((json!({"schema": SCHEMA_VERSION, "profile": to_value(&*pr), "check": to_value(&check)}), pass))
        }
        VerifyCommand::Twist { q, n, trials, seed, max_counterexamples } => {
            let report = run_twist_trials(q, positive("n", n)?, trials, seed, max_counterexamples)?;
            Ok((to_value(&report), report.pass))
        }
    }
}

fn gauss(args: GaussArgs) -> Outcome {
    let field = Arc::new(FiniteField::new(args.q)?);
    let psi = MultChar::on_field(field, args.char_exp % (args.q - 1));
    let w = gauss_sum(&psi)?;
    let report = json!({
        "schema": SCHEMA_VERSION,
        "q": args.q,
        "char_exp": args.char_exp,
        "character": psi.label(),
        "order": psi.order(),
        "gauss_sum": to_value(&w),
    });
    Ok((report, true))
}

fn suite(args: SuiteArgs) -> Outcome {
    let pr = parse_profile(&args.profile)?;
    let den = positive("den", args.den)?;
    let cfg = SweepConfig::new(den).max_counterexamples(args.max_counterexamples);
    let results: Vec<CheckResult> = vec![
        checks::census(&pr)?,
        checks::poset_laws(&pr, args.samples, args.seed)?,
        checks::atkin_lehner(&pr, args.samples, den, args.seed)?,
        CheckResult::from_report("coverage", &coverage_check(&pr)?),
        CheckResult::from_report("sigma-up", &verify_sigma_up(&pr, &cfg)?),
        CheckResult::from_report("saturation", &saturation_check(&pr, &cfg)?),
        checks::newton_consistency(&pr, den)?,
        checks::gauss_sums(&checks::GAUSS_FIELDS)?,
        checks::twist(&checks::TWIST_CASES, args.trials, args.seed)?,
    ];
    let pass = results.iter().all(|r| r.pass);
    let report = json!({
        "schema": SCHEMA_VERSION,
        "profile": to_value(&*pr),
        "denominator": den,
        "seed": args.seed,
        "samples": args.samples,
        "trials": args.trials,
        "pass": pass,
        "checks": to_value(&results),
    });
    Ok((report, pass))
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Strata(cmd) => strata(cmd),
        Command::Regions(cmd) => regions(cmd),
        Command::Verify(cmd) => verify(cmd),
        Command::Gauss(args) => gauss(args),
        Command::Suite(args) => suite(args),
    }
}

fn worker_count(flag: Option<usize>) -> Result<Option<usize>, Usage> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(s) if !s.trim().is_empty() => {
                Some(s.trim().parse().map_err(|_| Usage(format!("{WORKERS_ENV}={s:?} is not a worker count")))?)
            }
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(Usage("worker count must be at least 1".into()));
    }
    Ok(n)
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<bool, Usage> {
    let workers = worker_count(cli.workers)?;
    let outcome = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Usage(format!("cannot start {n} workers: {e}")))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    };
    let (report, pass) = outcome?;
    let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?,
        None => stdout.write_all(text.as_bytes()).map_err(|e| Usage(format!("cannot write report: {e}")))?,
    }
    Ok(pass)
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Usage(message)) => {
            let _ = writeln!(stderr, "error: {message}");
            2
        }
    }
}

/// Runs the tool against the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
