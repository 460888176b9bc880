//! `lgd-coc`: workout-LGD discount rates from the command line.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numerical failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lgd_coc::baseline::{read_bond_pairs, read_return_series};
use lgd_coc::capital::TascheEcProvider;
use lgd_coc::cashflow::{portfolio_losses, DefaultedPortfolio, DiscountRate, LossSummary};
use lgd_coc::config::RunConfig;
use lgd_coc::portfolio_io::{ingest, write_portfolio_files};
use lgd_coc::report::{
    align_columns, baseline_rows, emit, render_table, run_scenarios, write_report_csv, write_rows_csv, ReportMetadata,
    REPORT_FILE,
};
use lgd_coc::solver::{implied_lgd_at_solution, solve_portfolio, CocSolution};
use lgd_coc::synth::{generate_synthetic, ScheduleShape, SynthSpec};
use lgd_coc::yield_curve::{ReferencePeriod, YieldCurve};
use lgd_coc::Error;

#[derive(Parser, Debug)]
#[command(name = "lgd-coc", version, about = "Cost-of-capital discount rates for workout LGD")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for synthetic data.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Directory for output files; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Rendering of results on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Realised workout losses.
    Lgd {
        #[command(subcommand)]
        command: LgdCommand,
    },
    /// Classical benchmark discount rates.
    Rates {
        #[command(subcommand)]
        command: RatesCommand,
    },
    /// Cost-of-capital premium.
    Coc {
        #[command(subcommand)]
        command: CocCommand,
    },
    /// Average risk-free rate from a yield-curve file.
    Riskfree(RiskfreeArgs),
    /// Generate a synthetic portfolio.
    Synth(SynthArgs),
    /// Scenario matrix over cost-of-capital rates and periods.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum LgdCommand {
    /// Per-loan losses at `r_f + delta`.
    Compute(LgdArgs),
}

#[derive(Subcommand, Debug)]
enum RatesCommand {
    /// Contract, RODD, ROE, ME and WACC rates for whichever inputs are given.
    Baseline(BaselineArgs),
}

#[derive(Subcommand, Debug)]
enum CocCommand {
    /// Solve for the risk premium of one portfolio.
    Solve(SolveArgs),
}

#[derive(Args, Debug)]
struct PortfolioArgs {
    #[arg(long)]
    loans: PathBuf,
    #[arg(long)]
    flows: PathBuf,
}

#[derive(Args, Debug)]
struct LgdArgs {
    #[command(flatten)]
    portfolio: PortfolioArgs,
    /// Risk-free rate; defaults to the configured value.
    #[arg(long)]
    risk_free: Option<f64>,
    /// Risk premium added to the risk-free rate.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    /// CSV of `price_at_default,price_at_resolution,span_months`.
    #[arg(long)]
    bonds: Option<PathBuf>,
    /// CSV of `date,market_return,instrument_return`.
    #[arg(long)]
    returns: Option<PathBuf>,
    #[arg(long)]
    risk_free: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    portfolio: PortfolioArgs,
    #[arg(long)]
    coc_rate: Option<f64>,
    #[arg(long)]
    risk_free: Option<f64>,
}

#[derive(Args, Debug)]
struct RiskfreeArgs {
    /// CSV of `date,tenor_months,yield`.
    #[arg(long)]
    curve: PathBuf,
    #[arg(long)]
    start: chrono::NaiveDate,
    #[arg(long)]
    end: chrono::NaiveDate,
    /// Target tenor, usually the mean workout period.
    #[arg(long)]
    tenor_months: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Unsecured personal loans.
    Pl,
    /// Residential mortgages.
    Ml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Schedule {
    Front,
    Uniform,
    Back,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Schedule::Uniform)]
    schedule: Schedule,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// `NAME=LOANS.csv,FLOWS.csv`; repeat for several portfolios.
    #[arg(long = "portfolio", required = true, value_parser = parse_portfolio_spec)]
    portfolios: Vec<(String, PathBuf, PathBuf)>,
    #[arg(long)]
    bonds: Option<PathBuf>,
    #[arg(long)]
    returns: Option<PathBuf>,
}

fn parse_portfolio_spec(raw: &str) -> Result<(String, PathBuf, PathBuf), String> {
    let (name, files) = raw
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=LOANS,FLOWS, got {raw:?}"))?;
    let (loans, flows) = files
        .split_once(',')
        .ok_or_else(|| format!("expected LOANS,FLOWS after `=`, got {files:?}"))?;
    if name.is_empty() {
        return Err("portfolio name is empty".into());
    }
    Ok((name.to_string(), loans.into(), flows.into()))
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) => 2,
            e if e.is_numerical() => 4,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

struct Context {
    config: RunConfig,
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
}

impl Context {
    fn risk_free(&self, flag: Option<f64>) -> f64 {
        flag.unwrap_or(self.config.risk_free)
    }

    /// Writes `rows` as CSV to `out/name` when an output directory is set,
    /// and renders them on stdout in the chosen format.
    fn publish<T: Serialize>(&self, rows: &[T], name: &str) -> Result<(), Failure> {
        let mut buf = Vec::new();
        write_rows_csv(rows, &mut buf).map_err(|e| usage(e.to_string()))?;
        if let Some(dir) = &self.out {
            write_file(dir, name, &buf)?;
        }
        print!("{}", self.render(&buf));
        Ok(())
    }

    fn render(&self, csv_bytes: &[u8]) -> String {
        match self.format {
            Format::Csv => String::from_utf8_lossy(csv_bytes).into_owned(),
            Format::Table => {
                let mut rdr = csv::Reader::from_reader(csv_bytes);
                let header: Vec<String> = rdr
                    .headers()
                    .map(|h| h.iter().map(str::to_string).collect())
                    .unwrap_or_default();
                let body: Vec<Vec<String>> = rdr
                    .records()
                    .filter_map(|r| r.ok())
                    .map(|r| r.iter().map(str::to_string).collect())
                    .collect();
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                align_columns(&header, &body)
            }
        }
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::from(io_error(dir, e)))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Failure::from(io_error(&path, e)))?;
    Ok(path)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load(args: &PortfolioArgs) -> Result<DefaultedPortfolio, Failure> {
    Ok(ingest(&args.loans, &args.flows)?)
}

#[derive(Serialize)]
struct LossRow<'a> {
    loan_id: &'a str,
    evaluation_month: u32,
    loss: f64,
}

fn lgd_compute(ctx: &Context, args: &LgdArgs) -> Result<(), Failure> {
    let portfolio = load(&args.portfolio)?;
    let rate = DiscountRate::new(ctx.risk_free(args.risk_free), args.delta)?;
    let losses = portfolio_losses(&portfolio, rate)?;
    let rows: Vec<LossRow> = losses
        .iter()
        .map(|l| LossRow {
            loan_id: &l.loan_id,
            evaluation_month: l.evaluation_month,
            loss: l.loss,
        })
        .collect();
    ctx.publish(&rows, "losses.csv")?;
    let summary = LossSummary::from_losses(&losses);
    eprintln!(
        "{} resolved loans ({} censored excluded) at r_d = {}: mean {:.4}, std {:.4}",
        summary.count,
        portfolio.censored_count(),
        rate.composite(),
        summary.mean,
        summary.std_dev
    );
    Ok(())
}

fn rates_baseline(ctx: &Context, args: &BaselineArgs) -> Result<(), Failure> {
    let bonds = args
        .bonds
        .as_ref()
        .map(|p| -> Result<_, Failure> {
            let file = fs::File::open(p).map_err(|e| io_error(p, e))?;
            Ok(read_bond_pairs(file, &p.display().to_string())?)
        })
        .transpose()?;
    let returns = args
        .returns
        .as_ref()
        .map(|p| -> Result<_, Failure> {
            let file = fs::File::open(p).map_err(|e| io_error(p, e))?;
            Ok(read_return_series(file, &p.display().to_string())?)
        })
        .transpose()?;
    let cfg = ctx.config.baseline.clone().unwrap_or_default();
    let rows = baseline_rows(&cfg, ctx.risk_free(args.risk_free), bonds.as_deref(), returns.as_ref())?;
    ctx.publish(&rows, "baselines.csv")
}

#[derive(Serialize)]
struct SolutionRow {
    coc_rate: f64,
    risk_free: f64,
    discount_rate: f64,
    delta: f64,
    bepv: f64,
    risk_margin: f64,
    mcp: f64,
    ec_ratio: f64,
    ul_rate: f64,
    mean_loss: f64,
    std_loss: f64,
    iterations: usize,
    converged: bool,
}

fn coc_solve(ctx: &Context, args: &SolveArgs) -> Result<(), Failure> {
    let portfolio = load(&args.portfolio)?;
    let mut solver = ctx.config.solver_config();
    if let Some(c) = args.coc_rate {
        solver.coc_rate = c;
    }
    solver.risk_free = ctx.risk_free(args.risk_free);
    solver.validate().map_err(|e| usage(e.to_string()))?;
    let provider = TascheEcProvider::new(&portfolio, ctx.config.capital_model(), solver.risk_free)?;
    let solution: CocSolution = match solve_portfolio(&portfolio, &solver, &provider) {
        Ok(s) => s,
        Err(Error::NotConverged(s)) => {
            if let Some(dir) = &ctx.out {
                let mut buf = Vec::new();
                write_rows_csv(&s.iterations, &mut buf).map_err(|e| usage(e.to_string()))?;
                write_file(dir, "trace.csv", &buf)?;
            }
            return Err(Error::NotConverged(s).into());
        }
        Err(e) => return Err(e.into()),
    };
    let summary = implied_lgd_at_solution(&portfolio, &solution)?;
    let row = SolutionRow {
        coc_rate: solver.coc_rate,
        risk_free: solution.risk_free,
        discount_rate: solution.discount_rate(),
        delta: solution.delta_star,
        bepv: solution.bepv,
        risk_margin: solution.risk_margin,
        mcp: solution.mcp,
        ec_ratio: solution.ec_to_mcp,
        ul_rate: solution.ec.ul_rate,
        mean_loss: summary.mean,
        std_loss: summary.std_dev,
        iterations: solution.iterations.len(),
        converged: solution.converged,
    };
    if let Some(dir) = &ctx.out {
        let mut buf = Vec::new();
        write_rows_csv(&solution.iterations, &mut buf).map_err(|e| usage(e.to_string()))?;
        write_file(dir, "trace.csv", &buf)?;
    }
    ctx.publish(&[row], "solution.csv")
}

#[derive(Serialize)]
struct RiskfreeRow {
    start: chrono::NaiveDate,
    end: chrono::NaiveDate,
    tenor_months: f64,
    risk_free: f64,
}

fn riskfree(ctx: &Context, args: &RiskfreeArgs) -> Result<(), Failure> {
    let curve = YieldCurve::from_path(&args.curve)?;
    let period = ReferencePeriod::new(args.start, args.end, args.tenor_months).map_err(|e| usage(e.to_string()))?;
    let rate = curve.mean_risk_free(&period)?;
    ctx.publish(
        &[RiskfreeRow {
            start: args.start,
            end: args.end,
            tenor_months: args.tenor_months,
            risk_free: rate,
        }],
        "riskfree.csv",
    )
}

#[derive(Serialize)]
struct SynthRow {
    loans: usize,
    cure_probability: f64,
    full_loss_probability: f64,
    interior_a: f64,
    interior_b: f64,
    target_mean: f64,
    target_std: f64,
    sample_mean: Option<f64>,
    sample_std: Option<f64>,
    mean_workout_months: f64,
}

fn synth(ctx: &Context, args: &SynthArgs) -> Result<(), Failure> {
    let base = match args.preset {
        Preset::Pl => SynthSpec::personal_loans(args.n, ctx.seed),
        Preset::Ml => SynthSpec::mortgage_loans(args.n, ctx.seed),
    };
    let spec = SynthSpec {
        schedule: match args.schedule {
            Schedule::Front => ScheduleShape::FrontLoaded,
            Schedule::Uniform => ScheduleShape::Uniform,
            Schedule::Back => ScheduleShape::BackLoaded,
        },
        ..base
    };
    let portfolio = generate_synthetic(&spec)?;
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let (loans, flows) = write_portfolio_files(&portfolio, &dir)?;
    eprintln!("wrote {} and {}", loans.display(), flows.display());

    let losses = portfolio_losses(&portfolio, DiscountRate::new(0.0, 0.0)?)?;
    let sample = (!losses.is_empty()).then(|| LossSummary::from_losses(&losses));
    let target = spec.implied_moments();
    let row = SynthRow {
        loans: portfolio.len(),
        cure_probability: spec.cure_probability,
        full_loss_probability: spec.full_loss_probability,
        interior_a: spec.interior_a,
        interior_b: spec.interior_b,
        target_mean: target.mean,
        target_std: target.std_dev,
        sample_mean: sample.map(|s| s.mean),
        sample_std: sample.map(|s| s.std_dev),
        mean_workout_months: portfolio.mean_workout(),
    };
    let mut buf = Vec::new();
    write_rows_csv(&[row], &mut buf).map_err(|e| usage(e.to_string()))?;
    print!("{}", ctx.render(&buf));
    Ok(())
}

fn report(ctx: &Context, args: &ReportArgs) -> Result<(), Failure> {
    let mut portfolios = Vec::new();
    for (name, loans, flows) in &args.portfolios {
        portfolios.push((name.clone(), ingest(loans, flows)?));
    }
    let mut names: Vec<&str> = portfolios.iter().map(|(n, _)| n.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage("portfolio names must be unique"));
    }
    let mut report = run_scenarios(&portfolios, &ctx.config)?;

    if let Some(cfg) = &ctx.config.baseline {
        let bonds = args
            .bonds
            .as_ref()
            .map(|p| -> Result<_, Failure> {
                let file = fs::File::open(p).map_err(|e| io_error(p, e))?;
                Ok(read_bond_pairs(file, &p.display().to_string())?)
            })
            .transpose()?;
        let returns = args
            .returns
            .as_ref()
            .map(|p| -> Result<_, Failure> {
                let file = fs::File::open(p).map_err(|e| io_error(p, e))?;
                Ok(read_return_series(file, &p.display().to_string())?)
            })
            .transpose()?;
        report.baselines = baseline_rows(cfg, ctx.config.risk_free, bonds.as_deref(), returns.as_ref())?;
    }

    let censored: BTreeMap<String, usize> = portfolios
        .iter()
        .map(|(n, p)| (n.clone(), p.censored_count()))
        .collect();
    report.metadata = Some(ReportMetadata {
        seed: Some(ctx.seed),
        config_fingerprint: ctx.config.fingerprint(),
        generated_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        compounding: "monthly effective: (1 + r)^(1/12) - 1".into(),
        censored_loans: censored,
    });

    if let Some(dir) = &ctx.out {
        for path in emit(&report, dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    match ctx.format {
        Format::Table => print!("{}", render_table(&report)),
        Format::Csv => {
            let mut buf = Vec::new();
            write_report_csv(&report, &mut buf).map_err(|e| usage(e.to_string()))?;
            print!("{}", String::from_utf8_lossy(&buf));
        }
    }
    if ctx.out.is_none() {
        eprintln!("no --out directory given; {REPORT_FILE} and companions not written");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) => RunConfig::from_path(path).map_err(|e| match e {
            Error::Io { .. } => Failure::from(e),
            other => usage(other.to_string()),
        })?,
        None => RunConfig::default(),
    };
    let ctx = Context {
        config,
        seed: cli.seed,
        out: cli.out,
        format: cli.format,
    };
    match &cli.command {
        Command::Lgd {
            command: LgdCommand::Compute(args),
        } => lgd_compute(&ctx, args),
        Command::Rates {
            command: RatesCommand::Baseline(args),
        } => rates_baseline(&ctx, args),
        Command::Coc {
            command: CocCommand::Solve(args),
        } => coc_solve(&ctx, args),
        Command::Riskfree(args) => riskfree(&ctx, args),
        Command::Synth(args) => synth(&ctx, args),
        Command::Report(args) => report(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
