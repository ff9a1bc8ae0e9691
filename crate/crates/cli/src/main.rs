mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{error_json, Format};

#[derive(Parser, Debug)]
#[command(name = "linmod", version, about = "Regression models fitted from CSV files, reported as JSON or text")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ordinary least squares
    Fit(FitArgs),
    /// Weighted least squares, or feasible GLS with --fgls
    Wls(WlsArgs),
    /// Leave-one-out, influence, VIF and conformal intervals for an OLS fit
    Diagnose(DiagnoseArgs),
    /// Ridge regression; GCV picks the penalty unless --lambda is given
    Ridge(RidgeArgs),
    /// Lasso and elastic net by coordinate descent
    Lasso(LassoArgs),
    /// Generalized linear models
    Glm(GlmArgs),
    /// Generalized estimating equations for clustered data
    Gee(GeeArgs),
    /// Linear quantile regression
    Rq(RqArgs),
    /// Survival analysis
    #[command(subcommand)]
    Surv(SurvCommand),
    /// Built-in Monte-Carlo suites
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: String,
    /// Comma-separated covariate columns; categorical columns become dummies
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    /// Treatment-coded categorical term, optionally with its reference level
    #[arg(long, value_name = "COL[:REF]")]
    dummy: Vec<String>,
    /// Product term of two or more columns
    #[arg(long, value_name = "A:B")]
    interaction: Vec<String>,
    #[arg(long)]
    no_intercept: bool,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    cluster: Option<String>,
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Confidence level for intervals
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SeKind {
    Classic,
    Hc0,
    Hc1,
    Hc2,
    Hc3,
    Hc4,
    Cluster,
    Sandwich,
    Boot,
    Model,
    Jackknife,
    Powell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Logit,
    Probit,
    Cloglog,
    Cauchit,
    Poisson,
    Negbin,
    Gaussian,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = SeKind::Classic)]
    se: SeKind,
    /// Covariate values (without the intercept) at which to predict; repeatable
    #[arg(long = "new-x", value_name = "X1,X2,..", allow_hyphen_values = true)]
    new_x: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct WlsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Estimate the weights from a log-variance regression
    #[arg(long)]
    fgls: bool,
    #[arg(long, value_enum, default_value_t = SeKind::Classic)]
    se: SeKind,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Covariate values for a conformal interval at 1 - level; repeatable
    #[arg(long = "new-x", value_name = "X1,X2,..", allow_hyphen_values = true)]
    new_x: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct RidgeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct LassoArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, conflicts_with = "cv")]
    lambda: Option<f64>,
    /// Number of cross-validation folds
    #[arg(long)]
    cv: Option<usize>,
    /// Ridge share of the penalty; 0 is the lasso
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct GlmArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::Logit)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value_t = SeKind::Model)]
    se: SeKind,
    /// Covariate values at which to predict the mean; repeatable
    #[arg(long = "new-x", value_name = "X1,X2,..", allow_hyphen_values = true)]
    new_x: Vec<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CorArg {
    Independence,
    Exchangeable,
}

#[derive(Args, Debug)]
struct GeeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value_t = CorArg::Exchangeable)]
    corstr: CorArg,
    #[arg(long, value_enum, default_value_t = SeKind::Sandwich)]
    se: SeKind,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct RqArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = SeKind::Powell)]
    se: SeKind,
    /// Kernel bandwidth for the Powell covariance
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Bootstrap replicates
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand, Debug)]
enum SurvCommand {
    /// Kaplan-Meier curves with Greenwood intervals
    Km(KmArgs),
    /// Two-sample log-rank test
    Logrank(LogrankArgs),
    /// Cox proportional hazards
    Cox(CoxArgs),
}

#[derive(Args, Debug)]
struct SurvDataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    time: String,
    /// 1 for an observed failure, 0 for censoring
    #[arg(long)]
    event: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CiArg {
    Log,
    Loglog,
}

#[derive(Args, Debug)]
struct KmArgs {
    #[command(flatten)]
    surv: SurvDataArgs,
    #[arg(long)]
    group: Option<String>,
    #[arg(long, value_enum, default_value_t = CiArg::Log)]
    ci: CiArg,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct LogrankArgs {
    #[command(flatten)]
    surv: SurvDataArgs,
    #[arg(long)]
    group: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TiesArg {
    Efron,
    Breslow,
}

#[derive(Args, Debug)]
struct CoxArgs {
    #[command(flatten)]
    surv: SurvDataArgs,
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    #[arg(long, value_name = "COL[:REF]")]
    dummy: Vec<String>,
    #[arg(long, value_name = "A:B")]
    interaction: Vec<String>,
    #[arg(long, value_enum, default_value_t = TiesArg::Efron)]
    ties: TiesArg,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// freedman, ehw-compare, hc2-unbiased, conformal-coverage, ridge-tradeoff or sparse-compare
    suite: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Miscoverage for the conformal suite
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl Command {
    fn format(&self) -> Format {
        match self {
            Command::Fit(a) => a.common.format,
            Command::Wls(a) => a.common.format,
            Command::Diagnose(a) => a.common.format,
            Command::Ridge(a) => a.common.format,
            Command::Lasso(a) => a.common.format,
            Command::Glm(a) => a.common.format,
            Command::Gee(a) => a.common.format,
            Command::Rq(a) => a.common.format,
            Command::Surv(SurvCommand::Km(a)) => a.common.format,
            Command::Surv(SurvCommand::Logrank(a)) => a.common.format,
            Command::Surv(SurvCommand::Cox(a)) => a.common.format,
            Command::Simulate(a) => a.format,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{}", e.render());
            let first = e.to_string();
            let message = first.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            print!("{}", error_json("usage", message, 1));
            return ExitCode::from(1);
        }
    };
    let format = cli.command.format();
    match commands::run(&cli.command) {
        Ok(report) => {
            print!("{}", report.render(format));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = if e.is_numerical() { 2 } else { 1 };
            match format {
                Format::Json => print!("{}", error_json(e.kind(), &e.to_string(), code)),
                Format::Text => eprintln!("error: {e}"),
            }
            ExitCode::from(code)
        }
    }
}
