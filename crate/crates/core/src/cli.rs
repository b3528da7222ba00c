//! `lear` command-line front end.
//!
//! Fit options resolve as: command-line flag, then the `--config` file
//! (TOML, keys spelled like the long flags, e.g. `grid-points = 31`), then
//! the built-in default. `LEAR_THREADS` sets the worker-thread count for
//! likelihood evaluation; results do not depend on it.
//!
//! On failure the process prints one JSON line
//! `{"schema_version":1,"error":"<code>","exit_code":<n>}` to stdout and a
//! human-readable message to stderr, then exits with `<n>`
//! (see [`LearError::exit_code`]).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::correlation::{
    arma11_covariance, lear_covariance, max_abs_diff, Arma11Params, LearParams,
};
use crate::data::RepeatedMeasuresData;
use crate::error::{LearError, Result};
use crate::estimation::{compare_parameterizations, fit, Criterion, FitOptions, Parameterization};
use crate::grid::MeasurementGrid;
use crate::io::{fmt17, read_long_csv_path, report_json, write_long_csv, CsvDesign, CsvSchema};
use crate::reparam::{
    arma_to_lear, arma_to_lear_canonical, check_special_case, lear_to_arma, lear_to_arma_canonical,
};
use crate::sim::{simulate, SimSpec};

pub const THREADS_ENV: &str = "LEAR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "lear", version, about = "LEAR correlation model toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the LEAR covariance matrix of one subject.
    BuildMatrix(BuildMatrixArgs),
    /// Map parameters between LEAR and ARMA(1,1).
    Reparam(ReparamArgs),
    /// Report whether a data set is on an equally spaced grid.
    CheckSpecialCase(InputArgs),
    /// Simulate a data set from a JSON spec and write long-format CSV.
    Simulate(SimulateArgs),
    /// Fit the correlation model by profile ML or REML.
    Fit(FitArgs),
    /// Fit both parameterizations and compare the estimates.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Lear2arma,
    Arma2lear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ParamArg {
    Lear,
    Arma11,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Ml,
    Reml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignArg {
    Intercept,
    InterceptTime,
    Covariates,
}

#[derive(Debug, Args)]
pub struct BuildMatrixArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub rho_l: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma2: f64,
    /// Comma-separated times of one subject; repeat for more subjects.
    #[arg(long, required = true)]
    pub times: Vec<String>,
    /// Which subject's matrix to print.
    #[arg(long, default_value_t = 0)]
    pub subject: usize,
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ReparamArgs {
    #[arg(long, value_enum)]
    pub direction: Direction,
    #[arg(long, allow_negative_numbers = true)]
    pub rho_l: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho_a: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma2: f64,
    /// `d_max - d_min` of a unit-spaced grid.
    #[arg(long)]
    pub range: Option<f64>,
    /// Grid times (comma-separated, repeatable) instead of `--range`.
    #[arg(long)]
    pub times: Vec<String>,
    /// Also report the largest elementwise difference between the two covariance matrices.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub subject_col: Option<String>,
    #[arg(long)]
    pub time_col: Option<String>,
    #[arg(long)]
    pub y_col: Option<String>,
    #[arg(long, value_enum)]
    pub design: Option<DesignArg>,
    /// Covariate columns for `--design covariates` (comma-separated).
    #[arg(long)]
    pub covariates: Option<String>,
    /// Omit the intercept column for `--design covariates`.
    #[arg(long)]
    pub no_intercept: bool,
    /// Fixed `d_min` instead of the data-derived value (needs `--d-max`).
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    /// TOML file with defaults for the flags of this command.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the design columns as x1..xq.
    #[arg(long)]
    pub covariates: bool,
}

#[derive(Debug, Args)]
pub struct FitOptionArgs {
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long)]
    pub rho_cap: Option<f64>,
    #[arg(long)]
    pub rho_a_cap: Option<f64>,
    /// Upper bound for delta as a multiple of d_max - d_min.
    #[arg(long)]
    pub delta_cap: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Search tau and rho_A over negative values as well.
    #[arg(long)]
    pub widen_arma: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub param: ParamArg,
    #[command(flatten)]
    pub options: FitOptionArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub options: FitOptionArgs,
}

/// Flat key-value config file.
#[derive(Debug, Default)]
struct Config(toml::Table);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)?;
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| LearError::Config(format!("{}: {e}", path.display())))?;
        Ok(Self(table))
    }

    fn wrong(key: &str, want: &str) -> LearError {
        LearError::Config(format!("config key {key:?} must be {want}"))
    }

    fn str(&self, key: &str) -> Result<Option<String>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(Self::wrong(key, "a string")),
        }
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(v)) => Ok(Some(*v)),
            Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(Self::wrong(key, "a number")),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(v)) if *v >= 0 => Ok(Some(*v as usize)),
            Some(_) => Err(Self::wrong(key, "a non-negative integer")),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(Self::wrong(key, "a boolean")),
        }
    }

    fn value_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>> {
        self.str(key)?
            .map(|s| T::from_str(&s, true).map_err(|_| Self::wrong(key, "a recognized value")))
            .transpose()
    }
}

fn parse_times(specs: &[String]) -> Result<Vec<Vec<f64>>> {
    specs
        .iter()
        .map(|s| {
            s.split(',')
                .map(|x| {
                    x.trim().parse::<f64>().map_err(|_| LearError::Parse {
                        line: 0,
                        message: format!("--times: cannot parse {x:?}"),
                    })
                })
                .collect()
        })
        .collect()
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_text(m: &nalgebra::DMatrix<f64>) -> String {
    m.row_iter()
        .map(|r| r.iter().map(|&v| fmt17(v)).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Serialize)]
struct MatrixReport {
    params: LearParams,
    subject: usize,
    times: Vec<f64>,
    d_min: f64,
    d_max: f64,
    matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct ReparamReport {
    direction: &'static str,
    /// `d_max - d_min` in the grid's own time units.
    range: f64,
    spacing: f64,
    lear: LearParams,
    arma11: Arma11Params,
    rho_a_identifiable: bool,
    max_abs_difference: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SpecialCaseOutput {
    #[serde(flatten)]
    report: crate::reparam::SpecialCaseReport,
    n_subjects: usize,
    d_min: f64,
    d_max: f64,
}

fn build_matrix(args: &BuildMatrixArgs) -> Result<String> {
    let mut grid = MeasurementGrid::new(parse_times(&args.times)?)?;
    match (args.d_min, args.d_max) {
        (Some(lo), Some(hi)) => grid = grid.with_extremes(lo, hi)?,
        (None, None) => {}
        _ => return Err(LearError::Config("--d-min and --d-max must be given together".into())),
    }
    let params = LearParams::new(args.sigma2, args.rho_l, args.delta)?;
    let cov = lear_covariance(&params, &grid, args.subject)?;
    match args.format {
        OutputFormat::Text => Ok(matrix_text(&cov)),
        OutputFormat::Json => report_json(&MatrixReport {
            params,
            subject: args.subject,
            times: grid.times(args.subject)?.to_vec(),
            d_min: grid.d_min(),
            d_max: grid.d_max(),
            matrix: matrix_rows(&cov),
        }),
    }
}

fn need(v: Option<f64>, flag: &str) -> Result<f64> {
    v.ok_or_else(|| LearError::Config(format!("{flag} is required for this direction")))
}

fn reparam(args: &ReparamArgs) -> Result<String> {
    let grid = if args.times.is_empty() {
        None
    } else {
        Some(MeasurementGrid::new(parse_times(&args.times)?)?)
    };
    let (range, spacing) = match (&grid, args.range) {
        (Some(g), None) => (g.range(), check_special_case(g).spacing.unwrap_or(1.0)),
        (None, Some(r)) => (r, 1.0),
        _ => return Err(LearError::Config("give exactly one of --range or --times".into())),
    };

    let (lear, arma11, identifiable) = match args.direction {
        Direction::Lear2arma => {
            let lear = LearParams::new(args.sigma2, need(args.rho_l, "--rho-l")?, need(args.delta, "--delta")?)?;
            let m = match &grid {
                Some(g) => lear_to_arma(&lear, g)?,
                None => lear_to_arma_canonical(&lear, range)?,
            };
            (lear, m.params, m.rho_a_identifiable)
        }
        Direction::Arma2lear => {
            let arma = Arma11Params {
                sigma2: args.sigma2,
                tau: need(args.tau, "--tau")?,
                rho_a: need(args.rho_a, "--rho-a")?,
            };
            let lear = match &grid {
                Some(g) => arma_to_lear(&arma, g)?,
                None => arma_to_lear_canonical(&arma, range)?,
            };
            (lear, arma, true)
        }
    };

    let max_abs_difference = if args.verify {
        let g = match grid {
            Some(g) => g,
            None => {
                if range.fract() != 0.0 || range < 0.0 {
                    return Err(LearError::Config("--verify with --range needs a non-negative integer range".into()));
                }
                // unit spacing: range + 2 points span distances 1..=range + 1
                MeasurementGrid::new(vec![(0..=range as usize + 1).map(|t| t as f64).collect()])?
            }
        };
        let mut worst: f64 = 0.0;
        for s in 0..g.n_subjects() {
            let a = lear_covariance(&lear, &g, s)?;
            let b = arma11_covariance(&arma11, g.times(s)?.len())?;
            worst = worst.max(max_abs_diff(&a, &b));
        }
        Some(worst)
    } else {
        None
    };

    report_json(&ReparamReport {
        direction: match args.direction {
            Direction::Lear2arma => "lear2arma",
            Direction::Arma2lear => "arma2lear",
        },
        range,
        spacing,
        lear,
        arma11,
        rho_a_identifiable: identifiable,
        max_abs_difference,
    })
}

fn load_input(args: &InputArgs, config: &Config) -> Result<RepeatedMeasuresData> {
    let defaults = CsvSchema::default();
    let pick = |flag: &Option<String>, key: &str, default: String| -> Result<String> {
        Ok(match flag {
            Some(v) => v.clone(),
            None => config.str(key)?.unwrap_or(default),
        })
    };
    let design = match args.design {
        Some(d) => d,
        None => config.value_enum("design")?.unwrap_or(DesignArg::Intercept),
    };
    let covariates = match &args.covariates {
        Some(c) => Some(c.clone()),
        None => config.str("covariates")?,
    };
    let no_intercept = args.no_intercept || config.bool("no-intercept")?.unwrap_or(false);
    let design = match design {
        DesignArg::Intercept => CsvDesign::Intercept,
        DesignArg::InterceptTime => CsvDesign::InterceptTime,
        DesignArg::Covariates => {
            let columns: Vec<String> = covariates
                .ok_or_else(|| LearError::Config("--design covariates needs --covariates".into()))?
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            CsvDesign::Covariates { columns, intercept: !no_intercept }
        }
    };
    let schema = CsvSchema {
        subject: pick(&args.subject_col, "subject-col", defaults.subject)?,
        time: pick(&args.time_col, "time-col", defaults.time)?,
        response: pick(&args.y_col, "y-col", defaults.response)?,
        design,
    };
    let data = read_long_csv_path(&args.input, &schema)?;
    let d_min = args.d_min.or(config.f64("d-min")?);
    let d_max = args.d_max.or(config.f64("d-max")?);
    match (d_min, d_max) {
        (Some(lo), Some(hi)) => data.with_extremes(lo, hi),
        (None, None) => Ok(data),
        _ => Err(LearError::Config("--d-min and --d-max must be given together".into())),
    }
}

fn resolve_options(args: &FitOptionArgs, config: &Config) -> Result<(Criterion, FitOptions)> {
    let d = FitOptions::default();
    let criterion = match args.criterion {
        Some(c) => c,
        None => config.value_enum("criterion")?.unwrap_or(CriterionArg::Reml),
    };
    let options = FitOptions {
        grid_points: args.grid_points.or(config.usize("grid-points")?).unwrap_or(d.grid_points),
        rho_cap: args.rho_cap.or(config.f64("rho-cap")?).unwrap_or(d.rho_cap),
        rho_a_cap: args.rho_a_cap.or(config.f64("rho-a-cap")?).unwrap_or(d.rho_a_cap),
        delta_cap: args.delta_cap.or(config.f64("delta-cap")?).unwrap_or(d.delta_cap),
        max_iterations: args.max_iter.or(config.usize("max-iter")?).unwrap_or(d.max_iterations),
        tolerance: args.tol.or(config.f64("tol")?).unwrap_or(d.tolerance),
        widen_arma: args.widen_arma || config.bool("widen-arma")?.unwrap_or(d.widen_arma),
    };
    options.check()?;
    let criterion = match criterion {
        CriterionArg::Ml => Criterion::Ml,
        CriterionArg::Reml => Criterion::Reml,
    };
    Ok((criterion, options))
}

/// Applies `LEAR_THREADS` to the global worker pool, once.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| LearError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // a second call finds the pool already built; that is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one command and returns what it prints on stdout.
pub fn run(cli: &Cli) -> Result<String> {
    configure_threads()?;
    match &cli.command {
        Command::BuildMatrix(a) => build_matrix(a),
        Command::Reparam(a) => reparam(a),
        Command::CheckSpecialCase(a) => {
            let config = Config::load(a.config.as_deref())?;
            let data = load_input(a, &config)?;
            let grid = data.require_grid()?;
            report_json(&SpecialCaseOutput {
                report: check_special_case(grid),
                n_subjects: data.n_subjects(),
                d_min: grid.d_min(),
                d_max: grid.d_max(),
            })
        }
        Command::Simulate(a) => {
            let text = std::fs::read_to_string(&a.spec)?;
            let spec: SimSpec = serde_json::from_str(&text).map_err(|e| LearError::Parse {
                line: e.line() as u64,
                message: format!("{}: {e}", a.spec.display()),
            })?;
            let data = simulate(&spec)?;
            let covariates = a.covariates || matches!(spec.design, crate::data::DesignRule::User(_));
            match &a.out {
                Some(path) => {
                    let file = std::fs::File::create(path)?;
                    write_long_csv(std::io::BufWriter::new(file), &data, covariates)?;
                    Ok(String::new())
                }
                None => {
                    let mut buf = Vec::new();
                    write_long_csv(&mut buf, &data, covariates)?;
                    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
                }
            }
        }
        Command::Fit(a) => {
            let config = Config::load(a.input.config.as_deref())?;
            let data = load_input(&a.input, &config)?;
            let (criterion, options) = resolve_options(&a.options, &config)?;
            let param = match a.param {
                ParamArg::Lear => Parameterization::Lear,
                ParamArg::Arma11 => Parameterization::Arma11,
            };
            report_json(&fit(&data, param, criterion, &options)?)
        }
        Command::Compare(a) => {
            let config = Config::load(a.input.config.as_deref())?;
            let data = load_input(&a.input, &config)?;
            let (criterion, options) = resolve_options(&a.options, &config)?;
            report_json(&compare_parameterizations(&data, criterion, &options)?)
        }
    }
}

/// One-line machine-readable error record.
pub fn error_line(err: &LearError) -> String {
    format!(
        "{{\"schema_version\":{},\"error\":\"{}\",\"exit_code\":{}}}",
        crate::io::SCHEMA_VERSION,
        err.code(),
        err.exit_code()
    )
}
