//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 usage or I/O, 2 schema/parse, 3 empty result,
//! 4 fit or domain error, 5 internal assertion.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::beta::{calibrate_from_sk, BetaCalibration, BetaParams};
use crate::error::{Error, Result};
use crate::ingest::{self, ColumnMap, GroupedDataset};
use crate::ksfit::{self, KSFitResult, PowerFitOptions};
use crate::moments::{self, HistogramBin, MomentSummary, SKPoint};
use crate::ranksize::{self, RankFitOptions, RankFitResult, RankVariant};
use crate::report;
use crate::synth::{self, SyntheticGroupsConfig};
use crate::urnsim::{self, SimResult, UrnConfig};

const CDF_POINTS: usize = 201;
const CURVE_POINTS: usize = 101;

#[derive(Debug, Parser)]
#[command(
    name = "skewkurt",
    version,
    about = "Skewness-kurtosis analysis of grouped size data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-group skewness and kurtosis with summary tables and histograms.
    Stats(StatsArgs),
    /// Fit K against S (quadratic or power) or a rank model to an sk_points file.
    Fit(FitArgs),
    /// Fit a rank-size model to one numeric column.
    RankFit(RankFitArgs),
    /// Beta shape parameters from a (S, K) pair or an sk_points file.
    BetaCalibrate(CalibrateArgs),
    /// Simulate the Polya urn with new-urn creation.
    Simulate(SimulateArgs),
    /// Run every analysis and write one report directory with a manifest.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    S,
    K,
}

impl Target {
    fn column(self) -> &'static str {
        match self {
            Target::S => "s",
            Target::K => "k",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat TOML file of settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// City-level CSV/TSV with a group column and a value column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub group_by: Option<String>,
    #[arg(long)]
    pub value_column: Option<String>,
    #[arg(long)]
    pub city_column: Option<String>,
    #[arg(long)]
    pub min_n: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Use the built-in seeded 110-group generator instead of a file.
    #[arg(long, conflicts_with_all = ["input", "fixture"])]
    pub synthetic: bool,
    /// Use the shipped province summary, one group per province.
    #[arg(long, conflicts_with = "input")]
    pub fixture: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// sk_points CSV (`group,s,k,n`).
    #[arg(long)]
    pub input: PathBuf,
    /// `quadratic`, `power` or `rank:<variant>`.
    #[arg(long, default_value = "quadratic")]
    pub model: String,
    /// Series ranked by `rank:` models.
    #[arg(long, value_enum, default_value = "k")]
    pub target: Target,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RankFitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Column to rank; defaults to the `--target` column, else `value`.
    #[arg(long)]
    pub value_column: Option<String>,
    #[arg(long, value_enum)]
    pub target: Option<Target>,
    #[arg(long)]
    pub model: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(
        long,
        requires = "k",
        conflicts_with = "input",
        allow_negative_numbers = true
    )]
    pub s: Option<f64>,
    #[arg(long, requires = "s", allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// sk_points CSV; calibrates at the mean S on the quadratic K–S fit.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub k0: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_shift: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Smallest size entering the tail-slope estimate.
    #[arg(long)]
    pub k_min: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Also run the urn simulation section.
    #[arg(long)]
    pub simulate: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Flat key-value settings file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub group_by: Option<String>,
    pub value_column: Option<String>,
    pub city_column: Option<String>,
    pub min_n: Option<usize>,
    pub bins: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub synthetic: Option<bool>,
    pub fixture: Option<bool>,
    pub nu_min: Option<f64>,
    pub nu_max: Option<f64>,
    pub psi_max: Option<f64>,
    pub rank_model: Option<String>,
    pub simulate: Option<bool>,
    pub sim_k0: Option<u64>,
    pub sim_a_shift: Option<f64>,
    pub sim_alpha: Option<f64>,
    pub sim_steps: Option<u64>,
    pub sim_k_min: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = ingest::read_text_file(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Effective settings after merging defaults, the config file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub synthetic: bool,
    pub fixture: bool,
    pub group_by: String,
    pub value_column: Option<String>,
    pub city_column: Option<String>,
    pub min_n: usize,
    pub bins: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub format: Format,
    pub nu_min: f64,
    pub nu_max: f64,
    pub psi_max: f64,
    pub rank_model: RankVariant,
    pub simulate: bool,
    pub sim_k0: u64,
    pub sim_a_shift: f64,
    pub sim_alpha: f64,
    pub sim_steps: u64,
    pub sim_k_min: u64,
}

impl Settings {
    fn resolve(common: &CommonArgs, input: Option<&InputArgs>) -> Result<Self> {
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let input = input.cloned();
        let flag_bool = |f: fn(&InputArgs) -> bool| input.as_ref().is_some_and(f);
        let rank_model = file.rank_model.as_deref().unwrap_or("lav4").parse()?;
        let settings = Settings {
            input: input.as_ref().and_then(|i| i.input.clone()).or(file.input),
            synthetic: flag_bool(|i| i.synthetic) || file.synthetic.unwrap_or(false),
            fixture: flag_bool(|i| i.fixture) || file.fixture.unwrap_or(false),
            group_by: input
                .as_ref()
                .and_then(|i| i.group_by.clone())
                .or(file.group_by)
                .unwrap_or_else(|| "province".into()),
            value_column: input
                .as_ref()
                .and_then(|i| i.value_column.clone())
                .or(file.value_column),
            city_column: input
                .as_ref()
                .and_then(|i| i.city_column.clone())
                .or(file.city_column),
            min_n: input
                .as_ref()
                .and_then(|i| i.min_n)
                .or(file.min_n)
                .unwrap_or(moments::DEFAULT_MIN_N),
            bins: input
                .as_ref()
                .and_then(|i| i.bins)
                .or(file.bins)
                .unwrap_or(20),
            seed: common.seed.or(file.seed).unwrap_or(1),
            out_dir: common
                .out_dir
                .clone()
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            format: common.format.or(file.format).unwrap_or_default(),
            nu_min: file.nu_min.unwrap_or(PowerFitOptions::default().nu_min),
            nu_max: file.nu_max.unwrap_or(PowerFitOptions::default().nu_max),
            psi_max: file.psi_max.unwrap_or(RankFitOptions::default().psi_max),
            rank_model,
            simulate: file.simulate.unwrap_or(false),
            sim_k0: file.sim_k0.unwrap_or(1),
            sim_a_shift: file.sim_a_shift.unwrap_or(0.0),
            sim_alpha: file.sim_alpha.unwrap_or(0.5),
            sim_steps: file.sim_steps.unwrap_or(200_000),
            sim_k_min: file.sim_k_min.unwrap_or(10),
        };
        if settings.bins == 0 {
            return Err(Error::InvalidArgument("bins must be at least 1".into()));
        }
        if settings.synthetic && settings.fixture {
            return Err(Error::InvalidArgument(
                "choose one of synthetic and fixture".into(),
            ));
        }
        Ok(settings)
    }

    fn power_options(&self) -> PowerFitOptions {
        PowerFitOptions {
            nu_min: self.nu_min,
            nu_max: self.nu_max,
            ..PowerFitOptions::default()
        }
    }

    fn rank_options(&self) -> RankFitOptions {
        RankFitOptions {
            psi_max: self.psi_max,
            ..RankFitOptions::default()
        }
    }

    fn urn_config(&self) -> Result<UrnConfig> {
        UrnConfig::new(
            self.sim_k0,
            self.sim_a_shift,
            self.sim_alpha,
            self.sim_steps,
            self.seed,
        )
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::Stats(args) => cmd_stats(args).map(|_| 0),
        Command::Fit(args) => cmd_fit(args).map(|_| 0),
        Command::RankFit(args) => cmd_rank_fit(args).map(|_| 0),
        Command::BetaCalibrate(args) => cmd_beta_calibrate(args).map(|_| 0),
        Command::Simulate(args) => cmd_simulate(args).map(|_| 0),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

struct OutDir {
    path: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    fn create(path: &Path) -> Result<Self> {
        fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
        Ok(OutDir {
            path: path.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Loaded input plus a stable description for the manifest.
struct Dataset {
    data: GroupedDataset,
    source: String,
    /// Extra summary columns (the province fixture carries three variables).
    columns: Vec<(String, Vec<f64>)>,
}

const FIXTURE_COLUMNS: [&str; 3] = ["ati_eur", "population", "n_cities"];

fn load_dataset(settings: &Settings) -> Result<Dataset> {
    if settings.synthetic {
        let config = SyntheticGroupsConfig {
            seed: settings.seed,
            ..SyntheticGroupsConfig::default()
        };
        let data = synth::synthetic_groups(&config)?;
        let pooled = data.pooled_values();
        return Ok(Dataset {
            data,
            source: format!("synthetic(groups=110, seed={})", settings.seed),
            columns: vec![("value".into(), pooled)],
        });
    }
    if settings.fixture {
        let rows = ingest::province_fixture();
        let column = settings.value_column.as_deref().unwrap_or("n_cities");
        let pick = |name: &str, r: &ingest::ProvinceSummaryRow| -> Option<f64> {
            match name {
                "ati_eur" => Some(r.ati_total),
                "population" => Some(r.n_inhab as f64),
                "n_cities" => Some(r.n_cities as f64),
                _ => None,
            }
        };
        if pick(column, &rows[0]).is_none() {
            return Err(Error::MissingColumn {
                column: column.to_string(),
            });
        }
        let groups = rows
            .iter()
            .map(|r| {
                (
                    r.province_code.clone(),
                    vec![pick(column, r).unwrap_or(f64::NAN)],
                )
            })
            .collect();
        let columns = FIXTURE_COLUMNS
            .iter()
            .map(|c| {
                (
                    c.to_string(),
                    rows.iter().filter_map(|r| pick(c, r)).collect(),
                )
            })
            .collect();
        return Ok(Dataset {
            data: GroupedDataset {
                groups,
                value_label: column.to_string(),
            },
            source: format!("province fixture ({column})"),
            columns,
        });
    }
    let path = settings.input.as_ref().ok_or_else(|| {
        Error::InvalidArgument("no input: pass --input, --synthetic or --fixture".into())
    })?;
    let mut columns = ColumnMap::new(
        settings.group_by.clone(),
        settings
            .value_column
            .clone()
            .unwrap_or_else(|| "value".into()),
    );
    if let Some(city) = &settings.city_column {
        columns = columns.with_city(city.clone());
    }
    let data = ingest::parse_city_csv(path, &columns)?;
    let pooled = data.pooled_values();
    Ok(Dataset {
        source: path.display().to_string(),
        columns: vec![(columns.value.clone(), pooled)],
        data,
    })
}

#[derive(Debug, Clone, Serialize)]
struct StatsOutput {
    columns: Vec<(String, MomentSummary)>,
    s_summary: Option<MomentSummary>,
    k_summary: Option<MomentSummary>,
    sk_points: Vec<SKPoint>,
    skipped: Vec<(String, String)>,
    hist_s: Vec<HistogramBin>,
    hist_k: Vec<HistogramBin>,
}

fn compute_stats(dataset: &Dataset, settings: &Settings) -> Result<StatsOutput> {
    let columns = dataset
        .columns
        .iter()
        .map(|(name, values)| moments::summarize(values).map(|s| (name.clone(), s)))
        .collect::<Result<Vec<_>>>()?;
    let (points, skipped) = moments::group_sk_points(&dataset.data, settings.min_n)?;
    let s: Vec<f64> = points.iter().map(|p| p.s).collect();
    let k: Vec<f64> = points.iter().map(|p| p.k).collect();
    Ok(StatsOutput {
        columns,
        s_summary: moments::summarize(&s).ok(),
        k_summary: moments::summarize(&k).ok(),
        hist_s: moments::histogram(&s, settings.bins)?,
        hist_k: moments::histogram(&k, settings.bins)?,
        sk_points: points,
        skipped: skipped.skipped,
    })
}

fn stats_summary_text(stats: &StatsOutput, dataset: &Dataset) -> String {
    let mut cols: Vec<(&str, &MomentSummary)> =
        stats.columns.iter().map(|(n, s)| (n.as_str(), s)).collect();
    if let Some(s) = &stats.s_summary {
        cols.push(("S", s));
    }
    if let Some(k) = &stats.k_summary {
        cols.push(("K", k));
    }
    let mut out = format!(
        "source: {}\ngroups: {}  rows: {}  (S, K) points: {}\n\n",
        dataset.source,
        dataset.data.group_count(),
        dataset.data.row_count(),
        stats.sk_points.len()
    );
    out.push_str(&report::summary_table(&cols));
    if !stats.skipped.is_empty() {
        out.push_str("\nskipped groups:\n");
        for (key, reason) in &stats.skipped {
            out.push_str(&format!("  {key}: {reason}\n"));
        }
    }
    out
}

fn write_stats(
    out: &mut OutDir,
    stats: &StatsOutput,
    dataset: &Dataset,
    format: Format,
) -> Result<()> {
    out.write("summary.txt", &stats_summary_text(stats, dataset))?;
    match format {
        Format::Csv => {
            out.write("sk_points.csv", &report::sk_points_csv(&stats.sk_points))?;
            out.write("hist_s.csv", &report::histogram_csv(&stats.hist_s))?;
            out.write("hist_k.csv", &report::histogram_csv(&stats.hist_k))?;
        }
        Format::Json => out.write_json("stats.json", stats)?,
    }
    Ok(())
}

pub fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let settings = Settings::resolve(&args.common, Some(&args.input))?;
    let dataset = load_dataset(&settings)?;
    let stats = compute_stats(&dataset, &settings)?;
    let mut out = OutDir::create(&settings.out_dir)?;
    write_stats(&mut out, &stats, &dataset, settings.format)?;
    println!(
        "{} (S, K) points from {} groups; wrote {}",
        stats.sk_points.len(),
        dataset.data.group_count(),
        out.written.join(", ")
    );
    Ok(())
}

fn read_sk_file(path: &Path) -> Result<Vec<SKPoint>> {
    ingest::parse_sk_points(&ingest::read_text_file(path)?)
}

fn write_ks_fit(out: &mut OutDir, stem: &str, fit: &KSFitResult, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            out.write(&format!("{stem}.txt"), &report::ks_fit_text(fit))?;
            out.write(
                &format!("{stem}_residuals.csv"),
                &report::ks_residuals_csv(fit),
            )?;
            out.write(
                &format!("{stem}_curve.csv"),
                &report::ks_curve_csv(fit, CURVE_POINTS),
            )?;
        }
        Format::Json => out.write_json(&format!("{stem}.json"), fit)?,
    }
    Ok(())
}

fn write_rank_fit(
    out: &mut OutDir,
    stem: &str,
    values: &[f64],
    fit: &RankFitResult,
    format: Format,
) -> Result<()> {
    match format {
        Format::Csv => {
            let series = ranksize::rank_ascending(values)?;
            out.write(&format!("{stem}.txt"), &report::rank_fit_text(fit))?;
            out.write(
                &format!("{stem}.csv"),
                &report::rank_series_csv(&series, Some(fit)),
            )?;
        }
        Format::Json => out.write_json(&format!("{stem}.json"), fit)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct BetaRoute<'a> {
    route: &'a str,
    params: BetaParams,
    calibration: Option<&'a BetaCalibration>,
    cdf: Vec<(f64, f64)>,
}

fn write_beta(
    out: &mut OutDir,
    stem: &str,
    route: &str,
    params: &BetaParams,
    calibration: Option<&BetaCalibration>,
    format: Format,
) -> Result<()> {
    match format {
        Format::Csv => {
            let text = match calibration {
                Some(c) => report::calibration_text(route, c),
                None => report::beta_params_text(route, params),
            };
            out.write(&format!("{stem}.txt"), &text)?;
            out.write(
                &format!("{stem}_cdf.csv"),
                &report::cdf_csv(params, CDF_POINTS)?,
            )?;
        }
        Format::Json => out.write_json(
            &format!("{stem}.json"),
            &BetaRoute {
                route,
                params: *params,
                calibration,
                cdf: crate::beta::cdf_curve(*params, CDF_POINTS)?,
            },
        )?,
    }
    Ok(())
}

fn parse_model(model: &str) -> Result<Option<RankVariant>> {
    match model.to_ascii_lowercase().as_str() {
        "quadratic" | "power" => Ok(None),
        other => match other.strip_prefix("rank:") {
            Some(variant) => variant.parse().map(Some),
            None => Err(Error::InvalidArgument(format!(
                "unknown model `{model}`; use quadratic, power or rank:<variant>"
            ))),
        },
    }
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let settings = Settings::resolve(&args.common, None)?;
    let model = parse_model(&args.model)?;
    let points = read_sk_file(&args.input)?;
    let mut out = OutDir::create(&settings.out_dir)?;
    match model {
        None if args.model.eq_ignore_ascii_case("quadratic") => {
            let fit = ksfit::fit_quadratic(&points)?;
            write_ks_fit(&mut out, "fit", &fit, settings.format)?;
            println!("K = {} S^2 + {}  (R² = {})", fit.p, fit.q, fit.r_squared);
        }
        None => {
            let fit = ksfit::fit_power_with(&points, settings.power_options())?;
            if let Some(w) = &fit.boundary_warning {
                eprintln!("warning: {w}");
            }
            write_ks_fit(&mut out, "fit", &fit, settings.format)?;
            println!(
                "K = {} S^{} + {}  (R² = {})",
                fit.p, fit.nu, fit.q, fit.r_squared
            );
        }
        Some(variant) => {
            let values: Vec<f64> = points
                .iter()
                .map(|p| if args.target == Target::S { p.s } else { p.k })
                .collect();
            let series = ranksize::rank_ascending(&values)?;
            let fit = ranksize::fit_rank_model_with(&series, variant, settings.rank_options())?;
            write_rank_fit(&mut out, "fit", &values, &fit, settings.format)?;
            println!(
                "{variant} on {}: R² = {}",
                args.target.column(),
                fit.r_squared
            );
        }
    }
    Ok(())
}

pub fn cmd_rank_fit(args: &RankFitArgs) -> Result<()> {
    let settings = Settings::resolve(&args.common, None)?;
    let variant = match &args.model {
        Some(m) => m.strip_prefix("rank:").unwrap_or(m).parse()?,
        None => settings.rank_model,
    };
    let column = args
        .value_column
        .clone()
        .or_else(|| args.target.map(|t| t.column().to_string()))
        .unwrap_or_else(|| "value".into());
    let values = ingest::read_numeric_column(&ingest::read_text_file(&args.input)?, &column)?;
    let series = ranksize::rank_ascending(&values)?;
    let fit = ranksize::fit_rank_model_with(&series, variant, settings.rank_options())?;
    let mut out = OutDir::create(&settings.out_dir)?;
    write_rank_fit(&mut out, "rank_fit", &values, &fit, settings.format)?;
    if variant == RankVariant::Lav4 {
        let params = ranksize::rank_fit_to_beta(&fit)?;
        write_beta(
            &mut out,
            "beta_rank",
            "lav4",
            &params,
            None,
            settings.format,
        )?;
    }
    println!("{variant} on `{column}`: R² = {}", fit.r_squared);
    Ok(())
}

/// Calibrates at the mean skewness on the quadratic K–S curve.
fn ks_route_calibration(points: &[SKPoint], fit: &KSFitResult) -> Result<BetaCalibration> {
    let mean_s = points.iter().map(|p| p.s).sum::<f64>() / points.len() as f64;
    calibrate_from_sk(mean_s, fit.predict(mean_s))
}

pub fn cmd_beta_calibrate(args: &CalibrateArgs) -> Result<()> {
    let settings = Settings::resolve(&args.common, None)?;
    let (route, cal) = match (args.s, args.k, &args.input) {
        (Some(s), Some(k), _) => ("direct", calibrate_from_sk(s, k)?),
        (_, _, Some(path)) => {
            let points = read_sk_file(path)?;
            let fit = ksfit::fit_quadratic(&points)?;
            ("ks-quadratic", ks_route_calibration(&points, &fit)?)
        }
        _ => {
            return Err(Error::InvalidArgument(
                "pass --s and --k, or --input with an sk_points file".into(),
            ))
        }
    };
    let mut out = OutDir::create(&settings.out_dir)?;
    write_beta(
        &mut out,
        "calibration",
        route,
        &cal.selected,
        Some(&cal),
        settings.format,
    )?;
    println!(
        "a = {}, b = {} (rho = {})",
        cal.selected.a, cal.selected.b, cal.rho
    );
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct SimulationOutput {
    config: UrnConfig,
    n_urns: u64,
    total_balls: u64,
    predicted_b: Option<f64>,
    tv_distance: Option<f64>,
    tail_slope: Option<f64>,
    k_min: u64,
    counts: std::collections::BTreeMap<u64, u64>,
    limit_pmf: std::collections::BTreeMap<u64, f64>,
}

fn simulate(config: &UrnConfig, k_min: u64) -> Result<(SimResult, SimulationOutput)> {
    let result = urnsim::run(config)?;
    let b = urnsim::predicted_b(config).ok();
    let (tv, limit) = match b {
        Some(b) => (
            Some(urnsim::tv_to_limit(&result, config.k0, config.a_shift, b)?),
            urnsim::limit_pmf_table(&result, config.k0, config.a_shift, b)?,
        ),
        None => (None, Default::default()),
    };
    let output = SimulationOutput {
        config: *config,
        n_urns: result.n_urns,
        total_balls: result.total_balls,
        predicted_b: b,
        tv_distance: tv,
        tail_slope: urnsim::empirical_tail_slope(&result, k_min).ok(),
        k_min,
        counts: result.counts.clone(),
        limit_pmf: limit,
    };
    Ok((result, output))
}

fn simulation_text(o: &SimulationOutput) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), report::num);
    format!(
        "k0 = {}\na_shift = {}\nalpha = {}\nsteps = {}\nseed = {}\nn_urns = {}\ntotal_balls = {}\npredicted_b = {}\ntv_distance = {}\ntail_k_min = {}\ntail_slope = {}\n",
        o.config.k0,
        report::num(o.config.a_shift),
        report::num(o.config.alpha),
        o.config.steps,
        o.config.seed,
        o.n_urns,
        o.total_balls,
        opt(o.predicted_b),
        opt(o.tv_distance),
        o.k_min,
        opt(o.tail_slope),
    )
}

fn write_simulation(
    out: &mut OutDir,
    result: &SimResult,
    o: &SimulationOutput,
    format: Format,
) -> Result<()> {
    match format {
        Format::Csv => {
            out.write("simulation.txt", &simulation_text(o))?;
            out.write(
                "simulation.csv",
                &report::simulation_csv(result, &o.limit_pmf),
            )?;
        }
        Format::Json => out.write_json("simulation.json", o)?,
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut settings = Settings::resolve(&args.common, None)?;
    settings.sim_k0 = args.k0.unwrap_or(settings.sim_k0);
    settings.sim_a_shift = args.a_shift.unwrap_or(settings.sim_a_shift);
    settings.sim_alpha = args.alpha.unwrap_or(settings.sim_alpha);
    settings.sim_steps = args.steps.unwrap_or(settings.sim_steps);
    settings.sim_k_min = args.k_min.unwrap_or(settings.sim_k_min);
    let config = settings.urn_config()?;
    let (result, output) = simulate(&config, settings.sim_k_min)?;
    let mut out = OutDir::create(&settings.out_dir)?;
    write_simulation(&mut out, &result, &output, settings.format)?;
    println!(
        "{} urns, {} balls; predicted b = {:?}, TV = {:?}",
        output.n_urns, output.total_balls, output.predicted_b, output.tv_distance
    );
    Ok(())
}

/// Outcome of one pipeline section.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SectionStatus {
    Ok { files: Vec<String> },
    Skipped { reason: String },
    Failed { error: String, exit_code: i32 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub sections: Vec<(String, SectionStatus)>,
    stats: Option<StatsOutput>,
    ks_quadratic: Option<KSFitResult>,
    ks_power: Option<KSFitResult>,
    rank_s: Option<RankFitResult>,
    rank_k: Option<RankFitResult>,
    beta_ks: Option<BetaCalibration>,
    beta_rank_s: Option<BetaParams>,
    beta_rank_k: Option<BetaParams>,
    simulation: Option<SimulationOutput>,
}

const INSUFFICIENT: &str = "insufficient group sizes";

struct Pipeline {
    out: OutDir,
    format: Format,
    sections: Vec<(String, SectionStatus)>,
}

impl Pipeline {
    /// Runs a section, recording its files or failure.
    fn section<T>(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut OutDir, Format) -> Result<T>,
    ) -> Option<T> {
        let before = self.out.written.len();
        let format = self.format;
        match f(&mut self.out, format) {
            Ok(v) => {
                let files = self.out.written[before..].to_vec();
                self.sections
                    .push((name.to_string(), SectionStatus::Ok { files }));
                Some(v)
            }
            Err(e) => {
                self.sections.push((
                    name.to_string(),
                    SectionStatus::Failed {
                        error: e.to_string(),
                        exit_code: e.exit_code(),
                    },
                ));
                None
            }
        }
    }

    fn skip(&mut self, name: &str, reason: &str) {
        self.sections.push((
            name.to_string(),
            SectionStatus::Skipped {
                reason: reason.to_string(),
            },
        ));
    }
}

fn dependency_reason(have_points: bool, upstream: &str) -> String {
    if have_points {
        format!("{upstream} unavailable")
    } else {
        INSUFFICIENT.to_string()
    }
}

pub fn cmd_pipeline(args: &PipelineArgs) -> Result<i32> {
    let mut settings = Settings::resolve(&args.common, Some(&args.input))?;
    settings.simulate |= args.simulate;
    let dataset = load_dataset(&settings)?;
    let mut p = Pipeline {
        out: OutDir::create(&settings.out_dir)?,
        format: settings.format,
        sections: Vec::new(),
    };

    // Statistics: always attempted; an empty (S, K) set degrades to pooled summaries.
    let stats = match compute_stats(&dataset, &settings) {
        Ok(stats) => p.section("stats", |out, fmt| {
            write_stats(out, &stats, &dataset, fmt).map(|_| stats.clone())
        }),
        Err(Error::EmptyResult(_)) => p.section("stats", |out, _| {
            let columns = dataset
                .columns
                .iter()
                .map(|(n, v)| moments::summarize(v).map(|s| (n.clone(), s)))
                .collect::<Result<Vec<_>>>()?;
            let cols: Vec<(&str, &MomentSummary)> =
                columns.iter().map(|(n, s)| (n.as_str(), s)).collect();
            let text = format!(
                "source: {}\ngroups: {}  rows: {}  (S, K) points: 0 ({INSUFFICIENT})\n\n{}",
                dataset.source,
                dataset.data.group_count(),
                dataset.data.row_count(),
                report::summary_table(&cols)
            );
            out.write("summary.txt", &text)?;
            Ok(StatsOutput {
                columns,
                s_summary: None,
                k_summary: None,
                sk_points: Vec::new(),
                skipped: Vec::new(),
                hist_s: Vec::new(),
                hist_k: Vec::new(),
            })
        }),
        Err(e) => p.section("stats", |_, _| Err::<StatsOutput, _>(e)),
    };
    let points: Vec<SKPoint> = stats
        .as_ref()
        .map(|s| s.sk_points.clone())
        .unwrap_or_default();
    let have_points = !points.is_empty();

    let ks_quadratic = if have_points {
        p.section("ks_quadratic", |out, fmt| {
            let fit = ksfit::fit_quadratic(&points)?;
            write_ks_fit(out, "ks_quadratic", &fit, fmt)?;
            Ok(fit)
        })
    } else {
        p.skip("ks_quadratic", INSUFFICIENT);
        None
    };
    let ks_power = if have_points {
        p.section("ks_power", |out, fmt| {
            let fit = ksfit::fit_power_with(&points, settings.power_options())?;
            write_ks_fit(out, "ks_power", &fit, fmt)?;
            Ok(fit)
        })
    } else {
        p.skip("ks_power", INSUFFICIENT);
        None
    };

    let mut rank_fits = Vec::new();
    for (name, target) in [("rank_s", Target::S), ("rank_k", Target::K)] {
        let fit = if have_points {
            let values: Vec<f64> = points
                .iter()
                .map(|pt| if target == Target::S { pt.s } else { pt.k })
                .collect();
            p.section(name, |out, fmt| {
                let series = ranksize::rank_ascending(&values)?;
                let fit = ranksize::fit_rank_model_with(
                    &series,
                    settings.rank_model,
                    settings.rank_options(),
                )?;
                write_rank_fit(out, name, &values, &fit, fmt)?;
                Ok(fit)
            })
        } else {
            p.skip(name, INSUFFICIENT);
            None
        };
        rank_fits.push(fit);
    }
    let rank_k = rank_fits.pop().flatten();
    let rank_s = rank_fits.pop().flatten();

    let beta_ks = match &ks_quadratic {
        Some(fit) => p.section("beta_ks", |out, fmt| {
            let cal = ks_route_calibration(&points, fit)?;
            write_beta(
                out,
                "beta_ks",
                "ks-quadratic",
                &cal.selected,
                Some(&cal),
                fmt,
            )?;
            Ok(cal)
        }),
        None => {
            p.skip(
                "beta_ks",
                &dependency_reason(have_points, "quadratic K-S fit"),
            );
            None
        }
    };
    let mut beta_rank = Vec::new();
    for (name, fit) in [("beta_rank_s", &rank_s), ("beta_rank_k", &rank_k)] {
        let params = match fit {
            Some(fit) if fit.spec.variant() == RankVariant::Lav4 => p.section(name, |out, fmt| {
                let params = ranksize::rank_fit_to_beta(fit)?;
                write_beta(out, name, "lav4", &params, None, fmt)?;
                Ok(params)
            }),
            Some(fit) => {
                p.skip(
                    name,
                    &format!(
                        "rank model {} has no Beta correspondence",
                        fit.spec.variant()
                    ),
                );
                None
            }
            None => {
                p.skip(name, &dependency_reason(have_points, "rank fit"));
                None
            }
        };
        beta_rank.push(params);
    }
    let beta_rank_k = beta_rank.pop().flatten();
    let beta_rank_s = beta_rank.pop().flatten();

    let simulation = if settings.simulate {
        p.section("simulation", |out, fmt| {
            let config = settings.urn_config()?;
            let (result, output) = simulate(&config, settings.sim_k_min)?;
            write_simulation(out, &result, &output, fmt)?;
            Ok(output)
        })
    } else {
        p.skip("simulation", "not requested");
        None
    };

    let report = PipelineReport {
        sections: p.sections.clone(),
        stats,
        ks_quadratic,
        ks_power,
        rank_s,
        rank_k,
        beta_ks,
        beta_rank_s,
        beta_rank_k,
        simulation,
    };
    if settings.format == Format::Json {
        p.out.write_json("report.json", &report)?;
    }
    let exit = report
        .sections
        .iter()
        .find_map(|(_, s)| match s {
            SectionStatus::Failed { exit_code, .. } => Some(*exit_code),
            _ => None,
        })
        .unwrap_or(0);
    let manifest = manifest_text(&settings, &dataset, &report.sections, &p.out.written, exit);
    p.out.write("manifest.txt", &manifest)?;
    println!(
        "pipeline {}: {} files in {}",
        if exit == 0 { "ok" } else { "failed" },
        p.out.written.len(),
        settings.out_dir.display()
    );
    Ok(exit)
}

fn manifest_text(
    settings: &Settings,
    dataset: &Dataset,
    sections: &[(String, SectionStatus)],
    files: &[String],
    exit: i32,
) -> String {
    let mut m = String::new();
    let mut kv = |k: &str, v: &str| m.push_str(&format!("{k} = {v}\n"));
    kv(
        "tool",
        concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
    );
    kv("input", &dataset.source);
    kv("seed", &settings.seed.to_string());
    kv("min_n", &settings.min_n.to_string());
    kv("bins", &settings.bins.to_string());
    kv("format", &format!("{:?}", settings.format).to_lowercase());
    kv(
        "moment_convention",
        "population central moments (divide by n); kurtosis non-excess",
    );
    kv(
        "ks_fit_space",
        "K on S in raw space; nu profiled on the bracket then refined",
    );
    kv(
        "nu_bracket",
        &format!(
            "[{}, {}]",
            report::num(settings.nu_min),
            report::num(settings.nu_max)
        ),
    );
    kv("rank_order", "ascending (rank 1 = smallest)");
    kv("rank_model", &settings.rank_model.to_string());
    kv(
        "rank_fit_space",
        "raw values; log-space least squares as initializer",
    );
    kv(
        "psi4_bracket",
        &format!("(0, {}]", report::num(settings.psi_max)),
    );
    kv(
        "beta_ks_route",
        "calibrate at mean S with K from the quadratic K-S fit",
    );
    kv("beta_rank_route", "a = xi4 + 1, b = gamma4 + 1");
    if settings.simulate {
        kv(
            "urn_rule",
            "new urn with probability alpha, else attach proportional to k + a_shift",
        );
        kv("urn_rng", "ChaCha8 seeded from the 64-bit seed");
    }
    m.push_str("\n[sections]\n");
    for (name, status) in sections {
        let line = match status {
            SectionStatus::Ok { files } => format!("ok: {}", files.join(", ")),
            SectionStatus::Skipped { reason } => format!("skipped: {reason}"),
            SectionStatus::Failed { error, exit_code } => {
                format!("failed (exit {exit_code}): {error}")
            }
        };
        m.push_str(&format!("{name} = {line}\n"));
    }
    m.push_str("\n[files]\n");
    for f in files {
        m.push_str(&format!("{f}\n"));
    }
    m.push_str("manifest.txt\n");
    m.push_str(&format!(
        "\nstatus = {}\n",
        if exit == 0 { "ok" } else { "failed" }
    ));
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names() {
        assert_eq!(parse_model("quadratic").unwrap(), None);
        assert_eq!(parse_model("power").unwrap(), None);
        assert_eq!(parse_model("rank:lav4").unwrap(), Some(RankVariant::Lav4));
        assert!(parse_model("cubic").is_err());
        assert!(parse_model("rank:foo").is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("min_n = 5\nseed = 3\n").is_ok());
        assert!(toml::from_str::<FileConfig>("minimum = 5\n").is_err());
    }

    #[test]
    fn defaults() {
        let common = CommonArgs {
            config: None,
            out_dir: None,
            format: None,
            seed: None,
        };
        let s = Settings::resolve(&common, None).unwrap();
        assert_eq!(s.min_n, 4);
        assert_eq!((s.nu_min, s.nu_max, s.psi_max), (0.5, 4.0, 2.0));
        assert_eq!(s.rank_model, RankVariant::Lav4);
        assert_eq!(s.format, Format::Csv);
    }
}
