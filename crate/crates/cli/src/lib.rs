//! Batch front end: run configuration, subcommands and CSV writers.
//!
//! A run is described by a TOML file (see [`RunConfig`]) and overridden by
//! command-line flags. Every output is a `\n`-terminated UTF-8 CSV (plus a
//! markdown copy of the metric tables) written into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use turnover_core::alpha::{evaluate_alpha, resolve_alpha, PositionPanel};
use turnover_core::estimators::{estimate_series, AlphaSet, EstimateOptions, EstimatorId, RollingStats, SpectralMatrix};
use turnover_core::experiments::{
    run_pairs_experiment, run_sobol_experiment, table_csv, table_markdown, ExperimentConfig, MetricsTable, Rho5Mode,
};
use turnover_core::market_data::{compute_returns, generate_synthetic, load_panel, write_panel_dir, OhlcvPanel, ReturnsPanel, SyntheticSpec};
use turnover_core::statistics::{alpha_pnl, correlation, StdConvention};
use turnover_core::theory::run_theory_checks;
use turnover_core::turnover::PortfolioWeights;

#[derive(Debug, Parser)]
#[command(name = "turnover", version, about = "Portfolio turnover under crossing of trades")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic OHLCV panel, one CSV per ticker.
    Synth(Common),
    /// Per-alpha PnL, Sharpe and turnover statistics plus return correlations.
    Stats(Common),
    /// Daily real turnover and estimates of one portfolio, and cumulative PnL.
    Series(Common),
    /// Metrics averaged over all equal-weight pairs.
    Pairs(Common),
    /// Metrics averaged over Sobol-weighted portfolios of all alphas.
    Sobol(Common),
    /// Numerical checks of the covariance-based turnover model.
    Theory(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Synth(c)
            | Command::Stats(c)
            | Command::Series(c)
            | Command::Pairs(c)
            | Command::Sobol(c)
            | Command::Theory(c) => c,
        }
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Market data: directory of per-ticker CSVs or a long-format CSV.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Rolling window in days.
    #[arg(long, value_name = "N")]
    pub window: Option<usize>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for portfolio evaluation.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

/// Contents of the `--config` file. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub window: Option<usize>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Builtin names (`paper1`..`paper4`), expressions, or `name = expression`.
    pub alphas: Option<Vec<String>>,
    /// First and last day of the test period, ISO dates.
    pub start: Option<String>,
    pub end: Option<String>,
    /// Portfolio weights for `series`; equal weights when absent.
    pub weights: Option<Vec<f64>>,
    /// Rows kept in metric tables; all when absent.
    pub estimators: Option<Vec<String>>,
    pub sobol_count: Option<usize>,
    pub std_convention: Option<String>,
    pub rho5: Option<String>,
    pub spectral_matrix: Option<String>,
    pub data: Option<DataConfig>,
    pub theory: Option<TheoryConfig>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub dir: Option<PathBuf>,
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub days: Option<usize>,
    pub assets: Option<usize>,
    pub drift: Option<f64>,
    pub volatility: Option<f64>,
    pub market_share: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub draws: Option<usize>,
    pub dimension: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

pub enum DataSource {
    Dir(PathBuf),
    Synthetic { days: usize, assets: usize, spec: SyntheticSpec },
}

/// Fully resolved run settings: config values with flags applied on top.
pub struct Settings {
    pub seed: u64,
    pub window: usize,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub alphas: Vec<String>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub weights: Option<Vec<f64>>,
    pub estimators: Option<Vec<EstimatorId>>,
    pub sobol_count: usize,
    pub std_convention: StdConvention,
    pub rho5: Rho5Mode,
    pub spectral: SpectralMatrix,
    pub data: DataSource,
    pub theory_draws: usize,
    pub theory_dimension: usize,
}

fn parse_date(key: &str, text: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d").with_context(|| format!("config key `{key}`: bad date `{text}`"))
}

fn named<T>(key: &str, value: Option<String>, default: T, parse: fn(&str) -> Option<T>) -> Result<T> {
    match value {
        None => Ok(default),
        Some(v) => parse(&v).with_context(|| format!("config key `{key}`: unknown value `{v}`")),
    }
}

impl Settings {
    pub fn resolve(cfg: RunConfig, flags: &Common) -> Result<Self> {
        let data_cfg = cfg.data.unwrap_or_default();
        let data = match (&flags.data, data_cfg.dir, data_cfg.synthetic) {
            (Some(dir), _, _) => DataSource::Dir(dir.clone()),
            (None, Some(dir), None) => DataSource::Dir(dir),
            (None, Some(_), Some(_)) => bail!("config keys `data.dir` and `data.synthetic` are exclusive"),
            (None, None, syn) => {
                let syn = syn.unwrap_or_default();
                let base = SyntheticSpec::default();
                DataSource::Synthetic {
                    days: syn.days.unwrap_or(1600),
                    assets: syn.assets.unwrap_or(100),
                    spec: SyntheticSpec {
                        drift: syn.drift.unwrap_or(base.drift),
                        volatility: syn.volatility.unwrap_or(base.volatility),
                        market_share: syn.market_share.unwrap_or(base.market_share),
                        ..base
                    },
                }
            }
        };
        let window = flags.window.or(cfg.window).unwrap_or(250);
        ensure!(window >= 2, "config key `window` must be >= 2, got {window}");
        let jobs = flags.jobs.or(cfg.jobs);
        ensure!(jobs != Some(0), "config key `jobs` must be positive");
        let estimators = cfg
            .estimators
            .map(|names| {
                names
                    .iter()
                    .map(|n| match n.as_str() {
                        "kl" => Ok(EstimatorId::KlPair),
                        other => EstimatorId::from_name(other)
                            .with_context(|| format!("config key `estimators`: unknown estimator `{other}`")),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let theory = cfg.theory.unwrap_or_default();
        let sobol_count = cfg.sobol_count.unwrap_or(100);
        ensure!(sobol_count > 0, "config key `sobol_count` must be positive");
        Ok(Self {
            seed: flags.seed.or(cfg.seed).unwrap_or(1),
            window,
            out: flags.out.clone().or(cfg.out).unwrap_or_else(|| PathBuf::from("out")),
            jobs,
            alphas: cfg
                .alphas
                .unwrap_or_else(|| ["paper1", "paper2", "paper3", "paper4"].map(String::from).to_vec()),
            start: cfg.start.as_deref().map(|s| parse_date("start", s)).transpose()?,
            end: cfg.end.as_deref().map(|s| parse_date("end", s)).transpose()?,
            weights: cfg.weights,
            estimators,
            sobol_count,
            std_convention: named("std_convention", cfg.std_convention, StdConvention::Paper, StdConvention::from_name)?,
            rho5: named("rho5", cfg.rho5, Rho5Mode::Mean, Rho5Mode::from_name)?,
            spectral: named("spectral_matrix", cfg.spectral_matrix, SpectralMatrix::Correlation, SpectralMatrix::from_name)?,
            data,
            theory_draws: theory.draws.unwrap_or(100_000),
            theory_dimension: theory.dimension.unwrap_or(4),
        })
    }

    fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            window: self.window,
            estimate: EstimateOptions {
                spectral: self.spectral,
                kappa: None,
            },
            rho5: self.rho5,
        }
    }
}

/// Market panel, evaluated alphas and the aligned alpha set.
pub struct Loaded {
    pub panel: OhlcvPanel,
    pub returns: ReturnsPanel,
    pub names: Vec<String>,
    pub positions: Vec<PositionPanel>,
    pub set: AlphaSet,
}

fn load_market(s: &Settings) -> Result<OhlcvPanel> {
    match &s.data {
        DataSource::Dir(dir) => load_panel(dir, None).with_context(|| format!("loading market data from {}", dir.display())),
        DataSource::Synthetic { days, assets, spec } => {
            generate_synthetic(s.seed, *days, *assets, spec).context("generating synthetic market (config `data.synthetic`)")
        }
    }
}

fn split_alpha(k: usize, entry: &str) -> Result<(String, String)> {
    let (name, expr) = match entry.split_once('=') {
        Some((n, e)) => (n.trim().to_string(), e.trim().to_string()),
        None if resolve_alpha(entry).is_ok() && !entry.contains(|c: char| !c.is_ascii_alphanumeric()) => {
            (entry.trim().to_string(), entry.trim().to_string())
        }
        None => (format!("alpha{}", k + 1), entry.trim().to_string()),
    };
    ensure!(
        !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'),
        "config key `alphas[{k}]`: name `{name}` must be alphanumeric"
    );
    Ok((name, expr))
}

fn day_span(panel: &OhlcvPanel, s: &Settings) -> Result<std::ops::Range<usize>> {
    let dates = panel.dates();
    let (first, last) = (dates[0], dates[dates.len() - 1]);
    for (key, d) in [("start", s.start), ("end", s.end)] {
        if let Some(d) = d {
            ensure!(d >= first && d <= last, "config key `{key}`: {d} outside data range {first}..{last}");
        }
    }
    let lo = s.start.map_or(0, |d| dates.partition_point(|x| *x < d));
    let hi = s.end.map_or(dates.len(), |d| dates.partition_point(|x| *x <= d));
    ensure!(lo < hi, "config keys `start`/`end`: empty test period");
    Ok(lo..hi)
}

pub fn load(s: &Settings, min_alphas: usize) -> Result<Loaded> {
    ensure!(
        s.alphas.len() >= min_alphas,
        "config key `alphas`: need at least {min_alphas}, got {}",
        s.alphas.len()
    );
    let panel = load_market(s)?;
    let returns = compute_returns(&panel).context("computing returns")?;
    let mut names = Vec::new();
    let mut positions = Vec::new();
    for (k, entry) in s.alphas.iter().enumerate() {
        let (name, expr) = split_alpha(k, entry)?;
        ensure!(!names.contains(&name), "config key `alphas[{k}]`: duplicate name `{name}`");
        let alpha = resolve_alpha(&expr).with_context(|| format!("config key `alphas[{k}]`: `{expr}`"))?;
        positions.push(evaluate_alpha(&alpha, &panel).with_context(|| format!("evaluating alpha `{name}`"))?);
        names.push(name);
    }
    let span = day_span(&panel, s)?;
    let set = AlphaSet::new(names.clone(), &positions, &returns, Some(span)).context("aligning alphas")?;
    Ok(Loaded {
        panel,
        returns,
        names,
        positions,
        set,
    })
}

/// Shortest round-trip rendering; empty for undefined values.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn stats_csv(loaded: &Loaded, conv: StdConvention) -> Result<String> {
    let mut out = String::from("alpha,cumPnL,sharpe,T,stdPnL,T_over_std\n");
    for (name, st) in loaded.names.iter().zip(loaded.set.stats(conv)?) {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{}",
            num(st.cum_pnl),
            opt(st.sharpe),
            num(st.mean_turnover),
            num(st.std_pnl),
            opt(st.ratio)
        );
    }
    Ok(out)
}

pub fn correlations_csv(loaded: &Loaded) -> String {
    let corr = correlation(loaded.set.full_covariance()).matrix;
    let mut out = format!("alpha,{}\n", loaded.names.join(","));
    for (i, name) in loaded.names.iter().enumerate() {
        let row: Vec<String> = corr.row(i).iter().map(|&v| num(v)).collect();
        let _ = writeln!(out, "{name},{}", row.join(","));
    }
    out
}

pub fn series_csvs(loaded: &Loaded, s: &Settings) -> Result<(String, String)> {
    let n = loaded.set.len();
    ensure!(n >= 2, "config key `alphas`: series needs at least 2, got {n}");
    let weights = match &s.weights {
        Some(w) => {
            ensure!(w.len() == n, "config key `weights`: {} weights for {n} alphas", w.len());
            PortfolioWeights::new(w.clone()).context("config key `weights`")?
        }
        None => PortfolioWeights::equal(n)?,
    };
    let rolling = RollingStats::new(&loaded.set, s.window).context("rolling window (config key `window`)")?;
    let idx: Vec<usize> = (0..n).collect();
    let est = estimate_series(&loaded.set, &rolling, &idx, weights.as_slice(), &s.experiment().estimate)?;
    let dates = loaded.panel.dates();
    let mut series = String::from("date,real,kl,t1,t2,t3,t4,tmax\n");
    for j in 0..est.len() {
        let row = [est.real[j], est.kl[j], est.t1[j], est.t2[j], est.t3[j], est.t4[j], est.tmax[j]].map(num);
        let _ = writeln!(series, "{},{}", dates[est.days[j]], row.join(","));
    }
    let mut cum = String::from("date,alpha,pnl,cum_pnl\n");
    let set_days = loaded.set.days();
    for (name, panel) in loaded.names.iter().zip(&loaded.positions) {
        let pnl = alpha_pnl(panel, &loaded.returns)?;
        let mut acc = 0.0;
        for (&d, &v) in pnl.days.iter().zip(&pnl.pnl) {
            if set_days.binary_search(&d).is_err() {
                continue;
            }
            acc += v;
            let _ = writeln!(cum, "{},{name},{},{}", dates[d], num(v), num(acc));
        }
    }
    Ok((series, cum))
}

fn filter_rows(mut table: MetricsTable, keep: &Option<Vec<EstimatorId>>) -> MetricsTable {
    if let Some(keep) = keep {
        let is_kl = |id: EstimatorId| matches!(id, EstimatorId::KlPair | EstimatorId::KlSpectral);
        table
            .rows
            .retain(|r| keep.iter().any(|&k| k == r.estimator || (is_kl(k) && is_kl(r.estimator))));
    }
    table
}

pub fn theory_csv(s: &Settings) -> Result<String> {
    let checks = run_theory_checks(s.seed, s.theory_draws, s.theory_dimension)?;
    let mut out = String::from("check,measured,expected,tolerance,pass\n");
    for c in checks {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.name,
            num(c.measured),
            num(c.expected),
            num(c.tolerance),
            c.pass()
        );
    }
    Ok(out)
}

fn run_command(command: &Command, s: &Settings) -> Result<Vec<PathBuf>> {
    let out = &s.out;
    let mut written = Vec::new();
    match command {
        Command::Synth(_) => {
            let panel = load_market(s)?;
            write_panel_dir(&panel, out).with_context(|| format!("writing panel to {}", out.display()))?;
            written.push(out.clone());
        }
        Command::Stats(_) => {
            let loaded = load(s, 1)?;
            written.push(write_file(out, "stats.csv", &stats_csv(&loaded, s.std_convention)?)?);
            written.push(write_file(out, "correlations.csv", &correlations_csv(&loaded))?);
        }
        Command::Series(_) => {
            let loaded = load(s, 2)?;
            let (series, cum) = series_csvs(&loaded, s)?;
            written.push(write_file(out, "series.csv", &series)?);
            written.push(write_file(out, "cumulative_pnl.csv", &cum)?);
        }
        Command::Pairs(_) | Command::Sobol(_) => {
            let loaded = load(s, 2)?;
            let cfg = s.experiment();
            let (stem, title, table) = if matches!(command, Command::Pairs(_)) {
                ("pairs", "Averaged over all alpha pairs".to_string(), run_pairs_experiment(&loaded.set, &cfg)?)
            } else {
                (
                    "sobol",
                    format!("Averaged over {} Sobol portfolios", s.sobol_count),
                    run_sobol_experiment(&loaded.set, s.sobol_count, &cfg)?,
                )
            };
            for (label, why) in &table.excluded {
                eprintln!("warning: portfolio {label} excluded: {why}");
            }
            let table = filter_rows(table, &s.estimators);
            written.push(write_file(out, &format!("{stem}.csv"), &table_csv(&table))?);
            written.push(write_file(out, &format!("{stem}.md"), &table_markdown(&table, &title))?);
        }
        Command::Theory(_) => {
            written.push(write_file(out, "theory.csv", &theory_csv(s)?)?);
        }
    }
    Ok(written)
}

/// Resolves settings and executes the command, returning written paths.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let flags = cli.command.common();
    let cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let settings = Settings::resolve(cfg, flags)?;
    match settings.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .context("building worker pool (flag `--jobs`)")?
            .install(|| run_command(&cli.command, &settings)),
        None => run_command(&cli.command, &settings),
    }
}
