//! Argument parsing and subcommands for the `statarb` binary.

use std::ffi::OsString;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use statarb_core::backtest::{self, BacktestConfig, SpreadSource};
use statarb_core::ccp::{self, BandKind, FinderConfig, StatArb};
use statarb_core::market_data::{
    generate_synthetic, load_prices, load_spreads, PriceMatrix, SyntheticConfig,
};
use statarb_core::roll::{self, RollConfig};

#[derive(Debug, Parser)]
#[command(
    name = "statarb",
    version,
    about = "Find and backtest statistical arbitrage portfolios"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON file whose keys mirror flag names; explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic cointegrated price panel.
    Simulate(SimulateArgs),
    /// Search a training window for stat-arbs.
    Find(FindArgs),
    /// Trade stat-arbs out of sample and report metrics.
    Backtest(BacktestArgs),
    /// Re-search every `stride` days and trade what is new.
    Roll(RollArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub assets: u64,
    #[arg(long, default_value_t = 500)]
    pub days: usize,
    #[arg(long, default_value_t = 2)]
    pub trends: usize,
    #[arg(long, default_value_t = 0.02)]
    pub spread_vol: f64,
    #[arg(long, default_value_t = 0.01)]
    pub trend_vol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub reversion: f64,
    #[arg(long, default_value_t = 50.0)]
    pub base_price: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandArg {
    Fixed,
    Moving,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, value_enum, default_value_t = BandArg::Fixed)]
    pub band: BandArg,
    /// Leverage limit in scaled units [default: 50 fixed, 100 moving].
    #[arg(long)]
    pub leverage: Option<f64>,
    #[arg(long, default_value_t = 21)]
    pub memory: usize,
    #[arg(long, default_value_t = 10)]
    pub inits: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

impl SearchArgs {
    pub fn finder_config(&self) -> FinderConfig {
        let (band, default_leverage) = match self.band {
            BandArg::Fixed => (BandKind::Fixed, 50.0),
            BandArg::Moving => (
                BandKind::Moving {
                    memory: self.memory,
                },
                100.0,
            ),
        };
        FinderConfig {
            leverage_limit: self.leverage.unwrap_or(default_leverage),
            band,
            max_iterations: self.max_iter,
            objective_tolerance: self.tol,
            cleanup_threshold: self.eta,
            n_initializations: self.inits,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct FindArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// First training date (inclusive) [default: first date].
    #[arg(long)]
    pub train_start: Option<String>,
    /// Last training date (inclusive) [default: last date].
    #[arg(long)]
    pub train_end: Option<String>,
    /// Output JSON [default: standard output].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TradeArgs {
    /// Trading days before the exit ramp [default: 63 fixed, 125 moving].
    #[arg(long)]
    pub tmax: Option<usize>,
    #[arg(long, default_value_t = 21)]
    pub texit: usize,
    #[arg(long, default_value_t = 0.5)]
    pub nu: f64,
    #[arg(long, default_value_t = 0.005)]
    pub shorting_rate: f64,
    /// Full bid-ask spread as a fraction of price.
    #[arg(long, default_value_t = 0.001)]
    pub spread: f64,
    /// CSV of full bid-ask spreads in USD; overrides --spread.
    #[arg(long)]
    pub spreads: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub nav_floor: f64,
}

impl TradeArgs {
    pub fn backtest_config(&self, band: BandKind) -> Result<BacktestConfig> {
        let mut cfg = BacktestConfig::for_band(band);
        if let Some(t) = self.tmax {
            cfg.t_max = t;
        }
        cfg.t_exit = self.texit;
        cfg.nu = self.nu;
        cfg.shorting_rate = self.shorting_rate;
        cfg.nav_floor_fraction = self.nav_floor;
        cfg.spread = match &self.spreads {
            Some(path) => SpreadSource::Panel(
                load_spreads(path).with_context(|| format!("reading {}", path.display()))?,
            ),
            None => SpreadSource::Relative(self.spread),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long)]
    pub statarbs: PathBuf,
    #[command(flatten)]
    pub trade: TradeArgs,
    /// First trading date [default: the day after each training window].
    #[arg(long)]
    pub start: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RollArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub trade: TradeArgs,
    #[arg(long, default_value_t = 21, value_parser = clap::value_parser!(u64).range(1..))]
    pub stride: u64,
    #[arg(long, default_value_t = 500)]
    pub train_window: usize,
    /// First search date [default: after the first training window].
    #[arg(long)]
    pub start: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Splices the flags of any `--config` file in after the subcommand name,
/// so that flags given on the command line take precedence.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
            i += 1;
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let json: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Value::Object(map) = json else {
        bail!("config {} must be a JSON object", path.display());
    };
    let mut flags = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => flags.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => {
                flags.push(flag.into());
                flags.push(n.to_string().into());
            }
            Value::String(s) => {
                flags.push(flag.into());
                flags.push(s.into());
            }
            other => bail!("config key `{key}` has unsupported value {other}"),
        }
    }
    let sub = args
        .iter()
        .position(|a| matches!(a.to_str(), Some("simulate" | "find" | "backtest" | "roll")))
        .ok_or_else(|| anyhow!("--config given without a subcommand"))?;
    let mut out = args[..=sub].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Find(a) => cmd_find(&a),
        Command::Backtest(a) => cmd_backtest(&a),
        Command::Roll(a) => cmd_roll(&a),
    }
}

fn load(path: &Path) -> Result<PriceMatrix> {
    load_prices(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// Rows whose dates fall in `[start, end]`.
pub fn date_rows(pm: &PriceMatrix, start: Option<&str>, end: Option<&str>) -> Result<Range<usize>> {
    let dates = pm.dates();
    let lo = start.map_or(0, |s| dates.partition_point(|d| d.as_str() < s));
    let hi = end.map_or(dates.len(), |e| dates.partition_point(|d| d.as_str() <= e));
    if lo >= hi {
        bail!(
            "no price rows between {} and {}",
            start.unwrap_or("the first date"),
            end.unwrap_or("the last date")
        );
    }
    Ok(lo..hi)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        n_assets: a.assets as usize,
        n_days: a.days,
        n_common_trends: a.trends,
        spread_volatility: a.spread_vol,
        trend_volatility: a.trend_vol,
        mean_reversion_rate: a.reversion,
        base_price: a.base_price,
        seed: a.seed,
    };
    let pm = generate_synthetic(&cfg)?;
    pm.save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

pub fn find_json(pm: &PriceMatrix, a: &FindArgs) -> Result<(String, Vec<String>)> {
    let rows = date_rows(pm, a.train_start.as_deref(), a.train_end.as_deref())?;
    let cfg = a.search.finder_config();
    let out = ccp::find_stat_arbs_in(pm, rows, &cfg)?;
    let mut text = serde_json::to_string_pretty(&out.stat_arbs)?;
    text.push('\n');
    Ok((text, out.warnings))
}

pub fn cmd_find(a: &FindArgs) -> Result<()> {
    let pm = load(&a.prices)?;
    let (text, warnings) = find_json(&pm, a)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    match &a.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_backtest(a: &BacktestArgs) -> Result<()> {
    let pm = load(&a.prices)?;
    let text = fs::read_to_string(&a.statarbs)
        .with_context(|| format!("reading {}", a.statarbs.display()))?;
    let stat_arbs: Vec<StatArb> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.statarbs.display()))?;

    let mut reports = Vec::with_capacity(stat_arbs.len());
    for (i, sa) in stat_arbs.iter().enumerate() {
        let cfg = a.trade.backtest_config(sa.band.kind())?;
        let first = match &a.start {
            Some(d) => pm.dates().partition_point(|x| x < d),
            None => pm
                .dates()
                .partition_point(|x| x.as_str() <= sa.train_end.as_str()),
        };
        let end = first + cfg.eval_len();
        if end > pm.n_days() {
            bail!(
                "stat-arb {i}: evaluation window of {} days from row {first} extends past the panel end ({} rows)",
                cfg.eval_len(),
                pm.n_days()
            );
        }
        let history = pm.slice_rows(0, end)?;
        let res = backtest::run(sa, &history, &cfg).with_context(|| format!("stat-arb {i}"))?;
        let metrics = backtest::compute_metrics(&res, cfg.trading_days_per_year)?;
        reports.push((res, metrics));
    }

    create_dir(&a.out)?;
    for (i, (res, metrics)) in reports.iter().enumerate() {
        let path = a.out.join(format!("report_{i}.csv"));
        let file =
            fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        res.write_csv(std::io::BufWriter::new(file))?;
        write_json(&a.out.join(format!("metrics_{i}.json")), metrics)?;
    }
    let all: Vec<_> = reports.into_iter().map(|(_, m)| m).collect();
    write_json(&a.out.join("summary.json"), &backtest::summarize(&all))
}

pub fn roll_config(pm: &PriceMatrix, a: &RollArgs) -> Result<RollConfig> {
    let finder = a.search.finder_config();
    let bt = a.trade.backtest_config(finder.band)?;
    let first_search = a
        .start
        .as_ref()
        .map(|d| pm.dates().partition_point(|x| x < d));
    Ok(RollConfig {
        finder,
        backtest: bt,
        train_window: a.train_window,
        stride: a.stride as usize,
        first_search,
    })
}

pub fn cmd_roll(a: &RollArgs) -> Result<()> {
    let pm = load(&a.prices)?;
    let cfg = roll_config(&pm, a)?;
    let out = roll::roll(&pm, &cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    create_dir(&a.out)?;
    write_json(&a.out.join("statarbs.json"), &out.stat_arbs())?;
    write_json(&a.out.join("metrics.json"), &out.metrics_records())?;
    write_json(&a.out.join("summary.json"), &out.summary())?;
    let path = a.out.join("active.csv");
    let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    out.write_active_csv(std::io::BufWriter::new(file))?;
    Ok(())
}
