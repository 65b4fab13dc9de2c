//! WebAssembly bindings for the browser demo. Every entry point takes the
//! price panel as CSV text and returns JSON for the page to plot.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use statarb_core::backtest::{self, BacktestConfig, Metrics, SpreadSource};
use statarb_core::ccp::{self, Band, BandKind, FinderConfig, StatArb};
use statarb_core::market_data::{generate_synthetic, read_prices, PriceMatrix, SyntheticConfig};

fn parse_prices(csv: &str) -> Result<PriceMatrix, String> {
    read_prices(csv.as_bytes()).map_err(|e| e.to_string())
}

fn band_kind(band: &str, memory: usize) -> Result<BandKind, String> {
    match band {
        "fixed" => Ok(BandKind::Fixed),
        "moving" => Ok(BandKind::Moving { memory }),
        other => Err(format!("unknown band `{other}`, expected fixed or moving")),
    }
}

/// Synthetic cointegrated universe as prices CSV.
pub fn simulate_csv(
    n_assets: usize,
    n_days: usize,
    n_trends: usize,
    spread_volatility: f64,
    seed: u64,
) -> Result<String, String> {
    let cfg = SyntheticConfig {
        n_assets,
        n_days,
        n_common_trends: n_trends,
        spread_volatility,
        seed,
        ..SyntheticConfig::default()
    };
    let pm = generate_synthetic(&cfg).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    pm.write_csv(&mut buf).map_err(|e| e.to_string())?;
    String::from_utf8(buf).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BandSeries {
    dates: Vec<String>,
    price: Vec<f64>,
    midpoint: Vec<f64>,
}

#[derive(Serialize)]
struct FindReply {
    stat_arbs: Vec<StatArb>,
    series: Vec<BandSeries>,
}

/// Portfolio price and band midpoint over the stat-arb's training rows.
fn band_series(pm: &PriceMatrix, sa: &StatArb) -> Result<BandSeries, String> {
    let p = sa.portfolio_prices(pm).map_err(|e| e.to_string())?;
    let lo = pm
        .date_index(&sa.train_start)
        .ok_or("training start not in panel")?;
    let hi = pm
        .date_index(&sa.train_end)
        .ok_or("training end not in panel")?;
    let midpoint = (lo..=hi)
        .map(|t| match sa.band {
            Band::Fixed { mu } => mu,
            Band::Moving { memory } => {
                let from = (t + 1).saturating_sub(memory);
                p[from..=t].iter().sum::<f64>() / (t + 1 - from) as f64
            }
        })
        .collect();
    Ok(BandSeries {
        dates: pm.dates()[lo..=hi].to_vec(),
        price: p[lo..=hi].to_vec(),
        midpoint,
    })
}

/// Searches the first `train_days` rows and returns the stat-arbs together
/// with their in-sample band plots.
pub fn find_json(
    prices_csv: &str,
    band: &str,
    leverage: f64,
    memory: usize,
    inits: usize,
    seed: u64,
    train_days: usize,
) -> Result<String, String> {
    let pm = parse_prices(prices_csv)?;
    if train_days > pm.n_days() {
        return Err(format!(
            "training window of {train_days} days exceeds the {} days in the panel",
            pm.n_days()
        ));
    }
    let cfg = FinderConfig {
        n_initializations: inits,
        seed,
        band: band_kind(band, memory)?,
        ..FinderConfig::fixed(leverage)
    };
    let out = ccp::find_stat_arbs_in(&pm, 0..train_days, &cfg).map_err(|e| e.to_string())?;
    let series = out
        .stat_arbs
        .iter()
        .map(|sa| band_series(&pm, sa))
        .collect::<Result<_, _>>()?;
    serde_json::to_string(&FindReply {
        stat_arbs: out.stat_arbs,
        series,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BacktestReply {
    dates: Vec<String>,
    nav: Vec<f64>,
    q: Vec<f64>,
    price: Vec<f64>,
    midpoint: Vec<f64>,
    initial_cash: f64,
    terminated_early: Option<String>,
    metrics: Metrics,
}

/// Trades one stat-arb (JSON as returned by [`find_json`]) from the day
/// after its training window.
#[allow(clippy::too_many_arguments)]
pub fn backtest_json(
    prices_csv: &str,
    stat_arb_json: &str,
    t_max: usize,
    t_exit: usize,
    nu: f64,
    spread: f64,
    shorting_rate: f64,
    nav_floor: f64,
) -> Result<String, String> {
    let pm = parse_prices(prices_csv)?;
    let sa: StatArb = serde_json::from_str(stat_arb_json).map_err(|e| e.to_string())?;
    let mut cfg = BacktestConfig::for_band(sa.band.kind());
    cfg.t_max = t_max;
    cfg.t_exit = t_exit;
    cfg.nu = nu;
    cfg.spread = SpreadSource::Relative(spread);
    cfg.shorting_rate = shorting_rate;
    cfg.nav_floor_fraction = nav_floor;
    let first = pm
        .date_index(&sa.train_end)
        .ok_or("training end not in panel")?
        + 1;
    let end = first + cfg.eval_len();
    if end > pm.n_days() {
        return Err(format!(
            "trading {} days after {} runs past the end of the panel",
            cfg.eval_len(),
            sa.train_end
        ));
    }
    let history = pm.slice_rows(0, end).map_err(|e| e.to_string())?;
    let res = backtest::run(&sa, &history, &cfg).map_err(|e| e.to_string())?;
    let metrics =
        backtest::compute_metrics(&res, cfg.trading_days_per_year).map_err(|e| e.to_string())?;
    serde_json::to_string(&BacktestReply {
        dates: res.dates,
        nav: res.nav,
        q: res.q,
        price: res.p,
        midpoint: res.midpoint,
        initial_cash: res.initial_cash,
        terminated_early: res.terminated_early,
        metrics,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(
    n_assets: usize,
    n_days: usize,
    n_trends: usize,
    spread_volatility: f64,
    seed: u32,
) -> Result<String, JsError> {
    simulate_csv(n_assets, n_days, n_trends, spread_volatility, seed.into())
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = findStatArbs)]
pub fn find_js(
    prices_csv: &str,
    band: &str,
    leverage: f64,
    memory: usize,
    inits: usize,
    seed: u32,
    train_days: usize,
) -> Result<String, JsError> {
    find_json(
        prices_csv,
        band,
        leverage,
        memory,
        inits,
        seed.into(),
        train_days,
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = backtest)]
#[allow(clippy::too_many_arguments)]
pub fn backtest_js(
    prices_csv: &str,
    stat_arb_json: &str,
    t_max: usize,
    t_exit: usize,
    nu: f64,
    spread: f64,
    shorting_rate: f64,
    nav_floor: f64,
) -> Result<String, JsError> {
    backtest_json(
        prices_csv,
        stat_arb_json,
        t_max,
        t_exit,
        nu,
        spread,
        shorting_rate,
        nav_floor,
    )
    .map_err(|e| JsError::new(&e))
}
