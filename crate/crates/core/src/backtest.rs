//! Cost-aware simulation of one stat-arb with a cash account, NAV-floor
//! liquidation and the usual return/risk/drawdown metrics.

use std::io::Write;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::ccp::{Band, BandKind, StatArb};
use crate::market_data::{PriceMatrix, SpreadMatrix};
use crate::trading::{PolicyState, TradingError};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("invalid backtest config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("NAV {nav} is not positive before {date} (day {day}); cannot form a return")]
    Bust { day: usize, date: String, nav: f64 },
    #[error(transparent)]
    Trading(#[from] TradingError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BacktestError>;

#[derive(Debug, Clone, PartialEq)]
pub enum SpreadSource {
    /// Full bid-ask spread as a fraction of price.
    Relative(f64),
    /// Full bid-ask spreads in USD per share, by date and asset.
    Panel(SpreadMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    /// Initial cash as a multiple of `|s|ᵀP₀`.
    pub nu: f64,
    pub t_max: usize,
    pub t_exit: usize,
    /// Annual fee on the value of short positions.
    pub shorting_rate: f64,
    /// Liquidate once NAV falls below this fraction of the initial cash.
    pub nav_floor_fraction: f64,
    pub spread: SpreadSource,
    pub trading_days_per_year: f64,
}

impl BacktestConfig {
    /// Defaults for a band kind: 63 (fixed) or 125 (moving) trading days,
    /// 21 exit days, ν = 0.5, 0.5% shorting, 50% NAV floor, 10 bp spread.
    pub fn for_band(band: BandKind) -> Self {
        let t_max = match band {
            BandKind::Fixed => 63,
            BandKind::Moving { .. } => 125,
        };
        Self {
            nu: 0.5,
            t_max,
            t_exit: 21,
            shorting_rate: 0.005,
            nav_floor_fraction: 0.5,
            spread: SpreadSource::Relative(0.001),
            trading_days_per_year: 250.0,
        }
    }

    /// No spreads, no shorting fee, no NAV floor.
    pub fn frictionless(t_max: usize, t_exit: usize) -> Self {
        Self {
            nu: 0.5,
            t_max,
            t_exit,
            shorting_rate: 0.0,
            nav_floor_fraction: 0.0,
            spread: SpreadSource::Relative(0.0),
            trading_days_per_year: 250.0,
        }
    }

    pub fn eval_len(&self) -> usize {
        self.t_max + self.t_exit
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BacktestError::Config(m.to_string()));
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return bad("nu must be positive");
        }
        if self.t_exit == 0 {
            return bad("T_exit must be at least 1");
        }
        if !(self.shorting_rate >= 0.0) {
            return bad("shorting rate must be non-negative");
        }
        if !(0.0..1.0).contains(&self.nav_floor_fraction) {
            return bad("NAV floor fraction must lie in [0, 1)");
        }
        if let SpreadSource::Relative(f) = self.spread {
            if !(f >= 0.0) {
                return bad("relative spread must be non-negative");
            }
        }
        if !(self.trading_days_per_year > 0.0) {
            return bad("trading days per year must be positive");
        }
        Ok(())
    }
}

/// `ν · Σ |s_i| P₀ᵢ`.
pub fn init_cash(shares: &[f64], p0: &[f64], nu: f64) -> f64 {
    nu * shares.iter().zip(p0).map(|(s, p)| s.abs() * p).sum::<f64>()
}

/// Cost of executing `delta` at bid/ask instead of the midpoint:
/// `Σ |Δ_i| · half_spread_i`.
pub fn transaction_cost(delta: &[f64], _prices: &[f64], half_spreads: &[f64]) -> f64 {
    delta
        .iter()
        .zip(half_spreads)
        .map(|(d, h)| d.abs() * h)
        .sum()
}

/// One day's shorting fee on `holdings`.
pub fn holding_cost(
    holdings: &[f64],
    prices: &[f64],
    shorting_rate: f64,
    days_per_year: f64,
) -> f64 {
    let short_value: f64 = holdings
        .iter()
        .zip(prices)
        .map(|(h, p)| (-h).max(0.0) * p)
        .sum();
    shorting_rate / days_per_year * short_value
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub dates: Vec<String>,
    /// Multiplier of the share vector held at the end of each day.
    pub q: Vec<f64>,
    /// Portfolio price `sᵀP_t`.
    pub p: Vec<f64>,
    /// Band midpoint used by the policy.
    pub midpoint: Vec<f64>,
    pub cash: Vec<f64>,
    pub nav: Vec<f64>,
    /// Transaction plus holding cost charged on each day.
    pub cost: Vec<f64>,
    pub ret: Vec<f64>,
    pub initial_cash: f64,
    /// Price of the portfolio on the day before trading starts.
    pub initial_price: f64,
    /// Day on which NAV first fell below the floor.
    pub terminated_early: Option<String>,
}

impl BacktestResult {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn profit(&self) -> f64 {
        self.nav.last().copied().unwrap_or(self.initial_cash) - self.initial_cash
    }

    /// Report CSV: `date,q,p,cash,nav,cost,ret`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "date,q,p,cash,nav,cost,ret")?;
        for t in 0..self.len() {
            writeln!(
                w,
                "{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                self.dates[t],
                self.q[t],
                self.p[t],
                self.cash[t],
                self.nav[t],
                self.cost[t],
                self.ret[t]
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trades `sa` over the last `T_max + T_exit` rows of `pm`. Earlier rows are
/// history: the row just before the window gives `P₀`, and moving bands
/// read their `M − 1` warmup prices from the rows before the window.
pub fn run(sa: &StatArb, pm: &PriceMatrix, cfg: &BacktestConfig) -> Result<BacktestResult> {
    cfg.validate()?;
    let eval = cfg.eval_len();
    let history = sa.band.warmup_len().max(1);
    if pm.n_days() < eval + history {
        return Err(BacktestError::Input(format!(
            "need {history} history days plus {eval} evaluation days, panel has {}",
            pm.n_days()
        )));
    }
    let cols = sa
        .columns_in(pm)
        .map_err(|e| BacktestError::Input(e.to_string()))?;
    let s = &sa.shares;
    let start = pm.n_days() - eval;
    let asset_prices = |row: usize| -> Vec<f64> {
        let r = pm.row(row);
        cols.iter().map(|&c| r[c]).collect()
    };
    let p_all = sa
        .portfolio_prices(pm)
        .map_err(|e| BacktestError::Input(e.to_string()))?;

    let mut policy = match sa.band {
        Band::Fixed { mu } => PolicyState::fixed(mu, cfg.t_max, cfg.t_exit)?,
        Band::Moving { memory } => PolicyState::moving(
            memory,
            &p_all[start + 1 - memory..start],
            cfg.t_max,
            cfg.t_exit,
        )?,
    };

    let mut prev_prices = asset_prices(start - 1);
    let initial_cash = init_cash(s, &prev_prices, cfg.nu);
    let mut res = BacktestResult {
        dates: Vec::with_capacity(eval),
        q: Vec::with_capacity(eval),
        p: Vec::with_capacity(eval),
        midpoint: Vec::with_capacity(eval),
        cash: Vec::with_capacity(eval),
        nav: Vec::with_capacity(eval),
        cost: Vec::with_capacity(eval),
        ret: Vec::with_capacity(eval),
        initial_cash,
        initial_price: p_all[start - 1],
        terminated_early: None,
    };

    let mut q_prev = 0.0;
    let mut cash = initial_cash;
    let mut nav_prev = initial_cash;
    for day in 0..eval {
        let row = start + day;
        let date = &pm.dates()[row];
        let prices = asset_prices(row);
        let p = p_all[row];
        let (mu, q_policy) = policy.step(p);
        let q = if res.terminated_early.is_some() {
            0.0
        } else {
            q_policy
        };

        let half_spreads: Vec<f64> = match &cfg.spread {
            SpreadSource::Relative(f) => prices.iter().map(|p| 0.5 * f * p).collect(),
            SpreadSource::Panel(sp) => sa
                .assets
                .iter()
                .map(|a| {
                    sp.spread(date, a)
                        .map(|v| 0.5 * v)
                        .ok_or_else(|| BacktestError::Input(format!("no spread for {a} on {date}")))
                })
                .collect::<Result<_>>()?,
        };
        let delta: Vec<f64> = s.iter().map(|si| (q - q_prev) * si).collect();
        let held: Vec<f64> = s.iter().map(|si| q_prev * si).collect();
        let phi = transaction_cost(&delta, &prices, &half_spreads)
            + holding_cost(
                &held,
                &prev_prices,
                cfg.shorting_rate,
                cfg.trading_days_per_year,
            );

        cash = cash - (q - q_prev) * p - phi;
        let nav = cash + q * p;
        if !(nav_prev > 0.0) {
            return Err(BacktestError::Bust {
                day: day + 1,
                date: date.clone(),
                nav: nav_prev,
            });
        }
        let ret = (nav - nav_prev) / nav_prev;

        res.dates.push(date.clone());
        res.q.push(q);
        res.p.push(p);
        res.midpoint.push(mu);
        res.cash.push(cash);
        res.nav.push(nav);
        res.cost.push(phi);
        res.ret.push(ret);

        if res.terminated_early.is_none() && nav < cfg.nav_floor_fraction * initial_cash {
            res.terminated_early = Some(date.clone());
        }
        q_prev = q;
        nav_prev = nav;
        prev_prices = prices;
    }
    Ok(res)
}

fn finite_or_tag<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    #[serde(serialize_with = "finite_or_tag")]
    pub profit: f64,
    #[serde(rename = "annualized_return", serialize_with = "finite_or_tag")]
    pub mean_return: f64,
    #[serde(rename = "annualized_risk", serialize_with = "finite_or_tag")]
    pub risk: f64,
    /// `±∞` when the risk is zero and the mean return is not.
    #[serde(serialize_with = "finite_or_tag")]
    pub sharpe: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub max_drawdown: f64,
    pub terminated_early: bool,
}

/// `max_{t₁<t₂} V_{t₁}/V_{t₂} − 1` over the series, floored at 0.
pub fn max_drawdown(nav: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0_f64;
    for &v in nav {
        if peak > f64::NEG_INFINITY {
            worst = worst.max(peak / v - 1.0);
        }
        peak = peak.max(v);
    }
    worst
}

pub fn compute_metrics(res: &BacktestResult, days_per_year: f64) -> Result<Metrics> {
    let t = res.ret.len();
    if t == 0 {
        return Err(BacktestError::Input("empty return series".into()));
    }
    let mean = res.ret.iter().sum::<f64>() / t as f64;
    let risk_daily = if res.ret.iter().all(|&r| r == res.ret[0]) {
        0.0
    } else {
        (res.ret.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / t as f64).sqrt()
    };
    let mean_return = days_per_year * mean;
    let risk = days_per_year.sqrt() * risk_daily;
    let sharpe = if risk > 0.0 {
        mean_return / risk
    } else if mean_return > 0.0 {
        f64::INFINITY
    } else if mean_return < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    Ok(Metrics {
        profit: res.profit(),
        mean_return,
        risk,
        sharpe,
        max_drawdown: max_drawdown(&res.nav),
        terminated_early: res.terminated_early.is_some(),
    })
}

/// Average, median and quartiles of one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    #[serde(serialize_with = "finite_or_tag")]
    pub average: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub median: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub p25: f64,
    #[serde(serialize_with = "finite_or_tag")]
    pub p75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub fraction_profitable: f64,
    pub terminated_early: usize,
    pub annualized_return: Distribution,
    pub annualized_risk: Distribution,
    pub sharpe: Distribution,
    pub max_drawdown: Distribution,
}

/// Linear-interpolation percentile (`q` in [0, 1]) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            if lo == hi || frac == 0.0 {
                sorted[lo]
            } else {
                sorted[lo] + (sorted[hi] - sorted[lo]) * frac
            }
        }
    }
}

fn distribution(values: impl Iterator<Item = f64>) -> Distribution {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let average = if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    };
    Distribution {
        average,
        median: percentile(&v, 0.5),
        p25: percentile(&v, 0.25),
        p75: percentile(&v, 0.75),
    }
}

pub fn summarize(metrics: &[Metrics]) -> Summary {
    let count = metrics.len();
    let profitable = metrics.iter().filter(|m| m.profit > 0.0).count();
    Summary {
        count,
        fraction_profitable: if count == 0 {
            0.0
        } else {
            profitable as f64 / count as f64
        },
        terminated_early: metrics.iter().filter(|m| m.terminated_early).count(),
        annualized_return: distribution(metrics.iter().map(|m| m.mean_return)),
        annualized_risk: distribution(metrics.iter().map(|m| m.risk)),
        sharpe: distribution(metrics.iter().map(|m| m.sharpe)),
        max_drawdown: distribution(metrics.iter().map(|m| m.max_drawdown)),
    }
}
