//! Rolling protocol: re-search on a trailing window every `stride` days and
//! trade each newly found stat-arb on the days that follow.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::backtest::{self, BacktestConfig, BacktestError, BacktestResult, Metrics, Summary};
use crate::ccp::{self, CcpError, FinderConfig, StatArb};
use crate::market_data::PriceMatrix;

#[derive(Debug, Error)]
pub enum RollError {
    #[error("invalid roll config: {0}")]
    Config(String),
    #[error("search on {date}: {source}")]
    Search {
        date: String,
        #[source]
        source: CcpError,
    },
    #[error("backtest of [{assets}] from {date}: {source}")]
    Backtest {
        date: String,
        assets: String,
        #[source]
        source: BacktestError,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollConfig {
    pub finder: FinderConfig,
    pub backtest: BacktestConfig,
    pub train_window: usize,
    pub stride: usize,
    /// Row of the first search date; defaults to `train_window`.
    pub first_search: Option<usize>,
}

impl RollConfig {
    pub fn new(finder: FinderConfig, backtest: BacktestConfig) -> Self {
        Self {
            finder,
            backtest,
            train_window: 500,
            stride: 21,
            first_search: None,
        }
    }

    pub fn validate(&self) -> Result<(), RollError> {
        if self.stride == 0 {
            return Err(RollError::Config("stride must be at least 1".into()));
        }
        let need = 2 + self.finder.band.warmup_len();
        if self.train_window < need {
            return Err(RollError::Config(format!(
                "training window must be at least {need} days"
            )));
        }
        self.finder
            .validate()
            .map_err(|e| RollError::Config(e.to_string()))?;
        self.backtest
            .validate()
            .map_err(|e| RollError::Config(e.to_string()))
    }
}

/// One stat-arb found by the roll, with its out-of-sample evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RollEntry {
    /// First trading day; the training window ends the day before.
    pub search_date: String,
    pub stat_arb: StatArb,
    pub result: BacktestResult,
    pub metrics: Metrics,
    /// First and last day of the trading interval.
    pub active_start: String,
    pub active_end: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord<'a> {
    pub search_date: &'a str,
    pub assets: &'a [String],
    #[serde(flatten)]
    pub metrics: &'a Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollOutcome {
    pub search_dates: Vec<String>,
    pub entries: Vec<RollEntry>,
    /// Number of stat-arbs whose trading interval covers each date.
    pub active: Vec<(String, usize)>,
    pub warnings: Vec<String>,
}

impl RollOutcome {
    pub fn stat_arbs(&self) -> Vec<&StatArb> {
        self.entries.iter().map(|e| &e.stat_arb).collect()
    }

    pub fn metrics(&self) -> Vec<Metrics> {
        self.entries.iter().map(|e| e.metrics.clone()).collect()
    }

    pub fn metrics_records(&self) -> Vec<MetricsRecord<'_>> {
        self.entries
            .iter()
            .map(|e| MetricsRecord {
                search_date: &e.search_date,
                assets: &e.stat_arb.assets,
                metrics: &e.metrics,
            })
            .collect()
    }

    pub fn summary(&self) -> Summary {
        backtest::summarize(&self.metrics())
    }

    pub fn write_active_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "date,active")?;
        for (date, n) in &self.active {
            writeln!(w, "{date},{n}")?;
        }
        w.flush()
    }
}

/// Rows at which a search happens: every `stride` days from the first
/// search row while a full evaluation window still fits in the panel.
pub fn search_rows(n_days: usize, cfg: &RollConfig) -> Vec<usize> {
    let first = cfg.first_search.unwrap_or(cfg.train_window);
    let eval = cfg.backtest.eval_len();
    (first..)
        .step_by(cfg.stride)
        .take_while(|&r| r + eval <= n_days)
        .collect()
}

pub fn roll(pm: &PriceMatrix, cfg: &RollConfig) -> Result<RollOutcome, RollError> {
    cfg.validate()?;
    let rows = search_rows(pm.n_days(), cfg);
    if rows.is_empty() {
        return Err(RollError::Config(format!(
            "panel of {} days holds no search date: need {} training days plus {} evaluation days",
            pm.n_days(),
            cfg.first_search
                .unwrap_or(cfg.train_window)
                .max(cfg.train_window),
            cfg.backtest.eval_len()
        )));
    }
    let eval = cfg.backtest.eval_len();
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut out = RollOutcome {
        search_dates: Vec::new(),
        entries: Vec::new(),
        active: Vec::new(),
        warnings: Vec::new(),
    };
    for &row in &rows {
        let date = pm.dates()[row].clone();
        if row < cfg.train_window {
            return Err(RollError::Config(format!(
                "search on {date} has only {row} days of history, training window is {}",
                cfg.train_window
            )));
        }
        out.search_dates.push(date.clone());
        let found = ccp::find_stat_arbs_in(pm, row - cfg.train_window..row, &cfg.finder).map_err(
            |source| RollError::Search {
                date: date.clone(),
                source,
            },
        )?;
        out.warnings
            .extend(found.warnings.into_iter().map(|w| format!("{date}: {w}")));
        let history = pm
            .slice_rows(0, row + eval)
            .map_err(|e| RollError::Config(e.to_string()))?;
        for sa in found.stat_arbs {
            if !seen.insert(sa.asset_key()) {
                continue;
            }
            let result = backtest::run(&sa, &history, &cfg.backtest).map_err(|source| {
                RollError::Backtest {
                    date: date.clone(),
                    assets: sa.assets.join(","),
                    source,
                }
            })?;
            let metrics = backtest::compute_metrics(&result, cfg.backtest.trading_days_per_year)
                .map_err(|source| RollError::Backtest {
                    date: date.clone(),
                    assets: sa.assets.join(","),
                    source,
                })?;
            out.entries.push(RollEntry {
                search_date: date.clone(),
                active_start: pm.dates()[row].clone(),
                active_end: pm.dates()[row + eval - 1].clone(),
                stat_arb: sa,
                result,
                metrics,
            });
        }
    }

    let first = rows[0];
    let last = rows[rows.len() - 1] + eval;
    let mut delta = vec![0i64; last - first + 1];
    for &row in &rows {
        let n = out
            .entries
            .iter()
            .filter(|e| e.search_date == pm.dates()[row])
            .count() as i64;
        delta[row - first] += n;
        delta[row + eval - first] -= n;
    }
    let mut running = 0i64;
    for r in first..last {
        running += delta[r - first];
        out.active.push((pm.dates()[r].clone(), running as usize));
    }
    Ok(out)
}
