//! Price panels: CSV ingestion, date windows, per-asset scaling, and a
//! synthetic cointegrated universe generator.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must start with `date` followed by at least one asset column")]
    BadHeader,
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: `{value}` is not an ISO-8601 date (YYYY-MM-DD)")]
    BadDate { line: u64, value: String },
    #[error("line {line}, column `{column}`: value {value} must be strictly positive")]
    NonPositivePrice {
        line: u64,
        column: String,
        value: f64,
    },
    #[error("line {line}, column `{column}`: value {value} must be non-negative")]
    NegativeValue {
        line: u64,
        column: String,
        value: f64,
    },
    #[error("line {line}, column `{column}`: missing cell")]
    MissingCell { line: u64, column: String },
    #[error("date {date} appears twice (lines {first_line} and {second_line})")]
    DuplicateDate {
        date: String,
        first_line: u64,
        second_line: u64,
    },
    #[error("panel has no rows")]
    Empty,
    #[error("invalid panel: {0}")]
    Invalid(String),
    #[error("window {start}..={end} contains no trading days")]
    EmptyWindow { start: String, end: String },
    #[error("dimension mismatch: expected {expected} assets, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, MarketDataError>;

/// T×n panel of strictly positive prices (USD per share).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceMatrix {
    dates: Vec<String>,
    assets: Vec<String>,
    prices: Matrix,
}

impl PriceMatrix {
    pub fn new(dates: Vec<String>, assets: Vec<String>, prices: Matrix) -> Result<Self> {
        check_shape(&dates, &assets, &prices)?;
        for t in 0..prices.nrows() {
            for (i, &v) in prices.row(t).iter().enumerate() {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(MarketDataError::NonPositivePrice {
                        line: t as u64 + 2,
                        column: assets[i].clone(),
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            dates,
            assets,
            prices,
        })
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn prices(&self) -> &Matrix {
        &self.prices
    }

    pub fn n_days(&self) -> usize {
        self.prices.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.prices.ncols()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.prices.row(t)
    }

    pub fn date_index(&self, date: &str) -> Option<usize> {
        self.dates.binary_search_by(|d| d.as_str().cmp(date)).ok()
    }

    pub fn asset_index(&self, asset: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == asset)
    }

    /// Positional sub-panel of rows `start..end`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_days() {
            return Err(MarketDataError::EmptyWindow {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        Ok(Self {
            dates: self.dates[start..end].to_vec(),
            assets: self.assets.clone(),
            prices: self.prices.slice_rows(start, end),
        })
    }

    /// All rows with `start <= date <= end`.
    pub fn slice_window(&self, start: &str, end: &str) -> Result<Self> {
        let lo = self.dates.partition_point(|d| d.as_str() < start);
        let hi = self.dates.partition_point(|d| d.as_str() <= end);
        if start > end || lo >= hi {
            return Err(MarketDataError::EmptyWindow {
                start: start.to_string(),
                end: end.to_string(),
            });
        }
        self.slice_rows(lo, hi)
    }

    pub fn select_assets(&self, columns: &[usize]) -> Self {
        Self {
            dates: self.dates.clone(),
            assets: columns.iter().map(|&c| self.assets[c].clone()).collect(),
            prices: self.prices.select_columns(columns),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_panel(writer, &self.dates, &self.assets, &self.prices)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Full bid-ask spreads in USD per share, same layout as a price panel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadMatrix {
    dates: Vec<String>,
    assets: Vec<String>,
    spreads: Matrix,
}

impl SpreadMatrix {
    pub fn new(dates: Vec<String>, assets: Vec<String>, spreads: Matrix) -> Result<Self> {
        check_shape(&dates, &assets, &spreads)?;
        for t in 0..spreads.nrows() {
            for (i, &v) in spreads.row(t).iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(MarketDataError::NegativeValue {
                        line: t as u64 + 2,
                        column: assets[i].clone(),
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            dates,
            assets,
            spreads,
        })
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    /// Spread for `asset` on `date`, if the panel covers both.
    pub fn spread(&self, date: &str, asset: &str) -> Option<f64> {
        let t = self.dates.binary_search_by(|d| d.as_str().cmp(date)).ok()?;
        let i = self.assets.iter().position(|a| a == asset)?;
        Some(self.spreads.get(t, i))
    }
}

fn check_shape(dates: &[String], assets: &[String], m: &Matrix) -> Result<()> {
    if dates.is_empty() || assets.is_empty() {
        return Err(MarketDataError::Empty);
    }
    if m.nrows() != dates.len() || m.ncols() != assets.len() {
        return Err(MarketDataError::Invalid(format!(
            "{} dates and {} assets but a {}x{} matrix",
            dates.len(),
            assets.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    for w in dates.windows(2) {
        if w[0] >= w[1] {
            return Err(MarketDataError::Invalid(format!(
                "dates not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum CellRule {
    Positive,
    NonNegative,
}

struct RawPanel {
    dates: Vec<String>,
    assets: Vec<String>,
    values: Matrix,
}

fn read_panel<R: Read>(reader: R, rule: CellRule) -> Result<RawPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(MarketDataError::BadHeader);
    }
    let assets: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = assets.len();

    // (date, file line, values)
    let mut rows: Vec<(String, u64, Vec<f64>)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let date = record.get(0).unwrap_or("").to_string();
        if NaiveDate::parse_from_str(&date, "%Y-%m-%d").is_err() || date.len() != 10 {
            return Err(MarketDataError::BadDate { line, value: date });
        }
        let mut values = Vec::with_capacity(n);
        for (i, column) in assets.iter().enumerate() {
            let cell = record.get(i + 1).unwrap_or("");
            if cell.is_empty() {
                return Err(MarketDataError::MissingCell {
                    line,
                    column: column.clone(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| MarketDataError::Parse {
                line,
                column: column.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(MarketDataError::Parse {
                    line,
                    column: column.clone(),
                    value: cell.to_string(),
                });
            }
            match rule {
                CellRule::Positive if v <= 0.0 => {
                    return Err(MarketDataError::NonPositivePrice {
                        line,
                        column: column.clone(),
                        value: v,
                    })
                }
                CellRule::NonNegative if v < 0.0 => {
                    return Err(MarketDataError::NegativeValue {
                        line,
                        column: column.clone(),
                        value: v,
                    })
                }
                _ => {}
            }
            values.push(v);
        }
        if record.len() > n + 1 {
            return Err(MarketDataError::Invalid(format!(
                "line {line}: {} cells but header has {}",
                record.len(),
                n + 1
            )));
        }
        rows.push((date, line, values));
    }
    if rows.is_empty() {
        return Err(MarketDataError::Empty);
    }

    rows.sort_by(|a, b| a.0.cmp(&b.0));
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            let (first_line, second_line) = if w[0].1 < w[1].1 {
                (w[0].1, w[1].1)
            } else {
                (w[1].1, w[0].1)
            };
            return Err(MarketDataError::DuplicateDate {
                date: w[0].0.clone(),
                first_line,
                second_line,
            });
        }
    }

    let t = rows.len();
    let mut data = Vec::with_capacity(t * n);
    let mut dates = Vec::with_capacity(t);
    for (d, _, v) in rows {
        dates.push(d);
        data.extend(v);
    }
    Ok(RawPanel {
        dates,
        assets,
        values: Matrix::from_row_major(t, n, data),
    })
}

fn write_panel<W: Write>(writer: W, dates: &[String], assets: &[String], m: &Matrix) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = Vec::with_capacity(assets.len() + 1);
    header.push("date".to_string());
    header.extend(assets.iter().cloned());
    wtr.write_record(&header)?;
    for (t, date) in dates.iter().enumerate() {
        let mut rec = Vec::with_capacity(assets.len() + 1);
        rec.push(date.clone());
        rec.extend(m.row(t).iter().map(|v| format!("{v}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parses a prices CSV (`date,<asset>...`), sorting rows by date.
pub fn read_prices<R: Read>(reader: R) -> Result<PriceMatrix> {
    let raw = read_panel(reader, CellRule::Positive)?;
    PriceMatrix::new(raw.dates, raw.assets, raw.values)
}

pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceMatrix> {
    read_prices(std::fs::File::open(path)?)
}

pub fn read_spreads<R: Read>(reader: R) -> Result<SpreadMatrix> {
    let raw = read_panel(reader, CellRule::NonNegative)?;
    check_shape(&raw.dates, &raw.assets, &raw.values)?;
    Ok(SpreadMatrix {
        dates: raw.dates,
        assets: raw.assets,
        spreads: raw.values,
    })
}

pub fn load_spreads(path: impl AsRef<Path>) -> Result<SpreadMatrix> {
    read_spreads(std::fs::File::open(path)?)
}

/// Per-asset average prices of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingInfo {
    pub mean_prices: Vec<f64>,
    pub scaled: bool,
}

pub fn compute_scaling(pm: &PriceMatrix) -> ScalingInfo {
    ScalingInfo {
        mean_prices: column_means(pm.prices()),
        scaled: true,
    }
}

pub(crate) fn column_means(m: &Matrix) -> Vec<f64> {
    let t = m.nrows() as f64;
    let mut sums = vec![0.0; m.ncols()];
    for r in 0..m.nrows() {
        for (s, v) in sums.iter_mut().zip(m.row(r)) {
            *s += v;
        }
    }
    sums.into_iter().map(|s| s / t).collect()
}

pub fn apply_scaling(pm: &PriceMatrix, sc: &ScalingInfo) -> Result<PriceMatrix> {
    if sc.mean_prices.len() != pm.n_assets() {
        return Err(MarketDataError::DimensionMismatch {
            expected: pm.n_assets(),
            got: sc.mean_prices.len(),
        });
    }
    Ok(PriceMatrix {
        dates: pm.dates.clone(),
        assets: pm.assets.clone(),
        prices: scale_matrix(pm.prices(), &sc.mean_prices),
    })
}

pub(crate) fn scale_matrix(m: &Matrix, means: &[f64]) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.nrows() {
        for (v, mean) in out.row_mut(r).iter_mut().zip(means) {
            *v /= mean;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_assets: usize,
    pub n_days: usize,
    pub n_common_trends: usize,
    pub spread_volatility: f64,
    pub trend_volatility: f64,
    pub mean_reversion_rate: f64,
    pub base_price: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_assets: 10,
            n_days: 500,
            n_common_trends: 2,
            spread_volatility: 0.02,
            trend_volatility: 0.01,
            mean_reversion_rate: 0.1,
            base_price: 50.0,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MarketDataError::InvalidConfig(m.to_string()));
        if self.n_assets == 0 || self.n_days == 0 || self.n_common_trends == 0 {
            return bad("asset, day and trend counts must be at least 1");
        }
        if !(self.spread_volatility >= 0.0) || !(self.trend_volatility >= 0.0) {
            return bad("volatilities must be non-negative");
        }
        if !(self.mean_reversion_rate > 0.0 && self.mean_reversion_rate <= 1.0) {
            return bad("mean_reversion_rate must lie in (0, 1]");
        }
        if !(self.base_price > 0.0) || !self.base_price.is_finite() {
            return bad("base_price must be positive");
        }
        Ok(())
    }
}

/// The latent series behind a synthetic panel.
#[derive(Debug, Clone)]
pub struct SyntheticComponents {
    /// n × k trend loadings.
    pub loadings: Matrix,
    /// T × k random-walk trends.
    pub trends: Matrix,
    /// T × n stationary AR(1) log-spreads.
    pub spreads: Matrix,
}

/// Log-price universe `ln P = ln(base) + loadings·trends + spread`, where the
/// trends are Gaussian random walks and the spreads are AR(1) with
/// coefficient `1 - mean_reversion_rate`.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<PriceMatrix> {
    generate_synthetic_with_components(cfg).map(|(pm, _)| pm)
}

pub fn generate_synthetic_with_components(
    cfg: &SyntheticConfig,
) -> Result<(PriceMatrix, SyntheticComponents)> {
    cfg.validate()?;
    let (n, t_len, k) = (cfg.n_assets, cfg.n_days, cfg.n_common_trends);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut loadings = Matrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            loadings.set(i, j, rng.random_range(0.5..1.5));
        }
    }

    let phi = 1.0 - cfg.mean_reversion_rate;
    let mut trends = Matrix::zeros(t_len, k);
    let mut spreads = Matrix::zeros(t_len, n);
    let mut w = vec![0.0; k];
    let mut x = vec![0.0; n];
    let mut prices = Matrix::zeros(t_len, n);
    for t in 0..t_len {
        if t > 0 {
            for wj in w.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *wj += cfg.trend_volatility * e;
            }
            for xi in x.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *xi = phi * *xi + cfg.spread_volatility * e;
            }
        }
        trends.row_mut(t).copy_from_slice(&w);
        spreads.row_mut(t).copy_from_slice(&x);
        for (i, xi) in x.iter().enumerate() {
            let common: f64 = (0..k).map(|j| loadings.get(i, j) * w[j]).sum();
            prices.set(t, i, cfg.base_price * (common + xi).exp());
        }
    }

    let dates = business_days(NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), t_len);
    let assets = (0..n).map(|i| format!("A{i:03}")).collect();
    let pm = PriceMatrix::new(dates, assets, prices)?;
    Ok((
        pm,
        SyntheticComponents {
            loadings,
            trends,
            spreads,
        },
    ))
}

fn business_days(start: NaiveDate, count: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d.format("%Y-%m-%d").to_string());
        }
        d += Duration::days(1);
    }
    out
}
