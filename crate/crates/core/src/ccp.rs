//! Convex-concave procedure for band-constrained volatility maximization.
//!
//! Each iteration replaces `f(p) = Σ (p_t − p_{t−1})²` by its tangent at the
//! current portfolio price and solves the resulting LP. Because `f` is convex
//! the tangent is a global under-estimator, so the true objective never
//! decreases from one feasible iterate to the next.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{
    build_fixed_band_lp, build_moving_band_lp, moving_band_residuals, solve_lp, LpError, LpStatus,
};
use crate::market_data::{column_means, scale_matrix, MarketDataError, PriceMatrix};
use crate::matrix::Matrix;

/// Candidates with a smaller in-sample objective are discarded: above one the
/// linear policy is guaranteed an in-sample profit.
pub const OBJECTIVE_FLOOR: f64 = 1.0;

#[derive(Debug, Error)]
pub enum CcpError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("LP failure at iteration {iteration}: {source}")]
    Lp {
        iteration: usize,
        #[source]
        source: LpError,
    },
    #[error("LP subproblem at iteration {iteration} was {status:?}")]
    LpStatus { iteration: usize, status: LpStatus },
    #[error("cleanup removed every asset")]
    EmptySupport,
    #[error(transparent)]
    Data(#[from] MarketDataError),
}

pub type Result<T> = std::result::Result<T, CcpError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandKind {
    Fixed,
    Moving { memory: usize },
}

/// Band descriptor of a discovered portfolio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Band {
    Fixed { mu: f64 },
    Moving { memory: usize },
}

impl Band {
    pub fn kind(&self) -> BandKind {
        match *self {
            Band::Fixed { .. } => BandKind::Fixed,
            Band::Moving { memory } => BandKind::Moving { memory },
        }
    }

    pub fn warmup_len(&self) -> usize {
        self.kind().warmup_len()
    }
}

impl BandKind {
    pub fn warmup_len(&self) -> usize {
        match *self {
            BandKind::Fixed => 0,
            BandKind::Moving { memory } => memory.saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatArb {
    pub assets: Vec<String>,
    /// Holdings in original share units, parallel to `assets`.
    pub shares: Vec<f64>,
    pub band: Band,
    pub train_start: String,
    pub train_end: String,
    #[serde(rename = "objective")]
    pub objective_value: f64,
    /// `|s|ᵀP̄` over the training window, USD.
    #[serde(rename = "leverage")]
    pub leverage_used: f64,
}

impl StatArb {
    /// Column indices of this stat-arb's assets in `pm`.
    pub fn columns_in(&self, pm: &PriceMatrix) -> Result<Vec<usize>> {
        self.assets
            .iter()
            .map(|a| {
                pm.asset_index(a)
                    .ok_or_else(|| CcpError::Input(format!("asset {a} not in price panel")))
            })
            .collect()
    }

    /// `p_t = sᵀP_t` for every row of `pm`.
    pub fn portfolio_prices(&self, pm: &PriceMatrix) -> Result<Vec<f64>> {
        let cols = self.columns_in(pm)?;
        Ok((0..pm.n_days())
            .map(|t| {
                let row = pm.row(t);
                cols.iter()
                    .zip(&self.shares)
                    .map(|(&c, s)| row[c] * s)
                    .sum()
            })
            .collect())
    }

    pub fn asset_key(&self) -> Vec<String> {
        let mut key = self.assets.clone();
        key.sort();
        key
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinderConfig {
    pub leverage_limit: f64,
    pub band: BandKind,
    pub max_iterations: usize,
    pub objective_tolerance: f64,
    pub cleanup_threshold: f64,
    pub n_initializations: usize,
    pub seed: u64,
}

impl FinderConfig {
    pub fn fixed(leverage_limit: f64) -> Self {
        Self {
            leverage_limit,
            band: BandKind::Fixed,
            max_iterations: 50,
            objective_tolerance: 1e-4,
            cleanup_threshold: 0.05,
            n_initializations: 10,
            seed: 0,
        }
    }

    pub fn moving(leverage_limit: f64, memory: usize) -> Self {
        Self {
            band: BandKind::Moving { memory },
            ..Self::fixed(leverage_limit)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CcpError::Config(m.to_string()));
        if !(self.leverage_limit > 0.0) || !self.leverage_limit.is_finite() {
            return bad("leverage limit must be positive");
        }
        if let BandKind::Moving { memory: 0 } = self.band {
            return bad("memory must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.objective_tolerance > 0.0) {
            return bad("objective tolerance must be positive");
        }
        if !(self.cleanup_threshold > 0.0 && self.cleanup_threshold < 1.0) {
            return bad("cleanup threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CcpTrace {
    /// True objective after each LP solve.
    pub objectives: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub cleanup_rounds: usize,
}

/// Scaled training prices, plus the `M − 1` preceding rows for moving bands.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPanel {
    pub window: Matrix,
    pub warmup: Option<Matrix>,
}

impl TrainingPanel {
    pub fn new(window: Matrix, warmup: Option<Matrix>) -> Self {
        Self { window, warmup }
    }

    pub fn n_assets(&self) -> usize {
        self.window.ncols()
    }

    fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            window: self.window.select_columns(cols),
            warmup: self.warmup.as_ref().map(|w| w.select_columns(cols)),
        }
    }

    /// Warmup rows on top of the window.
    fn stacked(&self) -> Matrix {
        match &self.warmup {
            Some(w) => w.vstack(&self.window),
            None => self.window.clone(),
        }
    }
}

/// `Σ_{t≥2} (p_t − p_{t−1})²`.
pub fn objective(p: &[f64]) -> Result<f64> {
    if p.len() < 2 {
        return Err(CcpError::Input("objective needs at least 2 prices".into()));
    }
    Ok(p.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum())
}

pub fn gradient(p: &[f64]) -> Result<Vec<f64>> {
    let t = p.len();
    if t < 2 {
        return Err(CcpError::Input("gradient needs at least 2 prices".into()));
    }
    let mut g = vec![0.0; t];
    g[0] = 2.0 * (p[0] - p[1]);
    for i in 1..t - 1 {
        g[i] = 2.0 * (2.0 * p[i] - p[i - 1] - p[i + 1]);
    }
    g[t - 1] = 2.0 * (p[t - 1] - p[t - 2]);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcpSolution {
    pub shares: Vec<f64>,
    /// Fixed-band midpoint; `None` for moving bands.
    pub midpoint: Option<f64>,
    pub trace: CcpTrace,
}

fn check_panel(data: &TrainingPanel, band: BandKind) -> Result<()> {
    if data.window.nrows() < 2 {
        return Err(CcpError::Input(format!(
            "training window needs at least 2 days, got {}",
            data.window.nrows()
        )));
    }
    let need = band.warmup_len();
    let have = data.warmup.as_ref().map_or(0, Matrix::nrows);
    if have != need {
        return Err(CcpError::Input(format!(
            "band needs {need} warmup rows, got {have}"
        )));
    }
    if let Some(w) = &data.warmup {
        if w.ncols() != data.window.ncols() {
            return Err(CcpError::Input("warmup/window asset count mismatch".into()));
        }
    }
    Ok(())
}

/// Runs linearize-and-solve iterations from `s_init` until the relative
/// objective gain drops below `cfg.objective_tolerance` or
/// `cfg.max_iterations` LPs have been solved. The first LP projects an
/// infeasible start onto the feasible set, so every reported iterate is
/// feasible.
pub fn ccp_solve(data: &TrainingPanel, cfg: &FinderConfig, s_init: &[f64]) -> Result<CcpSolution> {
    cfg.validate()?;
    check_panel(data, cfg.band)?;
    let n = data.n_assets();
    if s_init.len() != n || s_init.iter().any(|v| !v.is_finite()) {
        return Err(CcpError::Input(format!(
            "initial portfolio must be {n} finite values"
        )));
    }
    let stacked = match cfg.band {
        BandKind::Fixed => None,
        BandKind::Moving { .. } => Some(data.stacked()),
    };

    let mut s = s_init.to_vec();
    let mut midpoint = None;
    let mut trace = CcpTrace::default();
    let mut prev: Option<f64> = None;
    for iteration in 0..cfg.max_iterations {
        let g = gradient(&data.window.mul_vec(&s))?;
        let lp = match (cfg.band, &stacked) {
            (BandKind::Moving { memory }, Some(pw)) => {
                build_moving_band_lp(pw, &g, cfg.leverage_limit, memory)
            }
            _ => build_fixed_band_lp(&data.window, &g, cfg.leverage_limit),
        }
        .map_err(|source| CcpError::Lp { iteration, source })?;
        let sol = solve_lp(&lp).map_err(|source| CcpError::Lp { iteration, source })?;
        if sol.status != LpStatus::Optimal {
            return Err(CcpError::LpStatus {
                iteration,
                status: sol.status,
            });
        }
        s.copy_from_slice(&sol.x[..n]);
        if cfg.band == BandKind::Fixed {
            midpoint = Some(sol.x[n]);
        }
        let f = objective(&data.window.mul_vec(&s))?;
        trace.objectives.push(f);
        trace.iterations = iteration + 1;
        if let Some(before) = prev {
            if f - before < cfg.objective_tolerance * before.abs().max(1e-12) {
                trace.converged = true;
                break;
            }
        }
        prev = Some(f);
    }
    Ok(CcpSolution {
        shares: s,
        midpoint,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanupResult {
    /// Full-length share vector; removed assets are exactly zero.
    pub shares: Vec<f64>,
    pub midpoint: Option<f64>,
    pub rounds: usize,
    /// Traces of the restricted re-solves.
    pub traces: Vec<CcpTrace>,
}

/// Repeatedly zeroes assets whose leverage share `|s_i| / ‖s‖₁` is at most
/// `cfg.cleanup_threshold` and re-solves on the survivors, starting from the
/// surviving part of the previous portfolio.
pub fn cleanup(
    data: &TrainingPanel,
    cfg: &FinderConfig,
    shares: &[f64],
    midpoint: Option<f64>,
) -> Result<CleanupResult> {
    let n = data.n_assets();
    if shares.len() != n {
        return Err(CcpError::Input("share vector length mismatch".into()));
    }
    let mut s = shares.to_vec();
    let mut mu = midpoint;
    let mut support: Vec<usize> = (0..n).collect();
    let mut rounds = 0;
    let mut traces = Vec::new();
    loop {
        let total: f64 = s.iter().map(|v| v.abs()).sum();
        if !(total > 0.0) {
            return Err(CcpError::EmptySupport);
        }
        let keep: Vec<usize> = support
            .iter()
            .copied()
            .filter(|&i| s[i].abs() > cfg.cleanup_threshold * total)
            .collect();
        if keep.len() == support.len() {
            return Ok(CleanupResult {
                shares: s,
                midpoint: mu,
                rounds,
                traces,
            });
        }
        if keep.is_empty() {
            return Err(CcpError::EmptySupport);
        }
        rounds += 1;
        let restricted = data.select_columns(&keep);
        let start: Vec<f64> = keep.iter().map(|&i| s[i]).collect();
        let sol = ccp_solve(&restricted, cfg, &start)?;
        s = vec![0.0; n];
        for (&i, v) in keep.iter().zip(&sol.shares) {
            s[i] = *v;
        }
        mu = sol.midpoint;
        traces.push(sol.trace);
        support = keep;
    }
}

/// Largest band violation `max_t |p_t − μ_t| − 1` (0 when inside) of raw
/// or scaled prices. `warmup` must hold the `M − 1` rows before `window`.
pub fn band_violation(
    window: &Matrix,
    warmup: Option<&Matrix>,
    shares: &[f64],
    band: &Band,
) -> Result<f64> {
    let deviations: Vec<f64> = match *band {
        Band::Fixed { mu } => window.mul_vec(shares).into_iter().map(|p| p - mu).collect(),
        Band::Moving { memory } => {
            let stacked = match warmup {
                Some(w) => w.vstack(window),
                None => window.clone(),
            };
            if stacked.nrows() != window.nrows() + memory.saturating_sub(1) {
                return Err(CcpError::Input(format!(
                    "moving band needs {} warmup rows",
                    memory.saturating_sub(1)
                )));
            }
            moving_band_residuals(&stacked, memory)
                .map_err(|source| CcpError::Lp {
                    iteration: 0,
                    source,
                })?
                .mul_vec(shares)
        }
    };
    Ok(deviations
        .iter()
        .map(|d| d.abs() - 1.0)
        .fold(0.0_f64, f64::max))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FindOutcome {
    /// Unique stat-arbs, descending by objective.
    pub stat_arbs: Vec<StatArb>,
    /// One entry per initialization that failed.
    pub warnings: Vec<String>,
    /// Main CCP trace of each initialization that ran, by run index.
    pub traces: Vec<CcpTrace>,
}

/// Searches `pm` for stat-arbs. For moving bands the first `M − 1` days of
/// `pm` are used only as warmup.
pub fn find_stat_arbs(pm: &PriceMatrix, cfg: &FinderConfig) -> Result<FindOutcome> {
    find_stat_arbs_in(pm, 0..pm.n_days(), cfg)
}

/// Searches the training rows `train` of `pm`. For moving bands the `M − 1`
/// rows before `train.start` are the warmup; when there are not enough of
/// them, the first `M − 1` training rows are consumed as warmup instead.
pub fn find_stat_arbs_in(
    pm: &PriceMatrix,
    train: Range<usize>,
    cfg: &FinderConfig,
) -> Result<FindOutcome> {
    cfg.validate()?;
    let warm = cfg.band.warmup_len();
    if train.end > pm.n_days() || train.start >= train.end {
        return Err(CcpError::Input("training range outside panel".into()));
    }
    let (warm_start, window_start) = if train.start >= warm {
        (train.start - warm, train.start)
    } else {
        (train.start, train.start + warm)
    };
    if train.end < window_start + 2 {
        return Err(CcpError::Input(format!(
            "training window of {} days is too short: need {warm} warmup days plus at least 2",
            train.end - train.start
        )));
    }
    let raw = pm.prices();
    let window_raw = raw.slice_rows(window_start, train.end);
    let means = column_means(&window_raw);
    let data = TrainingPanel {
        window: scale_matrix(&window_raw, &means),
        warmup: (warm > 0).then(|| scale_matrix(&raw.slice_rows(warm_start, window_start), &means)),
    };

    let n = pm.n_assets();
    let run = |j: usize| -> Result<(Vec<f64>, Option<f64>, CcpTrace)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(j as u64);
        let s_init: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let sol = ccp_solve(&data, cfg, &s_init)?;
        let mut trace = sol.trace;
        let cleaned = cleanup(&data, cfg, &sol.shares, sol.midpoint)?;
        trace.cleanup_rounds = cleaned.rounds;
        Ok((cleaned.shares, cleaned.midpoint, trace))
    };

    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        (0..cfg.n_initializations)
            .into_par_iter()
            .map(run)
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = (0..cfg.n_initializations).map(run).collect();

    let mut outcome = FindOutcome::default();
    let mut best: BTreeMap<Vec<String>, StatArb> = BTreeMap::new();
    for (j, res) in results.into_iter().enumerate() {
        let (s_scaled, mu, trace) = match res {
            Ok(r) => r,
            Err(e) => {
                outcome.warnings.push(format!("initialization {j}: {e}"));
                continue;
            }
        };
        outcome.traces.push(trace);
        let objective_value = objective(&data.window.mul_vec(&s_scaled))?;
        if objective_value < OBJECTIVE_FLOOR {
            continue;
        }
        let support: Vec<usize> = (0..n).filter(|&i| s_scaled[i] != 0.0).collect();
        let band = match cfg.band {
            BandKind::Fixed => Band::Fixed {
                mu: mu.unwrap_or(0.0).max(0.0),
            },
            BandKind::Moving { memory } => Band::Moving { memory },
        };
        let sa = StatArb {
            assets: support.iter().map(|&i| pm.assets()[i].clone()).collect(),
            shares: support.iter().map(|&i| s_scaled[i] / means[i]).collect(),
            band,
            train_start: pm.dates()[window_start].clone(),
            train_end: pm.dates()[train.end - 1].clone(),
            objective_value,
            leverage_used: support.iter().map(|&i| s_scaled[i].abs()).sum(),
        };
        let key = sa.asset_key();
        match best.get(&key) {
            Some(existing) if existing.objective_value >= sa.objective_value => {}
            _ => {
                best.insert(key, sa);
            }
        }
    }
    let mut stat_arbs: Vec<StatArb> = best.into_values().collect();
    stat_arbs.sort_by(|a, b| {
        b.objective_value
            .total_cmp(&a.objective_value)
            .then_with(|| a.asset_key().cmp(&b.asset_key()))
    });
    outcome.stat_arbs = stat_arbs;
    Ok(outcome)
}
