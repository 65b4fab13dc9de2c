//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every reference value is computed here by an independent method.

use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statarb_core::backtest::{self, BacktestConfig, BacktestResult, SpreadSource};
use statarb_core::ccp::{self, Band, BandKind, FinderConfig, StatArb};
use statarb_core::lp::{solve_lp, LpProblem, LpStatus};
use statarb_core::market_data::{generate_synthetic, PriceMatrix, SpreadMatrix, SyntheticConfig};
use statarb_core::roll::{self, RollConfig};
use statarb_core::Matrix;

const GRADIENT_TOL: f64 = 1e-6;
const ASCENT_SLACK: f64 = 1e-9;
const CONVERGED_FRACTION: f64 = 0.9;
const FEASIBILITY_TOL: f64 = 1e-6;
const LP_TOL: f64 = 1e-8;
const PROFIT_TOL: f64 = 1e-9;
const LEDGER_TOL: f64 = 1e-9;
const ETA: f64 = 0.05;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn synthetic(n_days: usize, seed: u64) -> PriceMatrix {
    generate_synthetic(&SyntheticConfig {
        n_assets: 10,
        n_days,
        n_common_trends: 2,
        seed,
        ..SyntheticConfig::default()
    })
    .expect("synthetic panel")
}

fn portfolio(pm: &PriceMatrix, sa: &StatArb) -> Vec<f64> {
    let cols: Vec<usize> = sa
        .assets
        .iter()
        .map(|a| pm.assets().iter().position(|b| b == a).unwrap())
        .collect();
    (0..pm.n_days())
        .map(|t| {
            cols.iter()
                .zip(&sa.shares)
                .map(|(&c, s)| pm.prices().get(t, c) * s)
                .sum()
        })
        .collect()
}

fn row_of(pm: &PriceMatrix, date: &str) -> usize {
    pm.dates().iter().position(|d| d == date).unwrap()
}

/// Column means of the training rows for the stat-arb's assets.
fn training_means(pm: &PriceMatrix, sa: &StatArb) -> Vec<f64> {
    let (a, b) = (row_of(pm, &sa.train_start), row_of(pm, &sa.train_end));
    sa.assets
        .iter()
        .map(|name| {
            let c = pm.assets().iter().position(|x| x == name).unwrap();
            (a..=b).map(|t| pm.prices().get(t, c)).sum::<f64>() / (b - a + 1) as f64
        })
        .collect()
}

/// Panel extended by `extra` copies of its last row on following days.
fn extend_flat(pm: &PriceMatrix, extra: usize) -> PriceMatrix {
    let last = NaiveDate::parse_from_str(pm.dates().last().unwrap(), "%Y-%m-%d").unwrap();
    let mut dates = pm.dates().to_vec();
    let mut rows: Vec<Vec<f64>> = (0..pm.n_days()).map(|t| pm.row(t).to_vec()).collect();
    for k in 1..=extra {
        dates.push(
            last.checked_add_days(Days::new(k as u64))
                .unwrap()
                .format("%Y-%m-%d")
                .to_string(),
        );
        rows.push(rows[pm.n_days() - 1].clone());
    }
    PriceMatrix::new(dates, pm.assets().to_vec(), Matrix::from_rows(&rows)).unwrap()
}

// ---------------------------------------------------------------- 1

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let p: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = ccp::gradient(&p).unwrap();
        let norm = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..p.len() {
            let h = 1e-5;
            let mut up = p.clone();
            up[i] += h;
            let mut dn = p.clone();
            dn[i] -= h;
            let fd = (ccp::objective(&up).unwrap() - ccp::objective(&dn).unwrap()) / (2.0 * h);
            worst = worst.max((g[i] - fd).abs() / norm);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= GRADIENT_TOL && elapsed < Duration::from_secs(1),
        format!(
            "max relative error {worst:.2e} (tol {GRADIENT_TOL:.0e}), {elapsed:.2?} (limit 1s)"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn monotone_ascent() -> Outcome {
    let mut runs = 0;
    let mut converged = 0;
    let mut worst_drop = 0.0_f64;
    for inst in 0..20 {
        let pm = synthetic(250, 100 + inst);
        let cfg = FinderConfig {
            seed: inst,
            ..FinderConfig::fixed(50.0)
        };
        let out = ccp::find_stat_arbs(&pm, &cfg).unwrap();
        for tr in &out.traces {
            runs += 1;
            if tr.converged && tr.iterations <= 50 {
                converged += 1;
            }
            for w in tr.objectives.windows(2) {
                worst_drop = worst_drop.max(w[0] - w[1]);
            }
        }
    }
    let frac = converged as f64 / runs as f64;
    outcome(
        worst_drop <= ASCENT_SLACK && frac >= CONVERGED_FRACTION && runs == 200,
        format!(
            "{runs} runs on 20 instances, largest decrease {worst_drop:.2e} (slack {ASCENT_SLACK:.0e}), \
             {:.1}% converged within 50 iterations (need {:.0}%)",
            100.0 * frac,
            100.0 * CONVERGED_FRACTION
        ),
    )
}

// ---------------------------------------------------------------- 3, 11

struct Found {
    pm: PriceMatrix,
    stat_arbs: Vec<StatArb>,
    leverage_limit: f64,
}

fn found_sets() -> Vec<Found> {
    let mut sets = Vec::new();
    for inst in 0..6 {
        let pm = synthetic(250, 300 + inst);
        for cfg in [FinderConfig::fixed(10.0), FinderConfig::moving(20.0, 21)] {
            let cfg = FinderConfig { seed: inst, ..cfg };
            let stat_arbs = ccp::find_stat_arbs(&pm, &cfg).unwrap().stat_arbs;
            sets.push(Found {
                pm: pm.clone(),
                stat_arbs,
                leverage_limit: cfg.leverage_limit,
            });
        }
    }
    sets
}

fn band_violation(pm: &PriceMatrix, sa: &StatArb) -> f64 {
    let p = portfolio(pm, sa);
    let (a, b) = (row_of(pm, &sa.train_start), row_of(pm, &sa.train_end));
    let mut worst = 0.0_f64;
    for t in a..=b {
        let mu = match sa.band {
            Band::Fixed { mu } => {
                worst = worst.max(-mu);
                mu
            }
            Band::Moving { memory } => p[t + 1 - memory..=t].iter().sum::<f64>() / memory as f64,
        };
        worst = worst.max((p[t] - mu).abs() - 1.0);
    }
    worst
}

fn feasibility(sets: &[Found]) -> Outcome {
    let mut count = [0usize; 2];
    let mut band_worst = 0.0_f64;
    let mut lev_worst = 0.0_f64;
    for f in sets {
        for sa in &f.stat_arbs {
            count[matches!(sa.band, Band::Moving { .. }) as usize] += 1;
            band_worst = band_worst.max(band_violation(&f.pm, sa));
            let means = training_means(&f.pm, sa);
            let lev: f64 = sa.shares.iter().zip(&means).map(|(s, m)| s.abs() * m).sum();
            lev_worst = lev_worst.max(lev - f.leverage_limit);
        }
    }
    outcome(
        band_worst <= FEASIBILITY_TOL
            && lev_worst <= FEASIBILITY_TOL
            && count[0] > 0
            && count[1] > 0,
        format!(
            "{} fixed and {} moving stat-arbs, band violation {band_worst:.2e}, \
             leverage excess {lev_worst:.2e} (tol {FEASIBILITY_TOL:.0e})",
            count[0], count[1]
        ),
    )
}

fn cleanup_postcondition(sets: &[Found]) -> Outcome {
    let mut smallest = f64::INFINITY;
    let mut n = 0;
    for f in sets {
        for sa in &f.stat_arbs {
            let means = training_means(&f.pm, sa);
            let parts: Vec<f64> = sa
                .shares
                .iter()
                .zip(&means)
                .map(|(s, m)| s.abs() * m)
                .collect();
            let total: f64 = parts.iter().sum();
            for p in parts {
                smallest = smallest.min(p / total);
            }
            n += 1;
        }
    }
    outcome(
        n > 0 && smallest > ETA,
        format!("{n} stat-arbs, smallest leverage share {smallest:.4} (must exceed {ETA})"),
    )
}

// ---------------------------------------------------------------- 4

#[derive(Debug, PartialEq, Clone, Copy)]
enum Oracle {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Brute force over all vertices and extreme rays of `{x : A x ≤ b}`,
/// which must be pointed.
fn enumerate(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Oracle {
    let n = c.len();
    let m = a.len();
    let feasible = |x: &DVector<f64>| {
        (0..m).all(|i| (0..n).map(|j| a[i][j] * x[j]).sum::<f64>() <= b[i] + 1e-9)
    };
    let mut best: Option<f64> = None;
    for subset in combinations(m, n) {
        let mat = DMatrix::from_fn(n, n, |r, col| a[subset[r]][col]);
        let svd = mat.clone().svd(false, false);
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if smin < 1e-9 {
            continue;
        }
        let rhs = DVector::from_fn(n, |r, _| b[subset[r]]);
        let Some(x) = mat.lu().solve(&rhs) else {
            continue;
        };
        if feasible(&x) {
            let v: f64 = (0..n).map(|j| c[j] * x[j]).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    let Some(best) = best else {
        return Oracle::Infeasible;
    };
    // extreme rays: one-dimensional solutions of n − 1 tight homogeneous rows
    for subset in combinations(m, n - 1) {
        let mut mat = DMatrix::zeros(n, n);
        for (r, &i) in subset.iter().enumerate() {
            for j in 0..n {
                mat[(r, j)] = a[i][j];
            }
        }
        let svd = mat.svd(false, true);
        let v_t = svd.v_t.unwrap();
        let zero: Vec<usize> = (0..n).filter(|&k| svd.singular_values[k] < 1e-9).collect();
        if zero.len() != 1 {
            continue;
        }
        let d: Vec<f64> = (0..n).map(|j| v_t[(zero[0], j)]).collect();
        for sign in [1.0, -1.0] {
            let dir: Vec<f64> = d.iter().map(|v| sign * v).collect();
            let in_cone = (0..m).all(|i| (0..n).map(|j| a[i][j] * dir[j]).sum::<f64>() <= 1e-9);
            let gain: f64 = (0..n).map(|j| c[j] * dir[j]).sum();
            if in_cone && gain > 1e-9 {
                return Oracle::Unbounded;
            }
        }
    }
    Oracle::Optimal(best)
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

fn lp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    let mut disagreements = 0;
    let mut tally = [0usize; 3];
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let rows = rng.random_range(1..=12 - n);
        let a: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let b: Vec<f64> = (0..rows).map(|_| rng.random_range(-0.5..2.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..0.0)).collect();
        let upper: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(0.5..3.0)
                } else {
                    f64::INFINITY
                }
            })
            .collect();

        // bounds become explicit rows for the oracle, which makes it pointed
        let mut oa = a.clone();
        let mut ob = b.clone();
        for j in 0..n {
            let mut row = vec![0.0; n];
            row[j] = -1.0;
            oa.push(row);
            ob.push(-lower[j]);
            if upper[j].is_finite() {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                oa.push(row);
                ob.push(upper[j]);
            }
        }
        let expected = enumerate(&oa, &ob, &c);

        let lp = LpProblem::new(c.clone(), Matrix::from_rows(&a), b.clone())
            .and_then(|p| p.with_bounds(lower.clone(), upper.clone()))
            .unwrap();
        let sol = solve_lp(&lp).unwrap();
        match (expected, sol.status) {
            (Oracle::Optimal(v), LpStatus::Optimal) => {
                tally[0] += 1;
                let err = (v - sol.objective_value).abs();
                worst = worst.max(err);
                if err > LP_TOL {
                    disagreements += 1;
                }
            }
            (Oracle::Infeasible, LpStatus::Infeasible) => tally[1] += 1,
            (Oracle::Unbounded, LpStatus::Unbounded) => tally[2] += 1,
            _ => disagreements += 1,
        }
    }
    outcome(
        disagreements == 0,
        format!(
            "100 LPs ({} optimal, {} infeasible, {} unbounded), {disagreements} disagreements, \
             max value error {worst:.2e} (tol {LP_TOL:.0e})",
            tally[0], tally[1], tally[2]
        ),
    )
}

// ---------------------------------------------------------------- 5, 6

/// Frictionless backtest of a fixed band over the training rows
/// `first..=last` of `pm`; row `first − 1` supplies `P₀`.
fn in_sample(pm: &PriceMatrix, sa: &StatArb, first: usize, last: usize) -> BacktestResult {
    let t = last - first + 1;
    let cut = pm.slice_rows(0, last + 1).unwrap();
    let panel = extend_flat(&cut, 2);
    assert!(first >= 1);
    let cfg = BacktestConfig::frictionless(t + 1, 1);
    backtest::run(
        sa,
        &panel.slice_rows(first - 1, panel.n_days()).unwrap(),
        &cfg,
    )
    .unwrap()
}

fn profit_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    for k in 0..20 {
        let pm = synthetic(121, 500 + k);
        let n_pick = rng.random_range(2..=4);
        let mut idx: Vec<usize> = (0..10).collect();
        for i in 0..n_pick {
            let j = rng.random_range(i..10);
            idx.swap(i, j);
        }
        let raw: Vec<f64> = (0..n_pick).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p_raw: Vec<f64> = (1..pm.n_days())
            .map(|t| {
                idx[..n_pick]
                    .iter()
                    .zip(&raw)
                    .map(|(&c, s)| pm.prices().get(t, c) * s)
                    .sum()
            })
            .collect();
        let (lo, hi) = p_raw
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        // scale so the training prices span exactly the band
        let scale = 2.0 / (hi - lo);
        let sa = StatArb {
            assets: idx[..n_pick]
                .iter()
                .map(|&c| pm.assets()[c].clone())
                .collect(),
            shares: raw.iter().map(|s| s * scale).collect(),
            band: Band::Fixed {
                mu: (hi + lo) / 2.0 * scale,
            },
            train_start: pm.dates()[1].clone(),
            train_end: pm.dates()[pm.n_days() - 1].clone(),
            objective_value: 0.0,
            leverage_used: 0.0,
        };
        let p = portfolio(&pm, &sa);
        let Band::Fixed { mu } = sa.band else {
            unreachable!()
        };
        let train = &p[1..];
        assert!(train.iter().all(|v| (v - mu).abs() <= 1.0 + 1e-12));
        let obj: f64 = train.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        let expected =
            0.5 * obj + ((train[0] - mu).powi(2) - (train[train.len() - 1] - mu).powi(2)) / 2.0;
        let res = in_sample(&pm, &sa, 1, pm.n_days() - 1);
        worst = worst.max((res.profit() - expected).abs());
    }
    outcome(
        worst <= PROFIT_TOL,
        format!("20 random feasible portfolios, max |profit − identity| {worst:.2e} (tol {PROFIT_TOL:.0e})"),
    )
}

fn profit_lower_bound() -> Outcome {
    let mut checked = 0;
    let mut min_profit = f64::INFINITY;
    for inst in 0..10 {
        let pm = synthetic(251, 700 + inst);
        for lev in [5.0, 20.0] {
            let cfg = FinderConfig {
                seed: inst,
                ..FinderConfig::fixed(lev)
            };
            let out = ccp::find_stat_arbs_in(&pm, 1..pm.n_days(), &cfg).unwrap();
            for sa in out.stat_arbs.iter().filter(|s| s.objective_value > 1.0) {
                let res = in_sample(&pm, sa, 1, pm.n_days() - 1);
                min_profit = min_profit.min(res.profit());
                checked += 1;
            }
        }
    }
    outcome(
        checked > 0 && min_profit > 0.0,
        format!("{checked} fixed-band stat-arbs with objective > 1, smallest in-sample profit {min_profit:.4}"),
    )
}

// ---------------------------------------------------------------- 7

fn synthetic_recovery() -> Outcome {
    let start = Instant::now();
    let pm = generate_synthetic(&SyntheticConfig::default()).unwrap();
    let cfg = FinderConfig {
        n_initializations: 10,
        seed: 7,
        ..FinderConfig::fixed(50.0)
    };
    let out = ccp::find_stat_arbs(&pm, &cfg).unwrap();
    let elapsed = start.elapsed();
    let good = out
        .stat_arbs
        .iter()
        .filter(|s| s.objective_value >= 1.0)
        .count();
    let best = out.stat_arbs.first().map_or(0.0, |s| s.objective_value);
    outcome(
        good >= 1 && elapsed < Duration::from_secs(60),
        format!(
            "n={} T={} with {} stat-arbs of objective >= 1 (best {best:.3}), {elapsed:.2?} (limit 60s)",
            pm.n_assets(),
            pm.n_days(),
            good
        ),
    )
}

// ---------------------------------------------------------------- 8

/// Exactly rounded sum of floats.
fn exact_sum(values: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for &v in values {
        let mut x = v;
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    // round the expansion, most significant first, with half-way correction
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

fn ledger_identity() -> Outcome {
    let mut runs = 0;
    let mut worst = 0.0_f64;
    let mut telescoping_failures = 0;
    let mut terminated = 0;
    for inst in 0..6 {
        let pm = synthetic(500, 900 + inst);
        let spreads = SpreadMatrix::new(
            pm.dates().to_vec(),
            pm.assets().to_vec(),
            Matrix::from_rows(
                &(0..pm.n_days())
                    .map(|t| pm.row(t).iter().map(|p| 0.002 * p).collect())
                    .collect::<Vec<Vec<f64>>>(),
            ),
        )
        .unwrap();
        for finder in [FinderConfig::fixed(10.0), FinderConfig::moving(20.0, 21)] {
            let finder = FinderConfig {
                seed: inst,
                ..finder
            };
            let train = 0..250;
            let out = ccp::find_stat_arbs_in(&pm, train, &finder).unwrap();
            for sa in &out.stat_arbs {
                for (k, spread) in [
                    SpreadSource::Relative(0.001),
                    SpreadSource::Panel(spreads.clone()),
                ]
                .into_iter()
                .enumerate()
                {
                    let mut cfg = BacktestConfig::for_band(finder.band);
                    cfg.spread = spread;
                    if k == 1 {
                        // tight floor and small capital to exercise liquidation
                        cfg.nu = 0.05;
                        cfg.nav_floor_fraction = 0.9;
                    }
                    let history = pm.slice_rows(0, 250 + cfg.eval_len()).unwrap();
                    let res = backtest::run(sa, &history, &cfg).unwrap();
                    runs += 1;
                    terminated += res.terminated_early.is_some() as usize;
                    let mut v_prev = res.initial_cash;
                    let mut q_prev = 0.0;
                    let mut p_prev = res.initial_price;
                    let mut diffs = Vec::with_capacity(res.len());
                    for t in 0..res.len() {
                        let lhs = res.nav[t] - v_prev;
                        let rhs = q_prev * (res.p[t] - p_prev) - res.cost[t];
                        worst = worst.max((lhs - rhs).abs());
                        diffs.push(lhs);
                        v_prev = res.nav[t];
                        q_prev = res.q[t];
                        p_prev = res.p[t];
                    }
                    if exact_sum(&diffs) != res.nav[res.len() - 1] - res.initial_cash {
                        telescoping_failures += 1;
                    }
                }
            }
        }
    }
    outcome(
        runs > 0 && worst <= LEDGER_TOL && telescoping_failures == 0,
        format!(
            "{runs} backtests ({terminated} liquidated), max |ΔV − (q_(t−1)Δp − φ)| {worst:.2e} \
             (tol {LEDGER_TOL:.0e}), {telescoping_failures} inexact telescoping sums"
        ),
    )
}

// ---------------------------------------------------------------- 9

fn drawdown_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for _ in 0..50 {
        let t = rng.random_range(2..200);
        let mut v = 1.0;
        let nav: Vec<f64> = (0..t)
            .map(|_| {
                v *= 1.0 + rng.random_range(-0.05..0.05);
                v
            })
            .collect();
        let mut brute = 0.0_f64;
        for i in 0..t {
            for j in i + 1..t {
                brute = brute.max(nav[i] / nav[j] - 1.0);
            }
        }
        let n = nav.len();
        let res = BacktestResult {
            dates: vec![String::new(); n],
            q: vec![0.0; n],
            p: vec![0.0; n],
            midpoint: vec![0.0; n],
            cash: nav.clone(),
            cost: vec![0.0; n],
            ret: nav.iter().map(|v| v - 1.0).collect(),
            nav,
            initial_cash: 1.0,
            initial_price: 0.0,
            terminated_early: None,
        };
        let m = backtest::compute_metrics(&res, 250.0).unwrap();
        if m.max_drawdown != brute {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("50 random NAV series, {mismatches} differ from the O(T²) scan"),
    )
}

// ---------------------------------------------------------------- 10

fn determinism() -> Outcome {
    let pm = synthetic(420, 11);
    let find_json = || {
        let cfg = FinderConfig {
            seed: 42,
            ..FinderConfig::fixed(50.0)
        };
        serde_json::to_string_pretty(&ccp::find_stat_arbs(&pm, &cfg).unwrap().stat_arbs).unwrap()
    };
    let roll_json = || {
        let finder = FinderConfig {
            seed: 42,
            n_initializations: 5,
            ..FinderConfig::fixed(50.0)
        };
        let mut bt = BacktestConfig::for_band(BandKind::Fixed);
        bt.t_max = 40;
        let cfg = RollConfig {
            train_window: 250,
            ..RollConfig::new(finder, bt)
        };
        let out = roll::roll(&pm, &cfg).unwrap();
        let mut text = serde_json::to_string_pretty(&out.stat_arbs()).unwrap();
        text += &serde_json::to_string_pretty(&out.metrics_records()).unwrap();
        text += &serde_json::to_string_pretty(&out.summary()).unwrap();
        (text, out.entries.len())
    };
    let (f1, f2) = (find_json(), find_json());
    let ((r1, n), (r2, _)) = (roll_json(), roll_json());
    outcome(
        f1 == f2 && r1 == r2 && n > 0,
        format!(
            "find: {} bytes, identical: {}; roll: {} bytes over {n} stat-arbs, identical: {}",
            f1.len(),
            f1 == f2,
            r1.len(),
            r1 == r2
        ),
    )
}

fn main() {
    let start = Instant::now();
    let sets = found_sets();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 gradient check", gradient_check()),
        ("2 monotone ascent", monotone_ascent()),
        ("3 feasibility", feasibility(&sets)),
        ("4 LP oracle", lp_oracle()),
        ("5 profit identity", profit_identity()),
        ("6 profit lower bound", profit_lower_bound()),
        ("7 synthetic recovery", synthetic_recovery()),
        ("8 ledger identity", ledger_identity()),
        ("9 drawdown oracle", drawdown_oracle()),
        ("10 determinism", determinism()),
        ("11 cleanup postcondition", cleanup_postcondition(&sets)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += (!o.pass) as usize;
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.2?}",
        results.len() - failed,
        start.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
