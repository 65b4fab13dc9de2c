use std::fs;

use statarb_core::backtest::{self, BacktestConfig, SpreadSource};
use statarb_core::ccp::{self, FinderConfig};
use statarb_core::market_data::{generate_synthetic, load_prices, load_spreads, SyntheticConfig};
use statarb_core::roll::{self, RollConfig};

#[test]
fn simulate_save_find_backtest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prices.csv");
    let pm = generate_synthetic(&SyntheticConfig {
        n_days: 600,
        ..SyntheticConfig::default()
    })
    .unwrap();
    pm.save(&path).unwrap();
    let loaded = load_prices(&path).unwrap();
    assert_eq!(loaded, pm);

    let cfg = FinderConfig::fixed(50.0);
    let found = ccp::find_stat_arbs_in(&loaded, 0..500, &cfg).unwrap();
    assert!(!found.stat_arbs.is_empty());
    for w in found.stat_arbs.windows(2) {
        assert!(w[0].objective_value >= w[1].objective_value);
    }

    let json = serde_json::to_string(&found.stat_arbs).unwrap();
    let back: Vec<ccp::StatArb> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, found.stat_arbs);

    let bt = BacktestConfig::for_band(cfg.band);
    let history = loaded.slice_rows(0, 500 + bt.eval_len()).unwrap();
    for sa in &found.stat_arbs {
        let res = backtest::run(sa, &history, &bt).unwrap();
        assert_eq!(res.len(), 84);
        assert_eq!(res.dates[0], loaded.dates()[500]);
        assert_eq!(*res.q.last().unwrap(), 0.0);
        let m = backtest::compute_metrics(&res, 250.0).unwrap();
        assert!(m.max_drawdown >= 0.0);
    }
}

#[test]
fn higher_spreads_never_help() {
    let pm = generate_synthetic(&SyntheticConfig {
        n_days: 600,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let cfg = FinderConfig::moving(100.0, 21);
    let found = ccp::find_stat_arbs_in(&pm, 0..400, &cfg).unwrap();
    assert!(!found.stat_arbs.is_empty());
    let history = pm.slice_rows(0, 400 + 146).unwrap();
    for sa in &found.stat_arbs {
        let mut last = f64::INFINITY;
        for spread in [0.0, 0.001, 0.005, 0.02] {
            let mut bt = BacktestConfig::for_band(cfg.band);
            bt.spread = SpreadSource::Relative(spread);
            bt.nav_floor_fraction = 0.0;
            let res = backtest::run(sa, &history, &bt).unwrap();
            assert!(res.profit() <= last + 1e-12);
            last = res.profit();
        }
    }
}

#[test]
fn spread_panel_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let pm = generate_synthetic(&SyntheticConfig {
        n_assets: 2,
        n_days: 120,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let mut text = String::from("date,A000,A001\n");
    for d in pm.dates() {
        text += &format!("{d},0.05,0.10\n");
    }
    let path = dir.path().join("spreads.csv");
    fs::write(&path, text).unwrap();
    let spreads = load_spreads(&path).unwrap();

    let sa = ccp::StatArb {
        assets: vec!["A000".into(), "A001".into()],
        shares: vec![1.0, -1.0],
        band: ccp::Band::Fixed { mu: 0.0 },
        train_start: String::new(),
        train_end: String::new(),
        objective_value: 0.0,
        leverage_used: 0.0,
    };
    let mut bt = BacktestConfig::frictionless(20, 5);
    bt.spread = SpreadSource::Panel(spreads);
    let res = backtest::run(&sa, &pm, &bt).unwrap();
    // the first day's trade crosses half of each spread
    let q1 = res.q[0];
    assert!((res.cost[0] - q1.abs() * (0.025 + 0.05)).abs() < 1e-12);
}

#[test]
fn roll_with_single_search_date() {
    let pm = generate_synthetic(&SyntheticConfig {
        n_days: 400,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let mut bt = BacktestConfig::for_band(ccp::BandKind::Fixed);
    bt.t_max = 30;
    let cfg = RollConfig {
        train_window: 250,
        stride: 10_000,
        ..RollConfig::new(FinderConfig::fixed(50.0), bt)
    };
    let out = roll::roll(&pm, &cfg).unwrap();
    assert_eq!(out.search_dates, vec![pm.dates()[250].clone()]);
    assert_eq!(out.active.len(), 51);
    assert!(out.active.iter().all(|(_, n)| *n == out.entries.len()));

    let short = pm.slice_rows(0, 260).unwrap();
    assert!(roll::roll(&short, &cfg).is_err());
}
