//! Discovery and evaluation of statistical-arbitrage portfolios.
//!
//! A stat-arb is a share vector whose portfolio price stays inside a band of
//! width two while moving across it as much as possible. [`ccp`] finds such
//! portfolios by repeatedly linearizing the (convex) price-variation objective
//! and solving the resulting [`lp`]; [`backtest`] trades them out of sample
//! with the linear policy in [`trading`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod ccp;
pub mod lp;
pub mod market_data;
pub mod matrix;
pub mod roll;
pub mod trading;

pub use matrix::Matrix;
