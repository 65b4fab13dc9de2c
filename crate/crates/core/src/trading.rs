//! Linear band-trading policy with a time-based linear exit.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TradingError {
    #[error("expected {expected} prices, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("invalid policy parameters: {0}")]
    Invalid(String),
}

/// Mean of the last `memory` prices (newest last).
pub fn trailing_mean(recent_prices: &[f64], memory: usize) -> Result<f64, TradingError> {
    if memory == 0 || recent_prices.len() != memory {
        return Err(TradingError::WrongLength {
            expected: memory,
            got: recent_prices.len(),
        });
    }
    Ok(recent_prices.iter().sum::<f64>() / memory as f64)
}

/// Holding multiplier `μ_t − p_t`.
#[inline]
pub fn target_quantity(midpoint: f64, price: f64) -> f64 {
    midpoint - price
}

/// Scales `q_base` by `1 − α_t` with `α_t = (t + 1 − T_max) / T_exit` on the
/// ramp days `T_max ≤ t ≤ T_max + T_exit − 1`; passes it through before and
/// returns zero after. Days are numbered from 1.
pub fn exit_ramp(q_base: f64, t: usize, t_max: usize, t_exit: usize) -> f64 {
    if t < t_max {
        return q_base;
    }
    if t_exit == 0 || t >= t_max + t_exit {
        return 0.0;
    }
    let alpha = (t + 1 - t_max) as f64 / t_exit as f64;
    if alpha >= 1.0 {
        0.0
    } else {
        (1.0 - alpha) * q_base
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Midpoint {
    Fixed(f64),
    Trailing {
        memory: usize,
        buffer: VecDeque<f64>,
    },
}

/// Per-backtest policy state: band midpoint, day counter and exit schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    midpoint: Midpoint,
    day_index: usize,
    t_max: usize,
    t_exit: usize,
}

impl PolicyState {
    pub fn fixed(mu: f64, t_max: usize, t_exit: usize) -> Result<Self, TradingError> {
        check_schedule(t_exit)?;
        Ok(Self {
            midpoint: Midpoint::Fixed(mu),
            day_index: 0,
            t_max,
            t_exit,
        })
    }

    /// Moving band seeded with the `memory − 1` portfolio prices preceding
    /// the first trading day.
    pub fn moving(
        memory: usize,
        warmup: &[f64],
        t_max: usize,
        t_exit: usize,
    ) -> Result<Self, TradingError> {
        check_schedule(t_exit)?;
        if memory == 0 {
            return Err(TradingError::Invalid("memory must be at least 1".into()));
        }
        if warmup.len() != memory - 1 {
            return Err(TradingError::WrongLength {
                expected: memory - 1,
                got: warmup.len(),
            });
        }
        let mut buffer = VecDeque::with_capacity(memory);
        buffer.extend(warmup.iter().copied());
        Ok(Self {
            midpoint: Midpoint::Trailing { memory, buffer },
            day_index: 0,
            t_max,
            t_exit,
        })
    }

    /// Day number of the most recent [`step`](Self::step), from 1.
    pub fn day_index(&self) -> usize {
        self.day_index
    }

    /// Advances one day with portfolio price `price`, returning `(μ_t, q_t)`.
    pub fn step(&mut self, price: f64) -> (f64, f64) {
        self.day_index += 1;
        let mu = match &mut self.midpoint {
            Midpoint::Fixed(mu) => *mu,
            Midpoint::Trailing { memory, buffer } => {
                if buffer.len() == *memory {
                    buffer.pop_front();
                }
                buffer.push_back(price);
                buffer.iter().sum::<f64>() / buffer.len() as f64
            }
        };
        let q = exit_ramp(
            target_quantity(mu, price),
            self.day_index,
            self.t_max,
            self.t_exit,
        );
        (mu, q)
    }
}

fn check_schedule(t_exit: usize) -> Result<(), TradingError> {
    if t_exit == 0 {
        return Err(TradingError::Invalid("T_exit must be at least 1".into()));
    }
    Ok(())
}
