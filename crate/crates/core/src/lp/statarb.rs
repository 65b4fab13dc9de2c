//! Linearized band subproblems solved at each convex-concave iteration.

use super::{LpError, LpProblem, VarRole};
use crate::matrix::Matrix;

fn gradient_scale(gradient: &[f64]) -> f64 {
    gradient.iter().fold(1.0_f64, |m, g| m.max(g.abs()))
}

fn check_common(gradient: &[f64], window_len: usize, leverage_limit: f64) -> Result<(), LpError> {
    if window_len < 2 {
        return Err(LpError::Malformed(format!(
            "band problem needs at least 2 in-window days, got {window_len}"
        )));
    }
    if gradient.len() != window_len {
        return Err(LpError::Malformed(format!(
            "gradient has length {}, window has {window_len} days",
            gradient.len()
        )));
    }
    if !(leverage_limit > 0.0) || !leverage_limit.is_finite() {
        return Err(LpError::Malformed("leverage limit must be positive".into()));
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(LpError::Malformed("non-finite gradient".into()));
    }
    Ok(())
}

/// Appends `s_i - u_i ≤ 0`, `-s_i - u_i ≤ 0` and `Σu ≤ L`.
fn push_leverage_rows(
    rows: &mut Vec<Vec<f64>>,
    rhs: &mut Vec<f64>,
    n: usize,
    s_offset: usize,
    u_offset: usize,
    width: usize,
    leverage_limit: f64,
) {
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; width];
            row[s_offset + i] = sign;
            row[u_offset + i] = -1.0;
            rows.push(row);
            rhs.push(0.0);
        }
    }
    let mut row = vec![0.0; width];
    for v in &mut row[u_offset..u_offset + n] {
        *v = 1.0;
    }
    rows.push(row);
    rhs.push(leverage_limit);
}

/// Fixed-band subproblem over `x = (s, μ, u)`:
///
/// maximize `gᵀ(P·s)` subject to `|P_t·s − μ| ≤ 1`, `u ≥ ±s`, `Σu ≤ L`, `μ ≥ 0`,
/// with `g` divided by `max(1, ‖g‖∞)`.
pub fn build_fixed_band_lp(
    scaled_prices: &Matrix,
    gradient: &[f64],
    leverage_limit: f64,
) -> Result<LpProblem, LpError> {
    let (t_len, n) = (scaled_prices.nrows(), scaled_prices.ncols());
    check_common(gradient, t_len, leverage_limit)?;
    let width = 2 * n + 1;
    let mu = n;
    let u0 = n + 1;

    let scale = gradient_scale(gradient);
    let g: Vec<f64> = gradient.iter().map(|v| v / scale).collect();
    let mut objective = scaled_prices.tr_mul_vec(&g);
    objective.extend(std::iter::repeat_n(0.0, n + 1));

    let mut rows = Vec::with_capacity(2 * t_len + 2 * n + 1);
    let mut rhs = Vec::with_capacity(rows.capacity());
    for t in 0..t_len {
        let p = scaled_prices.row(t);
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; width];
            for (dst, &v) in row.iter_mut().zip(p) {
                *dst = sign * v;
            }
            row[mu] = -sign;
            rows.push(row);
            rhs.push(1.0);
        }
    }
    push_leverage_rows(&mut rows, &mut rhs, n, 0, u0, width, leverage_limit);

    let mut lower = vec![f64::NEG_INFINITY; width];
    lower[mu] = 0.0;
    let labels = (0..n)
        .map(VarRole::Holding)
        .chain(std::iter::once(VarRole::Midpoint))
        .chain((0..n).map(VarRole::AbsAux))
        .collect();
    let prob = LpProblem {
        objective,
        constraints: Matrix::from_rows(&rows),
        rhs,
        lower,
        upper: vec![f64::INFINITY; width],
        labels,
    };
    prob.validate()?;
    Ok(prob)
}

/// Coefficients `r_t` with `p_t − μ_t = r_t·s` for each in-window day, where
/// `μ_t` is the mean of the last `memory` portfolio prices (inclusive).
/// The first `memory − 1` rows of `prices_with_warmup` are warmup.
pub fn moving_band_residuals(
    prices_with_warmup: &Matrix,
    memory: usize,
) -> Result<Matrix, LpError> {
    if memory == 0 {
        return Err(LpError::Malformed("memory must be at least 1".into()));
    }
    let total = prices_with_warmup.nrows();
    let n = prices_with_warmup.ncols();
    if total < memory + 1 {
        return Err(LpError::Malformed(format!(
            "moving band with memory {memory} needs {} warmup rows plus at least 2 window rows, got {total} rows",
            memory - 1
        )));
    }
    let t_len = total - (memory - 1);
    let inv = 1.0 / memory as f64;
    let mut out = Matrix::zeros(t_len, n);
    for t in 0..t_len {
        let w = t + memory - 1;
        let row = out.row_mut(t);
        row.copy_from_slice(prices_with_warmup.row(w));
        for tau in (w + 1 - memory)..=w {
            for (r, &v) in row.iter_mut().zip(prices_with_warmup.row(tau)) {
                *r -= inv * v;
            }
        }
    }
    Ok(out)
}

/// Moving-band subproblem over `x = (s, u)`; the midpoint is eliminated
/// since it is linear in `s`.
pub fn build_moving_band_lp(
    prices_with_warmup: &Matrix,
    gradient: &[f64],
    leverage_limit: f64,
    memory: usize,
) -> Result<LpProblem, LpError> {
    let residuals = moving_band_residuals(prices_with_warmup, memory)?;
    let (t_len, n) = (residuals.nrows(), residuals.ncols());
    check_common(gradient, t_len, leverage_limit)?;
    let width = 2 * n;
    let window = prices_with_warmup.slice_rows(memory - 1, prices_with_warmup.nrows());

    let scale = gradient_scale(gradient);
    let g: Vec<f64> = gradient.iter().map(|v| v / scale).collect();
    let mut objective = window.tr_mul_vec(&g);
    objective.extend(std::iter::repeat_n(0.0, n));

    let mut rows = Vec::with_capacity(2 * t_len + 2 * n + 1);
    let mut rhs = Vec::with_capacity(rows.capacity());
    for t in 0..t_len {
        let r = residuals.row(t);
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; width];
            for (dst, &v) in row.iter_mut().zip(r) {
                *dst = sign * v;
            }
            rows.push(row);
            rhs.push(1.0);
        }
    }
    push_leverage_rows(&mut rows, &mut rhs, n, 0, n, width, leverage_limit);

    let labels = (0..n)
        .map(VarRole::Holding)
        .chain((0..n).map(VarRole::AbsAux))
        .collect();
    let prob = LpProblem {
        objective,
        constraints: Matrix::from_rows(&rows),
        rhs,
        lower: vec![f64::NEG_INFINITY; width],
        upper: vec![f64::INFINITY; width],
        labels,
    };
    prob.validate()?;
    Ok(prob)
}
