//! Two-phase tableau simplex applied to the dual of an inequality-form LP.
//!
//! The stat-arb subproblems have few variables (about 2n+1) and many rows
//! (about 2T), so the dual `min hᵀy, Gᵀy = c, y ≥ 0` has a short tableau:
//! one row per primal variable. Primal values are the simplex multipliers
//! of the dual, refined by solving the active rows directly at the end.
//!
//! Pivoting uses Dantzig's rule and falls back to Bland's rule after a run
//! of degenerate pivots, which rules out cycling.

use nalgebra::{DMatrix, DVector};

use super::{LpError, LpProblem, LpSolution, LpStatus};
use crate::matrix::{dot, Matrix};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_STREAK: usize = 10;

/// Solves `prob` to optimality, or reports infeasibility/unboundedness.
pub fn solve_lp(prob: &LpProblem) -> Result<LpSolution, LpError> {
    prob.validate()?;
    let (g, h) = inequality_rows(prob);
    let m = prob.n_vars();
    let k = h.len();

    // dual: min hᵀy  s.t.  Gᵀy = c, y ≥ 0
    let mut a = Matrix::zeros(m, k);
    for r in 0..k {
        for (j, &v) in g.row(r).iter().enumerate() {
            a.set(j, r, v);
        }
    }
    let mut tab = Tableau::new(&a, &prob.objective);
    let flip: Vec<f64> = prob
        .objective
        .iter()
        .map(|&c| if c < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let max_iter = 50 * (m + k + 10);

    match tab.phase_one(max_iter) {
        Phase::Optimal => {}
        Phase::IterationLimit => {
            return Err(LpError::IterationLimit {
                iterations: max_iter,
                last: vec![f64::NAN; m],
            })
        }
        Phase::Unbounded => unreachable!("phase one is bounded below"),
    }
    if !tab.phase_one_feasible() {
        // dual infeasible: primal is infeasible or unbounded
        let status = if primal_infeasible(&g, &h, max_iter)? {
            LpStatus::Infeasible
        } else {
            LpStatus::Unbounded
        };
        return Ok(not_optimal(status, m));
    }
    tab.drive_out_artificials();

    match tab.phase_two(&h, max_iter) {
        Phase::Optimal => {}
        Phase::Unbounded => return Ok(not_optimal(LpStatus::Infeasible, m)),
        Phase::IterationLimit => {
            let last = multipliers(&tab, &flip);
            return Err(LpError::IterationLimit {
                iterations: max_iter,
                last,
            });
        }
    }

    let mut x = multipliers(&tab, &flip);
    if let Some(refined) = refine(&tab, &g, &h) {
        if max_row_violation(&g, &h, &refined) <= max_row_violation(&g, &h, &x) {
            x = refined;
        }
    }
    let objective_value = dot(&prob.objective, &x);
    Ok(LpSolution {
        x,
        objective_value,
        status: LpStatus::Optimal,
    })
}

fn not_optimal(status: LpStatus, m: usize) -> LpSolution {
    LpSolution {
        x: vec![f64::NAN; m],
        objective_value: match status {
            LpStatus::Unbounded => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        },
        status,
    }
}

/// Rows of `A·x ≤ b` followed by one row per finite bound.
fn inequality_rows(prob: &LpProblem) -> (Matrix, Vec<f64>) {
    let m = prob.n_vars();
    let mut rows: Vec<Vec<f64>> = (0..prob.n_rows())
        .map(|r| prob.constraints.row(r).to_vec())
        .collect();
    let mut h = prob.rhs.clone();
    for j in 0..m {
        if prob.lower[j].is_finite() {
            let mut row = vec![0.0; m];
            row[j] = -1.0;
            rows.push(row);
            h.push(-prob.lower[j]);
        }
        if prob.upper[j].is_finite() {
            let mut row = vec![0.0; m];
            row[j] = 1.0;
            rows.push(row);
            h.push(prob.upper[j]);
        }
    }
    (Matrix::from_rows(&rows), h)
}

fn max_row_violation(g: &Matrix, h: &[f64], x: &[f64]) -> f64 {
    (0..g.nrows())
        .map(|r| dot(g.row(r), x) - h[r])
        .fold(0.0_f64, f64::max)
}

/// Farkas check: is there `y ≥ 0` with `Gᵀy = 0`, `hᵀy < 0`?
fn primal_infeasible(g: &Matrix, h: &[f64], max_iter: usize) -> Result<bool, LpError> {
    let (k, m) = (g.nrows(), g.ncols());
    let mut a = Matrix::zeros(m + 1, k);
    for r in 0..k {
        for (j, &v) in g.row(r).iter().enumerate() {
            a.set(j, r, v);
        }
        a.set(m, r, 1.0);
    }
    let mut rhs = vec![0.0; m + 1];
    rhs[m] = 1.0;
    let mut tab = Tableau::new(&a, &rhs);
    match tab.phase_one(max_iter) {
        Phase::Optimal => {}
        _ => {
            return Err(LpError::IterationLimit {
                iterations: max_iter,
                last: vec![f64::NAN; m],
            })
        }
    }
    if !tab.phase_one_feasible() {
        return Ok(false);
    }
    tab.drive_out_artificials();
    match tab.phase_two(h, max_iter) {
        Phase::Optimal => Ok(tab.objective_value(h) < -1e-9),
        Phase::Unbounded => Ok(true),
        Phase::IterationLimit => Err(LpError::IterationLimit {
            iterations: max_iter,
            last: vec![f64::NAN; m],
        }),
    }
}

fn multipliers(tab: &Tableau, flip: &[f64]) -> Vec<f64> {
    (0..tab.rows)
        .map(|i| -tab.reduced[tab.n_struct + i] * flip[i])
        .collect()
}

/// Re-solves the active primal rows `G_B x = h_B` when the basis is purely structural.
fn refine(tab: &Tableau, g: &Matrix, h: &[f64]) -> Option<Vec<f64>> {
    let m = tab.rows;
    if tab.basis.iter().any(|&b| b >= tab.n_struct) {
        return None;
    }
    let mut lhs = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, &b) in tab.basis.iter().enumerate() {
        for j in 0..m {
            lhs[(i, j)] = g.get(b, j);
        }
        rhs[i] = h[b];
    }
    let sol = lhs.lu().solve(&rhs)?;
    let x: Vec<f64> = sol.iter().copied().collect();
    x.iter().all(|v| v.is_finite()).then_some(x)
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Equality-form tableau `A·y = b, y ≥ 0` with one artificial column per row.
struct Tableau {
    rows: usize,
    n_struct: usize,
    width: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    /// −(objective value) of the current basis for the active cost.
    neg_obj: f64,
}

impl Tableau {
    fn new(a: &Matrix, b: &[f64]) -> Self {
        let (rows, n_struct) = (a.nrows(), a.ncols());
        let width = n_struct + rows;
        let mut data = vec![0.0; rows * width];
        let mut rhs = Vec::with_capacity(rows);
        for i in 0..rows {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let row = &mut data[i * width..(i + 1) * width];
            for (dst, &src) in row.iter_mut().zip(a.row(i)) {
                *dst = sign * src;
            }
            row[n_struct + i] = 1.0;
            rhs.push(sign * b[i]);
        }
        Self {
            rows,
            n_struct,
            width,
            a: data,
            rhs,
            basis: (n_struct..width).collect(),
            reduced: vec![0.0; width],
            neg_obj: 0.0,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    fn set_cost(&mut self, cost: &[f64]) {
        self.reduced.copy_from_slice(cost);
        self.neg_obj = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[r * self.width..(r + 1) * self.width];
            for (d, &v) in self.reduced.iter_mut().zip(row) {
                *d -= cb * v;
            }
            self.neg_obj -= cb * self.rhs[r];
        }
    }

    fn phase_one(&mut self, max_iter: usize) -> Phase {
        let mut cost = vec![0.0; self.width];
        for c in cost.iter_mut().skip(self.n_struct) {
            *c = 1.0;
        }
        self.set_cost(&cost);
        self.run(self.width, max_iter)
    }

    fn phase_one_feasible(&self) -> bool {
        let scale = 1.0 + self.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        -self.neg_obj <= 1e-9 * scale
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if self.basis[r] < self.n_struct {
                continue;
            }
            let best = (0..self.n_struct)
                .map(|c| (c, self.at(r, c).abs()))
                .filter(|&(_, v)| v > PIVOT_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((c, _)) = best {
                self.pivot(r, c);
            }
        }
    }

    fn phase_two(&mut self, struct_cost: &[f64], max_iter: usize) -> Phase {
        let mut cost = vec![0.0; self.width];
        cost[..self.n_struct].copy_from_slice(struct_cost);
        self.set_cost(&cost);
        self.run(self.n_struct, max_iter)
    }

    fn objective_value(&self, struct_cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .filter(|(&b, _)| b < self.n_struct)
            .map(|(&b, &v)| struct_cost[b] * v)
            .sum()
    }

    /// Minimizes the active cost; only columns `< enter_limit` may enter.
    fn run(&mut self, enter_limit: usize, max_iter: usize) -> Phase {
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate >= DEGENERATE_STREAK;
            let entering = if bland {
                (0..enter_limit).find(|&c| self.reduced[c] < -COST_TOL)
            } else {
                (0..enter_limit)
                    .filter(|&c| self.reduced[c] < -COST_TOL)
                    .min_by(|&a, &b| self.reduced[a].total_cmp(&self.reduced[b]))
            };
            let Some(e) = entering else {
                return Phase::Optimal;
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let v = self.at(r, e);
                if v <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[r].max(0.0) / v;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((l, ratio)) = leave else {
                return Phase::Unbounded;
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(l, e);
        }
        Phase::IterationLimit
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.at(r, c);
        {
            let row = &mut self.a[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[c] = 1.0;
        }
        self.rhs[r] /= p;
        let pivot_row: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i].abs() < 1e-13 {
                self.rhs[i] = 0.0;
            }
        }
        let f = self.reduced[c];
        if f != 0.0 {
            for (d, &pv) in self.reduced.iter_mut().zip(&pivot_row) {
                *d -= f * pv;
            }
            self.reduced[c] = 0.0;
            self.neg_obj -= f * pivot_rhs;
        }
        self.basis[r] = c;
    }
}
