//! Primal/dual linear programs over a [`ConstraintSystem`] and the
//! cost-perturbation uniqueness probe.
//!
//! Both bound problems are solved through their duals, which are already in
//! standard equality form:
//!
//! ```text
//! ask:  min c'v  s.t. Bv >= b    <->   max b'x  s.t. B'x = c, x >= 0
//! bid:  max c'v  s.t. Bv <= b    <->   min b'x  s.t. B'x = c, x >= 0
//! ```
//!
//! A two-phase tableau simplex with Bland's rule finds an optimal basis of
//! the dual; the free primal vector solves `A_B' v = b_B` on that basis.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::lattice::ConstraintSystem;
use crate::market::Side;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;
/// Duality-gap tolerance.
pub const GAP_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

/// Solver output. `variables` is `v` for the ask side and `ṽ` for the bid
/// side; both vectors are empty unless the status is optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub variables: DVector<f64>,
    pub dual: DVector<f64>,
    pub objective: f64,
    /// Constraint rows (0-based) whose dual variables are basic.
    pub basis: Vec<usize>,
}

impl LpSolution {
    fn failed(status: LpStatus) -> Self {
        Self { status, variables: DVector::zeros(0), dual: DVector::zeros(0), objective: f64::NAN, basis: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Converts a non-optimal status into [`Error::Lp`].
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            s => Err(Error::Lp(s)),
        }
    }
}

/// Result of a standard-form solve `opt obj'x s.t. Ax = rhs, x >= 0`.
#[derive(Debug, Clone)]
pub(crate) enum Simplex {
    Optimal { x: DVector<f64>, dual: DVector<f64>, basis: Vec<usize> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is the
    /// right-hand side.
    t: DMatrix<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let ncols = self.t.ncols();
        for j in 0..ncols {
            self.t[(row, j)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..ncols {
                    let delta = f * self.t[(row, j)];
                    self.t[(i, j)] -= delta;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes the objective row over the columns `allowed`. The objective
    /// row stores reduced costs `d_j`; entering columns have `d_j < 0`.
    fn optimize(&mut self, allowed: usize) -> bool {
        let obj = self.m();
        let rhs = self.rhs_col();
        loop {
            let entering = (0..allowed).find(|&j| self.t[(obj, j)] < -COST_TOL);
            let Some(col) = entering else { return true };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..obj {
                let a = self.t[(i, col)];
                if a > PIVOT_TOL {
                    let ratio = self.t[(i, rhs)].max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-15 || (ratio <= br + 1e-15 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }
}

/// Two-phase simplex for `opt obj'x s.t. Ax = rhs, x >= 0`.
///
/// Returns the optimal `x`, the dual `y` solving `A_B' y = obj_B` and the
/// structural basis. Rows that turn out redundant keep an artificial basic
/// column whose dual entry is zero.
pub(crate) fn standard_form(a: &DMatrix<f64>, rhs: &DVector<f64>, obj: &DVector<f64>, maximize: bool) -> Simplex {
    let (m, n) = a.shape();
    let width = n + m + 1;
    let mut t = DMatrix::zeros(m + 1, width);
    for i in 0..m {
        let s = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = s * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, width - 1)] = s * rhs[i];
    }
    // Phase 1: minimize the sum of artificials, priced out of the basis.
    for j in 0..n {
        t[(m, j)] = -(0..m).map(|i| t[(i, j)]).sum::<f64>();
    }
    t[(m, width - 1)] = -(0..m).map(|i| t[(i, width - 1)]).sum::<f64>();
    let mut tab = Tableau { t, basis: (n..n + m).collect() };
    tab.optimize(n);
    let scale = 1.0 + rhs.amax();
    if -tab.t[(m, width - 1)] > FEAS_TOL * scale {
        return Simplex::Infeasible;
    }
    for row in 0..m {
        if tab.basis[row] >= n {
            if let Some(col) = (0..n).find(|&j| tab.t[(row, j)].abs() > 1e-9) {
                tab.pivot(row, col);
            }
        }
    }
    // Phase 2: minimize -obj (max) or obj (min) over structural columns.
    let sign = if maximize { -1.0 } else { 1.0 };
    for j in 0..width {
        tab.t[(m, j)] = 0.0;
    }
    for j in 0..n {
        tab.t[(m, j)] = sign * obj[j];
    }
    for row in 0..m {
        let b = tab.basis[row];
        let cb = if b < n { sign * obj[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                let delta = cb * tab.t[(row, j)];
                tab.t[(m, j)] -= delta;
            }
        }
    }
    if !tab.optimize(n) {
        return Simplex::Unbounded;
    }
    // Recompute the basic solution and dual directly from the basis.
    let mut a_b = DMatrix::zeros(m, m);
    let mut c_b = DVector::zeros(m);
    for (k, &b) in tab.basis.iter().enumerate() {
        if b < n {
            a_b.set_column(k, &a.column(b));
            c_b[k] = obj[b];
        } else {
            a_b[(b - n, k)] = 1.0;
        }
    }
    let lu = a_b.clone().lu();
    let Some(x_b) = lu.solve(rhs) else { return Simplex::Infeasible };
    let Some(dual) = a_b.transpose().lu().solve(&c_b) else { return Simplex::Infeasible };
    let mut x = DVector::zeros(n);
    for (k, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = x_b[k].max(0.0);
        }
    }
    let mut basis: Vec<usize> = tab.basis.iter().copied().filter(|&b| b < n).collect();
    basis.sort_unstable();
    Simplex::Optimal { x, dual, basis }
}

fn solve(system: &ConstraintSystem) -> LpSolution {
    let a = system.matrix.transpose();
    let maximize = system.side == Side::Ask;
    match standard_form(&a, &system.cost, &system.rhs, maximize) {
        Simplex::Optimal { x, dual, basis } => {
            let objective = system.cost.dot(&dual);
            LpSolution { status: LpStatus::Optimal, variables: dual, dual: x, objective, basis }
        }
        // The dual of an infeasible dual problem is unbounded or infeasible;
        // the primal always admits a large enough deposit, so it is unbounded.
        Simplex::Infeasible => LpSolution::failed(LpStatus::Unbounded),
        Simplex::Unbounded => LpSolution::failed(LpStatus::Infeasible),
    }
}

/// Least upper bound: `min c'v` subject to `Bv >= b`.
pub fn solve_lub(system: &ConstraintSystem) -> Result<LpSolution> {
    if system.side != Side::Ask {
        return invalid("solve_lub needs an ask-side system");
    }
    Ok(solve(system))
}

/// Greatest lower bound: `max c'ṽ` subject to `Bṽ <= b`.
pub fn solve_glb(system: &ConstraintSystem) -> Result<LpSolution> {
    if system.side != Side::Bid {
        return invalid("solve_glb needs a bid-side system");
    }
    Ok(solve(system))
}

/// Dispatches on the system's side.
pub fn solve_bound(system: &ConstraintSystem) -> LpSolution {
    solve(system)
}

/// Diagnostics of an optimal solution against its system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    /// Largest violation of `σ(Bv - b) >= 0`.
    pub primal_residual: f64,
    /// `max |B'x - c|`.
    pub dual_residual: f64,
    /// Most negative dual entry, as a positive number.
    pub dual_negativity: f64,
    /// `|c'v - b'x|`.
    pub gap: f64,
    /// `max_k x_k · σ(Bv - b)_k`.
    pub complementary_slackness: f64,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.primal_residual <= FEAS_TOL
            && self.dual_residual <= FEAS_TOL
            && self.dual_negativity <= FEAS_TOL
            && self.gap <= GAP_TOL
            && self.complementary_slackness <= GAP_TOL
    }
}

pub fn certificate(system: &ConstraintSystem, solution: &LpSolution) -> Result<Certificate> {
    if !solution.is_optimal() {
        return Err(Error::Lp(solution.status));
    }
    let slack = system.slack(&solution.variables);
    let x = &solution.dual;
    Ok(Certificate {
        primal_residual: slack.iter().fold(0.0f64, |m, &s| m.max(-s)),
        dual_residual: (system.matrix.transpose() * x - &system.cost).amax(),
        dual_negativity: x.iter().fold(0.0f64, |m, &v| m.max(-v)),
        gap: (system.cost.dot(&solution.variables) - system.rhs.dot(x)).abs(),
        complementary_slackness: x.iter().zip(slack.iter()).map(|(a, s)| (a * s).abs()).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uniqueness {
    Unique,
    NonUnique,
}

/// Settings for [`uniqueness_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    pub trials: usize,
    pub scale: f64,
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self { trials: 100, scale: 1e-7, seed: 0x5eed }
    }
}

/// Re-solves with every market upfront perturbed by independent uniform noise
/// in `[-scale, scale]` and reports whether the portfolio stays within `1e-6`
/// in sup-norm each time. A perturbed instance with no finite optimum counts
/// as non-unique; an infeasible one is a probe failure.
pub fn uniqueness_probe(
    system: &ConstraintSystem,
    solution: &LpSolution,
    settings: ProbeSettings,
) -> Result<Uniqueness> {
    if !solution.is_optimal() {
        return invalid("uniqueness probe needs an optimal solution");
    }
    if !(settings.scale >= 0.0 && settings.scale.is_finite()) {
        return invalid("perturbation scale must be finite and >= 0");
    }
    let k = system.k;
    for trial in 0..settings.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(trial as u64);
        let mut cost = system.cost.clone();
        if settings.scale > 0.0 {
            for p in 0..k {
                cost[p] += rng.random_range(-settings.scale..=settings.scale);
            }
        }
        let perturbed = solve(&system.with_cost(cost)?);
        match perturbed.status {
            LpStatus::Optimal => {
                if (&perturbed.variables - &solution.variables).amax() > 1e-6 {
                    return Ok(Uniqueness::NonUnique);
                }
            }
            LpStatus::Unbounded => return Ok(Uniqueness::NonUnique),
            LpStatus::Infeasible => return Err(Error::Lp(LpStatus::Infeasible)),
        }
    }
    Ok(Uniqueness::Unique)
}
