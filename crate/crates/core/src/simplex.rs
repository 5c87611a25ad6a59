//! Bounded primal simplex on a condensed tableau.
//!
//! Every row `i` gets a logical variable `r_i = a_i . x` whose bounds encode
//! the row sense (`<=`: `(-inf, rhs]`, `>=`: `[rhs, inf)`, `=`: `[rhs, rhs]`),
//! so the system is the homogeneous `[A  -I] v = 0` with bounds on `v`.
//! The tableau stores each of the `m` basic variables as a linear
//! combination of the `n` nonbasic ones, which keeps pivots at `O(m n)` for
//! models with many more rows than structural columns.
//!
//! Phase one minimizes the total bound violation of the basic variables; a
//! fixed-range logical of an equality row acts as that row's artificial.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{residuals_dense, FractionalPoint, MipModel, RowSense};
use crate::{tol, Error, Result};

/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 20;
/// Pivots between tableau refactorizations.
const REFACTOR_EVERY: usize = 100;
/// Reduced-cost optimality tolerance.
const DUAL_TOL: f64 = 1e-9;
/// Bound tolerance while pivoting.
const PRIMAL_TOL: f64 = 1e-9;
/// Ratio-test tie window.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value under the cost vector that was optimized.
    pub objective: f64,
    pub values: FractionalPoint,
    pub iterations: usize,
    /// Final basic variables: `j < n` is model variable `j`, `n + i` is the
    /// logical of row `i`.
    pub basis: Vec<usize>,
    /// Structural values in model variable order.
    #[serde(skip)]
    pub dense: Vec<f64>,
}

/// Equality-form view of a model: `n` structural plus one logical per row.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub n: usize,
    pub m: usize,
    /// Row-major `m x n`.
    pub matrix: Vec<f64>,
    pub sparse_rows: Vec<Vec<(usize, f64)>>,
    /// Bounds of all `n + m` variables.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StandardForm {
    pub fn from_model(model: &MipModel) -> Self {
        let n = model.n_vars();
        let m = model.n_rows();
        let mut matrix = vec![0.0; m * n];
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for v in &model.variables {
            lower.push(v.lower);
            upper.push(v.upper);
        }
        for (i, row) in model.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                matrix[i * n + j] = a;
            }
            let (lo, up) = match row.sense {
                RowSense::Le => (f64::NEG_INFINITY, row.rhs),
                RowSense::Ge => (row.rhs, f64::INFINITY),
                RowSense::Eq => (row.rhs, row.rhs),
            };
            lower.push(lo);
            upper.push(up);
        }
        let sparse_rows = model.rows.iter().map(|r| r.terms.clone()).collect();
        Self {
            n,
            m,
            matrix,
            sparse_rows,
            lower,
            upper,
        }
    }

    /// Logicals with a free side, one per inequality row.
    pub fn slack_count(&self) -> usize {
        (self.n..self.n + self.m)
            .filter(|&v| self.lower[v] != self.upper[v])
            .count()
    }

    /// Fixed-range logicals, one per equality row.
    pub fn artificial_count(&self) -> usize {
        self.m - self.slack_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Basic(usize),
    NonBasic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NbState {
    Lower,
    Upper,
    Free,
}

struct Tableau<'a> {
    sf: &'a StandardForm,
    n: usize,
    m: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    nonbasic: Vec<usize>,
    slot: Vec<Slot>,
    state: Vec<NbState>,
    /// `m x n`, basic `basis[p]` = sum_q t[p][q] * value[nonbasic[q]].
    t: Vec<f64>,
    x: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
    feas_tol: f64,
}

enum Step {
    Done,
    Continue,
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl<'a> Tableau<'a> {
    fn new(sf: &'a StandardForm, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let (n, m) = (sf.n, sf.m);
        let mut x = vec![0.0; n + m];
        let mut state = vec![NbState::Lower; n + m];
        for j in 0..n {
            if lower[j].is_finite() {
                x[j] = lower[j];
            } else if upper[j].is_finite() {
                x[j] = upper[j];
                state[j] = NbState::Upper;
            } else {
                state[j] = NbState::Free;
            }
        }
        let mut tab = Self {
            sf,
            n,
            m,
            lower,
            upper,
            basis: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            slot: (0..n).map(Slot::NonBasic).chain((0..m).map(Slot::Basic)).collect(),
            state,
            t: vec![0.0; m * n],
            x,
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
            feas_tol: PRIMAL_TOL,
        };
        tab.t.copy_from_slice(&sf.matrix);
        tab.recompute_basics();
        tab
    }

    fn row(&self, p: usize) -> &[f64] {
        &self.t[p * self.n..(p + 1) * self.n]
    }

    fn recompute_basics(&mut self) {
        for p in 0..self.m {
            let value: f64 = self
                .row(p)
                .iter()
                .zip(&self.nonbasic)
                .map(|(&a, &v)| a * self.x[v])
                .sum();
            self.x[self.basis[p]] = value;
        }
    }

    /// Rebuilds the tableau from the original matrix for the current basis.
    ///
    /// With `k` structural basics there are exactly `k` nonbasic logicals;
    /// their rows give a `k x k` system for the structural basics in terms
    /// of the nonbasic variables.
    fn refactor(&mut self) -> bool {
        let n = self.n;
        let basic_structural: Vec<usize> = self.basis.iter().copied().filter(|&v| v < n).collect();
        let k = basic_structural.len();
        let nonbasic_rows: Vec<usize> = self
            .nonbasic
            .iter()
            .filter(|&&v| v >= n)
            .map(|&v| v - n)
            .collect();
        debug_assert_eq!(nonbasic_rows.len(), k);

        let mut bs_pos = vec![usize::MAX; n];
        for (j, &s) in basic_structural.iter().enumerate() {
            bs_pos[s] = j;
        }

        // [K | H] with K = A[R, BS] and H the dependence on the nonbasics.
        let width = k + n;
        let mut aug = vec![0.0; k * width];
        for (r, &i) in nonbasic_rows.iter().enumerate() {
            for &(s, a) in &self.sf.sparse_rows[i] {
                if bs_pos[s] != usize::MAX {
                    aug[r * width + bs_pos[s]] = a;
                }
            }
            for (q, &v) in self.nonbasic.iter().enumerate() {
                let h = if v == n + i {
                    1.0
                } else if v < n {
                    -self.sf.matrix[i * n + v]
                } else {
                    0.0
                };
                aug[r * width + k + q] = h;
            }
        }
        if !gauss_jordan(&mut aug, k, width) {
            log::warn!("refactorization hit a singular basis; keeping the updated tableau");
            return false;
        }
        // row j of G = aug[j][k..]
        let g = |j: usize| &aug[j * width + k..(j + 1) * width];

        let mut t = vec![0.0; self.m * n];
        for (p, &v) in self.basis.iter().enumerate() {
            let dst = &mut t[p * n..(p + 1) * n];
            if v < n {
                dst.copy_from_slice(g(bs_pos[v]));
            } else {
                let i = v - n;
                for &(s, a) in &self.sf.sparse_rows[i] {
                    if bs_pos[s] != usize::MAX {
                        for (d, &gv) in dst.iter_mut().zip(g(bs_pos[s])) {
                            *d += a * gv;
                        }
                    } else if let Slot::NonBasic(q) = self.slot[s] {
                        dst[q] += a;
                    }
                }
            }
        }
        self.t = t;
        self.recompute_basics();
        self.since_refactor = 0;
        true
    }

    fn violation(&self, v: usize) -> f64 {
        let x = self.x[v];
        (self.lower[v] - x).max(x - self.upper[v]).max(0.0)
    }

    /// Basic cost vector: phase-one signs if any basic is infeasible.
    fn basic_costs(&self, cost: Option<&[f64]>) -> (Vec<f64>, bool) {
        let mut phase_one = vec![0.0; self.m];
        let mut infeasible = false;
        for (p, &v) in self.basis.iter().enumerate() {
            let x = self.x[v];
            if x < self.lower[v] - self.feas_tol {
                phase_one[p] = -1.0;
                infeasible = true;
            } else if x > self.upper[v] + self.feas_tol {
                phase_one[p] = 1.0;
                infeasible = true;
            }
        }
        if infeasible {
            return (phase_one, true);
        }
        let costs = match cost {
            Some(c) => self.basis.iter().map(|&v| if v < self.n { c[v] } else { 0.0 }).collect(),
            None => vec![0.0; self.m],
        };
        (costs, false)
    }

    fn reduced_costs(&self, basic_cost: &[f64], cost: Option<&[f64]>, phase_one: bool) -> Vec<f64> {
        let mut d: Vec<f64> = match (cost, phase_one) {
            (Some(c), false) => self
                .nonbasic
                .iter()
                .map(|&v| if v < self.n { c[v] } else { 0.0 })
                .collect(),
            _ => vec![0.0; self.n],
        };
        for (p, &cb) in basic_cost.iter().enumerate() {
            if cb != 0.0 {
                for (dq, &a) in d.iter_mut().zip(self.row(p)) {
                    *dq += cb * a;
                }
            }
        }
        d
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn price(&self, d: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for (q, &dq) in d.iter().enumerate() {
            let v = self.nonbasic[q];
            if self.upper[v] - self.lower[v] <= 0.0 {
                continue;
            }
            let dir = match self.state[v] {
                NbState::Lower if dq < -DUAL_TOL => 1.0,
                NbState::Upper if dq > DUAL_TOL => -1.0,
                NbState::Free if dq.abs() > DUAL_TOL => -dq.signum(),
                _ => continue,
            };
            let better = match best {
                None => true,
                Some((bq, _, bd)) => {
                    if self.bland {
                        v < self.nonbasic[bq]
                    } else {
                        dq.abs() > bd || (dq.abs() == bd && v < self.nonbasic[bq])
                    }
                }
            };
            if better {
                best = Some((q, dir, dq.abs()));
            }
        }
        best.map(|(q, dir, _)| (q, dir))
    }

    fn step(&mut self, cost: Option<&[f64]>, fresh: bool) -> std::result::Result<Step, Outcome> {
        let (basic_cost, phase_one) = self.basic_costs(cost);
        if !phase_one && cost.is_none() {
            return if fresh { Err(Outcome::Optimal) } else { self.request_refactor() };
        }
        let d = self.reduced_costs(&basic_cost, cost, phase_one);
        let Some((q, dir)) = self.price(&d) else {
            if phase_one {
                let total: f64 = self.basis.iter().map(|&v| self.violation(v)).sum();
                if total <= tol::PHASE_ONE {
                    // accept the residual infeasibility and move on
                    let worst = self.basis.iter().map(|&v| self.violation(v)).fold(0.0, f64::max);
                    self.feas_tol = self.feas_tol.max(worst * (1.0 + 1e-9));
                    return Ok(Step::Continue);
                }
                return if fresh { Err(Outcome::Infeasible) } else { self.request_refactor() };
            }
            return if fresh { Err(Outcome::Optimal) } else { self.request_refactor() };
        };

        let entering = self.nonbasic[q];
        let mut theta = f64::INFINITY;
        let mut leave: Option<(usize, f64)> = None;
        for p in 0..self.m {
            let a = self.t[p * self.n + q];
            if a.abs() <= tol::PIVOT {
                continue;
            }
            let rate = a * dir;
            let v = self.basis[p];
            let (x, lo, up) = (self.x[v], self.lower[v], self.upper[v]);
            let target = if rate > 0.0 {
                if x < lo - self.feas_tol {
                    lo
                } else if x > up + self.feas_tol {
                    continue;
                } else {
                    up
                }
            } else if x > up + self.feas_tol {
                up
            } else if x < lo - self.feas_tol {
                continue;
            } else {
                lo
            };
            if !target.is_finite() {
                continue;
            }
            let limit = ((target - x) / rate).max(0.0);
            let take = match leave {
                None => true,
                Some((bp, _)) => {
                    if limit < theta - TIE_TOL {
                        true
                    } else if limit <= theta + TIE_TOL && self.bland {
                        v < self.basis[bp]
                    } else {
                        false
                    }
                }
            };
            if take {
                theta = limit;
                leave = Some((p, target));
            }
        }

        let range = self.upper[entering] - self.lower[entering];
        let flip = range.is_finite() && range <= theta + TIE_TOL;
        if flip {
            theta = range;
        } else if leave.is_none() {
            return Err(Outcome::Unbounded);
        }

        let delta = dir * theta;
        if delta != 0.0 {
            self.x[entering] += delta;
            for p in 0..self.m {
                let a = self.t[p * self.n + q];
                if a != 0.0 {
                    self.x[self.basis[p]] += a * delta;
                }
            }
        }
        self.iterations += 1;
        if theta <= TIE_TOL {
            self.degenerate_run += 1;
            if self.degenerate_run >= DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }

        if flip {
            let (value, state) = if dir > 0.0 {
                (self.upper[entering], NbState::Upper)
            } else {
                (self.lower[entering], NbState::Lower)
            };
            self.x[entering] = value;
            self.state[entering] = state;
            return Ok(Step::Continue);
        }

        let (p, target) = leave.expect("blocking row");
        let leaving = self.basis[p];
        self.x[leaving] = target;
        self.state[leaving] = if target == self.lower[leaving] {
            NbState::Lower
        } else {
            NbState::Upper
        };
        self.pivot(p, q);
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
        Ok(Step::Continue)
    }

    fn request_refactor(&mut self) -> std::result::Result<Step, Outcome> {
        self.refactor();
        self.since_refactor = 0;
        Ok(Step::Done)
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let n = self.n;
        let inv = 1.0 / self.t[p * n + q];
        {
            let row = &mut self.t[p * n..(p + 1) * n];
            for a in row.iter_mut() {
                *a *= -inv;
            }
            row[q] = inv;
        }
        let pivot_row: Vec<f64> = self.t[p * n..(p + 1) * n].to_vec();
        for r in 0..self.m {
            if r == p {
                continue;
            }
            let row = &mut self.t[r * n..(r + 1) * n];
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            for (a, &b) in row.iter_mut().zip(&pivot_row) {
                *a += f * b;
                if a.abs() < 1e-14 {
                    *a = 0.0;
                }
            }
            row[q] = f * inv;
        }
        let entering = self.nonbasic[q];
        let leaving = self.basis[p];
        self.basis[p] = entering;
        self.nonbasic[q] = leaving;
        self.slot[entering] = Slot::Basic(p);
        self.slot[leaving] = Slot::NonBasic(q);
    }

    fn run(&mut self, cost: Option<&[f64]>, limit: usize) -> Outcome {
        // `fresh` means the tableau was rebuilt since the last pivot, so a
        // terminal verdict is based on clean numbers.
        let mut fresh = true;
        loop {
            if self.iterations >= limit {
                return Outcome::IterationLimit;
            }
            let before = self.iterations;
            match self.step(cost, fresh) {
                Err(outcome) => return outcome,
                Ok(Step::Done) => fresh = true,
                Ok(Step::Continue) => {
                    if self.iterations != before {
                        fresh = false;
                    }
                }
            }
        }
    }
}

/// In-place Gauss-Jordan elimination with partial pivoting on the leading
/// `k x k` block of a row-major `k x width` matrix.
fn gauss_jordan(aug: &mut [f64], k: usize, width: usize) -> bool {
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&a, &b| aug[a * width + col].abs().total_cmp(&aug[b * width + col].abs()))
            .expect("nonempty range");
        let pivot = aug[pivot_row * width + col];
        if pivot.abs() < 1e-11 {
            return false;
        }
        if pivot_row != col {
            for c in 0..width {
                aug.swap(col * width + c, pivot_row * width + c);
            }
        }
        let inv = 1.0 / pivot;
        for c in 0..width {
            aug[col * width + c] *= inv;
        }
        let pivot_vals: Vec<f64> = aug[col * width..(col + 1) * width].to_vec();
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = aug[r * width + col];
            if f == 0.0 {
                continue;
            }
            for c in 0..width {
                aug[r * width + c] -= f * pivot_vals[c];
            }
        }
    }
    true
}

/// Solver knobs; the defaults match the documented behaviour.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexOptions {
    /// Defaults to `50 * (rows + columns)`.
    pub iteration_limit: Option<usize>,
}

/// Final state of a solve, for diagnostics.
#[derive(Debug, Clone)]
pub struct TableauDump {
    pub basic: Vec<String>,
    pub nonbasic: Vec<String>,
    pub values: Vec<f64>,
    pub tableau: Vec<Vec<f64>>,
}

impl TableauDump {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# basic variables ({})", self.basic.len());
        for (name, row) in self.basic.iter().zip(&self.tableau) {
            let _ = write!(out, "{name:>24} =");
            for (a, nb) in row.iter().zip(&self.nonbasic) {
                if *a != 0.0 {
                    let _ = write!(out, " {a:+.6}*{nb}");
                }
            }
            out.push('\n');
        }
        let _ = writeln!(out, "# nonbasic variables ({})", self.nonbasic.len());
        for name in &self.nonbasic {
            let _ = writeln!(out, "{name}");
        }
        out
    }
}

struct Solved {
    solution: LpSolution,
    dump: Option<TableauDump>,
}

fn var_name(model: &MipModel, v: usize) -> String {
    if v < model.n_vars() {
        model.variables[v].label.to_string()
    } else {
        format!("row:{}", model.rows[v - model.n_vars()].tag)
    }
}

fn solve_impl(
    model: &MipModel,
    lower: &[f64],
    upper: &[f64],
    cost: Option<&[f64]>,
    opts: SimplexOptions,
    want_dump: bool,
) -> Solved {
    let n = model.n_vars();
    let sf = StandardForm::from_model(model);
    let mut lo = sf.lower.clone();
    let mut up = sf.upper.clone();
    lo[..n].copy_from_slice(lower);
    up[..n].copy_from_slice(upper);

    let limit = opts
        .iteration_limit
        .unwrap_or(50 * (model.n_rows() + n).max(1));

    let empty = |status| LpSolution {
        status,
        objective: 0.0,
        values: FractionalPoint::new(),
        iterations: 0,
        basis: Vec::new(),
        dense: Vec::new(),
    };
    if (0..n).any(|j| lo[j] > up[j]) {
        return Solved {
            solution: empty(LpStatus::Infeasible),
            dump: None,
        };
    }

    let mut tab = Tableau::new(&sf, lo, up);
    let outcome = tab.run(cost, limit);
    let dense: Vec<f64> = tab.x[..n].to_vec();
    let mut status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Infeasible => LpStatus::Infeasible,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterationLimit => LpStatus::IterationLimit,
    };
    if status == LpStatus::Optimal {
        let mut bounded = model.clone();
        for (v, (&l, &u)) in bounded.variables.iter_mut().zip(lower.iter().zip(upper)) {
            v.lower = l;
            v.upper = u;
        }
        let worst = residuals_dense(&bounded, &dense).max_violation();
        if worst > tol::FEASIBILITY {
            log::warn!("simplex point violates the model by {worst:e}; reporting iteration limit");
            status = LpStatus::IterationLimit;
        }
    }
    let objective = match cost {
        Some(c) => c.iter().zip(&dense).map(|(a, b)| a * b).sum(),
        None => 0.0,
    };
    let mut basis = tab.basis.clone();
    basis.sort_unstable();
    let dump = want_dump.then(|| TableauDump {
        basic: tab.basis.iter().map(|&v| var_name(model, v)).collect(),
        nonbasic: tab.nonbasic.iter().map(|&v| var_name(model, v)).collect(),
        values: tab.x.clone(),
        tableau: (0..tab.m).map(|p| tab.row(p).to_vec()).collect(),
    });
    Solved {
        solution: LpSolution {
            status,
            objective,
            values: model.point_from_values(&dense),
            iterations: tab.iterations,
            basis,
            dense,
        },
        dump,
    }
}

fn objective_vector(model: &MipModel) -> Vec<f64> {
    let mut c = vec![0.0; model.n_vars()];
    for &(j, a) in &model.objective {
        c[j] = a;
    }
    c
}

fn bounds(model: &MipModel) -> (Vec<f64>, Vec<f64>) {
    model.variables.iter().map(|v| (v.lower, v.upper)).unzip()
}

/// Solves the LP relaxation of `model` (integrality flags are ignored).
pub fn lp_solve(model: &MipModel) -> LpSolution {
    let (lo, up) = bounds(model);
    lp_solve_with_bounds(model, &lo, &up)
}

/// Like [`lp_solve`] and also returns the final tableau.
pub fn lp_solve_with_dump(model: &MipModel) -> (LpSolution, TableauDump) {
    let (lo, up) = bounds(model);
    let c = objective_vector(model);
    let solved = solve_impl(model, &lo, &up, Some(&c), SimplexOptions::default(), true);
    (solved.solution, solved.dump.expect("dump requested"))
}

/// LP relaxation with replaced variable bounds.
pub fn lp_solve_with_bounds(model: &MipModel, lower: &[f64], upper: &[f64]) -> LpSolution {
    let c = objective_vector(model);
    solve_impl(model, lower, upper, Some(&c), SimplexOptions::default(), false).solution
}

/// LP relaxation under an arbitrary cost vector.
pub fn lp_solve_with_cost(model: &MipModel, cost: &[f64], opts: SimplexOptions) -> LpSolution {
    let (lo, up) = bounds(model);
    solve_impl(model, &lo, &up, Some(cost), opts, false).solution
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ProbeOutcome {
    /// A point of the relaxation that agrees with every pinned value.
    Feasible { witness: FractionalPoint },
    Infeasible,
    /// The solver stopped before reaching a verdict.
    Undecided { status: LpStatus },
}

impl ProbeOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, ProbeOutcome::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, ProbeOutcome::Infeasible)
    }
}

/// Phase-one feasibility of the relaxation with the `fixed` variables
/// pinned to their given values.
pub fn feasibility_probe(model: &MipModel, fixed: &FractionalPoint) -> Result<ProbeOutcome> {
    let (mut lo, mut up) = bounds(model);
    for (label, &value) in &fixed.values {
        let j = model.var_index(label).ok_or(Error::UnknownVariable(*label))?;
        if !(value >= lo[j] - tol::FEASIBILITY && value <= up[j] + tol::FEASIBILITY) {
            return Ok(ProbeOutcome::Infeasible);
        }
        lo[j] = value;
        up[j] = value;
    }
    let solved = solve_impl(model, &lo, &up, None, SimplexOptions::default(), false).solution;
    Ok(match solved.status {
        LpStatus::Optimal => ProbeOutcome::Feasible {
            witness: solved.values,
        },
        LpStatus::Infeasible => ProbeOutcome::Infeasible,
        status => ProbeOutcome::Undecided { status },
    })
}

/// Optimal vertex of the relaxation under a seeded random objective with
/// coefficients uniform on `[-1, 1]`.
pub fn sample_vertex(model: &MipModel, seed: u64) -> LpSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cost: Vec<f64> = (0..model.n_vars()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    lp_solve_with_cost(model, &cost, SimplexOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Provenance, RowFamily, RowTag, VarLabel};

    fn empty_model() -> MipModel {
        MipModel::new(Provenance {
            formulation: "test".into(),
            instance: "0".into(),
        })
    }

    #[test]
    fn small_lp_with_all_row_senses() {
        // min -x - 2y  s.t. x + y <= 4, x - y >= -2, x + 3y = 6, 0 <= x,y <= 10
        let mut m = empty_model();
        let x = m.add_variable(VarLabel::x(1, 0), 0.0, 10.0, false);
        let y = m.add_variable(VarLabel::x(2, 0), 0.0, 10.0, false);
        m.add_row([(x, 1.0), (y, 1.0)], RowSense::Le, 4.0, RowTag::new(RowFamily::Coupling));
        m.add_row([(x, 1.0), (y, -1.0)], RowSense::Ge, -2.0, RowTag::new(RowFamily::Coupling));
        m.add_row([(x, 1.0), (y, 3.0)], RowSense::Eq, 6.0, RowTag::new(RowFamily::Coupling));
        m.set_objective([(x, -1.0), (y, -2.0)]);
        let sol = lp_solve(&m);
        assert_eq!(sol.status, LpStatus::Optimal);
        // vertices of the segment x + 3y = 6 inside the other rows: (0, 2) and (3, 1)
        assert!((sol.objective - (-5.0)).abs() < 1e-9, "{}", sol.objective);
        assert!((sol.dense[0] - 3.0).abs() < 1e-9 && (sol.dense[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut m = empty_model();
        let a = m.add_variable(VarLabel::s(1, 0), 0.0, 1.0, true);
        let b = m.add_variable(VarLabel::s(2, 0), 0.0, 1.0, true);
        m.add_row([(a, 1.0), (b, 1.0)], RowSense::Eq, 1.0, RowTag::new(RowFamily::F6a));
        m.add_row([(a, 1.0), (b, 1.0)], RowSense::Eq, 0.0, RowTag::new(RowFamily::F6a));
        assert_eq!(lp_solve(&m).status, LpStatus::Infeasible);
    }

    #[test]
    fn free_variable_bounded_and_unbounded_directions() {
        let mut m = empty_model();
        let a = m.add_variable(VarLabel::x(1, 0), f64::NEG_INFINITY, f64::INFINITY, false);
        let b = m.add_variable(VarLabel::x(2, 0), 0.0, 1.0, false);
        m.add_row([(a, 1.0), (b, 1.0)], RowSense::Le, 1.0, RowTag::new(RowFamily::Coupling));
        m.set_objective([(a, -1.0)]);
        let sol = lp_solve(&m);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-12);
        m.set_objective([(a, 1.0)]);
        assert_eq!(lp_solve(&m).status, LpStatus::Unbounded);
        m.set_objective([(a, -1.0), (b, 1.0)]);
        m.add_row([(a, 1.0)], RowSense::Le, 0.5, RowTag::new(RowFamily::Coupling));
        let sol = lp_solve(&m);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 0.5).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_is_never_reported_optimal() {
        let mut m = empty_model();
        let vars: Vec<usize> = (1..=6).map(|t| m.add_variable(VarLabel::x(t, 0), 0.0, 1.0, false)).collect();
        m.add_row(vars.iter().map(|&j| (j, 1.0)), RowSense::Eq, 3.0, RowTag::new(RowFamily::F2a));
        let cost: Vec<f64> = (0..6).map(|j| -(j as f64)).collect();
        let sol = lp_solve_with_cost(&m, &cost, SimplexOptions { iteration_limit: Some(1) });
        assert_eq!(sol.status, LpStatus::IterationLimit);
    }

    #[test]
    fn refactorization_reproduces_the_updated_tableau() {
        let mut m = empty_model();
        let vars: Vec<usize> = (1..=8).map(|t| m.add_variable(VarLabel::x(t, 0), 0.0, 1.0, false)).collect();
        for (i, w) in vars.windows(3).enumerate() {
            let terms = w.iter().enumerate().map(|(k, &j)| (j, 1.0 + k as f64 + i as f64 * 0.5));
            m.add_row(terms, RowSense::Le, 2.0, RowTag::new(RowFamily::Coupling));
        }
        m.add_row(vars.iter().map(|&j| (j, 1.0)), RowSense::Ge, 3.0, RowTag::new(RowFamily::Coupling));
        let sf = StandardForm::from_model(&m);
        let (lo, up) = (sf.lower.clone(), sf.upper.clone());
        let mut tab = Tableau::new(&sf, lo, up);
        let cost: Vec<f64> = (0..8).map(|j| ((j * 7 % 5) as f64) - 2.0).collect();
        for _ in 0..6 {
            if tab.step(Some(&cost), false).is_err() {
                break;
            }
        }
        let updated = tab.t.clone();
        let values = tab.x.clone();
        assert!(tab.refactor());
        for (a, b) in updated.iter().zip(&tab.t) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in values.iter().zip(&tab.x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn standard_form_counts() {
        let mut m = empty_model();
        let a = m.add_variable(VarLabel::x(1, 0), 0.0, 1.0, false);
        m.add_row([(a, 1.0)], RowSense::Le, 1.0, RowTag::new(RowFamily::Coupling));
        m.add_row([(a, 1.0)], RowSense::Eq, 0.5, RowTag::new(RowFamily::Coupling));
        m.add_row([(a, 2.0)], RowSense::Ge, 0.0, RowTag::new(RowFamily::Coupling));
        let sf = StandardForm::from_model(&m);
        assert_eq!((sf.m, sf.slack_count(), sf.artificial_count()), (3, 2, 1));
    }

    #[test]
    fn pinning_outside_the_bounds_is_infeasible() {
        let mut m = empty_model();
        m.add_variable(VarLabel::s(1, 0), 0.0, 0.0, true);
        m.add_variable(VarLabel::s(2, 0), 0.0, 1.0, true);
        let outside = FractionalPoint::new().with_series(crate::VarKind::S, 0, &[0.5]);
        assert!(feasibility_probe(&m, &outside).unwrap().is_infeasible());
        let inside = FractionalPoint::new().with_series(crate::VarKind::S, 0, &[0.0, 1.0]);
        assert!(feasibility_probe(&m, &inside).unwrap().is_feasible());
    }

    #[test]
    fn probing_an_unknown_variable_is_an_error() {
        let mut m = empty_model();
        m.add_variable(VarLabel::x(1, 0), 0.0, 1.0, false);
        let p = FractionalPoint::new().with_series(crate::VarKind::S, 0, &[1.0]);
        assert!(matches!(feasibility_probe(&m, &p), Err(Error::UnknownVariable(_))));
    }
}
