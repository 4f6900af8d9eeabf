//! Bounded-variable revised simplex.
//!
//! Every row `a_i x {<=,=,>=} b_i` becomes `a_i x + s_i = b_i` with the slack
//! bounded by the relation: `[0, inf)` for `<=`, `(-inf, 0]` for `>=` and
//! `[0, 0]` for `=`. Columns are the structurals followed by the slacks.
//!
//! A cold start takes the slack basis. While some basic variable is out of
//! its bounds the primal method minimizes the total bound violation, then it
//! switches to the true objective. Pricing is Devex. A long run of
//! degenerate pivots widens the bounds by small random amounts; the original
//! bounds are restored before optimality is declared. When a refactorization
//! finds the basis singular, slacks replace the columns that could not be
//! pivoted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lu::{Csc, Singular, SparseLu};
use super::model::{LpModel, Relation, Sense};
use super::{Basis, LpOutcome, LpParams, LpStatus, VarStatus};
use crate::error::{Error, Result};

const SINGULAR_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots before the bounds are perturbed.
const PERTURB_AFTER: usize = 20;
/// Relative size of the bound perturbation.
const PERTURB_SCALE: f64 = 1e-6;
/// Singular refactorizations repaired in one solve before giving up.
const MAX_REPAIRS: usize = 20;
/// Relative size of the cost perturbation used by the dual method.
const COST_PERTURB_SCALE: f64 = 1e-7;
/// Devex weights are reset once one of them grows past this.
const MAX_WEIGHT: f64 = 1e6;

struct Eta {
    row: usize,
    pivot: f64,
    col: Vec<(usize, f64)>,
}

/// Column-compressed copy of a model, reusable across solves with
/// different variable bounds.
pub struct LpSolver<'a> {
    model: &'a LpModel,
    params: LpParams,
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    slack_lower: Vec<f64>,
    slack_upper: Vec<f64>,
}

enum PrimalEnd {
    Optimal,
    Unbounded,
    /// Phase 1 stalled with bound violations left; carries the ray.
    Infeasible(Vec<f64>),
}

enum DualEnd {
    Feasible,
    Infeasible(Vec<f64>),
    GiveUp,
}

struct Run<'s, 'a> {
    s: &'s LpSolver<'a>,
    ncols: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    lu: SparseLu,
    etas: Vec<Eta>,
    iters: usize,
    degenerate: usize,
    weights: Vec<f64>,
    /// Original bounds while the working ones are perturbed.
    saved_bounds: Option<(Vec<f64>, Vec<f64>)>,
    perturbed_once: bool,
    /// Original costs while the dual method runs on perturbed ones.
    saved_cost: Option<Vec<f64>>,
    repairs: usize,
    rng: ChaCha8Rng,
}

impl<'a> LpSolver<'a> {
    pub fn new(model: &'a LpModel, params: LpParams) -> Result<Self> {
        model.check()?;
        let n = model.num_vars();
        let m = model.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in model.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                match cols[j].last_mut() {
                    Some((r, v)) if *r == i => *v += a,
                    _ => cols[j].push((i, a)),
                }
            }
        }
        let mut col_start = Vec::with_capacity(n + 1);
        let mut col_row = Vec::new();
        let mut col_val = Vec::new();
        col_start.push(0);
        for col in cols {
            for (i, a) in col {
                if a != 0.0 {
                    col_row.push(i);
                    col_val.push(a);
                }
            }
            col_start.push(col_row.len());
        }
        let sign = if model.sense == Sense::Max { -1.0 } else { 1.0 };
        let (slack_lower, slack_upper) = model
            .rows
            .iter()
            .map(|r| match r.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            })
            .unzip();
        Ok(LpSolver {
            model,
            params,
            n,
            m,
            col_start,
            col_row,
            col_val,
            b: model.rows.iter().map(|r| r.rhs).collect(),
            cost: model.vars.iter().map(|v| sign * v.cost).collect(),
            slack_lower,
            slack_upper,
        })
    }

    pub fn params(&self) -> &LpParams {
        &self.params
    }

    /// Solves with the model's own bounds.
    pub fn solve(&self) -> Result<LpOutcome> {
        let lower: Vec<f64> = self.model.vars.iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = self.model.vars.iter().map(|v| v.upper).collect();
        self.solve_with(&lower, &upper, None)
    }

    /// Solves with overridden structural bounds, optionally starting from
    /// a previous basis.
    pub fn solve_with(&self, lower: &[f64], upper: &[f64], warm: Option<&Basis>) -> Result<LpOutcome> {
        if lower.len() != self.n || upper.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: lower.len().min(upper.len()) });
        }
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return Ok(self.empty_outcome(LpStatus::Infeasible, 0));
        }
        if let Some(basis) = warm {
            if let Some(out) = self.try_warm(lower, upper, basis)? {
                return Ok(out);
            }
        }
        self.cold(lower, upper)
    }

    fn empty_outcome(&self, status: LpStatus, iterations: usize) -> LpOutcome {
        LpOutcome {
            status,
            x: vec![0.0; self.n],
            objective: f64::NAN,
            duals: vec![0.0; self.m],
            reduced_costs: vec![0.0; self.n],
            farkas: None,
            basis: None,
            iterations,
        }
    }

    fn try_warm(&self, lower: &[f64], upper: &[f64], basis: &Basis) -> Result<Option<LpOutcome>> {
        if basis.status.len() != self.n + self.m
            || basis.status.iter().filter(|s| **s == VarStatus::Basic).count() != self.m
        {
            return Ok(None);
        }
        let mut run = Run::new(self, lower, upper);
        for j in 0..self.n + self.m {
            let st = match basis.status[j] {
                VarStatus::Basic => VarStatus::Basic,
                hint => run.nonbasic_status(j, hint),
            };
            run.status[j] = st;
            if st != VarStatus::Basic {
                run.x[j] = run.nonbasic_value(j, st);
            }
        }
        run.head = (0..self.n + self.m).filter(|&j| run.status[j] == VarStatus::Basic).collect();
        if run.refactor().is_err() {
            return Ok(None);
        }
        run.cost[..self.n].copy_from_slice(&self.cost);
        if !run.primal_feasible() && run.dual_feasible() {
            let end = run.dual();
            run.restore_costs();
            match end {
                // a stalled dual run still leaves a usable basis for the primal
                Ok(DualEnd::Feasible | DualEnd::GiveUp) => {}
                Ok(DualEnd::Infeasible(ray)) => {
                    let mut out = self.empty_outcome(LpStatus::Infeasible, run.iters);
                    out.farkas = Some(ray);
                    return Ok(Some(out));
                }
                Err(_) => return Ok(None),
            }
        }
        match run.primal() {
            Ok(end) => Ok(Some(self.conclude(run, end))),
            Err(_) => Ok(None),
        }
    }

    fn cold(&self, lower: &[f64], upper: &[f64]) -> Result<LpOutcome> {
        let mut run = Run::new(self, lower, upper);
        for j in 0..self.n {
            let st = run.nonbasic_status(j, VarStatus::AtLower);
            run.status[j] = st;
            run.x[j] = run.nonbasic_value(j, st);
        }
        for i in 0..self.m {
            run.status[self.n + i] = VarStatus::Basic;
            run.head.push(self.n + i);
        }
        run.refactor()?;
        run.cost[..self.n].copy_from_slice(&self.cost);
        let end = run.primal()?;
        Ok(self.conclude(run, end))
    }

    fn conclude(&self, run: Run<'_, 'a>, end: PrimalEnd) -> LpOutcome {
        match end {
            PrimalEnd::Infeasible(ray) => {
                let mut out = self.empty_outcome(LpStatus::Infeasible, run.iters);
                out.farkas = Some(ray);
                out
            }
            end => run.finish(end),
        }
    }
}

impl<'s, 'a> Run<'s, 'a> {
    fn new(s: &'s LpSolver<'a>, lower: &[f64], upper: &[f64]) -> Self {
        let ncols = s.n + s.m;
        let mut lo = lower.to_vec();
        lo.extend_from_slice(&s.slack_lower);
        let mut hi = upper.to_vec();
        hi.extend_from_slice(&s.slack_upper);
        Run {
            s,
            ncols,
            lower: lo,
            upper: hi,
            cost: vec![0.0; ncols],
            x: vec![0.0; ncols],
            status: vec![VarStatus::AtLower; ncols],
            head: Vec::with_capacity(s.m),
            lu: SparseLu::default(),
            etas: Vec::new(),
            iters: 0,
            degenerate: 0,
            weights: vec![1.0; ncols],
            saved_bounds: None,
            perturbed_once: false,
            saved_cost: None,
            repairs: 0,
            rng: ChaCha8Rng::seed_from_u64(0x51a7),
        }
    }

    /// Nonbasic status for column `j` honoring a preference where the
    /// corresponding bound is finite.
    fn nonbasic_status(&self, j: usize, hint: VarStatus) -> VarStatus {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        match hint {
            VarStatus::AtUpper if hi.is_finite() => VarStatus::AtUpper,
            _ if lo.is_finite() => VarStatus::AtLower,
            _ if hi.is_finite() => VarStatus::AtUpper,
            _ => VarStatus::Free,
        }
    }

    fn nonbasic_value(&self, j: usize, st: VarStatus) -> f64 {
        match st {
            VarStatus::AtLower => self.lower[j],
            VarStatus::AtUpper => self.upper[j],
            _ => 0.0,
        }
    }

    #[inline]
    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        let s = self.s;
        if j < s.n {
            for p in s.col_start[j]..s.col_start[j + 1] {
                f(s.col_row[p], s.col_val[p]);
            }
        } else {
            f(j - s.n, 1.0);
        }
    }

    #[inline]
    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_col(j, |i, a| acc += y[i] * a);
        acc
    }

    fn dense_col(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.s.m];
        self.for_col(j, |i, a| v[i] = a);
        v
    }

    fn basic_costs(&self) -> Vec<f64> {
        self.head.iter().map(|&j| self.cost[j]).collect()
    }

    /// `-1` below the lower bound, `1` above the upper bound, `0` within
    /// tolerance.
    fn violation_sign(&self, j: usize) -> f64 {
        let tol = self.s.params.tol_feas;
        if self.x[j] < self.lower[j] - tol {
            -1.0
        } else if self.x[j] > self.upper[j] + tol {
            1.0
        } else {
            0.0
        }
    }

    /// Basic costs of the current phase: the gradient of the total bound
    /// violation while the basis is infeasible, the objective otherwise.
    fn phase_costs(&self) -> (Vec<f64>, bool) {
        let signs: Vec<f64> = self.head.iter().map(|&j| self.violation_sign(j)).collect();
        if signs.iter().any(|&v| v != 0.0) {
            (signs, true)
        } else {
            (self.basic_costs(), false)
        }
    }

    fn ftran(&self, v: &mut [f64]) {
        self.lu.solve(v);
        for eta in &self.etas {
            let t = v[eta.row] / eta.pivot;
            v[eta.row] = t;
            if t != 0.0 {
                for &(i, a) in &eta.col {
                    v[i] -= a * t;
                }
            }
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = v[eta.row];
            for &(i, a) in &eta.col {
                acc -= v[i] * a;
            }
            v[eta.row] = acc / eta.pivot;
        }
        self.lu.solve_transpose(v);
    }

    fn factor(&self) -> std::result::Result<SparseLu, Singular> {
        let m = self.s.m;
        let mut start = Vec::with_capacity(m + 1);
        let mut index = Vec::new();
        let mut value = Vec::new();
        start.push(0);
        for &j in &self.head {
            self.for_col(j, |i, a| {
                index.push(i);
                value.push(a);
            });
            start.push(index.len());
        }
        SparseLu::factor(m, Csc { start: &start, index: &index, value: &value }, SINGULAR_TOL)
    }

    fn refactor(&mut self) -> Result<()> {
        let lu = match self.factor() {
            Ok(lu) => lu,
            Err(sing) if self.repairs < MAX_REPAIRS => {
                self.repairs += 1;
                log::debug!("repairing singular basis ({} columns) after {} iterations", sing.cols.len(), self.iters);
                self.repair(&sing);
                self.factor().map_err(|_| self.singular_error())?
            }
            Err(_) => return Err(self.singular_error()),
        };
        self.lu = lu;
        self.etas.clear();
        self.recompute_basics();
        Ok(())
    }

    fn singular_error(&self) -> Error {
        Error::Numerical(format!("singular basis after {} iterations", self.iters))
    }

    /// Swaps the slacks of the unpivoted rows in for the unpivoted basis
    /// columns; the pivoted block is nonsingular, so the result is too.
    fn repair(&mut self, sing: &Singular) {
        let removed: Vec<usize> = sing.cols.iter().map(|&k| self.head[k]).collect();
        let added: Vec<usize> = sing.rows.iter().map(|&i| self.s.n + i).collect();
        for (&k, &j) in sing.cols.iter().zip(&added) {
            self.head[k] = j;
        }
        for &j in &removed {
            if !added.contains(&j) {
                let (lo, hi, x) = (self.lower[j], self.upper[j], self.x[j]);
                let st = if lo.is_finite() && (!hi.is_finite() || x - lo <= hi - x) {
                    VarStatus::AtLower
                } else if hi.is_finite() {
                    VarStatus::AtUpper
                } else {
                    VarStatus::Free
                };
                self.status[j] = st;
                self.x[j] = self.nonbasic_value(j, st);
            }
        }
        for &j in &added {
            self.status[j] = VarStatus::Basic;
        }
        self.weights.iter_mut().for_each(|w| *w = 1.0);
    }

    fn recompute_basics(&mut self) {
        let mut rhs = self.s.b.clone();
        for j in 0..self.ncols {
            if self.status[j] != VarStatus::Basic {
                let xj = self.x[j];
                if xj != 0.0 {
                    self.for_col(j, |i, a| rhs[i] -= a * xj);
                }
            }
        }
        self.ftran(&mut rhs);
        for (k, &j) in self.head.iter().enumerate() {
            self.x[j] = rhs[k];
        }
    }

    fn push_eta(&mut self, row: usize, alpha: &[f64]) -> Result<()> {
        let col = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != row && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta { row, pivot: alpha[row], col });
        if self.etas.len() >= self.s.params.refactor_every {
            self.refactor()?;
        }
        Ok(())
    }

    fn tick(&mut self) -> Result<()> {
        self.iters += 1;
        let limit = self
            .s
            .params
            .max_iter
            .unwrap_or(10_000 + 50 * (self.s.n + self.s.m));
        if self.iters > limit {
            return Err(Error::Numerical(format!("simplex iteration limit {limit} reached")));
        }
        Ok(())
    }

    fn primal_feasible(&self) -> bool {
        self.head.iter().all(|&j| self.violation_sign(j) == 0.0)
    }

    fn dual_feasible(&self) -> bool {
        let mut y = self.basic_costs();
        self.btran(&mut y);
        let tol = self.s.params.tol_dual_feas;
        (0..self.ncols).all(|j| {
            if self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                return true;
            }
            let d = self.cost[j] - self.dot(j, &y);
            match self.status[j] {
                VarStatus::AtLower => d >= -tol,
                VarStatus::AtUpper => d <= tol,
                _ => d.abs() <= tol,
            }
        })
    }

    /// Entering column and its direction of motion. Nonbasic columns have
    /// zero cost in phase 1.
    fn price(&self, y: &[f64], phase1: bool, bland: bool) -> Option<(usize, f64)> {
        let tol = self.s.params.tol_opt;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            let st = self.status[j];
            if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost[j] };
            let d = c - self.dot(j, y);
            let dir = match st {
                VarStatus::AtLower if d < -tol => 1.0,
                VarStatus::AtUpper if d > tol => -1.0,
                VarStatus::Free if d.abs() > tol => -d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = d * d / self.weights[j];
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    /// Devex reference weights after pivoting column `q` into row `r`;
    /// must run before the basis update.
    fn update_weights(&mut self, r: usize, q: usize, alpha_rq: f64) {
        let mut rho = vec![0.0; self.s.m];
        rho[r] = 1.0;
        self.btran(&mut rho);
        let wq = self.weights[q];
        let mut top: f64 = 0.0;
        for j in 0..self.ncols {
            if self.status[j] == VarStatus::Basic || j == q || self.lower[j] == self.upper[j] {
                continue;
            }
            let a = self.dot(j, &rho);
            if a != 0.0 {
                let ratio = a / alpha_rq;
                self.weights[j] = self.weights[j].max(ratio * ratio * wq);
                top = top.max(self.weights[j]);
            }
        }
        let jl = self.head[r];
        self.weights[jl] = (wq / (alpha_rq * alpha_rq)).max(1.0);
        if top.max(self.weights[jl]) > MAX_WEIGHT {
            self.weights.iter_mut().for_each(|w| *w = 1.0);
        }
    }

    /// Widens the bounds that can block a ratio test: both bounds of basic
    /// columns and the far bound of nonbasic ones. Fixed columns keep
    /// theirs. No value moves, so feasibility is kept.
    fn perturb(&mut self) {
        self.saved_bounds = Some((self.lower.clone(), self.upper.clone()));
        self.perturbed_once = true;
        for j in 0..self.ncols {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo == hi {
                continue;
            }
            let mut delta = |b: f64| PERTURB_SCALE * (1.0 + b.abs()) * (1.0 + self.rng.gen::<f64>());
            let widen_lo = matches!(self.status[j], VarStatus::Basic | VarStatus::AtUpper) && lo.is_finite();
            let widen_hi = matches!(self.status[j], VarStatus::Basic | VarStatus::AtLower) && hi.is_finite();
            if widen_lo {
                self.lower[j] = lo - delta(lo);
            }
            if widen_hi {
                self.upper[j] = hi + delta(hi);
            }
        }
    }

    fn restore_bounds(&mut self) {
        if let Some((lo, hi)) = self.saved_bounds.take() {
            self.lower = lo;
            self.upper = hi;
            for j in 0..self.ncols {
                if self.status[j] != VarStatus::Basic {
                    self.x[j] = self.nonbasic_value(j, self.status[j]);
                }
            }
            self.recompute_basics();
            self.degenerate = 0;
        }
    }

    fn primal(&mut self) -> Result<PrimalEnd> {
        let p = self.s.params.clone();
        let m = self.s.m;
        loop {
            self.tick()?;
            let (mut y, phase1) = self.phase_costs();
            self.btran(&mut y);
            let bland = self.perturbed_once && self.saved_bounds.is_none() && self.degenerate >= p.bland_after;
            let Some((q, dir)) = self.price(&y, phase1, bland) else {
                if self.saved_bounds.is_some() {
                    self.restore_bounds();
                    continue;
                }
                return Ok(if phase1 { PrimalEnd::Infeasible(y) } else { PrimalEnd::Optimal });
            };
            let mut alpha = self.dense_col(q);
            self.ftran(&mut alpha);

            // Harris pass 1: largest step with feasible bounds relaxed by
            // tol_feas; a violated bound blocks where it is reached
            let mut t_max = f64::INFINITY;
            for k in 0..m {
                let g = -dir * alpha[k];
                if g.abs() <= p.tol_pivot {
                    continue;
                }
                let j = self.head[k];
                let (x, lo, hi) = (self.x[j], self.lower[j], self.upper[j]);
                let bound = match self.violation_sign(j) {
                    s if s < 0.0 => (g > 0.0).then(|| (lo - x) / g),
                    s if s > 0.0 => (g < 0.0).then(|| (x - hi) / -g),
                    _ if g < 0.0 && lo.is_finite() => Some((x - lo + p.tol_feas) / -g),
                    _ if g > 0.0 && hi.is_finite() => Some((hi + p.tol_feas - x) / g),
                    _ => None,
                };
                if let Some(t) = bound {
                    t_max = t_max.min(t);
                }
            }
            let flip = self.upper[q] - self.lower[q];
            if flip <= t_max {
                if !flip.is_finite() {
                    if phase1 {
                        return Err(Error::Numerical("unbounded direction in phase 1".into()));
                    }
                    self.restore_bounds();
                    return Ok(PrimalEnd::Unbounded);
                }
                // bound flip, no basis change
                for k in 0..m {
                    let j = self.head[k];
                    self.x[j] -= dir * alpha[k] * flip;
                }
                let (st, val) = if dir > 0.0 {
                    (VarStatus::AtUpper, self.upper[q])
                } else {
                    (VarStatus::AtLower, self.lower[q])
                };
                self.status[q] = st;
                self.x[q] = val;
                self.degenerate = 0;
                continue;
            }
            // pass 2: among rows blocking within t_max, the largest pivot
            let mut leave: Option<(usize, f64, bool)> = None;
            let mut best_piv = 0.0;
            for k in 0..m {
                let g = -dir * alpha[k];
                if g.abs() <= p.tol_pivot {
                    continue;
                }
                let j = self.head[k];
                let (x, lo, hi) = (self.x[j], self.lower[j], self.upper[j]);
                let (ratio, at_lower) = match self.violation_sign(j) {
                    s if s < 0.0 && g > 0.0 => ((lo - x) / g, true),
                    s if s > 0.0 && g < 0.0 => ((x - hi) / -g, false),
                    s if s != 0.0 => continue,
                    _ if g < 0.0 && lo.is_finite() => ((x - lo) / -g, true),
                    _ if g > 0.0 && hi.is_finite() => ((hi - x) / g, false),
                    _ => continue,
                };
                if ratio <= t_max {
                    let better = match leave {
                        None => true,
                        Some((k0, _, _)) if bland => j < self.head[k0],
                        Some(_) => g.abs() > best_piv,
                    };
                    if better {
                        best_piv = g.abs();
                        leave = Some((k, ratio, at_lower));
                    }
                }
            }
            let (r, ratio, at_lower) = leave.expect("finite t_max implies a blocking row");
            let t = ratio.max(0.0);
            self.degenerate = if t <= 1e-12 { self.degenerate + 1 } else { 0 };
            for k in 0..m {
                let j = self.head[k];
                self.x[j] -= dir * alpha[k] * t;
            }
            self.x[q] += dir * t;
            self.update_weights(r, q, alpha[r]);
            let jl = self.head[r];
            let (st, val) = if at_lower {
                (VarStatus::AtLower, self.lower[jl])
            } else {
                (VarStatus::AtUpper, self.upper[jl])
            };
            self.status[jl] = st;
            self.x[jl] = val;
            self.status[q] = VarStatus::Basic;
            self.head[r] = q;
            self.push_eta(r, &alpha)?;
            if self.degenerate >= PERTURB_AFTER && !self.perturbed_once {
                self.perturb();
            }
        }
    }

    /// Dual simplex from a dual feasible basis. Leaves the costs perturbed
    /// if a degenerate stall made it perturb them; the caller restores them
    /// and lets the primal method finish.
    fn dual(&mut self) -> Result<DualEnd> {
        let p = self.s.params.clone();
        let m = self.s.m;
        let budget = self.iters + 20 * (m + 10);
        let mut degenerate = 0usize;
        loop {
            if self.iters >= budget {
                return Ok(DualEnd::GiveUp);
            }
            self.tick()?;
            let mut pick: Option<(usize, bool)> = None;
            let mut worst = p.tol_feas;
            for k in 0..m {
                let j = self.head[k];
                let below = self.lower[j] - self.x[j];
                let above = self.x[j] - self.upper[j];
                if below > worst {
                    worst = below;
                    pick = Some((k, true));
                } else if above > worst {
                    worst = above;
                    pick = Some((k, false));
                }
            }
            let Some((r, below)) = pick else {
                return Ok(DualEnd::Feasible);
            };
            let mut rho = vec![0.0; m];
            rho[r] = 1.0;
            self.btran(&mut rho);
            let mut y = self.basic_costs();
            self.btran(&mut y);

            // Harris pass 1 on the reduced costs, relaxed by the dual
            // feasibility tolerance
            let mut cands: Vec<(usize, f64, f64)> = Vec::new(); // (column, |a|, ratio)
            let mut t_max = f64::INFINITY;
            for j in 0..self.ncols {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = self.dot(j, &rho);
                if a.abs() <= p.tol_pivot {
                    continue;
                }
                let eligible = match st {
                    VarStatus::AtLower => (a < 0.0) == below,
                    VarStatus::AtUpper => (a > 0.0) == below,
                    _ => true,
                };
                if !eligible {
                    continue;
                }
                let d = self.cost[j] - self.dot(j, &y);
                let slack = match st {
                    VarStatus::AtLower => d,
                    VarStatus::AtUpper => -d,
                    _ => d.abs(),
                };
                t_max = t_max.min((slack + p.tol_dual_feas) / a.abs());
                cands.push((j, a.abs(), slack.max(0.0) / a.abs()));
            }
            // pass 2: the largest pivot among the columns within t_max
            let Some(&(q, _, step)) = cands
                .iter()
                .filter(|c| c.2 <= t_max)
                .max_by(|x, y| x.1.total_cmp(&y.1))
            else {
                let ray = if below { rho.iter().map(|v| -v).collect() } else { rho };
                return Ok(DualEnd::Infeasible(ray));
            };
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };
            let mut alpha = self.dense_col(q);
            self.ftran(&mut alpha);
            if alpha[r].abs() <= p.tol_pivot {
                return Ok(DualEnd::GiveUp);
            }
            let jl = self.head[r];
            let target = if below { self.lower[jl] } else { self.upper[jl] };
            let dq = -(target - self.x[jl]) / alpha[r];
            for k in 0..m {
                let j = self.head[k];
                self.x[j] -= alpha[k] * dq;
            }
            self.x[q] += dq;
            self.x[jl] = target;
            self.status[jl] = if below { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.status[q] = VarStatus::Basic;
            self.head[r] = q;
            let repairs = self.repairs;
            self.push_eta(r, &alpha)?;
            if self.repairs != repairs {
                return Ok(DualEnd::GiveUp);
            }
            if degenerate >= PERTURB_AFTER && self.saved_cost.is_none() {
                self.perturb_costs();
            }
        }
    }

    /// Moves the cost of every nonbasic column away from dual degeneracy:
    /// up at the lower bound, down at the upper bound. Dual feasibility is
    /// kept.
    fn perturb_costs(&mut self) {
        self.saved_cost = Some(self.cost.clone());
        for j in 0..self.ncols {
            let delta = COST_PERTURB_SCALE * (1.0 + self.cost[j].abs()) * (1.0 + self.rng.gen::<f64>());
            match self.status[j] {
                VarStatus::AtLower if self.lower[j] < self.upper[j] => self.cost[j] += delta,
                VarStatus::AtUpper if self.lower[j] < self.upper[j] => self.cost[j] -= delta,
                _ => {}
            }
        }
    }

    fn restore_costs(&mut self) {
        if let Some(c) = self.saved_cost.take() {
            self.cost = c;
        }
    }

    fn finish(self, end: PrimalEnd) -> LpOutcome {
        let s = self.s;
        let n = s.n;
        let status = match end {
            PrimalEnd::Optimal => LpStatus::Optimal,
            PrimalEnd::Unbounded => LpStatus::Unbounded,
            PrimalEnd::Infeasible(_) => LpStatus::Infeasible,
        };
        let mut y = self.basic_costs();
        self.btran(&mut y);
        let sign = if s.model.sense == Sense::Max { -1.0 } else { 1.0 };
        let reduced_costs = (0..n).map(|j| sign * (s.cost[j] - self.dot(j, &y))).collect();
        let x: Vec<f64> = self.x[..n].to_vec();
        let objective = match status {
            LpStatus::Optimal => s.model.objective(&x),
            _ => sign * f64::NEG_INFINITY,
        };
        let basis = Basis { status: self.status[..n + s.m].to_vec() };
        LpOutcome {
            status,
            x,
            objective,
            duals: y.iter().map(|v| sign * v).collect(),
            reduced_costs,
            farkas: None,
            basis: Some(basis),
            iterations: self.iters,
        }
    }
}
