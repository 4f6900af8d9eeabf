//! LP-based branch-and-bound for models with integrality marks.
//!
//! Nodes are explored depth first, rounding-direction child first, until
//! an incumbent exists. Afterwards each dive still runs to its end (prune,
//! infeasible or integral) before the open node with the best bound is
//! taken. Branching is on the most fractional variable (ties: lowest index)
//! by tightening its bounds. Child LPs warm start from the parent basis.

use std::time::{Duration, Instant};

use log::debug;

use crate::error::{Error, Result};
use crate::lp::{Basis, LpModel, LpOutcome, LpParams, LpSolver, LpStatus, Sense};

#[derive(Debug, Clone, PartialEq)]
pub struct MilpParams {
    pub time_limit: Option<Duration>,
    /// Relative gap `|incumbent - bound| <= gap_tol * (1 + |incumbent|)`.
    pub gap_tol: f64,
    pub int_tol: f64,
    pub node_limit: Option<usize>,
    pub branching: Branching,
    pub lp: LpParams,
}

/// Choice of the branching variable among fractional marked variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branching {
    /// Largest distance to the nearest integer; ties keep the lowest index.
    MostFractional,
    /// Lowest column index. The slicing models list placement before link
    /// and path indicators, so this settles placements first; on those
    /// models it avoids the deep trees most-fractional branching can build
    /// over interchangeable paths.
    #[default]
    FirstIndex,
}

impl Default for MilpParams {
    fn default() -> Self {
        MilpParams {
            time_limit: None,
            gap_tol: 1e-6,
            int_tol: 1e-6,
            node_limit: None,
            branching: Branching::default(),
            lp: LpParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    /// A limit was hit with an incumbent in hand.
    Feasible,
    Infeasible,
    Unbounded,
    /// A limit was hit before any incumbent was found.
    NoSolution,
}

#[derive(Debug, Clone)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Incumbent, integral within `int_tol` and snapped on marked variables.
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    pub best_bound: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub wall_time: Duration,
    /// `(global bound, incumbent)` after every processed node, in the
    /// model's sense; the incumbent is infinite while none exists.
    pub history: Vec<(f64, f64)>,
}

impl MilpResult {
    pub fn has_solution(&self) -> bool {
        self.x.is_some()
    }

    pub fn relative_gap(&self) -> f64 {
        (self.objective - self.best_bound).abs() / (1.0 + self.objective.abs())
    }
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Parent LP value in minimization form.
    bound: f64,
    basis: Option<Basis>,
}

fn branching_variable(model: &LpModel, x: &[f64], int_tol: f64, rule: Branching) -> Option<usize> {
    if rule == Branching::FirstIndex {
        return model.vars.iter().enumerate().position(|(j, v)| {
            let f = x[j] - x[j].floor();
            v.integer && f.min(1.0 - f) > int_tol
        });
    }
    let mut best = None;
    let mut best_frac = int_tol;
    for (j, v) in model.vars.iter().enumerate() {
        if !v.integer {
            continue;
        }
        let f = x[j] - x[j].floor();
        let dist = f.min(1.0 - f);
        if dist > best_frac {
            best_frac = dist;
            best = Some(j);
        }
    }
    best
}

/// Reduced-cost fixing: a marked variable at a bound whose reduced cost
/// alone lifts the node value past the cutoff keeps that bound in the
/// whole subtree. `val` and `cutoff` are in minimization form.
fn fix_by_reduced_cost(model: &LpModel, out: &LpOutcome, sign: f64, val: f64, cutoff: f64, node: &mut Node) {
    for (j, v) in model.vars.iter().enumerate() {
        if !v.integer || node.lower[j] == node.upper[j] {
            continue;
        }
        let d = sign * out.reduced_costs[j];
        if out.x[j] <= node.lower[j] + 1e-9 && d > 0.0 && val + d > cutoff + 1e-9 {
            node.upper[j] = node.lower[j];
        } else if out.x[j] >= node.upper[j] - 1e-9 && d < 0.0 && val - d > cutoff + 1e-9 {
            node.lower[j] = node.upper[j];
        }
    }
}

/// Rounds marked variables and keeps the point only if every row and
/// bound still holds.
fn snap(model: &LpModel, x: &[f64], tol: f64) -> Option<Vec<f64>> {
    let mut y = x.to_vec();
    for (j, v) in model.vars.iter().enumerate() {
        if v.integer {
            y[j] = y[j].round();
        } else {
            y[j] = y[j].clamp(v.lower, v.upper);
        }
    }
    (model.max_violation(&y) <= tol).then_some(y)
}

pub fn solve_milp(model: &LpModel, params: &MilpParams) -> Result<MilpResult> {
    let start = Instant::now();
    let sign = if model.sense == Sense::Max { -1.0 } else { 1.0 };
    let solver = LpSolver::new(model, params.lp.clone())?;
    let feas_tol = params.lp.tol_feas * 10.0;
    for v in model.vars.iter().filter(|v| v.integer) {
        if !v.lower.is_finite() || !v.upper.is_finite() {
            return Err(Error::Model(format!("integer variable {} needs finite bounds", v.name)));
        }
    }

    let mut open = vec![Node {
        lower: model.vars.iter().map(|v| v.lower).collect(),
        upper: model.vars.iter().map(|v| v.upper).collect(),
        bound: f64::NEG_INFINITY,
        basis: None,
    }];
    let mut incumbent: Option<Vec<f64>> = None;
    let mut inc_val = f64::INFINITY;
    let mut pruned_min = f64::INFINITY;
    let mut nodes = 0usize;
    let mut lp_iterations = 0usize;
    let mut history = Vec::new();
    let mut limit_hit = false;
    let mut root_unbounded = false;
    // set while the last node pushed children: the dive continues into them
    let mut plunging = false;

    let cutoff = |inc: f64| {
        if inc.is_finite() {
            inc - params.gap_tol * (1.0 + inc.abs())
        } else {
            f64::INFINITY
        }
    };

    while !open.is_empty() {
        if params.time_limit.is_some_and(|t| start.elapsed() >= t)
            || params.node_limit.is_some_and(|l| nodes >= l)
        {
            limit_hit = true;
            break;
        }
        let idx = if incumbent.is_none() || plunging {
            open.len() - 1
        } else {
            let mut best = 0;
            for (i, nd) in open.iter().enumerate() {
                if nd.bound < open[best].bound {
                    best = i;
                }
            }
            best
        };
        let node = open.swap_remove(idx);
        plunging = false;
        if node.bound >= cutoff(inc_val) {
            pruned_min = pruned_min.min(node.bound);
            continue;
        }
        nodes += 1;
        let out = solver
            .solve_with(&node.lower, &node.upper, node.basis.as_ref())
            .map_err(|e| Error::Numerical(format!("node {nodes}: {e}")))?;
        lp_iterations += out.iterations;
        match out.status {
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => {
                if nodes == 1 {
                    root_unbounded = true;
                    break;
                }
            }
            LpStatus::Optimal => {
                let val = sign * out.objective;
                if val >= cutoff(inc_val) {
                    pruned_min = pruned_min.min(val);
                } else {
                    match branching_variable(model, &out.x, params.int_tol, params.branching) {
                        None => {
                            let point = snap(model, &out.x, feas_tol).or_else(|| {
                                // resolve the continuous part with integers fixed
                                let mut lo = node.lower.clone();
                                let mut hi = node.upper.clone();
                                for (j, v) in model.vars.iter().enumerate() {
                                    if v.integer {
                                        lo[j] = out.x[j].round();
                                        hi[j] = lo[j];
                                    }
                                }
                                let fixed = solver.solve_with(&lo, &hi, None).ok()?;
                                (fixed.status == LpStatus::Optimal)
                                    .then(|| snap(model, &fixed.x, feas_tol))
                                    .flatten()
                            });
                            if let Some(point) = point {
                                let v = sign * model.objective(&point);
                                if v < inc_val {
                                    debug!("incumbent {v} at node {nodes}");
                                    inc_val = v;
                                    incumbent = Some(point);
                                }
                            }
                        }
                        Some(j) => {
                            let mut node = node;
                            if inc_val.is_finite() {
                                fix_by_reduced_cost(model, &out, sign, val, cutoff(inc_val), &mut node);
                            }
                            let xj = out.x[j];
                            let mut down = Node {
                                lower: node.lower.clone(),
                                upper: node.upper.clone(),
                                bound: val,
                                basis: out.basis.clone(),
                            };
                            down.upper[j] = xj.floor();
                            let mut up = Node { lower: node.lower, upper: node.upper, bound: val, basis: out.basis };
                            up.lower[j] = xj.ceil();
                            plunging = true;
                            // the child in the rounding direction is popped first
                            if xj - xj.floor() >= 0.5 {
                                open.push(down);
                                open.push(up);
                            } else {
                                open.push(up);
                                open.push(down);
                            }
                        }
                    }
                }
            }
        }
        let open_min = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let bound = open_min.min(pruned_min).min(inc_val);
        history.push((sign * bound, sign * inc_val));
        if incumbent.is_some() && inc_val - open_min.min(pruned_min) <= params.gap_tol * (1.0 + inc_val.abs()) && !open.is_empty() {
            // remaining nodes cannot improve beyond the tolerance
            pruned_min = pruned_min.min(open_min);
            open.clear();
        }
    }

    let open_min = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let bound = open_min.min(pruned_min).min(inc_val);
    let status = if root_unbounded {
        MilpStatus::Unbounded
    } else if limit_hit {
        if incumbent.is_some() {
            MilpStatus::Feasible
        } else {
            MilpStatus::NoSolution
        }
    } else if incumbent.is_some() {
        MilpStatus::Optimal
    } else {
        MilpStatus::Infeasible
    };
    let objective = match &incumbent {
        Some(x) => model.objective(x),
        None => f64::NAN,
    };
    let best_bound = match status {
        MilpStatus::Infeasible => f64::NAN,
        MilpStatus::Unbounded => sign * f64::NEG_INFINITY,
        _ => sign * bound,
    };
    Ok(MilpResult {
        status,
        x: incumbent,
        objective,
        best_bound,
        nodes,
        lp_iterations,
        wall_time: start.elapsed(),
        history,
    })
}

#[cfg(test)]
mod tests;
