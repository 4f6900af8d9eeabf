//! Linear programming: model container, a bounded revised simplex solver
//! with dual prices and Farkas certificates, and duality checks.

mod lu;
mod model;
mod simplex;

pub use model::{Constraint, LpModel, Relation, Sense, Variable};
pub use simplex::LpSolver;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct LpParams {
    /// Primal feasibility tolerance.
    pub tol_feas: f64,
    /// Smallest pivot magnitude accepted in ratio tests.
    pub tol_pivot: f64,
    /// Duality gap tolerance used by [`verify_duality`].
    pub tol_dual: f64,
    /// Reduced-cost threshold for optimality.
    pub tol_opt: f64,
    /// Dual feasibility tolerance when deciding on a dual simplex warm start.
    pub tol_dual_feas: f64,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub max_iter: Option<usize>,
}

impl Default for LpParams {
    fn default() -> Self {
        LpParams {
            tol_feas: 1e-7,
            tol_pivot: 1e-9,
            tol_dual: 1e-6,
            tol_opt: 1e-9,
            tol_dual_feas: 1e-7,
            refactor_every: 50,
            bland_after: 50,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Simplex basis over the structural columns followed by one slack per
/// row, usable as a warm start.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

impl Basis {
    /// The same basis for a model that gained `added` structural columns
    /// (appended after the existing ones) and kept its rows.
    pub fn with_added_columns(&self, num_vars: usize, added: usize) -> Basis {
        let mut status = self.status[..num_vars].to_vec();
        status.extend(std::iter::repeat(VarStatus::AtLower).take(added));
        status.extend_from_slice(&self.status[num_vars..]);
        Basis { status }
    }
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals in the model's own sense: for a minimization, `<=` rows
    /// have nonpositive and `>=` rows nonnegative duals.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// On infeasibility, row multipliers `y` with `y_i <= 0` on `<=` rows,
    /// `y_i >= 0` on `>=` rows and `y^T b > max_{l<=x<=u} y^T A x`.
    pub farkas: Option<Vec<f64>>,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

pub fn solve_lp(model: &LpModel, params: &LpParams) -> Result<LpOutcome> {
    LpSolver::new(model, params.clone())?.solve()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub violations: Vec<String>,
}

impl DualityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recomputes the dual objective from `outcome.duals` and checks sign
/// conditions, primal feasibility and complementary slackness.
pub fn verify_duality(model: &LpModel, outcome: &LpOutcome, params: &LpParams) -> DualityReport {
    let tol = params.tol_dual;
    let feas = params.tol_feas.max(1e-7) * 10.0;
    let mut violations = Vec::new();
    // work in minimization form
    let sign = if model.sense == Sense::Max { -1.0 } else { 1.0 };
    let y: Vec<f64> = outcome.duals.iter().map(|v| sign * v).collect();
    let x = &outcome.x;
    let primal = model.objective(x);

    let viol = model.max_violation(x);
    if viol > feas {
        violations.push(format!("primal infeasible by {viol:e}"));
    }
    let mut reduced: Vec<f64> = model.vars.iter().map(|v| sign * v.cost).collect();
    let mut dual = sign * model.offset;
    for (i, row) in model.rows.iter().enumerate() {
        let yi = y[i];
        for &(j, a) in &row.coeffs {
            reduced[j] -= yi * a;
        }
        dual += yi * row.rhs;
        let bad_sign = match row.relation {
            Relation::Le => yi > tol,
            Relation::Ge => yi < -tol,
            Relation::Eq => false,
        };
        if bad_sign {
            violations.push(format!("row {} dual {yi:e} has the wrong sign", row.name));
        }
        let slack = row.rhs - row.activity(x);
        if yi.abs() > tol && slack.abs() > feas {
            violations.push(format!("row {} has dual {yi:e} but slack {slack:e}", row.name));
        }
    }
    for (j, v) in model.vars.iter().enumerate() {
        let d = reduced[j];
        if d > tol {
            if v.lower.is_finite() {
                dual += d * v.lower;
                if (x[j] - v.lower).abs() > feas {
                    violations.push(format!("variable {} has reduced cost {d:e} off its lower bound", v.name));
                }
            } else {
                violations.push(format!("variable {} has reduced cost {d:e} and no lower bound", v.name));
            }
        } else if d < -tol {
            if v.upper.is_finite() {
                dual += d * v.upper;
                if (x[j] - v.upper).abs() > feas {
                    violations.push(format!("variable {} has reduced cost {d:e} off its upper bound", v.name));
                }
            } else {
                violations.push(format!("variable {} has reduced cost {d:e} and no upper bound", v.name));
            }
        } else if d != 0.0 {
            // tiny reduced costs: charge them at the primal value
            dual += d * x[j];
        }
    }
    let dual = sign * dual;
    let gap = (primal - dual).abs();
    if gap > tol * (1.0 + primal.abs()) {
        violations.push(format!("duality gap {gap:e} (primal {primal}, dual {dual})"));
    }
    DualityReport { primal_objective: primal, dual_objective: dual, gap, violations }
}

/// Certificate margin `y^T b - max_{l<=x<=u} y^T A x` of a Farkas ray, or
/// `-inf` when the ray has the wrong sign on some row or the maximum is
/// unbounded. A valid infeasibility proof has a positive margin.
pub fn farkas_margin(model: &LpModel, ray: &[f64]) -> f64 {
    let tiny = 1e-9;
    let mut ya = vec![0.0; model.num_vars()];
    let mut margin = 0.0;
    for (i, row) in model.rows.iter().enumerate() {
        let yi = ray[i];
        let ok = match row.relation {
            Relation::Le => yi <= tiny,
            Relation::Ge => yi >= -tiny,
            Relation::Eq => true,
        };
        if !ok {
            return f64::NEG_INFINITY;
        }
        margin += yi * row.rhs;
        for &(j, a) in &row.coeffs {
            ya[j] += yi * a;
        }
    }
    for (j, v) in model.vars.iter().enumerate() {
        let c = ya[j];
        if c > tiny {
            if !v.upper.is_finite() {
                return f64::NEG_INFINITY;
            }
            margin -= c * v.upper;
        } else if c < -tiny {
            if !v.lower.is_finite() {
                return f64::NEG_INFINITY;
            }
            margin -= c * v.lower;
        }
    }
    margin
}

#[cfg(test)]
mod tests;
