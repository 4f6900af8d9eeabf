//! Per-service pricing for the pattern master problem.
//!
//! Given master duals, the pricing problem of service `k` maximizes
//! `α_k + Σ_v (π_vk χ_v + η_v R_v) + Σ_ij (β_ij - σ) R_ij` over all
//! single-service embeddings. A positive optimum is a column with negative
//! reduced cost. For a Farkas ray the `σ` term is dropped: a column breaks
//! the infeasibility certificate as soon as the ray has a positive inner
//! product with it.
//!
//! The aggregated LP is solved first. When its optimum is not positive no
//! column exists; when its solution maps to an integral embedding that
//! embedding is the answer; otherwise the MILP decides.

use std::time::{Duration, Instant};

use log::debug;

use crate::ccg::{pattern_from_solution, Pattern, PatternSource};
use crate::ccg::pattern::worst_row;
use crate::error::{Error, Result};
use crate::formulations::{build_lp2, build_milp, extract_solution, SliceSolution, VarIndex};
use crate::lp::{LpModel, LpParams, LpSolver, LpStatus, Sense};
use crate::milp::{solve_milp, MilpParams, MilpStatus};
use crate::model::NetworkInstance;

/// Dual values of the restricted master, or a Farkas ray of it.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPrices {
    /// Pattern choice row per service (free).
    pub alpha: Vec<f64>,
    /// Link capacity row per link (`<= 0`).
    pub beta: Vec<f64>,
    /// Node cover row, `pi[k][v]` (`<= 0`).
    pub pi: Vec<Vec<f64>>,
    /// Node capacity row per cloud node (`<= 0`).
    pub eta: Vec<f64>,
    /// Activation bound `y_v <= 1` per cloud node (`<= 0`).
    pub zeta: Vec<f64>,
    pub is_ray: bool,
}

impl DualPrices {
    pub fn zeros(inst: &NetworkInstance) -> Self {
        let nv = inst.cloud_nodes.len();
        DualPrices {
            alpha: vec![0.0; inst.services.len()],
            beta: vec![0.0; inst.links.len()],
            pi: vec![vec![0.0; nv]; inst.services.len()],
            eta: vec![0.0; nv],
            zeta: vec![0.0; nv],
            is_ray: false,
        }
    }

    /// Checks the sign conditions within `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let bad = |name: &str, vals: &[f64]| {
            vals.iter()
                .position(|&v| v > tol)
                .map(|i| Error::Precondition(format!("{name}[{i}] = {} must be nonpositive", vals[i])))
        };
        if let Some(e) = bad("beta", &self.beta).or_else(|| bad("eta", &self.eta)).or_else(|| bad("zeta", &self.zeta)) {
            return Err(e);
        }
        for (k, pi) in self.pi.iter().enumerate() {
            if let Some(e) = bad(&format!("pi[{k}]"), pi) {
                return Err(e);
            }
        }
        Ok(())
    }

    /// Cost charged per unit of link rate in the pricing objective.
    fn link_sigma(&self, sigma: f64) -> f64 {
        if self.is_ray {
            0.0
        } else {
            sigma
        }
    }

    /// Pricing objective of a pattern; positive means the pattern would
    /// improve the master (or break its infeasibility certificate).
    pub fn value_of(&self, pattern: &Pattern, sigma: f64) -> f64 {
        let k = pattern.service;
        let ls = self.link_sigma(sigma);
        let mut v = self.alpha[k];
        for (i, (&c, &r)) in pattern.chi.iter().zip(&pattern.rate_v).enumerate() {
            v += self.pi[k][i] * c + self.eta[i] * r;
        }
        for (e, &r) in pattern.rate_ij.iter().enumerate() {
            v += (self.beta[e] - ls) * r;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingParams {
    /// A pricing optimum above this counts as a new column.
    pub price_tol: f64,
    /// Solve the compact LP first and skip the MILP when it settles the
    /// question.
    pub lp_acceleration: bool,
    pub lp: LpParams,
    pub milp: MilpParams,
}

impl Default for PricingParams {
    fn default() -> Self {
        PricingParams {
            price_tol: 1e-6,
            lp_acceleration: true,
            lp: LpParams::default(),
            milp: MilpParams { gap_tol: 1e-9, ..MilpParams::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PricingOutcome {
    NewPattern(Pattern),
    NoPattern,
}

/// What one pricing call did, for traces.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingRun {
    pub service: usize,
    pub outcome: PricingOutcome,
    /// Optimum of the compact LP, when it was solved (`-inf` if infeasible).
    pub lp_value: Option<f64>,
    pub milp_used: bool,
    /// Best MILP value found, when the MILP ran and found one.
    pub milp_value: Option<f64>,
    pub wall_time: Duration,
}

impl PricingRun {
    pub fn pattern(&self) -> Option<&Pattern> {
        match &self.outcome {
            PricingOutcome::NewPattern(p) => Some(p),
            PricingOutcome::NoPattern => None,
        }
    }
}

/// Replaces the objective of a single-service model by the pricing
/// objective. `idx` describes `model` on `inst.with_services(&[k])`.
fn set_pricing_objective(model: &mut LpModel, idx: &VarIndex, inst: &NetworkInstance, k: usize, duals: &DualPrices) {
    let svc = &inst.services[k];
    let ls = duals.link_sigma(inst.sigma);
    model.sense = Sense::Max;
    model.offset = duals.alpha[k];
    for v in &mut model.vars {
        v.cost = 0.0;
    }
    for v in 0..idx.num_cloud {
        model.vars[idx.x_vk(v, 0)].cost = duals.pi[k][v];
        for f in 0..svc.chain_len() {
            model.vars[idx.x_vks(v, 0, f)].cost = duals.eta[v] * svc.rates[f + 1];
        }
    }
    for e in 0..idx.num_links {
        let c = duals.beta[e] - ls;
        for s in 0..=svc.chain_len() {
            for p in 0..idx.rate_paths() {
                model.vars[idx.r(e, 0, s, p)].cost = c * svc.rates[s];
            }
        }
    }
}

/// Pricing MILP of service `k`: the single-service compact MILP with the
/// pricing objective. Columns follow `VarIndex` on
/// `inst.with_services(&[k])`.
pub fn build_pricing_milp(inst: &NetworkInstance, k: usize, duals: &DualPrices) -> (LpModel, VarIndex) {
    let sub = inst.with_services(&[k]);
    let (mut m, idx) = build_milp(&sub);
    set_pricing_objective(&mut m, &idx, inst, k, duals);
    (m, idx)
}

/// Compact pricing LP of service `k`, on aggregated rates.
pub fn build_pricing_lp(inst: &NetworkInstance, k: usize, duals: &DualPrices) -> (LpModel, VarIndex) {
    let sub = inst.with_services(&[k]);
    let (mut m, idx) = build_lp2(&sub);
    set_pricing_objective(&mut m, &idx, inst, k, duals);
    (m, idx)
}

/// Maps a point of the compact model of service `k` to a point of the
/// service's compact MILP.
///
/// The rate goes on path 0, every per-path indicator takes the aggregated
/// rate and the path split is `(1, 0, ..)`. The indicators `z_ijk`, `x_vk`
/// and `y_v` are then lowered to the smallest values the rows allow
/// (`max_p z_ijksp`, `max_f x_vks`, `x_vk`), which never lowers the pricing
/// objective.
pub fn recover_full_solution(inst: &NetworkInstance, k: usize, values: &[f64], tol: f64) -> Result<SliceSolution> {
    let sub = inst.with_services(&[k]);
    let (lp2, lp2_idx) = build_lp2(&sub);
    if values.len() != lp2_idx.num_vars() {
        return Err(Error::LengthMismatch { expected: lp2_idx.num_vars(), got: values.len() });
    }
    let (name, res) = worst_row(&lp2, values);
    if res > tol {
        return Err(Error::Precondition(format!("point violates {name} by {res:e}")));
    }
    let mut sol = extract_solution(&lp2_idx, values)?;
    tighten_indicators(&mut sol);
    Ok(sol)
}

fn tighten_indicators(sol: &mut SliceSolution) {
    for k in 0..sol.num_services() {
        for (e, z) in sol.z_ijk[k].iter_mut().enumerate() {
            let used = sol.z_ijksp[k].iter().flatten().map(|zp| zp[e]).fold(0.0, f64::max);
            *z = z.min(used);
        }
        for (v, x) in sol.x_vk[k].iter_mut().enumerate() {
            let used = sol.x_vks[k].iter().map(|xf| xf[v]).fold(0.0, f64::max);
            *x = x.min(used);
        }
    }
    for (v, y) in sol.y_v.iter_mut().enumerate() {
        let used = sol.x_vk.iter().map(|x| x[v]).fold(0.0, f64::max);
        *y = y.min(used);
    }
}

/// Residual allowed when a recovered point is checked against the MILP.
const RECOVERY_TOL: f64 = 1e-7;

/// Searches a column of service `k` with positive pricing value.
///
/// Returns `NoPattern` when the optimum is at most `price_tol`, including
/// when the service has no feasible embedding at all.
pub fn find_pattern(
    inst: &NetworkInstance,
    k: usize,
    duals: &DualPrices,
    iteration: usize,
    params: &PricingParams,
) -> Result<PricingRun> {
    let start = Instant::now();
    let mut run = PricingRun {
        service: k,
        outcome: PricingOutcome::NoPattern,
        lp_value: None,
        milp_used: false,
        milp_value: None,
        wall_time: Duration::ZERO,
    };
    let sigma = inst.sigma;
    if params.lp_acceleration {
        let (lp, _) = build_pricing_lp(inst, k, duals);
        let out = LpSolver::new(&lp, params.lp.clone())?.solve()?;
        match out.status {
            LpStatus::Optimal => {
                run.lp_value = Some(out.objective);
                if out.objective <= params.price_tol {
                    run.wall_time = start.elapsed();
                    return Ok(run);
                }
                let block = recover_full_solution(inst, k, &out.x, params.lp.tol_feas * 100.0)?;
                if block.is_integral(1e-9) {
                    let (milp, idx) = build_pricing_milp(inst, k, duals);
                    let point = block.pack(&idx);
                    if worst_row(&milp, &point).1 <= RECOVERY_TOL {
                        let pattern = pattern_from_solution(inst, k, &block, iteration, PatternSource::LpRecovered)?;
                        debug_assert!((duals.value_of(&pattern, sigma) - out.objective).abs() <= 1e-6);
                        run.outcome = PricingOutcome::NewPattern(pattern);
                        run.wall_time = start.elapsed();
                        return Ok(run);
                    }
                }
            }
            LpStatus::Infeasible => {
                run.lp_value = Some(f64::NEG_INFINITY);
                run.wall_time = start.elapsed();
                return Ok(run);
            }
            LpStatus::Unbounded => {
                return Err(Error::Numerical(format!("pricing LP of service {k} is unbounded")));
            }
        }
    }

    let (milp, idx) = build_pricing_milp(inst, k, duals);
    let res = solve_milp(&milp, &params.milp)?;
    debug!(
        "pricing MILP of service {k}: {:?} after {} nodes, {} LP iterations, {:.3}s",
        res.status,
        res.nodes,
        res.lp_iterations,
        res.wall_time.as_secs_f64()
    );
    run.milp_used = true;
    if let Some(x) = &res.x {
        run.milp_value = Some(res.objective);
        if let Some(lp) = run.lp_value {
            debug_assert!(res.objective <= lp + 1e-6, "pricing MILP {} above its LP bound {lp}", res.objective);
        }
        if res.objective > params.price_tol {
            let block = extract_solution(&idx, x)?;
            let pattern = pattern_from_solution(inst, k, &block, iteration, PatternSource::Milp)?;
            run.outcome = PricingOutcome::NewPattern(pattern);
        }
    }
    if matches!(res.status, MilpStatus::Feasible | MilpStatus::NoSolution) {
        debug!("pricing MILP of service {k} stopped at a limit ({:?})", res.status);
    }
    run.wall_time = start.elapsed();
    Ok(run)
}
