//! Two-stage column generation over single-service embeddings.
//!
//! Stage 1 starts every service from its own single-service MILP optimum
//! and alternates between the restricted master LP and per-service pricing
//! until no service yields a column. Stage 2 solves the restricted pattern
//! MILP over the collected columns, which rounds the master LP optimally
//! within the pool.

mod master;
pub(crate) mod pattern;

use std::time::{Duration, Instant};

use log::{debug, info};
use rayon::prelude::*;

pub use master::{build_master, MasterIndex};
pub use pattern::{pattern_from_solution, ColumnPool, Pattern, PatternSource};

use crate::error::{Error, Result};
use crate::formulations::{build_milp, extract_solution, SliceSolution};
use crate::lp::{Basis, LpParams, LpSolver, LpStatus};
use crate::milp::{solve_milp, MilpParams, MilpStatus};
use crate::model::NetworkInstance;
use crate::pricing::{find_pattern, DualPrices, PricingParams, PricingRun};

#[derive(Debug, Clone, PartialEq)]
pub struct CcgParams {
    /// Master iterations allowed in stage 1.
    pub iter_max: usize,
    /// Wall-clock budget of stage 1; pricing MILPs get what is left of it,
    /// but never less than five seconds.
    pub stage1_time_limit: Option<Duration>,
    pub stage2: MilpParams,
    /// Single-service MILPs that seed the pool.
    pub init: MilpParams,
    pub pricing: PricingParams,
    pub master_lp: LpParams,
    /// Price services on the rayon pool.
    pub parallel: bool,
    /// Consecutive repetitions of the same Farkas ray tolerated before the
    /// master is declared infeasible.
    pub max_identical_rays: usize,
}

impl Default for CcgParams {
    fn default() -> Self {
        CcgParams {
            iter_max: 100,
            stage1_time_limit: None,
            stage2: MilpParams { time_limit: Some(Duration::from_secs(60)), ..MilpParams::default() },
            init: MilpParams::default(),
            pricing: PricingParams::default(),
            master_lp: LpParams::default(),
            parallel: true,
            max_identical_rays: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcgStatus {
    Solved,
    /// Some service has no embedding, or the master stayed infeasible with
    /// no column able to repair it.
    Infeasible,
    /// Stage 1 ran out of iterations; stage 2 still ran on the partial pool.
    IterLimit,
    /// Stage 1 converged but the restricted pattern MILP has no solution
    /// (or none within its limits).
    Stage2Failed,
}

/// One master iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Master LP value; NaN while the master is infeasible.
    pub master_value: f64,
    pub columns_added: usize,
    pub milp_pricing: usize,
    /// Seconds since the start of stage 1.
    pub wall_time: f64,
}

/// One pricing call.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingLogEntry {
    pub iteration: usize,
    pub service: usize,
    pub lp_value: Option<f64>,
    pub milp_used: bool,
    pub milp_value: Option<f64>,
    pub pattern_hash: Option<u64>,
    /// The pattern found was already pooled.
    pub duplicate: bool,
}

#[derive(Debug, Clone)]
pub struct CcgResult {
    pub status: CcgStatus,
    pub solution: Option<SliceSolution>,
    /// Last optimal master LP value.
    pub master_value: Option<f64>,
    pub stage2_objective: Option<f64>,
    pub iterations: usize,
    /// Pooled columns per service.
    pub columns: Vec<usize>,
    pub milp_pricing_solves: usize,
    pub lp_pricing_solves: usize,
    /// First service found without any embedding.
    pub infeasible_service: Option<usize>,
    pub stage1_time: Duration,
    pub stage2_time: Duration,
    pub trace: Vec<IterationTrace>,
    pub pricing_log: Vec<PricingLogEntry>,
    pub pool: ColumnPool,
}

impl CcgResult {
    fn empty(num_services: usize) -> Self {
        CcgResult {
            status: CcgStatus::Infeasible,
            solution: None,
            master_value: None,
            stage2_objective: None,
            iterations: 0,
            columns: vec![0; num_services],
            milp_pricing_solves: 0,
            lp_pricing_solves: 0,
            infeasible_service: None,
            stage1_time: Duration::ZERO,
            stage2_time: Duration::ZERO,
            trace: Vec::new(),
            pricing_log: Vec::new(),
            pool: ColumnPool::new(num_services),
        }
    }
}

/// Solves every service alone and pools its optimal embedding. Returns the
/// first service without one as `Err(k)`.
pub fn initialize_columns(inst: &NetworkInstance, params: &MilpParams) -> Result<std::result::Result<ColumnPool, usize>> {
    let mut pool = ColumnPool::new(inst.services.len());
    for k in 0..inst.services.len() {
        let sub = inst.with_services(&[k]);
        let (m, idx) = build_milp(&sub);
        let res = solve_milp(&m, params)?;
        let Some(x) = &res.x else {
            if res.status != MilpStatus::Infeasible {
                info!("service {k}: no embedding found within the limits ({:?})", res.status);
            }
            return Ok(Err(k));
        };
        let block = extract_solution(&idx, x)?;
        let pattern = pattern_from_solution(inst, k, &block, 0, PatternSource::Init)?;
        pool.insert(pattern);
    }
    Ok(Ok(pool))
}

/// Same ray up to 1e-9 per component.
fn same_ray(a: &DualPrices, b: &DualPrices) -> bool {
    let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= 1e-9);
    a.is_ray
        && b.is_ray
        && close(&a.alpha, &b.alpha)
        && close(&a.beta, &b.beta)
        && close(&a.eta, &b.eta)
        && close(&a.zeta, &b.zeta)
        && a.pi.iter().zip(&b.pi).all(|(x, y)| close(x, y))
}

pub fn run_ccg(inst: &NetworkInstance, params: &CcgParams) -> Result<CcgResult> {
    let start = Instant::now();
    let nk = inst.services.len();
    let mut result = CcgResult::empty(nk);

    let mut pool = match initialize_columns(inst, &params.init)? {
        Ok(pool) => pool,
        Err(k) => {
            result.infeasible_service = Some(k);
            result.stage1_time = start.elapsed();
            return Ok(result);
        }
    };

    let mut converged = false;
    let mut infeasible = false;
    let mut basis: Option<(Basis, usize)> = None;
    let mut last_ray: Option<DualPrices> = None;
    let mut ray_repeats = 0;
    for iteration in 1..=params.iter_max {
        result.iterations = iteration;
        let (model, idx) = build_master(&pool, inst, false);
        let warm = basis.as_ref().map(|(b, cols)| b.with_added_columns(*cols, model.num_vars() - cols));
        let lower: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
        let out = LpSolver::new(&model, params.master_lp.clone())?
            .solve_with(&lower, &upper, warm.as_ref())
            .map_err(|e| Error::Numerical(format!("master LP at iteration {iteration}: {e}")))?;
        if let Some(b) = &out.basis {
            basis = Some((b.clone(), model.num_vars()));
        }
        let master_value = match out.status {
            LpStatus::Optimal => {
                result.master_value = Some(out.objective);
                out.objective
            }
            LpStatus::Infeasible => f64::NAN,
            LpStatus::Unbounded => {
                return Err(Error::Numerical(format!("master LP unbounded at iteration {iteration}")));
            }
        };
        let duals = idx
            .duals(&out)
            .ok_or_else(|| Error::Numerical(format!("master LP at iteration {iteration} returned no duals")))?;

        let mut pricing = params.pricing.clone();
        if let Some(limit) = params.stage1_time_limit {
            let left = limit.saturating_sub(start.elapsed()).max(Duration::from_secs(5));
            pricing.milp.time_limit = Some(pricing.milp.time_limit.map_or(left, |t| t.min(left)));
        }
        let price = |k: usize| find_pattern(inst, k, &duals, iteration, &pricing);
        let runs: Vec<Result<PricingRun>> = if params.parallel {
            (0..nk).into_par_iter().map(price).collect()
        } else {
            (0..nk).map(price).collect()
        };

        let mut added = 0;
        let mut milp_used = 0;
        for run in runs {
            let run = run.map_err(|e| Error::Numerical(format!("pricing at iteration {iteration}: {e}")))?;
            milp_used += run.milp_used as usize;
            result.lp_pricing_solves += run.lp_value.is_some() as usize;
            let mut entry = PricingLogEntry {
                iteration,
                service: run.service,
                lp_value: run.lp_value,
                milp_used: run.milp_used,
                milp_value: run.milp_value,
                pattern_hash: None,
                duplicate: false,
            };
            if let crate::pricing::PricingOutcome::NewPattern(p) = run.outcome {
                entry.pattern_hash = Some(p.key());
                if pool.insert(p) {
                    added += 1;
                } else {
                    entry.duplicate = true;
                }
            }
            result.pricing_log.push(entry);
        }
        result.milp_pricing_solves += milp_used;
        result.trace.push(IterationTrace {
            iteration,
            master_value,
            columns_added: added,
            milp_pricing: milp_used,
            wall_time: start.elapsed().as_secs_f64(),
        });
        debug!("iteration {iteration}: master {master_value}, {added} columns added, {milp_used} pricing MILPs");

        if duals.is_ray {
            ray_repeats = match &last_ray {
                Some(prev) if same_ray(prev, &duals) => ray_repeats + 1,
                _ => 1,
            };
            last_ray = Some(duals);
            if added == 0 || ray_repeats >= params.max_identical_rays {
                infeasible = true;
                break;
            }
        } else {
            last_ray = None;
            if added == 0 {
                converged = true;
                break;
            }
        }
    }
    result.stage1_time = start.elapsed();
    result.columns = pool.counts();

    if infeasible {
        result.pool = pool;
        return Ok(result);
    }

    let t2 = Instant::now();
    let (model, idx) = build_master(&pool, inst, true);
    let res = solve_milp(&model, &params.stage2)?;
    result.stage2_time = t2.elapsed();
    result.status = match (&res.x, converged) {
        (Some(x), _) => {
            let sol = master::expand(&pool, inst, &idx, x);
            result.stage2_objective = Some(res.objective);
            debug_assert!((sol.objective(inst) - res.objective).abs() <= 1e-6 * (1.0 + res.objective.abs()));
            result.solution = Some(sol);
            if converged {
                CcgStatus::Solved
            } else {
                CcgStatus::IterLimit
            }
        }
        (None, true) => CcgStatus::Stage2Failed,
        (None, false) => CcgStatus::IterLimit,
    };
    result.pool = pool;
    Ok(result)
}

#[cfg(test)]
mod tests;
