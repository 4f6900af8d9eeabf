//! Runs one solution method on one instance and turns the outcome into a
//! [`RunRecord`].

use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::ValueEnum;
use nsopt::{
    build_lp2, build_milp, build_minlp_linearized, extract_solution, relax, run_ccg, solve_lp, solve_milp,
    strip_cycles, CcgParams, CcgResult, CcgStatus, Census, LpParams, LpStatus, MilpParams, MilpStatus,
    NetworkInstance, SliceSolution,
};

use crate::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Method {
    /// Compact MILP, solved exactly.
    Milp,
    /// Linearized path-based MINLP, solved exactly.
    MinlpLin,
    /// LP relaxation of the MILP.
    LpI,
    /// Aggregated LP.
    LpII,
    /// LP relaxation of the linearized MINLP.
    NlpL,
    /// Final master LP value of column generation.
    PLp,
    /// Two-stage column generation heuristic.
    Ccg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Milp => "milp",
            Method::MinlpLin => "minlp-lin",
            Method::LpI => "lp-i",
            Method::LpII => "lp-ii",
            Method::NlpL => "nlp-l",
            Method::PLp => "p-lp",
            Method::Ccg => "ccg",
        }
    }

    /// Methods whose solution is a complete integral slice.
    pub fn is_integral(self) -> bool {
        matches!(self, Method::Milp | Method::MinlpLin | Method::Ccg)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_limit: Duration,
    pub gap_tol: f64,
    pub iter_max: usize,
}

impl SolveOptions {
    fn milp(&self) -> MilpParams {
        MilpParams { time_limit: Some(self.time_limit), gap_tol: self.gap_tol, ..MilpParams::default() }
    }

    fn ccg(&self) -> CcgParams {
        CcgParams {
            iter_max: self.iter_max,
            stage1_time_limit: Some(self.time_limit),
            stage2: self.milp(),
            init: self.milp(),
            ..CcgParams::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub record: RunRecord,
    /// Cycle-free solution, for integral methods that found one.
    pub solution: Option<SliceSolution>,
    pub census: Option<Census>,
    /// Human-readable progress lines.
    pub trace: Vec<String>,
}

fn milp_status(s: MilpStatus) -> &'static str {
    match s {
        MilpStatus::Optimal => "optimal",
        MilpStatus::Feasible => "feasible",
        MilpStatus::Infeasible => "infeasible",
        MilpStatus::Unbounded => "unbounded",
        MilpStatus::NoSolution => "no-solution",
    }
}

fn lp_status(s: LpStatus) -> &'static str {
    match s {
        LpStatus::Optimal => "optimal",
        LpStatus::Infeasible => "infeasible",
        LpStatus::Unbounded => "unbounded",
    }
}

fn ccg_status(s: CcgStatus) -> &'static str {
    match s {
        CcgStatus::Solved => "solved",
        CcgStatus::Infeasible => "infeasible",
        CcgStatus::IterLimit => "iter-limit",
        CcgStatus::Stage2Failed => "stage2-failed",
    }
}

/// Runs several methods on one instance. A column generation run is shared
/// between `p-lp` and `ccg`. Each method gets its own result so one failure
/// does not hide the others.
pub fn run_methods(inst: &NetworkInstance, id: &str, methods: &[Method], opts: &SolveOptions) -> Vec<Result<MethodRun>> {
    let mut ccg: Option<(CcgResult, f64)> = None;
    methods
        .iter()
        .map(|&m| {
            let mut run = match m {
                Method::Ccg | Method::PLp => {
                    if ccg.is_none() {
                        let start = Instant::now();
                        let res = run_ccg(inst, &opts.ccg()).context("column generation failed")?;
                        ccg = Some((res, start.elapsed().as_secs_f64()));
                    }
                    let (res, secs) = ccg.as_ref().unwrap();
                    ccg_record(inst, id, m, res, *secs)?
                }
                _ => run_formulation(inst, id, m, opts)?,
            };
            run.record.seed = inst.seed;
            Ok(run)
        })
        .collect()
}

pub fn run_method(inst: &NetworkInstance, id: &str, method: Method, opts: &SolveOptions) -> Result<MethodRun> {
    run_methods(inst, id, &[method], opts).pop().unwrap()
}

fn run_formulation(inst: &NetworkInstance, id: &str, method: Method, opts: &SolveOptions) -> Result<MethodRun> {
    let start = Instant::now();
    let (model, index) = match method {
        Method::Milp | Method::LpI => build_milp(inst),
        Method::MinlpLin | Method::NlpL => build_minlp_linearized(inst),
        Method::LpII => build_lp2(inst),
        Method::Ccg | Method::PLp => unreachable!(),
    };
    let census = Some(Census::of(&model, &index));
    let mut record = RunRecord::new(id, method.name(), "");
    let mut trace = Vec::new();
    let mut solution = None;
    if method.is_integral() {
        let res = solve_milp(&model, &opts.milp()).with_context(|| format!("{} solve failed", method.name()))?;
        record.status = milp_status(res.status).to_string();
        if res.has_solution() {
            record.objective = Some(res.objective);
            let sol = extract_solution(&index, res.x.as_ref().unwrap())?;
            solution = Some(strip_cycles(inst, &sol)?);
        }
        if res.best_bound.is_finite() {
            record.bound = Some(res.best_bound);
        }
        record.iterations = Some(res.nodes as f64);
        let step = (res.history.len() / 20).max(1);
        for (i, (bnd, inc)) in res.history.iter().enumerate().step_by(step) {
            trace.push(format!("node {i}: bound {bnd:.6} incumbent {inc:.6}"));
        }
        trace.push(format!("{} nodes, {} LP iterations", res.nodes, res.lp_iterations));
    } else {
        let model = if method == Method::LpII { model } else { relax(&model) };
        let out = solve_lp(&model, &LpParams::default()).with_context(|| format!("{} solve failed", method.name()))?;
        record.status = lp_status(out.status).to_string();
        if out.status == LpStatus::Optimal {
            record.objective = Some(out.objective);
            record.bound = Some(out.objective);
        }
        record.iterations = Some(out.iterations as f64);
        trace.push(format!("{} simplex iterations", out.iterations));
    }
    record.wall_time = start.elapsed().as_secs_f64();
    Ok(MethodRun { record, solution, census, trace })
}

fn ccg_record(inst: &NetworkInstance, id: &str, method: Method, res: &CcgResult, secs: f64) -> Result<MethodRun> {
    let mut record = RunRecord::new(id, method.name(), ccg_status(res.status));
    record.iterations = Some(res.iterations as f64);
    record.columns = Some(res.pool.len() as f64);
    record.milp_pricing = Some(res.milp_pricing_solves as f64);
    record.bound = res.master_value;
    let mut solution = None;
    if method == Method::Ccg {
        record.objective = res.stage2_objective;
        record.wall_time = secs;
        if let Some(sol) = &res.solution {
            solution = Some(strip_cycles(inst, sol)?);
        }
    } else {
        record.objective = res.master_value;
        record.status = match (res.status, res.master_value) {
            (CcgStatus::Infeasible, _) => "infeasible",
            (CcgStatus::IterLimit, Some(_)) => "iter-limit",
            (_, Some(_)) => "optimal",
            (_, None) => "no-solution",
        }
        .to_string();
        record.wall_time = res.stage1_time.as_secs_f64();
    }
    let trace = res
        .trace
        .iter()
        .map(|t| {
            format!(
                "iter {}: master {:.6} added {} milp-pricing {} at {:.3}s",
                t.iteration, t.master_value, t.columns_added, t.milp_pricing, t.wall_time
            )
        })
        .collect();
    Ok(MethodRun { record, solution, census: None, trace })
}
