use super::*;
use crate::formulations::build_milp;
use crate::model::{fixtures, generate_instance, GeneratorConfig};
use crate::validate::{strip_cycles, validate_solution};

fn small(seed: u64, services: usize) -> NetworkInstance {
    let cfg = GeneratorConfig { chain_length: 1, ..GeneratorConfig::tiny(5, 10, 2, services) };
    generate_instance(&cfg, seed).unwrap()
}

fn milp_optimum(inst: &NetworkInstance) -> Option<f64> {
    let (m, _) = build_milp(inst);
    let r = solve_milp(&m, &MilpParams::default()).unwrap();
    (r.status == MilpStatus::Optimal).then_some(r.objective)
}

#[test]
fn unique_embedding_is_solved() {
    let inst = fixtures::unique_embedding();
    let res = run_ccg(&inst, &CcgParams::default()).unwrap();
    assert_eq!(res.status, CcgStatus::Solved);
    assert!((res.stage2_objective.unwrap() - 1.005).abs() < 1e-9);
    assert!((res.master_value.unwrap() - 1.005).abs() < 1e-9);
    assert_eq!(res.columns, vec![1]);
    let sol = strip_cycles(&inst, res.solution.as_ref().unwrap()).unwrap();
    assert!(validate_solution(&inst, &sol).passed());
}

#[test]
fn bounds_bracket_the_milp_optimum() {
    let mut checked = 0;
    for seed in 0..6 {
        let inst = small(seed, 2);
        let Some(opt) = milp_optimum(&inst) else { continue };
        let res = run_ccg(&inst, &CcgParams::default()).unwrap();
        assert_eq!(res.status, CcgStatus::Solved, "seed {seed}");
        let lower = res.master_value.unwrap();
        let upper = res.stage2_objective.unwrap();
        assert!(lower <= opt + 1e-6, "seed {seed}: master {lower} above optimum {opt}");
        assert!(upper >= opt - 1e-6, "seed {seed}: heuristic {upper} below optimum {opt}");
        let sol = strip_cycles(&inst, res.solution.as_ref().unwrap()).unwrap();
        let rep = validate_solution(&inst, &sol);
        assert!(rep.passed(), "seed {seed}: {rep}");
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn sequential_and_parallel_agree() {
    let inst = small(2, 3);
    let par = run_ccg(&inst, &CcgParams::default()).unwrap();
    let seq = run_ccg(&inst, &CcgParams { parallel: false, ..CcgParams::default() }).unwrap();
    assert_eq!(par.status, seq.status);
    assert_eq!(par.columns, seq.columns);
    assert_eq!(par.stage2_objective, seq.stage2_objective);
}

#[test]
fn unembeddable_service_is_reported() {
    let mut inst = small(1, 2);
    inst.services[1].theta = 0.5;
    let res = run_ccg(&inst, &CcgParams::default()).unwrap();
    assert_eq!(res.status, CcgStatus::Infeasible);
    assert_eq!(res.infeasible_service, Some(1));
    assert!(res.solution.is_none());
}

#[test]
fn iteration_cap_still_runs_stage_two() {
    let inst = small(3, 3);
    let res = run_ccg(&inst, &CcgParams { iter_max: 1, ..CcgParams::default() }).unwrap();
    assert!(matches!(res.status, CcgStatus::Solved | CcgStatus::IterLimit), "{:?}", res.status);
    assert!(res.solution.is_some());
    assert_eq!(res.iterations, 1);
}

#[test]
fn trace_matches_counters() {
    let inst = small(4, 2);
    let res = run_ccg(&inst, &CcgParams::default()).unwrap();
    assert_eq!(res.trace.len(), res.iterations);
    assert_eq!(res.trace.iter().map(|t| t.milp_pricing).sum::<usize>(), res.milp_pricing_solves);
    let added: usize = res.trace.iter().map(|t| t.columns_added).sum();
    assert_eq!(added + inst.services.len(), res.pool.len());
    assert_eq!(res.pricing_log.len(), res.iterations * inst.services.len());
}

#[test]
fn pool_rejects_duplicates() {
    let inst = fixtures::unique_embedding();
    let pool = initialize_columns(&inst, &MilpParams::default()).unwrap().unwrap();
    let p = pool.service(0)[0].clone();
    let mut pool2 = ColumnPool::new(1);
    assert!(pool2.insert(p.clone()));
    let mut again = p.clone();
    again.iteration = 9;
    again.source = PatternSource::Milp;
    assert!(!pool2.insert(again));
    assert!(pool2.contains(&p));
    assert_eq!(pool2.len(), 1);
}

#[test]
fn master_layout() {
    let inst = small(0, 2);
    let pool = initialize_columns(&inst, &MilpParams::default()).unwrap().unwrap();
    let (m, idx) = build_master(&pool, &inst, false);
    let nv = inst.cloud_nodes.len();
    assert_eq!(m.num_vars(), nv + pool.len());
    assert_eq!(m.rows.len(), 2 + 2 * nv + nv + inst.links.len() + nv);
    assert_eq!(m.rows[idx.y_bound_row(nv - 1)].name, format!("ybound({})", nv - 1));
    assert_eq!(m.rows[idx.link_cap_row(0)].name, "lcap(0)");
    let (mi, _) = build_master(&pool, &inst, true);
    assert!(mi.vars.iter().all(|v| v.integer && v.upper == 1.0));
}

#[test]
fn duals_have_master_signs() {
    let inst = small(5, 2);
    let pool = initialize_columns(&inst, &MilpParams::default()).unwrap().unwrap();
    let (m, idx) = build_master(&pool, &inst, false);
    let out = crate::lp::solve_lp(&m, &LpParams::default()).unwrap();
    let duals = idx.duals(&out).unwrap();
    duals.check(1e-9).unwrap();
    if !duals.is_ray {
        // every pooled column prices out at the optimum
        for p in pool.iter() {
            assert!(duals.value_of(p, inst.sigma) <= 1e-7);
        }
    }
}
