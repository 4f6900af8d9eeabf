use proptest::prelude::*;

use super::*;
use crate::formulations::{build_milp, extract_solution};
use crate::milp::{solve_milp, MilpParams};
use crate::model::{fixtures, generate_instance, GeneratorConfig, NodeId};

fn unique_solution() -> (NetworkInstance, SliceSolution) {
    let inst = fixtures::unique_embedding();
    let (m, idx) = build_milp(&inst);
    let r = solve_milp(&m, &MilpParams::default()).unwrap();
    let sol = extract_solution(&idx, r.x.as_ref().unwrap()).unwrap();
    (inst, strip_cycles(&fixtures::unique_embedding(), &sol).unwrap())
}

#[test]
fn unique_embedding_metrics() {
    let (inst, sol) = unique_solution();
    let rep = validate_solution(&inst, &sol);
    assert!(rep.passed(), "{rep}");
    assert!((rep.delay[0] - 5.0).abs() < 1e-12);
    let rel = 0.995 * 0.999 * 0.998;
    assert!((rep.reliability[0] - rel).abs() < 1e-12);
    assert!((rep.objective - 1.005).abs() < 1e-12);
}

#[test]
fn tight_delay_threshold_is_reported() {
    let (mut inst, sol) = unique_solution();
    inst.services[0].theta = 4.0;
    let rep = validate_solution(&inst, &sol);
    assert_eq!(rep.failed(), vec![ConstraintFamily::Delay]);
    assert!((rep.family(ConstraintFamily::Delay).worst_residual - 1.0).abs() < 1e-12);
}

#[test]
fn strict_reliability_threshold_is_reported() {
    let (mut inst, sol) = unique_solution();
    inst.services[0].gamma = 0.995;
    let rep = validate_solution(&inst, &sol);
    assert_eq!(rep.failed(), vec![ConstraintFamily::Reliability]);
}

#[test]
fn unmarked_link_is_reported() {
    let (inst, mut sol) = unique_solution();
    sol.z_ijk[0][1] = 0.0;
    let rep = validate_solution(&inst, &sol);
    assert!(rep.failed().contains(&ConstraintFamily::LinkUse), "{rep}");
}

#[test]
fn closed_node_is_reported() {
    let (inst, mut sol) = unique_solution();
    sol.y_v[0] = 0.0;
    let rep = validate_solution(&inst, &sol);
    let failed = rep.failed();
    assert!(failed.contains(&ConstraintFamily::Activation));
    assert!(failed.contains(&ConstraintFamily::NodeCapacity));
}

#[test]
fn fractional_indicator_is_reported() {
    let (inst, mut sol) = unique_solution();
    sol.z_ijk[0][0] = 0.5;
    let rep = validate_solution(&inst, &sol);
    assert!(rep.failed().contains(&ConstraintFamily::Integrality));
}

#[test]
fn broken_path_is_reported() {
    let (inst, mut sol) = unique_solution();
    for p in 0..sol.paths {
        sol.z_ijksp[0][1][p][0] = 0.0;
        sol.r_ijksp[0][1][p][0] = 0.0;
        sol.z_ijksp[0][0][p][0] = 0.0;
        sol.r_ijksp[0][0][p][0] = 0.0;
    }
    let rep = validate_solution(&inst, &sol);
    let failed = rep.failed();
    assert!(failed.contains(&ConstraintFamily::FlowConservation) || failed.contains(&ConstraintFamily::PathSplit));
}

#[test]
fn wrong_shape_is_reported() {
    let (inst, mut sol) = unique_solution();
    sol.y_v.push(0.0);
    let rep = validate_solution(&inst, &sol);
    assert_eq!(rep.failed(), vec![ConstraintFamily::Shape]);
}

#[test]
fn decomposes_two_paths_and_a_cycle() {
    // 0->1->3, 0->2->3, cycle 1->4->1
    let arcs = [(0, 1), (1, 3), (0, 2), (2, 3), (1, 4), (4, 1)];
    let rates = [0.6, 0.6, 0.4, 0.4, 0.25, 0.25];
    let dec = decompose_flow(&arcs, &rates, 0, 3).unwrap();
    assert_eq!(dec.paths.len(), 2);
    assert_eq!(dec.cycles.len(), 1);
    assert!((dec.value() - 1.0).abs() < 1e-12);
    assert_eq!(dec.paths[0].nodes, vec![0, 1, 3]);
    assert_eq!(dec.cycles[0].links, vec![4, 5]);
    let back = dec.superpose(arcs.len());
    for (a, b) in back.iter().zip(rates) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn rejects_unbalanced_flow() {
    let arcs = [(0, 1), (1, 2)];
    assert!(decompose_flow(&arcs, &[1.0, 0.5], 0, 2).is_err());
    assert!(decompose_flow(&arcs, &[1.0], 0, 2).is_err());
}

#[test]
fn strip_removes_cycles_only() {
    let inst = fixtures::unique_embedding();
    let (inst, sol) = {
        let mut inst = inst;
        // a back link 1 -> 0 to carry a spurious cycle
        inst.links.push(crate::model::Link { tail: 1, head: 0, capacity: 50.0, delay: 1.0, reliability: 0.99 });
        let (m, idx) = build_milp(&inst);
        let r = solve_milp(&m, &MilpParams::default()).unwrap();
        (inst, extract_solution(&idx, r.x.as_ref().unwrap()).unwrap())
    };
    let mut dirty = sol.clone();
    let p = (0..sol.paths).max_by(|&a, &b| sol.path_fraction(0, 0, a).total_cmp(&sol.path_fraction(0, 0, b))).unwrap();
    let rate = dirty.path_fraction(0, 0, p);
    for link in [0, 2] {
        dirty.z_ijksp[0][0][p][link] += 1.0;
        dirty.r_ijksp[0][0][p][link] += rate;
    }
    let clean = strip_cycles(&inst, &dirty).unwrap();
    let reference = strip_cycles(&inst, &sol).unwrap();
    assert_eq!(clean.r_ijksp, reference.r_ijksp);
    assert_eq!(clean.z_ijksp, reference.z_ijksp);
    assert!(validate_solution(&inst, &clean).passed());
}

/// Random circulation plus a path flow on a complete digraph.
fn flow_strategy() -> impl Strategy<Value = (Vec<(NodeId, NodeId)>, Vec<f64>)> {
    (3usize..6, prop::collection::vec(0.0f64..1.0, 3), prop::collection::vec((0usize..30, 0usize..30, 0.0f64..1.0), 0..6))
        .prop_map(|(n, path_rates, cycles)| {
            let arcs: Vec<(NodeId, NodeId)> = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i as NodeId, j as NodeId)))
                .collect();
            let arc = |i: usize, j: usize| arcs.iter().position(|&a| a == (i as NodeId, j as NodeId)).unwrap();
            let mut rates = vec![0.0; arcs.len()];
            let d = n - 1;
            // a direct and two two-hop paths from 0 to d
            rates[arc(0, d)] += path_rates[0];
            for (mid, r) in [(1, path_rates[1]), (n - 2, path_rates[2])] {
                rates[arc(0, mid)] += r;
                rates[arc(mid, d)] += r;
            }
            for (a, b, r) in cycles {
                let (a, b) = (a % n, b % n);
                if a != b {
                    rates[arc(a, b)] += r;
                    rates[arc(b, a)] += r;
                }
            }
            (arcs, rates)
        })
}

proptest! {
    #[test]
    fn decomposition_reproduces_flow((arcs, rates) in flow_strategy()) {
        let d = arcs.iter().map(|a| a.1).max().unwrap();
        let dec = decompose_flow(&arcs, &rates, 0, d).unwrap();
        let back = dec.superpose(arcs.len());
        for (a, b) in back.iter().zip(&rates) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        for p in &dec.paths {
            prop_assert_eq!(p.nodes.first().copied(), Some(0));
            prop_assert_eq!(p.nodes.last().copied(), Some(d));
            let mut seen = p.nodes.clone();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), p.nodes.len());
        }
        for c in &dec.cycles {
            prop_assert_eq!(c.nodes.first(), c.nodes.last());
        }
        let out_of_source: f64 = arcs.iter().zip(&rates).filter(|(a, _)| a.0 == 0).map(|(_, r)| r).sum::<f64>()
            - arcs.iter().zip(&rates).filter(|(a, _)| a.1 == 0).map(|(_, r)| r).sum::<f64>();
        prop_assert!((dec.value() - out_of_source).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn milp_optima_validate(seed in 0u64..1000) {
        let cfg = GeneratorConfig::tiny(5, 10, 2, 1);
        let inst = generate_instance(&cfg, seed).unwrap();
        let (m, idx) = build_milp(&inst);
        let r = solve_milp(&m, &MilpParams::default()).unwrap();
        if let Some(x) = &r.x {
            let sol = strip_cycles(&inst, &extract_solution(&idx, x).unwrap()).unwrap();
            let rep = validate_solution(&inst, &sol);
            prop_assert!(rep.passed(), "{}", rep);
            prop_assert!(rep.objective <= r.objective + 1e-6);
        }
    }
}
