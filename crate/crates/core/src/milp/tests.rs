use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::lp::Relation;

#[test]
fn rounds_down_lp_optimum() {
    let mut m = LpModel::new(Sense::Min);
    let x = m.add_var("x", 0.0, 2.0, -1.0);
    m.vars[x].integer = true;
    m.add_row("c", vec![(x, 2.0)], Relation::Le, 3.0);
    let r = solve_milp(&m, &MilpParams::default()).unwrap();
    assert_eq!(r.status, MilpStatus::Optimal);
    assert_eq!(r.x.unwrap()[x], 1.0);
    assert!((r.objective + 1.0).abs() < 1e-12);
}

#[test]
fn knapsack() {
    let mut m = LpModel::new(Sense::Max);
    let a = m.add_binary("a", 3.0);
    let b = m.add_binary("b", 2.0);
    m.add_row("w", vec![(a, 2.0), (b, 2.0)], Relation::Le, 2.0);
    let r = solve_milp(&m, &MilpParams::default()).unwrap();
    assert_eq!(r.status, MilpStatus::Optimal);
    assert!((r.objective - 3.0).abs() < 1e-12);
    let x = r.x.unwrap();
    assert_eq!((x[a], x[b]), (1.0, 0.0));
}

#[test]
fn integral_root_needs_one_node() {
    let mut m = LpModel::new(Sense::Min);
    let a = m.add_binary("a", 1.0);
    let b = m.add_binary("b", 2.0);
    m.add_row("cover", vec![(a, 1.0), (b, 1.0)], Relation::Ge, 1.0);
    let r = solve_milp(&m, &MilpParams::default()).unwrap();
    assert_eq!(r.nodes, 1);
    assert!((r.objective - 1.0).abs() < 1e-12);
}

#[test]
fn infeasible_integer_program() {
    let mut m = LpModel::new(Sense::Min);
    let a = m.add_binary("a", 1.0);
    let b = m.add_binary("b", 1.0);
    m.add_row("odd", vec![(a, 2.0), (b, 2.0)], Relation::Eq, 1.0);
    let r = solve_milp(&m, &MilpParams::default()).unwrap();
    assert_eq!(r.status, MilpStatus::Infeasible);
    assert!(r.x.is_none());
}

#[test]
fn node_limit_without_incumbent() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = random_binary_model(&mut rng, 10, 6);
    let params = MilpParams { node_limit: Some(0), ..Default::default() };
    let r = solve_milp(&m, &params).unwrap();
    assert_eq!(r.status, MilpStatus::NoSolution);
}

pub(crate) fn random_binary_model(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LpModel {
    let mut model = LpModel::new(if rng.gen_bool(0.5) { Sense::Min } else { Sense::Max });
    for j in 0..n {
        let c = rng.gen_range(-10..=10) as f64;
        model.add_binary(format!("b{j}"), c);
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                coeffs.push((j, rng.gen_range(-6..=6) as f64));
            }
        }
        let pos: f64 = coeffs.iter().map(|&(_, a)| f64::max(a, 0.0)).sum();
        let rel = match rng.gen_range(0..4) {
            0 => Relation::Ge,
            1 => Relation::Eq,
            _ => Relation::Le,
        };
        let rhs = (pos * rng.gen_range(0.2..0.8)).round();
        model.add_row(format!("r{i}"), coeffs, rel, rhs);
    }
    model
}

/// Exhaustive search over all 0/1 assignments.
pub(crate) fn enumerate_binary(model: &LpModel) -> Option<f64> {
    let n = model.num_vars();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if model.max_violation(&x) <= 1e-9 {
            let v = model.objective(&x);
            best = Some(match (best, model.sense) {
                (None, _) => v,
                (Some(b), Sense::Min) => b.min(v),
                (Some(b), Sense::Max) => b.max(v),
            });
        }
    }
    best
}

#[test]
fn matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..80 {
        let n = rng.gen_range(3..=8);
        let rows = rng.gen_range(1..=5);
        let m = random_binary_model(&mut rng, n, rows);
        let r = solve_milp(&m, &MilpParams::default()).unwrap();
        match enumerate_binary(&m) {
            None => assert_eq!(r.status, MilpStatus::Infeasible),
            Some(v) => {
                assert_eq!(r.status, MilpStatus::Optimal);
                assert!((r.objective - v).abs() < 1e-6, "bb {} vs {v}\n{}", r.objective, m.dump());
                assert!(r.relative_gap() <= 1e-6);
            }
        }
    }
}

#[test]
fn bounds_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..30 {
        let m = random_binary_model(&mut rng, 10, 4);
        let r = solve_milp(&m, &MilpParams::default()).unwrap();
        let s = if m.sense == Sense::Max { -1.0 } else { 1.0 };
        for w in r.history.windows(2) {
            assert!(s * w[1].0 >= s * w[0].0 - 1e-9, "bound regressed: {:?}", w);
            assert!(s * w[1].1 <= s * w[0].1 + 1e-9, "incumbent regressed: {:?}", w);
        }
    }
}

#[test]
fn mixed_integer_with_continuous_part() {
    // min -x - 2y, x + y <= 3.5, y - x <= 0.5, y integer in [0, 3], x in [0, 10]
    let mut m = LpModel::new(Sense::Min);
    let x = m.add_var("x", 0.0, 10.0, -1.0);
    let y = m.add_var("y", 0.0, 3.0, -2.0);
    m.vars[y].integer = true;
    m.add_row("a", vec![(x, 1.0), (y, 1.0)], Relation::Le, 3.5);
    m.add_row("b", vec![(y, 1.0), (x, -1.0)], Relation::Le, 0.5);
    let r = solve_milp(&m, &MilpParams::default()).unwrap();
    // y = 2 needs x >= 1.5, x <= 1.5 -> -5.5; y = 1 -> x = 2.5 -> -4.5
    assert!((r.objective + 5.5).abs() < 1e-9, "{}", r.objective);
}
