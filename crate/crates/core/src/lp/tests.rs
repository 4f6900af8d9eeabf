use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn params() -> LpParams {
    LpParams::default()
}

#[test]
fn two_variable_example() {
    let mut m = LpModel::new(Sense::Min);
    let x = m.add_var("x", 0.0, 1.0, -1.0);
    let y = m.add_var("y", 0.0, 1.0, -1.0);
    m.add_row("c", vec![(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
    let out = solve_lp(&m, &params()).unwrap();
    assert_eq!(out.status, LpStatus::Optimal);
    assert!((out.objective + 1.0).abs() < 1e-9);
    assert!((out.duals[0] + 1.0).abs() < 1e-9);
    let rep = verify_duality(&m, &out, &params());
    assert!(rep.ok(), "{:?}", rep.violations);
    assert!(rep.gap < 1e-9);
}

#[test]
fn contradictory_bounds_give_farkas_ray() {
    let mut m = LpModel::new(Sense::Min);
    let x = m.add_var("x", 0.0, f64::INFINITY, 0.0);
    m.add_row("lo", vec![(x, 1.0)], Relation::Ge, 2.0);
    m.add_row("hi", vec![(x, 1.0)], Relation::Le, 1.0);
    let out = solve_lp(&m, &params()).unwrap();
    assert_eq!(out.status, LpStatus::Infeasible);
    let ray = out.farkas.unwrap();
    assert!(farkas_margin(&m, &ray) > 1e-7);
}

#[test]
fn unbounded_ray() {
    let mut m = LpModel::new(Sense::Min);
    m.add_var("x", 0.0, f64::INFINITY, -1.0);
    let out = solve_lp(&m, &params()).unwrap();
    assert_eq!(out.status, LpStatus::Unbounded);
}

#[test]
fn degenerate_single_point() {
    let mut m = LpModel::new(Sense::Min);
    let x = m.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
    m.add_row("ge", vec![(x, 1.0)], Relation::Ge, 0.0);
    m.add_row("le", vec![(x, 1.0)], Relation::Le, 0.0);
    let out = solve_lp(&m, &params()).unwrap();
    assert_eq!(out.status, LpStatus::Optimal);
    assert!(out.objective.abs() < 1e-12);
    let rep = verify_duality(&m, &out, &params());
    assert!(rep.ok(), "{:?}", rep.violations);
    assert!(out.duals[0] >= -1e-12 && out.duals[1] <= 1e-12);
}

#[test]
fn maximization_duals_flip_sign() {
    let mut m = LpModel::new(Sense::Max);
    let x = m.add_var("x", 0.0, f64::INFINITY, 3.0);
    let y = m.add_var("y", 0.0, f64::INFINITY, 2.0);
    m.add_row("a", vec![(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
    m.add_row("b", vec![(x, 1.0), (y, 3.0)], Relation::Le, 6.0);
    m.add_row("c", vec![(x, 1.0)], Relation::Le, 3.0);
    let out = solve_lp(&m, &params()).unwrap();
    assert!((out.objective - 11.0).abs() < 1e-9);
    assert!(out.duals.iter().all(|&d| d >= -1e-12));
    assert!(verify_duality(&m, &out, &params()).ok());
}

#[test]
fn equality_rows_and_free_variables() {
    // min x + 2y + 3z, x + y + z = 3, x - y = 1, z free >= -1 via row
    let mut m = LpModel::new(Sense::Min);
    let x = m.add_var("x", 0.0, 10.0, 1.0);
    let y = m.add_var("y", 0.0, 10.0, 2.0);
    let z = m.add_var("z", f64::NEG_INFINITY, f64::INFINITY, 3.0);
    m.add_row("sum", vec![(x, 1.0), (y, 1.0), (z, 1.0)], Relation::Eq, 3.0);
    m.add_row("diff", vec![(x, 1.0), (y, -1.0)], Relation::Eq, 1.0);
    m.add_row("zlo", vec![(z, 1.0)], Relation::Ge, -1.0);
    let out = solve_lp(&m, &params()).unwrap();
    assert_eq!(out.status, LpStatus::Optimal);
    // z = -1, x + y = 4, x - y = 1 -> x = 2.5, y = 1.5 -> 2.5 + 3 - 3 = 2.5
    assert!((out.objective - 2.5).abs() < 1e-9, "{}", out.objective);
    assert!(verify_duality(&m, &out, &params()).ok());
}

/// Random bounded LP with rows that keep a known interior point feasible.
fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LpModel {
    let mut model = LpModel::new(if rng.gen_bool(0.5) { Sense::Min } else { Sense::Max });
    let mut point = Vec::new();
    for j in 0..n {
        let lo = rng.gen_range(-3..=0) as f64;
        let hi = lo + rng.gen_range(1..=5) as f64;
        point.push(rng.gen_range(lo..=hi));
        let cost = rng.gen_range(-5..=5) as f64;
        model.add_var(format!("x{j}"), lo, hi, cost);
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                coeffs.push((j, rng.gen_range(-4..=4) as f64));
            }
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * point[j]).sum();
        let (rel, rhs) = match rng.gen_range(0..3) {
            0 => (Relation::Le, (act + rng.gen_range(0.0..2.0)).round()),
            1 => (Relation::Ge, (act - rng.gen_range(0.0..2.0)).round()),
            _ => (Relation::Eq, act),
        };
        let rhs = match rel {
            Relation::Le if rhs < act => rhs + 1.0,
            Relation::Ge if rhs > act => rhs - 1.0,
            _ => rhs,
        };
        model.add_row(format!("r{i}"), coeffs, rel, rhs);
    }
    model
}

/// Solves `a w = b` by Gaussian elimination; `None` when singular.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-9 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Best vertex value by enumerating every choice of `n` tight constraints
/// among rows and bounds.
fn vertex_oracle(model: &LpModel) -> Option<f64> {
    let n = model.num_vars();
    let mut cands: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &model.rows {
        let mut a = vec![0.0; n];
        for &(j, c) in &r.coeffs {
            a[j] += c;
        }
        cands.push((a, r.rhs));
    }
    for (j, v) in model.vars.iter().enumerate() {
        for bound in [v.lower, v.upper] {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            cands.push((a, bound));
        }
    }
    let total = cands.len();
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn rec(
        model: &LpModel,
        cands: &[(Vec<f64>, f64)],
        pick: &mut Vec<usize>,
        depth: usize,
        start: usize,
        total: usize,
        best: &mut Option<f64>,
    ) {
        let n = model.num_vars();
        if depth == n {
            let a = pick.iter().map(|&c| cands[c].0.clone()).collect();
            let b = pick.iter().map(|&c| cands[c].1).collect();
            if let Some(x) = gauss(a, b) {
                if model.max_violation(&x) <= 1e-7 {
                    let v = model.objective(&x);
                    *best = Some(match (*best, model.sense) {
                        (None, _) => v,
                        (Some(b), Sense::Min) => b.min(v),
                        (Some(b), Sense::Max) => b.max(v),
                    });
                }
            }
            return;
        }
        for c in start..total {
            pick[depth] = c;
            rec(model, cands, pick, depth + 1, c + 1, total, best);
        }
    }
    rec(model, &cands, &mut pick, 0, 0, total, &mut best);
    best
}

#[test]
fn matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..150 {
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=4);
        let model = random_lp(&mut rng, n, m);
        let out = solve_lp(&model, &params()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        let oracle = vertex_oracle(&model).unwrap();
        assert!((out.objective - oracle).abs() < 1e-6, "simplex {} vs oracle {oracle}\n{}", out.objective, model.dump());
        let rep = verify_duality(&model, &out, &params());
        assert!(rep.ok(), "{:?}", rep.violations);
    }
}

#[test]
fn random_duality_gaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let model = random_lp(&mut rng, 10, 10);
        let out = solve_lp(&model, &params()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        let rep = verify_duality(&model, &out, &params());
        assert!(rep.ok(), "{:?}", rep.violations);
    }
}

/// Random LP made infeasible by a pair of rows demanding `a x <= t` and
/// `a x >= t + 1`.
pub(crate) fn random_infeasible_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LpModel {
    let mut model = random_lp(rng, n, m);
    let coeffs: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.gen_range(-3..=3) as f64)).collect();
    let t = rng.gen_range(-5..=5) as f64;
    model.add_row("cut_hi", coeffs.clone(), Relation::Le, t);
    model.add_row("cut_lo", coeffs, Relation::Ge, t + 1.0);
    model
}

#[test]
fn farkas_rays_verify() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let model = random_infeasible_lp(&mut rng, 6, 5);
        let out = solve_lp(&model, &params()).unwrap();
        assert_eq!(out.status, LpStatus::Infeasible);
        let margin = farkas_margin(&model, out.farkas.as_ref().unwrap());
        assert!(margin > 1e-7, "margin {margin}");
    }
}

#[test]
fn warm_start_matches_cold_after_bound_change() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..60 {
        let model = random_lp(&mut rng, 8, 6);
        let solver = LpSolver::new(&model, params()).unwrap();
        let first = solver.solve().unwrap();
        let basis = first.basis.clone().unwrap();
        let mut lower: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
        let j = rng.gen_range(0..8);
        let mid = (first.x[j] + lower[j]) / 2.0;
        if rng.gen_bool(0.5) {
            upper[j] = mid.floor().max(lower[j]);
        } else {
            lower[j] = mid.ceil().min(upper[j]);
        }
        let warm = solver.solve_with(&lower, &upper, Some(&basis)).unwrap();
        let cold = solver.solve_with(&lower, &upper, None).unwrap();
        assert_eq!(warm.status, cold.status);
        match cold.status {
            LpStatus::Optimal => assert!((warm.objective - cold.objective).abs() < 1e-7),
            LpStatus::Infeasible => {
                let mut bounded = model.clone();
                for (v, (l, u)) in bounded.vars.iter_mut().zip(lower.iter().zip(&upper)) {
                    v.lower = *l;
                    v.upper = *u;
                }
                assert!(farkas_margin(&bounded, warm.farkas.as_ref().unwrap()) > 1e-9);
            }
            LpStatus::Unbounded => unreachable!(),
        }
    }
}

#[test]
fn deterministic_outcomes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = random_lp(&mut rng, 10, 8);
    let a = solve_lp(&model, &params()).unwrap();
    let b = solve_lp(&model, &params()).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.iterations, b.iterations);
}
