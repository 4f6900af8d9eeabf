#![allow(dead_code)]

use std::io::Write;

use nsopt::{
    generate_instance, DualPrices, GeneratorConfig, LpModel, NetworkInstance, NodeId, Relation, Sense,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Writes straight to the process stdout so the line shows up even when
/// the test harness captures output.
pub fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// The small cross-check set: at most 6 nodes, at most 3 links leaving a
/// node, 1 or 2 services, two paths per segment.
pub fn tiny_instance(seed: u64) -> NetworkInstance {
    let k = if seed % 3 == 2 { 2 } else { 1 };
    let n = 4 + ((seed / 3) % 3) as usize;
    let cfg = GeneratorConfig { chain_length: 3 - k, ..GeneratorConfig::tiny(n, 2 * n, 2, k) };
    generate_instance(&cfg, seed).unwrap()
}

/// Random bounded LP that keeps a random point feasible.
pub fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LpModel {
    let mut model = LpModel::new(if rng.gen_bool(0.5) { Sense::Min } else { Sense::Max });
    let mut point = Vec::new();
    for j in 0..n {
        let lo = rng.gen_range(-3..=0) as f64;
        let hi = lo + rng.gen_range(1..=5) as f64;
        point.push(rng.gen_range(lo..=hi));
        model.add_var(format!("x{j}"), lo, hi, rng.gen_range(-5..=5) as f64);
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
            0 => (Relation::Le, act + rng.gen_range(0.0..2.0)),
            1 => (Relation::Ge, act - rng.gen_range(0.0..2.0)),
            _ => (Relation::Eq, act),
        };
        model.add_row(format!("r{i}"), coeffs, rel, rhs);
    }
    model
}

/// Random LP plus a contradictory pair `a x <= t`, `a x >= t + 1`.
pub fn random_infeasible_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LpModel {
    let mut model = random_lp(rng, n, m);
    let coeffs: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.gen_range(-3..=3) as f64)).collect();
    let t = rng.gen_range(-5..=5) as f64;
    model.add_row("cut_hi", coeffs.clone(), Relation::Le, t);
    model.add_row("cut_lo", coeffs, Relation::Ge, t + 1.0);
    model
}

pub fn random_binary_model(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LpModel {
    let mut model = LpModel::new(if rng.gen_bool(0.5) { Sense::Min } else { Sense::Max });
    for j in 0..n {
        model.add_binary(format!("b{j}"), rng.gen_range(-10..=10) as f64);
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
        model.add_row(format!("r{i}"), coeffs, rel, (pos * rng.gen_range(0.2..0.8)).round());
    }
    model
}

/// Best objective over all 0/1 points.
pub fn enumerate_binary(model: &LpModel) -> Option<f64> {
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

/// Simple paths between two nodes as link lists; a single empty path when
/// the ends coincide.
pub fn simple_paths(inst: &NetworkInstance, from: NodeId, to: NodeId) -> Vec<Vec<usize>> {
    fn dfs(inst: &NetworkInstance, at: NodeId, to: NodeId, seen: &mut Vec<NodeId>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == to {
            out.push(path.clone());
            return;
        }
        for (e, l) in inst.links.iter().enumerate() {
            if l.tail == at && !seen.contains(&l.head) {
                seen.push(l.head);
                path.push(e);
                dfs(inst, l.head, to, seen, path, out);
                path.pop();
                seen.pop();
            }
        }
    }
    if from == to {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    dfs(inst, from, to, &mut vec![from], &mut Vec::new(), &mut out);
    out
}

/// A single-path embedding of one service.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub hosts: Vec<usize>,
    pub paths: Vec<Vec<usize>>,
}

/// Every single-path embedding of service `k` that meets its delay,
/// reliability and capacity limits.
pub fn enumerate_embeddings(inst: &NetworkInstance, k: usize, cap: usize) -> Option<Vec<Embedding>> {
    let svc = &inst.services[k];
    let nv = inst.cloud_nodes.len();
    let l = svc.chain_len();
    let mut found = Vec::new();
    let mut hosts = vec![0usize; l];
    loop {
        if hosts.iter().enumerate().all(|(f, &v)| svc.chain[f].delay_on(inst.cloud_nodes[v].id).is_some()) {
            let ends: Vec<NodeId> = std::iter::once(svc.source)
                .chain(hosts.iter().map(|&v| inst.cloud_nodes[v].id))
                .chain(std::iter::once(svc.dest))
                .collect();
            let options: Vec<Vec<Vec<usize>>> = (0..=l).map(|s| simple_paths(inst, ends[s], ends[s + 1])).collect();
            let mut choice = vec![0usize; l + 1];
            while options.iter().all(|o| !o.is_empty()) {
                let paths: Vec<Vec<usize>> = (0..=l).map(|s| options[s][choice[s]].clone()).collect();
                let emb = Embedding { hosts: hosts.clone(), paths };
                if embedding_feasible(inst, k, &emb) {
                    found.push(emb);
                    if found.len() > cap {
                        return None;
                    }
                }
                let mut s = 0;
                while s <= l {
                    choice[s] += 1;
                    if choice[s] < options[s].len() {
                        break;
                    }
                    choice[s] = 0;
                    s += 1;
                }
                if s > l {
                    break;
                }
            }
        }
        let mut f = 0;
        while f < l {
            hosts[f] += 1;
            if hosts[f] < nv {
                break;
            }
            hosts[f] = 0;
            f += 1;
        }
        if f == l {
            return Some(found);
        }
    }
}

fn embedding_feasible(inst: &NetworkInstance, k: usize, emb: &Embedding) -> bool {
    let svc = &inst.services[k];
    let mut delay = 0.0;
    let mut load = vec![0.0; inst.cloud_nodes.len()];
    for (f, &v) in emb.hosts.iter().enumerate() {
        delay += svc.chain[f].delay_on(inst.cloud_nodes[v].id).unwrap();
        load[v] += svc.rates[f + 1];
    }
    let mut used = vec![false; inst.links.len()];
    let mut link_load = vec![0.0; inst.links.len()];
    for (s, path) in emb.paths.iter().enumerate() {
        for &e in path {
            used[e] = true;
            delay += inst.links[e].delay;
            link_load[e] += svc.rates[s];
        }
    }
    let mut nodes = emb.hosts.clone();
    nodes.sort_unstable();
    nodes.dedup();
    let log_rel: f64 = nodes.iter().map(|&v| inst.cloud_nodes[v].reliability.ln()).sum::<f64>()
        + (0..inst.links.len()).filter(|&e| used[e]).map(|e| inst.links[e].reliability.ln()).sum::<f64>();
    delay <= svc.theta + 1e-9
        && log_rel >= svc.gamma.ln() - 1e-12
        && load.iter().zip(&inst.cloud_nodes).all(|(l, c)| *l <= c.capacity + 1e-9)
        && link_load.iter().zip(&inst.links).all(|(l, c)| *l <= c.capacity + 1e-9)
}

/// Pricing value of an embedding computed from first principles.
pub fn embedding_value(inst: &NetworkInstance, k: usize, emb: &Embedding, duals: &DualPrices) -> f64 {
    let svc = &inst.services[k];
    let link_sigma = if duals.is_ray { 0.0 } else { inst.sigma };
    let mut v = duals.alpha[k];
    let mut nodes = emb.hosts.clone();
    nodes.sort_unstable();
    nodes.dedup();
    for &n in &nodes {
        v += duals.pi[k][n];
    }
    for (f, &n) in emb.hosts.iter().enumerate() {
        v += duals.eta[n] * svc.rates[f + 1];
    }
    for (s, path) in emb.paths.iter().enumerate() {
        for &e in path {
            v += (duals.beta[e] - link_sigma) * svc.rates[s];
        }
    }
    v
}

pub fn random_duals(inst: &NetworkInstance, rng: &mut ChaCha8Rng, is_ray: bool) -> DualPrices {
    let mut d = DualPrices::zeros(inst);
    for a in &mut d.alpha {
        *a = rng.gen_range(0.0..2.5);
    }
    for p in d.pi.iter_mut().flatten() {
        *p = rng.gen_range(-1.0..0.0);
    }
    for e in &mut d.eta {
        *e = rng.gen_range(-0.05..0.0);
    }
    for b in &mut d.beta {
        *b = rng.gen_range(-0.01..0.0);
    }
    d.is_ray = is_ray;
    d
}

/// Directed cycles through node `start`, as link lists.
pub fn cycles_through(inst: &NetworkInstance, start: NodeId) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for (e, l) in inst.links.iter().enumerate() {
        if l.tail == start {
            for mut p in simple_paths(inst, l.head, start) {
                if !p.is_empty() {
                    p.insert(0, e);
                    out.push(p);
                }
            }
        }
    }
    out
}
