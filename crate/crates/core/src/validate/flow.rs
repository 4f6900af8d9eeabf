use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::formulations::SliceSolution;
use crate::model::{NetworkInstance, NodeId};

/// A path or cycle of a decomposition. For a cycle the first node is
/// repeated at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPath {
    pub nodes: Vec<NodeId>,
    /// Positions of the traversed arcs in the input arc list.
    pub links: Vec<usize>,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowDecomposition {
    pub paths: Vec<FlowPath>,
    pub cycles: Vec<FlowPath>,
}

impl FlowDecomposition {
    /// Sum of path and cycle rates per arc.
    pub fn superpose(&self, num_arcs: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_arcs];
        for p in self.paths.iter().chain(&self.cycles) {
            for &e in &p.links {
                out[e] += p.rate;
            }
        }
        out
    }

    pub fn value(&self) -> f64 {
        self.paths.iter().map(|p| p.rate).sum()
    }
}

/// Rates at or below this are treated as zero.
const FLOW_TOL: f64 = 1e-9;

/// Splits a flow on the arcs `(tail, head)` into source-to-destination
/// paths and cycles.
///
/// The divergence (inflow minus outflow) must be `-F` at `source`, `+F` at
/// `dest` and zero elsewhere; with `source == dest` the flow must be a
/// circulation and only cycles are returned. Paths are peeled first, each
/// along the walk that always takes the lowest-index arc with flow left,
/// by the smallest rate on it.
pub fn decompose_flow(arcs: &[(NodeId, NodeId)], rates: &[f64], source: NodeId, dest: NodeId) -> Result<FlowDecomposition> {
    if arcs.len() != rates.len() {
        return Err(Error::LengthMismatch { expected: arcs.len(), got: rates.len() });
    }
    if let Some(e) = rates.iter().position(|&r| !(r >= -FLOW_TOL) || !r.is_finite()) {
        return Err(Error::Precondition(format!("arc {e} has rate {}", rates[e])));
    }
    let mut index: HashMap<NodeId, usize> = HashMap::new();
    let mut ids: Vec<NodeId> = Vec::new();
    let mut pos = |id: NodeId, ids: &mut Vec<NodeId>| {
        *index.entry(id).or_insert_with(|| {
            ids.push(id);
            ids.len() - 1
        })
    };
    let ends: Vec<(usize, usize)> = arcs.iter().map(|&(t, h)| (pos(t, &mut ids), pos(h, &mut ids))).collect();
    let s = pos(source, &mut ids);
    let d = pos(dest, &mut ids);
    let n = ids.len();
    let mut out_arcs = vec![Vec::new(); n];
    let mut div = vec![0.0; n];
    for (e, &(t, h)) in ends.iter().enumerate() {
        out_arcs[t].push(e);
        div[h] += rates[e];
        div[t] -= rates[e];
    }
    let value = -div[s];
    let scale = 1.0 + rates.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let tol = 1e-7 * scale;
    for i in 0..n {
        let want = if s == d {
            0.0
        } else if i == s {
            -value
        } else if i == d {
            value
        } else {
            0.0
        };
        if (div[i] - want).abs() > tol {
            return Err(Error::Precondition(format!(
                "divergence {} at node {} does not match a flow from {source} to {dest}",
                div[i], ids[i]
            )));
        }
    }
    if s != d && value < -tol {
        return Err(Error::Precondition(format!("negative flow value {value}")));
    }

    let mut left: Vec<f64> = rates.iter().map(|&r| r.max(0.0)).collect();
    let mut result = FlowDecomposition::default();
    let next_arc = |left: &[f64], i: usize| out_arcs[i].iter().copied().find(|&e| left[e] > FLOW_TOL);

    // peels a walk by its smallest rate; paths also by the value left
    let peel = |left: &mut [f64], nodes: Vec<usize>, links: Vec<usize>, cap: f64, result: &mut FlowDecomposition| {
        let cycle = cap.is_infinite();
        let rate = links.iter().map(|&e| left[e]).fold(cap, f64::min);
        for &e in &links {
            left[e] -= rate;
            if left[e] <= FLOW_TOL {
                left[e] = 0.0;
            }
        }
        let item = FlowPath { nodes: nodes.iter().map(|&i| ids[i]).collect(), links, rate };
        if cycle {
            result.cycles.push(item);
        } else {
            result.paths.push(item);
        }
    };

    let mut remaining = if s == d { 0.0 } else { value };
    while remaining > FLOW_TOL.max(tol) {
        let mut nodes = vec![s];
        let mut links = Vec::new();
        let mut on_walk = vec![usize::MAX; n];
        on_walk[s] = 0;
        let mut cur = s;
        loop {
            if cur == d {
                let before = result.paths.len();
                peel(&mut left, nodes, links, remaining, &mut result);
                remaining -= result.paths[before].rate;
                break;
            }
            let Some(e) = next_arc(&left, cur) else {
                // only rounding noise is left
                remaining = 0.0;
                break;
            };
            let h = ends[e].1;
            if on_walk[h] != usize::MAX {
                let at = on_walk[h];
                let mut cyc_nodes = nodes[at..].to_vec();
                cyc_nodes.push(h);
                let mut cyc_links = links[at..].to_vec();
                cyc_links.push(e);
                peel(&mut left, cyc_nodes, cyc_links, f64::INFINITY, &mut result);
                break;
            }
            on_walk[h] = nodes.len();
            nodes.push(h);
            links.push(e);
            cur = h;
        }
    }

    // what is left is a circulation
    while let Some(start) = (0..left.len()).find(|&e| left[e] > FLOW_TOL) {
        let first = ends[start].0;
        let mut nodes = vec![first];
        let mut links = Vec::new();
        let mut on_walk = vec![usize::MAX; n];
        on_walk[first] = 0;
        let mut e = start;
        loop {
            let h = ends[e].1;
            if on_walk[h] != usize::MAX {
                let at = on_walk[h];
                let mut cyc_nodes = nodes[at..].to_vec();
                cyc_nodes.push(h);
                let mut cyc_links = links[at..].to_vec();
                cyc_links.push(e);
                peel(&mut left, cyc_nodes, cyc_links, f64::INFINITY, &mut result);
                break;
            }
            on_walk[h] = nodes.len();
            nodes.push(h);
            links.push(e);
            match next_arc(&left, h) {
                Some(next) => e = next,
                None => {
                    // rounding noise: drop the dangling remainder
                    for &l in &links {
                        if left[l] <= tol {
                            left[l] = 0.0;
                        }
                    }
                    left[start] = 0.0;
                    break;
                }
            }
        }
    }
    Ok(result)
}

/// End nodes of segment `s` of service `k` under the (rounded) placement of
/// `sol`: the host of function `s` (or the source) and the host of function
/// `s + 1` (or the destination).
pub(crate) fn segment_ends(inst: &NetworkInstance, sol: &SliceSolution, k: usize, s: usize) -> Option<(NodeId, NodeId)> {
    let svc = &inst.services[k];
    let host = |f: usize| -> Option<NodeId> {
        let v = sol.x_vks[k][f].iter().position(|&x| x > 0.5)?;
        Some(inst.cloud_nodes[v].id)
    };
    let from = if s == 0 { svc.source } else { host(s - 1)? };
    let to = if s == svc.chain_len() { svc.dest } else { host(s)? };
    Some((from, to))
}

/// Normalizes every per-path flow to a single elementary path.
///
/// Each `(k, s, p)` rate flow is decomposed; cycles are dropped, the path
/// keeps the flow and becomes the only support of `z_ijksp`. Segments whose
/// ends coincide are emptied. `theta_ks` is recomputed as the largest path
/// delay and stored path fractions follow the kept rates. Link indicators
/// `z_ijk` are left alone, so reliability does not change.
pub fn strip_cycles(inst: &NetworkInstance, sol: &SliceSolution) -> Result<SliceSolution> {
    let arcs: Vec<(NodeId, NodeId)> = inst.links.iter().map(|l| (l.tail, l.head)).collect();
    let nl = arcs.len();
    let mut out = sol.clone();
    for k in 0..inst.services.len() {
        for s in 0..=inst.services[k].chain_len() {
            let (from, to) = segment_ends(inst, sol, k, s)
                .ok_or_else(|| Error::Precondition(format!("service {k} has an unplaced function")))?;
            let mut worst_delay: f64 = 0.0;
            for p in 0..sol.paths {
                let rates = &sol.r_ijksp[k][s][p];
                let mut r = vec![0.0; nl];
                let mut z = vec![0.0; nl];
                if from != to {
                    let dec = decompose_flow(&arcs, rates, from, to)
                        .map_err(|e| Error::Precondition(format!("flow ({k},{s},{p}): {e}")))?;
                    if dec.paths.len() > 1 {
                        return Err(Error::Precondition(format!(
                            "flow ({k},{s},{p}) splits over {} paths",
                            dec.paths.len()
                        )));
                    }
                    if let Some(path) = dec.paths.first() {
                        for &e in &path.links {
                            r[e] = path.rate;
                            z[e] = 1.0;
                        }
                    }
                }
                let delay: f64 = (0..nl).filter(|&e| z[e] > 0.5).map(|e| inst.links[e].delay).sum();
                worst_delay = worst_delay.max(delay);
                if from != to {
                    if let Some(split) = out.r_ksp.as_mut() {
                        split[k][s][p] = r.iter().copied().fold(0.0, f64::max);
                    }
                }
                out.r_ijksp[k][s][p] = r;
                out.z_ijksp[k][s][p] = z;
            }
            out.theta_ks[k][s] = worst_delay;
        }
    }
    Ok(out)
}
