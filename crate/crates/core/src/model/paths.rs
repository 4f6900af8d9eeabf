use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::instance::{NetworkInstance, Topology};
use crate::error::{Error, Result};

/// Best path values between a service's source and destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMetrics {
    /// Minimum total link delay.
    pub delay: f64,
    /// Maximum product of link reliabilities.
    pub reliability: f64,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed for a min-heap; ties by node position for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Dijkstra from `src` with nonnegative per-link weights.
pub(crate) fn dijkstra(topo: &Topology, weight: &[f64], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; topo.num_nodes()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry(0.0, src));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &l in &topo.out_links[u] {
            let v = topo.link_head[l];
            let nd = d + weight[l];
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry(nd, v));
            }
        }
    }
    dist
}

/// Minimum-delay and maximum-reliability path values for service `k`.
/// Reliability is optimized as a shortest path under `-ln(gamma)` weights.
pub fn shortest_path_metrics(inst: &NetworkInstance, k: usize) -> Result<PathMetrics> {
    let topo = inst.topology();
    let svc = &inst.services[k];
    let (s, d) = (topo.idx(svc.source), topo.idx(svc.dest));
    let delays: Vec<f64> = inst.links.iter().map(|l| l.delay).collect();
    let logs: Vec<f64> = inst.links.iter().map(|l| -l.reliability.ln()).collect();
    let delay = dijkstra(&topo, &delays, s)[d];
    if !delay.is_finite() {
        return Err(Error::Unreachable { source_node: svc.source, dest: svc.dest });
    }
    let log_rel = dijkstra(&topo, &logs, s)[d];
    Ok(PathMetrics { delay, reliability: (-log_rel).exp() })
}
