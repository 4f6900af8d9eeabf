//! Substrate network, service requests, instance documents and the random
//! instance generator.

mod generator;
mod instance;
mod paths;

pub use generator::{generate_instance, GeneratorConfig};
pub use instance::{
    load_instance, CloudNode, FunctionStage, Link, NetworkInstance, NodeId, ServiceRequest,
    Topology,
};
pub use paths::{shortest_path_metrics, PathMetrics};

#[cfg(test)]
pub(crate) use instance::fixtures;

/// Right-hand side of a per-segment flow balance row, affine in the
/// placement variables.
///
/// `terms` holds `(cloud index, function index, coefficient)` with function
/// indices 0-based (function `f` of the chain is hosted by `x[v][f]`).
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceRhs {
    pub constant: f64,
    pub terms: Vec<(usize, usize, f64)>,
}

impl BalanceRhs {
    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    /// Evaluates the expression for a placement `x(v, f)`.
    pub fn eval(&self, x: impl Fn(usize, usize) -> f64) -> f64 {
        self.constant + self.terms.iter().map(|&(v, f, c)| c * x(v, f)).sum::<f64>()
    }
}

/// Inflow minus outflow demanded at node `node` for segment `s` of service
/// `k`. Segment 0 leaves the source, segment `l` enters the destination and
/// segment `s` runs from the host of function `s` to the host of function
/// `s + 1`.
pub fn flow_balance_rhs(inst: &NetworkInstance, k: usize, s: usize, node: NodeId) -> BalanceRhs {
    let svc = &inst.services[k];
    let l = svc.chain_len();
    assert!(s <= l, "segment {s} out of range for chain of length {l}");
    let mut rhs = BalanceRhs { constant: 0.0, terms: Vec::new() };
    if let Some(v) = inst.cloud_index(node) {
        if s < l {
            rhs.terms.push((v, s, 1.0));
        }
        if s >= 1 {
            rhs.terms.push((v, s - 1, -1.0));
        }
    } else {
        if s == 0 && node == svc.source {
            rhs.constant -= 1.0;
        }
        if s == l && node == svc.dest {
            rhs.constant += 1.0;
        }
    }
    rhs
}
