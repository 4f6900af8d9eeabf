use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u32;

/// A directed substrate link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub tail: NodeId,
    pub head: NodeId,
    pub capacity: f64,
    pub delay: f64,
    pub reliability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudNode {
    pub id: NodeId,
    pub capacity: f64,
    pub reliability: f64,
}

/// One function of a service chain. `nfv_delay` holds the processing delay
/// on every cloud node; `None` (JSON `null`) marks a node that cannot host
/// the function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionStage {
    pub nfv_delay: BTreeMap<NodeId, Option<f64>>,
}

impl FunctionStage {
    pub fn delay_on(&self, node: NodeId) -> Option<f64> {
        self.nfv_delay.get(&node).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub source: NodeId,
    pub dest: NodeId,
    /// Data rate of segment `s` for `s = 0..=chain.len()`.
    pub rates: Vec<f64>,
    pub chain: Vec<FunctionStage>,
    /// End-to-end delay threshold.
    pub theta: f64,
    /// End-to-end reliability threshold.
    pub gamma: f64,
}

impl ServiceRequest {
    /// Number of functions in the chain.
    pub fn chain_len(&self) -> usize {
        self.chain.len()
    }

    /// Number of traffic segments, one more than the chain length.
    pub fn segments(&self) -> usize {
        self.chain.len() + 1
    }

    /// Total rate processed by cloud nodes, `sum_{s>=1} rate_s`.
    pub fn processed_rate(&self) -> f64 {
        self.rates[1..].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInstance {
    pub nodes: Vec<NodeId>,
    pub links: Vec<Link>,
    pub cloud_nodes: Vec<CloudNode>,
    pub services: Vec<ServiceRequest>,
    /// Maximum number of paths per traffic segment.
    #[serde(rename = "P")]
    pub paths: usize,
    /// Weight of the link-consumption term in the objective.
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Index-based adjacency view of an instance.
#[derive(Debug, Clone)]
pub struct Topology {
    pub node_index: HashMap<NodeId, usize>,
    pub out_links: Vec<Vec<usize>>,
    pub in_links: Vec<Vec<usize>>,
    /// `cloud_of[i]` is the cloud index of node position `i`, if any.
    pub cloud_of: Vec<Option<usize>>,
    pub link_tail: Vec<usize>,
    pub link_head: Vec<usize>,
}

impl Topology {
    pub fn num_nodes(&self) -> usize {
        self.out_links.len()
    }

    pub fn idx(&self, id: NodeId) -> usize {
        self.node_index[&id]
    }
}

fn check_reliability(field: String, value: f64) -> Result<()> {
    if !(value > 0.0 && value <= 1.0) {
        return Err(Error::validation(field, format!("reliability {value} outside (0, 1]")));
    }
    Ok(())
}

fn check_nonneg(field: String, value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::validation(field, format!("value {value} must be finite and >= 0")));
    }
    Ok(())
}

impl NetworkInstance {
    pub fn topology(&self) -> Topology {
        let node_index: HashMap<NodeId, usize> =
            self.nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let n = self.nodes.len();
        let mut out_links = vec![Vec::new(); n];
        let mut in_links = vec![Vec::new(); n];
        let mut link_tail = Vec::with_capacity(self.links.len());
        let mut link_head = Vec::with_capacity(self.links.len());
        for (l, link) in self.links.iter().enumerate() {
            let t = node_index[&link.tail];
            let h = node_index[&link.head];
            out_links[t].push(l);
            in_links[h].push(l);
            link_tail.push(t);
            link_head.push(h);
        }
        let mut cloud_of = vec![None; n];
        for (v, c) in self.cloud_nodes.iter().enumerate() {
            cloud_of[node_index[&c.id]] = Some(v);
        }
        Topology {
            node_index,
            out_links,
            in_links,
            cloud_of,
            link_tail,
            link_head,
        }
    }

    pub fn cloud_index(&self, id: NodeId) -> Option<usize> {
        self.cloud_nodes.iter().position(|c| c.id == id)
    }

    pub fn is_cloud(&self, id: NodeId) -> bool {
        self.cloud_index(id).is_some()
    }

    /// Copy of this instance restricted to the given services, in order.
    pub fn with_services(&self, services: &[usize]) -> NetworkInstance {
        NetworkInstance {
            services: services.iter().map(|&k| self.services[k].clone()).collect(),
            ..self.clone()
        }
    }

    /// Checks every structural invariant; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for &n in &self.nodes {
            if !seen.insert(n) {
                return Err(Error::validation("nodes", format!("duplicate node {n}")));
            }
        }
        if self.paths < 1 {
            return Err(Error::validation("P", "path budget must be >= 1"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::validation("sigma", format!("sigma {} must be > 0", self.sigma)));
        }
        let mut link_pairs = HashSet::new();
        for (l, link) in self.links.iter().enumerate() {
            let f = |name: &str| format!("links[{l}].{name}");
            if !seen.contains(&link.tail) {
                return Err(Error::validation(f("tail"), format!("unknown node {}", link.tail)));
            }
            if !seen.contains(&link.head) {
                return Err(Error::validation(f("head"), format!("unknown node {}", link.head)));
            }
            if link.tail == link.head {
                return Err(Error::validation(f("head"), "self loop"));
            }
            if !link_pairs.insert((link.tail, link.head)) {
                return Err(Error::validation(
                    f("head"),
                    format!("parallel link {} -> {}", link.tail, link.head),
                ));
            }
            check_nonneg(f("capacity"), link.capacity)?;
            check_nonneg(f("delay"), link.delay)?;
            check_reliability(f("reliability"), link.reliability)?;
        }
        let mut clouds = HashSet::new();
        for (v, c) in self.cloud_nodes.iter().enumerate() {
            let f = |name: &str| format!("cloud_nodes[{v}].{name}");
            if !seen.contains(&c.id) {
                return Err(Error::validation(f("id"), format!("unknown node {}", c.id)));
            }
            if !clouds.insert(c.id) {
                return Err(Error::validation(f("id"), format!("duplicate cloud node {}", c.id)));
            }
            check_nonneg(f("capacity"), c.capacity)?;
            check_reliability(f("reliability"), c.reliability)?;
        }
        for (k, svc) in self.services.iter().enumerate() {
            let f = |name: &str| format!("services[{k}].{name}");
            for (name, node) in [("source", svc.source), ("dest", svc.dest)] {
                if !seen.contains(&node) {
                    return Err(Error::validation(f(name), format!("unknown node {node}")));
                }
                if clouds.contains(&node) {
                    return Err(Error::validation(f(name), format!("node {node} is a cloud node")));
                }
            }
            if svc.chain.is_empty() {
                return Err(Error::validation(f("chain"), "chain must contain at least one function"));
            }
            if svc.rates.len() != svc.chain.len() + 1 {
                return Err(Error::validation(
                    f("rates"),
                    format!("expected {} rates, got {}", svc.chain.len() + 1, svc.rates.len()),
                ));
            }
            for (s, &rate) in svc.rates.iter().enumerate() {
                check_nonneg(format!("services[{k}].rates[{s}]"), rate)?;
            }
            if !(svc.theta > 0.0) {
                return Err(Error::validation(f("theta"), "delay threshold must be > 0"));
            }
            check_reliability(f("gamma"), svc.gamma)?;
            for (s, stage) in svc.chain.iter().enumerate() {
                let field = format!("services[{k}].chain[{s}].nfv_delay");
                for c in &self.cloud_nodes {
                    match stage.nfv_delay.get(&c.id) {
                        None => {
                            return Err(Error::validation(
                                field,
                                format!("missing entry for cloud node {}", c.id),
                            ))
                        }
                        Some(Some(d)) => check_nonneg(field.clone(), *d)?,
                        Some(None) => {}
                    }
                }
                if let Some(node) = stage.nfv_delay.keys().find(|n| !clouds.contains(n)) {
                    return Err(Error::validation(field, format!("node {node} is not a cloud node")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let inst: NetworkInstance = serde_json::from_slice(bytes)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// Parses and validates an instance document.
pub fn load_instance(bytes: &[u8]) -> Result<NetworkInstance> {
    NetworkInstance::from_json(bytes)
}


#[cfg(test)]
mod tests {
    use super::fixtures::unique_embedding;
    use super::*;

    const MINIMAL: &str = r#"{
        "nodes": [0, 1, 2],
        "links": [
            {"tail": 0, "head": 1, "capacity": 50, "delay": 1, "reliability": 0.999},
            {"tail": 1, "head": 2, "capacity": 50, "delay": 1, "reliability": 0.998}
        ],
        "cloud_nodes": [{"id": 1, "capacity": 80, "reliability": 0.995}],
        "services": [{
            "source": 0, "dest": 2, "rates": [5, 5],
            "chain": [{"nfv_delay": {"1": 3}}],
            "theta": 26, "gamma": 0.9
        }],
        "P": 2,
        "sigma": 0.0005
    }"#;

    #[test]
    fn loads_minimal_document() {
        let inst = load_instance(MINIMAL.as_bytes()).unwrap();
        assert_eq!(inst.nodes.len(), 3);
        assert_eq!(inst.links.len(), 2);
        assert_eq!(inst, unique_embedding());
    }

    #[test]
    fn rejects_cloud_source() {
        let doc = MINIMAL.replace(r#""source": 0"#, r#""source": 1"#);
        match load_instance(doc.as_bytes()) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "services[0].source"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_link_reliability_above_one() {
        let doc = MINIMAL.replace("0.999", "1.2");
        match load_instance(doc.as_bytes()) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "links[0].reliability"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_document() {
        assert!(matches!(load_instance(b"{\"nodes\": ["), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_missing_nfv_entry() {
        let doc = MINIMAL.replace(r#"{"1": 3}"#, "{}");
        assert!(matches!(load_instance(doc.as_bytes()), Err(Error::Validation { .. })));
    }

    #[test]
    fn null_nfv_delay_marks_disallowed() {
        let doc = MINIMAL.replace(r#"{"1": 3}"#, r#"{"1": null}"#);
        let inst = load_instance(doc.as_bytes()).unwrap();
        assert_eq!(inst.services[0].chain[0].delay_on(1), None);
    }

    #[test]
    fn json_round_trip() {
        let inst = unique_embedding();
        let back = load_instance(inst.to_json().as_bytes()).unwrap();
        assert_eq!(inst, back);
    }
}
