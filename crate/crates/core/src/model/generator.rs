use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::instance::{CloudNode, FunctionStage, Link, NetworkInstance, NodeId, ServiceRequest};
use super::paths::shortest_path_metrics;
use crate::error::{Error, Result};

fn default_chain_length() -> usize {
    3
}
fn default_function_types() -> usize {
    5
}
fn default_node_capacity() -> [u32; 2] {
    [50, 100]
}
fn default_link_capacity() -> [u32; 2] {
    [7, 77]
}
fn default_link_delays() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_nfv_delays() -> Vec<f64> {
    vec![3.0, 4.0, 5.0, 6.0]
}
fn default_node_reliability() -> [f64; 2] {
    [0.991, 0.995]
}
fn default_link_reliability() -> [f64; 2] {
    [0.995, 0.999]
}
fn default_rate() -> [u32; 2] {
    [1, 11]
}
fn default_alpha() -> [f64; 2] {
    [0.0, 5.0]
}
fn default_paths() -> usize {
    2
}
fn default_sigma() -> f64 {
    0.0005
}

/// Parameters of the random instance generator. Everything beyond the four
/// counts has a default matching the reference experimental setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub num_nodes: usize,
    pub num_arcs: usize,
    pub num_cloud: usize,
    pub num_services: usize,
    #[serde(default = "default_chain_length")]
    pub chain_length: usize,
    /// Size of the function catalogue chains are drawn from.
    #[serde(default = "default_function_types")]
    pub function_types: usize,
    /// Cap on the number of links leaving any node.
    #[serde(default)]
    pub max_out_degree: Option<usize>,
    #[serde(default = "default_node_capacity")]
    pub node_capacity: [u32; 2],
    #[serde(default = "default_link_capacity")]
    pub link_capacity: [u32; 2],
    #[serde(default = "default_link_delays")]
    pub link_delays: Vec<f64>,
    #[serde(default = "default_nfv_delays")]
    pub nfv_delays: Vec<f64>,
    #[serde(default = "default_node_reliability")]
    pub node_reliability: [f64; 2],
    #[serde(default = "default_link_reliability")]
    pub link_reliability: [f64; 2],
    #[serde(default = "default_rate")]
    pub rate: [u32; 2],
    /// Range of the slack added to every delay threshold.
    #[serde(default = "default_alpha")]
    pub alpha: [f64; 2],
    #[serde(default = "default_paths", rename = "P")]
    pub paths: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

impl GeneratorConfig {
    pub fn new(num_nodes: usize, num_arcs: usize, num_cloud: usize, num_services: usize) -> Self {
        GeneratorConfig {
            num_nodes,
            num_arcs,
            num_cloud,
            num_services,
            chain_length: default_chain_length(),
            function_types: default_function_types(),
            max_out_degree: None,
            node_capacity: default_node_capacity(),
            link_capacity: default_link_capacity(),
            link_delays: default_link_delays(),
            nfv_delays: default_nfv_delays(),
            node_reliability: default_node_reliability(),
            link_reliability: default_link_reliability(),
            rate: default_rate(),
            alpha: default_alpha(),
            paths: default_paths(),
            sigma: default_sigma(),
        }
    }

    /// Small instances for exhaustive cross-checks: chains of two
    /// functions and at most three links leaving each node.
    pub fn tiny(num_nodes: usize, num_arcs: usize, num_cloud: usize, num_services: usize) -> Self {
        GeneratorConfig {
            chain_length: 2,
            max_out_degree: Some(3),
            ..Self::new(num_nodes, num_arcs, num_cloud, num_services)
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.num_nodes;
        let err = |m: String| Err(Error::Config(m));
        if self.num_cloud == 0 {
            return err("at least one cloud node is required".into());
        }
        if self.num_cloud + 2 > n {
            return err(format!(
                "{} cloud nodes need at least {} nodes, got {n}",
                self.num_cloud,
                self.num_cloud + 2
            ));
        }
        if self.num_arcs < 2 * (n - 1) {
            return err(format!(
                "{} arcs cannot make {n} nodes strongly connected (need >= {})",
                self.num_arcs,
                2 * (n - 1)
            ));
        }
        let max_arcs = match self.max_out_degree {
            Some(d) if d < 2 => return err("max_out_degree must be >= 2".into()),
            Some(d) => n * d.min(n - 1),
            None => n * (n - 1),
        };
        if self.num_arcs > max_arcs {
            return err(format!("{} arcs exceed the maximum of {max_arcs}", self.num_arcs));
        }
        if self.chain_length == 0 || self.function_types == 0 {
            return err("chain_length and function_types must be >= 1".into());
        }
        if self.link_delays.is_empty() || self.nfv_delays.is_empty() {
            return err("delay choice lists must be nonempty".into());
        }
        let ordered = self.node_capacity[0] <= self.node_capacity[1]
            && self.link_capacity[0] <= self.link_capacity[1]
            && self.rate[0] <= self.rate[1]
            && self.node_reliability[0] <= self.node_reliability[1]
            && self.link_reliability[0] <= self.link_reliability[1]
            && self.alpha[0] <= self.alpha[1];
        if !ordered {
            return err("every range must have lower <= upper".into());
        }
        if self.paths == 0 || !(self.sigma > 0.0) {
            return err("P must be >= 1 and sigma > 0".into());
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..=range[1])
    }
}

/// Random strongly connected digraph: an in-arborescence and an
/// out-arborescence on a shared root, topped up with uniform extra arcs.
fn random_digraph(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<Vec<(NodeId, NodeId)>> {
    let n = cfg.num_nodes;
    let cap = cfg.max_out_degree.unwrap_or(usize::MAX);
    let mut out_deg = vec![0usize; n];
    let mut arcs = Vec::with_capacity(cfg.num_arcs);
    let mut present = HashSet::new();
    let mut add = |t: usize, h: usize, arcs: &mut Vec<(NodeId, NodeId)>, out_deg: &mut Vec<usize>| {
        if present.insert((t, h)) {
            arcs.push((t as NodeId, h as NodeId));
            out_deg[t] += 1;
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    // every non-root node gets one arc towards an earlier node
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        add(order[i], parent, &mut arcs, &mut out_deg);
    }
    // and one arc from an earlier node with spare out-degree
    order[1..].shuffle(rng);
    for i in 1..n {
        let open: Vec<usize> = order[..i].iter().copied().filter(|&u| out_deg[u] < cap).collect();
        let parent = *open
            .choose(rng)
            .ok_or_else(|| Error::Config("out-degree cap too tight for a spanning tree".into()))?;
        add(parent, order[i], &mut arcs, &mut out_deg);
    }

    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|t| (0..n).filter(move |&h| h != t).map(move |h| (t, h)))
        .collect();
    candidates.shuffle(rng);
    for (t, h) in candidates {
        if arcs.len() >= cfg.num_arcs {
            break;
        }
        if out_deg[t] < cap {
            add(t, h, &mut arcs, &mut out_deg);
        }
    }
    if arcs.len() < cfg.num_arcs {
        return Err(Error::Config(format!(
            "could only place {} of {} arcs under the out-degree cap",
            arcs.len(),
            cfg.num_arcs
        )));
    }
    Ok(arcs)
}

/// Builds a random instance; a pure function of `(cfg, seed)`.
pub fn generate_instance(cfg: &GeneratorConfig, seed: u64) -> Result<NetworkInstance> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.num_nodes;
    let arcs = random_digraph(cfg, &mut rng)?;
    let links: Vec<Link> = arcs
        .iter()
        .map(|&(tail, head)| Link {
            tail,
            head,
            capacity: rng.gen_range(cfg.link_capacity[0]..=cfg.link_capacity[1]) as f64,
            delay: *cfg.link_delays.choose(&mut rng).unwrap(),
            reliability: uniform(&mut rng, cfg.link_reliability),
        })
        .collect();

    let mut cloud_ids: Vec<NodeId> = rand::seq::index::sample(&mut rng, n, cfg.num_cloud)
        .into_iter()
        .map(|i| i as NodeId)
        .collect();
    cloud_ids.sort_unstable();
    let cloud_nodes: Vec<CloudNode> = cloud_ids
        .iter()
        .map(|&id| CloudNode {
            id,
            capacity: rng.gen_range(cfg.node_capacity[0]..=cfg.node_capacity[1]) as f64,
            reliability: uniform(&mut rng, cfg.node_reliability),
        })
        .collect();

    let catalogue: Vec<BTreeMap<NodeId, Option<f64>>> = (0..cfg.function_types)
        .map(|_| {
            cloud_ids
                .iter()
                .map(|&id| (id, Some(*cfg.nfv_delays.choose(&mut rng).unwrap())))
                .collect()
        })
        .collect();

    let plain: Vec<NodeId> = (0..n as NodeId).filter(|i| !cloud_ids.contains(i)).collect();
    let dest = *plain.choose(&mut rng).unwrap();
    let sources: Vec<NodeId> = plain.iter().copied().filter(|&i| i != dest).collect();

    let mut services = Vec::with_capacity(cfg.num_services);
    let mut alphas = Vec::with_capacity(cfg.num_services);
    for _ in 0..cfg.num_services {
        let source = *sources.choose(&mut rng).unwrap();
        let chain = (0..cfg.chain_length)
            .map(|_| FunctionStage { nfv_delay: catalogue[rng.gen_range(0..cfg.function_types)].clone() })
            .collect();
        let rate = rng.gen_range(cfg.rate[0]..=cfg.rate[1]) as f64;
        alphas.push(uniform(&mut rng, cfg.alpha));
        services.push(ServiceRequest {
            source,
            dest,
            rates: vec![rate; cfg.chain_length + 1],
            chain,
            theta: 1.0,
            gamma: 1.0,
        });
    }

    let mut inst = NetworkInstance {
        nodes: (0..n as NodeId).collect(),
        links,
        cloud_nodes,
        services,
        paths: cfg.paths,
        sigma: cfg.sigma,
        seed: Some(seed),
    };
    for (k, alpha) in alphas.into_iter().enumerate() {
        let m = shortest_path_metrics(&inst, k)?;
        inst.services[k].theta = 20.0 + 3.0 * m.delay + alpha;
        inst.services[k].gamma = 0.99f64.powi(2) * m.reliability.powi(4);
    }
    inst.validate()?;
    Ok(inst)
}
