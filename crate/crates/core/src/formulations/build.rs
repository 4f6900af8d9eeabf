use super::index::{FormulationKind, VarIndex};
use crate::lp::{LpModel, Relation, Sense};
use crate::model::{flow_balance_rhs, NetworkInstance, Topology};

struct Builder<'a> {
    inst: &'a NetworkInstance,
    topo: Topology,
    idx: VarIndex,
    m: LpModel,
}

impl<'a> Builder<'a> {
    fn new(inst: &'a NetworkInstance, kind: FormulationKind) -> Self {
        let topo = inst.topology();
        let idx = VarIndex::new(inst, kind);
        let mut b = Builder { inst, topo, idx, m: LpModel::new(Sense::Min) };
        b.add_vars();
        b
    }

    fn add_vars(&mut self) {
        let inst = self.inst;
        let int = self.idx.kind != FormulationKind::Lp2;
        let bin = |m: &mut LpModel, name: String, cost: f64| {
            let j = m.add_var(name, 0.0, 1.0, cost);
            m.vars[j].integer = int;
            j
        };
        let link_name = |e: usize| {
            let l = &inst.links[e];
            format!("{}_{}", l.tail, l.head)
        };
        for c in &inst.cloud_nodes {
            bin(&mut self.m, format!("y_{}", c.id), 1.0);
        }
        for c in &inst.cloud_nodes {
            for k in 0..inst.services.len() {
                bin(&mut self.m, format!("x_{}_{k}", c.id), 0.0);
            }
        }
        for c in &inst.cloud_nodes {
            for (k, svc) in inst.services.iter().enumerate() {
                for (f, stage) in svc.chain.iter().enumerate() {
                    let j = bin(&mut self.m, format!("xf_{}_{k}_{f}", c.id), 0.0);
                    if stage.delay_on(c.id).is_none() {
                        self.m.vars[j].upper = 0.0;
                    }
                }
            }
        }
        for e in 0..inst.links.len() {
            for k in 0..inst.services.len() {
                bin(&mut self.m, format!("zl_{}_{k}", link_name(e)), 0.0);
            }
        }
        if self.idx.has_path_links() {
            for e in 0..inst.links.len() {
                for (k, svc) in inst.services.iter().enumerate() {
                    for s in 0..=svc.chain_len() {
                        for p in 0..inst.paths {
                            bin(&mut self.m, format!("z_{}_{k}_{s}_{p}", link_name(e)), 0.0);
                        }
                    }
                }
            }
        }
        let rp = self.idx.rate_paths();
        for e in 0..inst.links.len() {
            for (k, svc) in inst.services.iter().enumerate() {
                for s in 0..=svc.chain_len() {
                    for p in 0..rp {
                        let name = if rp == 1 && !self.idx.has_path_links() {
                            format!("r_{}_{k}_{s}", link_name(e))
                        } else {
                            format!("r_{}_{k}_{s}_{p}", link_name(e))
                        };
                        self.m.add_var(name, 0.0, 1.0, inst.sigma * svc.rates[s]);
                    }
                }
            }
        }
        for (k, svc) in inst.services.iter().enumerate() {
            for s in 0..=svc.chain_len() {
                self.m.add_var(format!("th_{k}_{s}"), 0.0, svc.theta, 0.0);
            }
        }
        if self.idx.has_path_split() {
            for (k, svc) in inst.services.iter().enumerate() {
                for s in 0..=svc.chain_len() {
                    for p in 0..inst.paths {
                        self.m.add_var(format!("rp_{k}_{s}_{p}"), 0.0, 1.0, 0.0);
                    }
                }
            }
        }
        debug_assert_eq!(self.m.num_vars(), self.idx.num_vars());
    }

    fn row(&mut self, name: String, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        self.m.add_row(name, coeffs, rel, rhs);
    }

    /// Placement, node use, activation and node capacity.
    fn placement_rows(&mut self) {
        let inst = self.inst;
        let nv = inst.cloud_nodes.len();
        for (k, svc) in inst.services.iter().enumerate() {
            for f in 0..svc.chain_len() {
                let c = (0..nv).map(|v| (self.idx.x_vks(v, k, f), 1.0)).collect();
                self.row(format!("place({k},{f})"), c, Relation::Eq, 1.0);
            }
        }
        for v in 0..nv {
            for (k, svc) in inst.services.iter().enumerate() {
                for f in 0..svc.chain_len() {
                    let c = vec![(self.idx.x_vks(v, k, f), 1.0), (self.idx.x_vk(v, k), -1.0)];
                    self.row(format!("assign({v},{k},{f})"), c, Relation::Le, 0.0);
                }
            }
        }
        for v in 0..nv {
            for k in 0..inst.services.len() {
                let c = vec![(self.idx.x_vk(v, k), 1.0), (self.idx.y(v), -1.0)];
                self.row(format!("use({v},{k})"), c, Relation::Le, 0.0);
            }
        }
        for (v, cloud) in inst.cloud_nodes.iter().enumerate() {
            let mut c = Vec::new();
            for (k, svc) in inst.services.iter().enumerate() {
                for f in 0..svc.chain_len() {
                    c.push((self.idx.x_vks(v, k, f), svc.rates[f + 1]));
                }
            }
            c.push((self.idx.y(v), -cloud.capacity));
            self.row(format!("ncap({v})"), c, Relation::Le, 0.0);
        }
    }

    fn link_capacity_rows(&mut self) {
        let inst = self.inst;
        let rp = self.idx.rate_paths();
        for (e, link) in inst.links.iter().enumerate() {
            let mut c = Vec::new();
            for (k, svc) in inst.services.iter().enumerate() {
                for s in 0..=svc.chain_len() {
                    for p in 0..rp {
                        c.push((self.idx.r(e, k, s, p), svc.rates[s]));
                    }
                }
            }
            self.row(format!("lcap({e})"), c, Relation::Le, link.capacity);
        }
    }

    /// Per-segment link indicators bounded by the per-service indicator.
    /// In the aggregated LP the rate itself plays the indicator role.
    fn link_use_rows(&mut self) {
        let inst = self.inst;
        for e in 0..inst.links.len() {
            for (k, svc) in inst.services.iter().enumerate() {
                for s in 0..=svc.chain_len() {
                    if self.idx.has_path_links() {
                        for p in 0..inst.paths {
                            let c = vec![(self.idx.z_ijksp(e, k, s, p), 1.0), (self.idx.z_ijk(e, k), -1.0)];
                            self.row(format!("zlink({e},{k},{s},{p})"), c, Relation::Le, 0.0);
                        }
                    } else {
                        let c = vec![(self.idx.r(e, k, s, 0), 1.0), (self.idx.z_ijk(e, k), -1.0)];
                        self.row(format!("zlink({e},{k},{s})"), c, Relation::Le, 0.0);
                    }
                }
            }
        }
    }

    fn reliability_and_delay_rows(&mut self) {
        let inst = self.inst;
        for (k, svc) in inst.services.iter().enumerate() {
            let mut c = Vec::new();
            for (v, cloud) in inst.cloud_nodes.iter().enumerate() {
                let w = cloud.reliability.ln();
                if w != 0.0 {
                    c.push((self.idx.x_vk(v, k), w));
                }
            }
            for (e, link) in inst.links.iter().enumerate() {
                let w = link.reliability.ln();
                if w != 0.0 {
                    c.push((self.idx.z_ijk(e, k), w));
                }
            }
            self.row(format!("rel({k})"), c, Relation::Ge, svc.gamma.ln());
        }
        for (k, svc) in inst.services.iter().enumerate() {
            let mut c = Vec::new();
            for (v, cloud) in inst.cloud_nodes.iter().enumerate() {
                for (f, stage) in svc.chain.iter().enumerate() {
                    if let Some(d) = stage.delay_on(cloud.id) {
                        if d != 0.0 {
                            c.push((self.idx.x_vks(v, k, f), d));
                        }
                    }
                }
            }
            for s in 0..=svc.chain_len() {
                c.push((self.idx.theta(k, s), 1.0));
            }
            self.row(format!("delay({k})"), c, Relation::Le, svc.theta);
        }
        // segment delay bounds every path (per-path indicators) or the
        // rate-weighted delay (aggregated model)
        for (k, svc) in inst.services.iter().enumerate() {
            for s in 0..=svc.chain_len() {
                if self.idx.has_path_links() {
                    for p in 0..inst.paths {
                        let mut c = vec![(self.idx.theta(k, s), 1.0)];
                        for (e, link) in inst.links.iter().enumerate() {
                            if link.delay != 0.0 {
                                c.push((self.idx.z_ijksp(e, k, s, p), -link.delay));
                            }
                        }
                        self.row(format!("pdelay({k},{s},{p})"), c, Relation::Ge, 0.0);
                    }
                } else {
                    let mut c = vec![(self.idx.theta(k, s), 1.0)];
                    for (e, link) in inst.links.iter().enumerate() {
                        if link.delay != 0.0 {
                            c.push((self.idx.r(e, k, s, 0), -link.delay));
                        }
                    }
                    self.row(format!("pdelay({k},{s})"), c, Relation::Ge, 0.0);
                }
            }
        }
    }

    /// `Σ_in var - Σ_out var` at node position `i`.
    fn divergence(&self, i: usize, var: impl Fn(usize) -> usize) -> Vec<(usize, f64)> {
        let mut c: Vec<(usize, f64)> = self.topo.in_links[i].iter().map(|&e| (var(e), 1.0)).collect();
        c.extend(self.topo.out_links[i].iter().map(|&e| (var(e), -1.0)));
        c
    }

    /// Flow balance `divergence - b(x) = constant` of segment `(k, s)`.
    fn balance_row(&mut self, name: String, k: usize, s: usize, i: usize, mut c: Vec<(usize, f64)>) {
        let node = self.inst.nodes[i];
        let b = flow_balance_rhs(self.inst, k, s, node);
        if c.is_empty() && b.is_zero() {
            return;
        }
        for &(v, f, coef) in &b.terms {
            c.push((self.idx.x_vks(v, k, f), -coef));
        }
        self.row(name, c, Relation::Eq, b.constant);
    }

    fn milp_flow_rows(&mut self) {
        let inst = self.inst;
        let n = self.topo.num_nodes();
        let pp = inst.paths;
        for (k, svc) in inst.services.iter().enumerate() {
            let l = svc.chain_len();
            for s in 0..=l {
                for p in 0..pp {
                    for i in 0..n {
                        if self.topo.out_links[i].is_empty() {
                            continue;
                        }
                        let c = self.topo.out_links[i].iter().map(|&e| (self.idx.z_ijksp(e, k, s, p), 1.0)).collect();
                        self.row(format!("out({i},{k},{s},{p})"), c, Relation::Le, 1.0);
                    }
                }
            }
            for e in 0..inst.links.len() {
                for s in 0..=l {
                    for p in 0..pp {
                        let c = vec![(self.idx.r(e, k, s, p), 1.0), (self.idx.z_ijksp(e, k, s, p), -1.0)];
                        self.row(format!("rz({e},{k},{s},{p})"), c, Relation::Le, 0.0);
                    }
                }
            }
            // endpoint balances summed over paths
            for s in 0..=l {
                for i in 0..n {
                    let node = inst.nodes[i];
                    let cloud = self.topo.cloud_of[i].is_some();
                    let in_si = cloud || (s == 0 && node == svc.source) || (s == l && node == svc.dest);
                    if !in_si {
                        continue;
                    }
                    let mut c = Vec::new();
                    for p in 0..pp {
                        c.extend(self.divergence(i, |e| self.idx.r(e, k, s, p)));
                    }
                    self.balance_row(format!("bal({i},{k},{s})"), k, s, i, c);
                }
            }
            // per-path conservation away from the segment endpoints
            for s in 0..=l {
                for p in 0..pp {
                    for i in 0..n {
                        if self.topo.in_links[i].is_empty() && self.topo.out_links[i].is_empty() {
                            continue;
                        }
                        let node = inst.nodes[i];
                        let c = self.divergence(i, |e| self.idx.r(e, k, s, p));
                        match self.topo.cloud_of[i] {
                            None => {
                                if (s == 0 && node == svc.source) || (s == l && node == svc.dest) {
                                    continue;
                                }
                                self.row(format!("cons({i},{k},{s},{p})"), c, Relation::Eq, 0.0);
                            }
                            Some(v) => {
                                if s < l {
                                    let mut c = c.clone();
                                    c.push((self.idx.x_vks(v, k, s), -1.0));
                                    self.row(format!("srcv({i},{k},{s},{p})"), c, Relation::Le, 0.0);
                                }
                                if s >= 1 {
                                    let mut c = c;
                                    c.push((self.idx.x_vks(v, k, s - 1), 1.0));
                                    self.row(format!("dstv({i},{k},{s},{p})"), c, Relation::Ge, 0.0);
                                }
                            }
                        }
                    }
                }
            }
            for e in 0..inst.links.len() {
                for s in 0..=l {
                    let mut c: Vec<(usize, f64)> = (0..pp).map(|p| (self.idx.r(e, k, s, p), 1.0)).collect();
                    c.push((self.idx.z_ijk(e, k), -1.0));
                    self.row(format!("vlink({e},{k},{s})"), c, Relation::Le, 0.0);
                }
            }
            for s in 0..=l {
                let mut c = vec![(self.idx.theta(k, s), 1.0)];
                for (e, link) in inst.links.iter().enumerate() {
                    if link.delay != 0.0 {
                        for p in 0..pp {
                            c.push((self.idx.r(e, k, s, p), -link.delay));
                        }
                    }
                }
                self.row(format!("vdelay({k},{s})"), c, Relation::Ge, 0.0);
            }
        }
    }

    fn minlp_flow_rows(&mut self) {
        let inst = self.inst;
        let n = self.topo.num_nodes();
        let pp = inst.paths;
        for (k, svc) in inst.services.iter().enumerate() {
            let l = svc.chain_len();
            for s in 0..=l {
                for p in 0..pp {
                    for i in 0..n {
                        let c = self.divergence(i, |e| self.idx.z_ijksp(e, k, s, p));
                        self.balance_row(format!("zflow({i},{k},{s},{p})"), k, s, i, c);
                    }
                }
            }
            for s in 0..=l {
                let c = (0..pp).map(|p| (self.idx.r_ksp(k, s, p), 1.0)).collect();
                self.row(format!("split({k},{s})"), c, Relation::Eq, 1.0);
                // path labels are interchangeable: keep the fractions sorted
                for p in 1..pp {
                    let c = vec![(self.idx.r_ksp(k, s, p - 1), 1.0), (self.idx.r_ksp(k, s, p), -1.0)];
                    self.row(format!("order({k},{s},{p})"), c, Relation::Ge, 0.0);
                }
            }
            for e in 0..inst.links.len() {
                for s in 0..=l {
                    for p in 0..pp {
                        let r = self.idx.r(e, k, s, p);
                        let z = self.idx.z_ijksp(e, k, s, p);
                        let f = self.idx.r_ksp(k, s, p);
                        self.row(format!("bil_lo({e},{k},{s},{p})"), vec![(r, 1.0), (z, -1.0), (f, -1.0)], Relation::Ge, -1.0);
                        self.row(format!("bil_z({e},{k},{s},{p})"), vec![(r, 1.0), (z, -1.0)], Relation::Le, 0.0);
                        self.row(format!("bil_r({e},{k},{s},{p})"), vec![(r, 1.0), (f, -1.0)], Relation::Le, 0.0);
                    }
                }
            }
        }
    }

    fn lp2_flow_rows(&mut self) {
        let inst = self.inst;
        let n = self.topo.num_nodes();
        for (k, svc) in inst.services.iter().enumerate() {
            for s in 0..=svc.chain_len() {
                for i in 0..n {
                    let c = self.divergence(i, |e| self.idx.r(e, k, s, 0));
                    self.balance_row(format!("bal({i},{k},{s})"), k, s, i, c);
                }
            }
        }
    }
}

fn build(inst: &NetworkInstance, kind: FormulationKind) -> (LpModel, VarIndex) {
    let mut b = Builder::new(inst, kind);
    b.placement_rows();
    b.link_capacity_rows();
    b.link_use_rows();
    b.reliability_and_delay_rows();
    match kind {
        FormulationKind::Milp => b.milp_flow_rows(),
        FormulationKind::MinlpLinearized => b.minlp_flow_rows(),
        FormulationKind::Lp2 => b.lp2_flow_rows(),
    }
    (b.m, b.idx)
}

/// The compact MILP: per-path rates with at most one outgoing link per
/// node and path, endpoint balances summed over paths, per-path
/// conservation elsewhere, and the two valid inequality families
/// `Σ_p r ≤ z_ijk` and `θ ≥ Σ d Σ_p r`.
///
/// Per-path conservation is not imposed at the source of segment 0 and the
/// destination of the last segment, where the summed balance applies.
pub fn build_milp(inst: &NetworkInstance) -> (LpModel, VarIndex) {
    build(inst, FormulationKind::Milp)
}

/// The path-based formulation: every path is an indicator walk from the
/// segment's source to its sink, rates split over paths by `r_ksp`, and
/// `r_ijksp = r_ksp · z_ijksp` linearized.
pub fn build_minlp_linearized(inst: &NetworkInstance) -> (LpModel, VarIndex) {
    build(inst, FormulationKind::MinlpLinearized)
}

/// Aggregated LP with a single rate variable per (link, service, segment).
pub fn build_lp2(inst: &NetworkInstance) -> (LpModel, VarIndex) {
    build(inst, FormulationKind::Lp2)
}

pub fn build_formulation(inst: &NetworkInstance, kind: FormulationKind) -> (LpModel, VarIndex) {
    build(inst, kind)
}

/// Drops integrality marks. Binaries already carry `[0, 1]` bounds.
pub fn relax(model: &LpModel) -> LpModel {
    let mut out = model.clone();
    for v in &mut out.vars {
        v.integer = false;
    }
    out
}
