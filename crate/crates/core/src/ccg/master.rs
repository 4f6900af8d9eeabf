use crate::formulations::SliceSolution;
use crate::lp::{LpModel, LpOutcome, Relation, Sense};
use crate::model::NetworkInstance;
use crate::pricing::DualPrices;

use super::ColumnPool;

/// Row and column positions of the pattern master problem.
///
/// Columns: one `y_v` per cloud node, then one `t` per pooled pattern in
/// pool insertion order. Rows: pattern choice per service, node cover per
/// (service, cloud node), node capacity, link capacity, `y_v <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterIndex {
    pub num_cloud: usize,
    pub num_services: usize,
    pub num_links: usize,
    /// `(service, position in that service's pool)` of each `t` column.
    pub columns: Vec<(usize, usize)>,
}

impl MasterIndex {
    pub fn y(&self, v: usize) -> usize {
        v
    }

    pub fn t(&self, i: usize) -> usize {
        self.num_cloud + i
    }

    pub fn choice_row(&self, k: usize) -> usize {
        k
    }

    pub fn cover_row(&self, k: usize, v: usize) -> usize {
        self.num_services + k * self.num_cloud + v
    }

    pub fn node_cap_row(&self, v: usize) -> usize {
        self.num_services * (1 + self.num_cloud) + v
    }

    pub fn link_cap_row(&self, e: usize) -> usize {
        self.num_services * (1 + self.num_cloud) + self.num_cloud + e
    }

    pub fn y_bound_row(&self, v: usize) -> usize {
        self.num_services * (1 + self.num_cloud) + self.num_cloud + self.num_links + v
    }

    /// Master duals (optimal case) or Farkas ray (infeasible case) as
    /// pricing input.
    pub fn duals(&self, out: &LpOutcome) -> Option<DualPrices> {
        let (y, is_ray) = match (&out.farkas, out.status) {
            (Some(ray), _) => (ray, true),
            (None, crate::lp::LpStatus::Optimal) => (&out.duals, false),
            _ => return None,
        };
        let nv = self.num_cloud;
        Some(DualPrices {
            alpha: (0..self.num_services).map(|k| y[self.choice_row(k)]).collect(),
            beta: (0..self.num_links).map(|e| y[self.link_cap_row(e)]).collect(),
            pi: (0..self.num_services).map(|k| (0..nv).map(|v| y[self.cover_row(k, v)]).collect()).collect(),
            eta: (0..nv).map(|v| y[self.node_cap_row(v)]).collect(),
            zeta: (0..nv).map(|v| y[self.y_bound_row(v)]).collect(),
            is_ray,
        })
    }
}

/// Restricted master LP over the pooled patterns.
///
/// `y_v` carries its upper bound as an explicit row so that the bound has a
/// dual; with `integral` set the model is the restricted pattern MILP
/// instead, with binary `y` and `t`.
pub fn build_master(pool: &ColumnPool, inst: &NetworkInstance, integral: bool) -> (LpModel, MasterIndex) {
    let nv = inst.cloud_nodes.len();
    let nk = inst.services.len();
    let nl = inst.links.len();
    let mut m = LpModel::new(Sense::Min);
    let ub = if integral { 1.0 } else { f64::INFINITY };
    for c in &inst.cloud_nodes {
        let j = m.add_var(format!("y_{}", c.id), 0.0, ub, 1.0);
        m.vars[j].integer = integral;
    }
    let mut columns = Vec::with_capacity(pool.len());
    let mut seen = vec![0usize; nk];
    for p in pool.iter() {
        let k = p.service;
        let j = m.add_var(format!("t_{k}_{}", seen[k]), 0.0, ub, p.cost(inst.sigma));
        m.vars[j].integer = integral;
        columns.push((k, seen[k]));
        seen[k] += 1;
    }
    let idx = MasterIndex { num_cloud: nv, num_services: nk, num_links: nl, columns };
    let pats: Vec<_> = pool.iter().collect();

    for k in 0..nk {
        let c = (0..pats.len()).filter(|&i| pats[i].service == k).map(|i| (idx.t(i), 1.0)).collect();
        m.add_row(format!("choice({k})"), c, Relation::Eq, 1.0);
    }
    for k in 0..nk {
        for v in 0..nv {
            let mut c: Vec<(usize, f64)> = (0..pats.len())
                .filter(|&i| pats[i].service == k && pats[i].chi[v] != 0.0)
                .map(|i| (idx.t(i), pats[i].chi[v]))
                .collect();
            c.push((idx.y(v), -1.0));
            m.add_row(format!("cover({k},{v})"), c, Relation::Le, 0.0);
        }
    }
    for (v, cloud) in inst.cloud_nodes.iter().enumerate() {
        let mut c: Vec<(usize, f64)> = (0..pats.len())
            .filter(|&i| pats[i].rate_v[v] != 0.0)
            .map(|i| (idx.t(i), pats[i].rate_v[v]))
            .collect();
        c.push((idx.y(v), -cloud.capacity));
        m.add_row(format!("ncap({v})"), c, Relation::Le, 0.0);
    }
    for (e, link) in inst.links.iter().enumerate() {
        let c = (0..pats.len())
            .filter(|&i| pats[i].rate_ij[e] != 0.0)
            .map(|i| (idx.t(i), pats[i].rate_ij[e]))
            .collect();
        m.add_row(format!("lcap({e})"), c, Relation::Le, link.capacity);
    }
    for v in 0..nv {
        m.add_row(format!("ybound({v})"), vec![(idx.y(v), 1.0)], Relation::Le, 1.0);
    }
    (m, idx)
}

/// Full solution from a restricted-MILP point: each service takes the
/// embedding of its chosen pattern and `y` is copied.
pub(crate) fn expand(pool: &ColumnPool, inst: &NetworkInstance, idx: &MasterIndex, x: &[f64]) -> SliceSolution {
    let mut sol = SliceSolution::zeros(inst);
    for (i, &(k, c)) in idx.columns.iter().enumerate() {
        if x[idx.t(i)] > 0.5 {
            sol.set_service_block(k, &pool.service(k)[c].embedding);
        }
    }
    for v in 0..idx.num_cloud {
        sol.y_v[v] = x[idx.y(v)].round();
    }
    sol
}
