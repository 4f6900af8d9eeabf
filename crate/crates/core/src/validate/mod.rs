//! Independent checker for slicing solutions, plus flow decomposition and
//! cycle stripping.
//!
//! The checker reads the solution blocks directly and re-derives every
//! quantity from the instance: it shares no rows with the model builders.
//! Path fractions are taken from `r_ksp` when stored and otherwise from the
//! largest link rate of the path. A path with zero fraction may have an
//! empty link set.

mod flow;

use std::fmt;

use serde::Serialize;

pub use flow::{decompose_flow, strip_cycles, FlowDecomposition, FlowPath};

use crate::formulations::SliceSolution;
use crate::model::{flow_balance_rhs, NetworkInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintFamily {
    /// Block dimensions match the instance.
    Shape,
    /// Indicators are 0/1 and fractions lie in [0, 1].
    Integrality,
    Bounds,
    /// Every function on exactly one node that can host it.
    Placement,
    /// `x_vks <= x_vk <= y_v`.
    Activation,
    NodeCapacity,
    /// Each used path is a unit flow between its segment's ends.
    FlowConservation,
    /// Path fractions of a segment add up to one.
    PathSplit,
    /// `r_ijksp = r_ksp * z_ijksp`.
    RateCoupling,
    LinkCapacity,
    /// A link on some path (or carrying rate) is marked used by the service.
    LinkUse,
    Reliability,
    Delay,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

const ALL_FAMILIES: [ConstraintFamily; 13] = [
    ConstraintFamily::Shape,
    ConstraintFamily::Integrality,
    ConstraintFamily::Bounds,
    ConstraintFamily::Placement,
    ConstraintFamily::Activation,
    ConstraintFamily::NodeCapacity,
    ConstraintFamily::FlowConservation,
    ConstraintFamily::PathSplit,
    ConstraintFamily::RateCoupling,
    ConstraintFamily::LinkCapacity,
    ConstraintFamily::LinkUse,
    ConstraintFamily::Reliability,
    ConstraintFamily::Delay,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyCheck {
    pub family: ConstraintFamily,
    pub passed: bool,
    pub worst_residual: f64,
    /// Where the worst residual occurs.
    pub location: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub families: Vec<FamilyCheck>,
    /// Achieved end-to-end delay per service.
    pub delay: Vec<f64>,
    /// Achieved end-to-end reliability per service.
    pub reliability: Vec<f64>,
    pub objective: f64,
    pub tol: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(|f| f.passed)
    }

    pub fn failed(&self) -> Vec<ConstraintFamily> {
        self.families.iter().filter(|f| !f.passed).map(|f| f.family).collect()
    }

    pub fn family(&self, family: ConstraintFamily) -> &FamilyCheck {
        self.families.iter().find(|f| f.family == family).expect("every family is reported")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (objective {:.6})", if self.passed() { "feasible" } else { "INFEASIBLE" }, self.objective)?;
        for c in &self.families {
            write!(f, "  {:<18} {:<4} {:.3e}", c.family.to_string(), if c.passed { "ok" } else { "FAIL" }, c.worst_residual)?;
            if let (false, Some(at)) = (c.passed, &c.location) {
                write!(f, " at {at}")?;
            }
            writeln!(f)?;
        }
        for (k, (d, r)) in self.delay.iter().zip(&self.reliability).enumerate() {
            writeln!(f, "  service {k}: delay {d:.4}, reliability {r:.6}")?;
        }
        Ok(())
    }
}

/// Default residual tolerance of [`validate_solution`].
pub const VALIDATE_TOL: f64 = 1e-6;
/// Slack on the log-space reliability test.
const RELIABILITY_SLACK: f64 = 1e-9;

struct Checker {
    tol: f64,
    checks: Vec<FamilyCheck>,
}

impl Checker {
    fn record(&mut self, family: ConstraintFamily, residual: f64, location: impl FnOnce() -> String) {
        let tol = if family == ConstraintFamily::Reliability { RELIABILITY_SLACK } else { self.tol };
        let c = self.checks.iter_mut().find(|c| c.family == family).expect("family registered");
        if residual > c.worst_residual {
            c.worst_residual = residual;
            c.location = Some(location());
        }
        if residual > tol {
            c.passed = false;
        }
    }
}

fn shape_ok(inst: &NetworkInstance, sol: &SliceSolution) -> bool {
    let nv = inst.cloud_nodes.len();
    let nl = inst.links.len();
    let nk = inst.services.len();
    let p = sol.paths;
    let segs_ok = |b: &Vec<Vec<Vec<Vec<f64>>>>| {
        b.len() == nk
            && b.iter().zip(&inst.services).all(|(bk, svc)| {
                bk.len() == svc.segments() && bk.iter().all(|bs| bs.len() == p && bs.iter().all(|r| r.len() == nl))
            })
    };
    sol.y_v.len() == nv
        && sol.x_vk.len() == nk
        && sol.x_vk.iter().all(|x| x.len() == nv)
        && sol.x_vks.len() == nk
        && sol.x_vks.iter().zip(&inst.services).all(|(x, s)| x.len() == s.chain_len() && x.iter().all(|r| r.len() == nv))
        && sol.z_ijk.len() == nk
        && sol.z_ijk.iter().all(|z| z.len() == nl)
        && segs_ok(&sol.z_ijksp)
        && segs_ok(&sol.r_ijksp)
        && sol.theta_ks.len() == nk
        && sol.r_ksp.as_ref().map_or(true, |r| {
            r.len() == nk && r.iter().zip(&inst.services).all(|(rk, s)| rk.len() == s.segments() && rk.iter().all(|v| v.len() == p))
        })
}

/// Achieved `(delay, reliability)` of service `k`: NFV delays of the
/// placed functions plus, per segment, the largest path delay; and the
/// product of reliabilities over used cloud nodes (`x_vk = 1`) and used
/// links (`z_ijk = 1`).
pub fn e2e_metrics(inst: &NetworkInstance, sol: &SliceSolution, k: usize) -> (f64, f64) {
    let svc = &inst.services[k];
    let mut delay = 0.0;
    for (f, stage) in svc.chain.iter().enumerate() {
        for (v, cloud) in inst.cloud_nodes.iter().enumerate() {
            if sol.x_vks[k][f][v] > 0.5 {
                delay += stage.delay_on(cloud.id).unwrap_or(f64::INFINITY);
            }
        }
    }
    for seg in &sol.z_ijksp[k] {
        let worst = seg
            .iter()
            .map(|z| z.iter().zip(&inst.links).filter(|(z, _)| **z > 0.5).map(|(_, l)| l.delay).sum::<f64>())
            .fold(0.0, f64::max);
        delay += worst;
    }
    let mut log_rel = 0.0;
    for (v, cloud) in inst.cloud_nodes.iter().enumerate() {
        if sol.x_vk[k][v] > 0.5 {
            log_rel += cloud.reliability.ln();
        }
    }
    for (e, link) in inst.links.iter().enumerate() {
        if sol.z_ijk[k][e] > 0.5 {
            log_rel += link.reliability.ln();
        }
    }
    (delay, log_rel.exp())
}

pub fn validate_solution(inst: &NetworkInstance, sol: &SliceSolution) -> ValidationReport {
    validate_solution_with(inst, sol, VALIDATE_TOL)
}

pub fn validate_solution_with(inst: &NetworkInstance, sol: &SliceSolution, tol: f64) -> ValidationReport {
    let mut ck = Checker {
        tol,
        checks: ALL_FAMILIES
            .iter()
            .map(|&family| FamilyCheck { family, passed: true, worst_residual: 0.0, location: None })
            .collect(),
    };
    if !shape_ok(inst, sol) {
        ck.record(ConstraintFamily::Shape, f64::INFINITY, || "solution blocks do not match the instance".into());
        return ValidationReport { families: ck.checks, delay: Vec::new(), reliability: Vec::new(), objective: f64::NAN, tol };
    }
    use ConstraintFamily as F;
    let nv = inst.cloud_nodes.len();
    let nl = inst.links.len();
    let topo = inst.topology();
    let frac = |v: f64| (v - v.round()).abs();
    let outside = |v: f64| (-v).max(v - 1.0).max(0.0);

    for v in 0..nv {
        ck.record(F::Integrality, frac(sol.y_v[v]), || format!("y[{v}]"));
        ck.record(F::Bounds, outside(sol.y_v[v]), || format!("y[{v}]"));
    }
    for (k, svc) in inst.services.iter().enumerate() {
        for v in 0..nv {
            ck.record(F::Integrality, frac(sol.x_vk[k][v]), || format!("x[{v}][{k}]"));
            ck.record(F::Bounds, outside(sol.x_vk[k][v]), || format!("x[{v}][{k}]"));
            ck.record(F::Activation, sol.x_vk[k][v] - sol.y_v[v], || format!("x[{v}][{k}] > y[{v}]"));
        }
        for (f, stage) in svc.chain.iter().enumerate() {
            let mut total = 0.0;
            for (v, cloud) in inst.cloud_nodes.iter().enumerate() {
                let x = sol.x_vks[k][f][v];
                total += x;
                ck.record(F::Integrality, frac(x), || format!("x[{v}][{k}][{f}]"));
                ck.record(F::Bounds, outside(x), || format!("x[{v}][{k}][{f}]"));
                ck.record(F::Activation, x - sol.x_vk[k][v], || format!("x[{v}][{k}][{f}] > x[{v}][{k}]"));
                if stage.delay_on(cloud.id).is_none() {
                    ck.record(F::Placement, x, || format!("function {f} of service {k} on node {}", cloud.id));
                }
            }
            ck.record(F::Placement, (total - 1.0).abs(), || format!("function {f} of service {k}"));
        }
        for e in 0..nl {
            ck.record(F::Integrality, frac(sol.z_ijk[k][e]), || format!("z[{e}][{k}]"));
            ck.record(F::Bounds, outside(sol.z_ijk[k][e]), || format!("z[{e}][{k}]"));
        }
    }

    for (v, cloud) in inst.cloud_nodes.iter().enumerate() {
        let mut load = 0.0;
        for (k, svc) in inst.services.iter().enumerate() {
            for f in 0..svc.chain_len() {
                load += svc.rates[f + 1] * sol.x_vks[k][f][v];
            }
        }
        ck.record(F::NodeCapacity, load - cloud.capacity * sol.y_v[v], || format!("node {}", cloud.id));
    }

    let mut link_load = vec![0.0; nl];
    for (k, svc) in inst.services.iter().enumerate() {
        let x_round = |v: usize, f: usize| sol.x_vks[k][f][v].round();
        for s in 0..=svc.chain_len() {
            let ends = flow::segment_ends(inst, sol, k, s);
            let mut split = 0.0;
            for p in 0..sol.paths {
                let z = &sol.z_ijksp[k][s][p];
                let r = &sol.r_ijksp[k][s][p];
                let rho = sol.path_fraction(k, s, p);
                split += rho;
                ck.record(F::Bounds, outside(rho), || format!("fraction ({k},{s},{p})"));
                for e in 0..nl {
                    ck.record(F::Integrality, frac(z[e]), || format!("z[{e}][{k}][{s}][{p}]"));
                    ck.record(F::Bounds, outside(z[e]).max(outside(r[e])), || format!("link {e} of ({k},{s},{p})"));
                    ck.record(F::RateCoupling, (r[e] - rho * z[e]).abs(), || format!("link {e} of ({k},{s},{p})"));
                    ck.record(F::LinkUse, z[e] - sol.z_ijk[k][e], || format!("link {e} on path ({k},{s},{p})"));
                    if sol.z_ijk[k][e] < 0.5 {
                        ck.record(F::LinkUse, r[e], || format!("link {e} carries ({k},{s},{p})"));
                    }
                    link_load[e] += svc.rates[s] * r[e];
                }
                let empty = z.iter().all(|&z| z < 0.5);
                if rho <= tol && empty {
                    continue;
                }
                for (i, &node) in inst.nodes.iter().enumerate() {
                    let div: f64 = topo.in_links[i].iter().map(|&e| z[e]).sum::<f64>()
                        - topo.out_links[i].iter().map(|&e| z[e]).sum::<f64>();
                    let b = flow_balance_rhs(inst, k, s, node).eval(x_round);
                    ck.record(F::FlowConservation, (div - b).abs(), || format!("node {node} on path ({k},{s},{p})"));
                }
            }
            if matches!(ends, Some((a, b)) if a != b) {
                ck.record(F::PathSplit, (split - 1.0).abs(), || format!("segment ({k},{s})"));
            }
        }
    }
    for (e, link) in inst.links.iter().enumerate() {
        ck.record(F::LinkCapacity, link_load[e] - link.capacity, || format!("link {}->{}", link.tail, link.head));
    }

    let mut delay = Vec::with_capacity(inst.services.len());
    let mut reliability = Vec::with_capacity(inst.services.len());
    for (k, svc) in inst.services.iter().enumerate() {
        let (d, r) = e2e_metrics(inst, sol, k);
        ck.record(F::Delay, d - svc.theta, || format!("service {k}"));
        ck.record(F::Reliability, svc.gamma.ln() - r.ln(), || format!("service {k}"));
        delay.push(d);
        reliability.push(r);
    }
    ValidationReport { families: ck.checks, delay, reliability, objective: sol.objective(inst), tol }
}

#[cfg(test)]
mod tests;
