use serde::{Deserialize, Serialize};

use super::index::{FormulationKind, VarIndex};
use crate::error::{Error, Result};
use crate::model::NetworkInstance;

/// Variable blocks of a (possibly fractional) slicing solution.
///
/// Layout: `y_v[v]`, `x_vk[k][v]`, `x_vks[k][f][v]`, `z_ijk[k][link]`,
/// `z_ijksp[k][s][p][link]`, `r_ijksp[k][s][p][link]`, `r_ksp[k][s][p]`,
/// `theta_ks[k][s]`, where `v` indexes `cloud_nodes`, `link` indexes `links`
/// and `f` is the 0-based chain position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSolution {
    pub paths: usize,
    pub y_v: Vec<f64>,
    pub x_vk: Vec<Vec<f64>>,
    pub x_vks: Vec<Vec<Vec<f64>>>,
    pub z_ijk: Vec<Vec<f64>>,
    pub z_ijksp: Vec<Vec<Vec<Vec<f64>>>>,
    pub r_ijksp: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ksp: Option<Vec<Vec<Vec<f64>>>>,
    pub theta_ks: Vec<Vec<f64>>,
}

impl SliceSolution {
    pub fn zeros(inst: &NetworkInstance) -> Self {
        let nv = inst.cloud_nodes.len();
        let nl = inst.links.len();
        let p = inst.paths;
        let seg = |l: usize| vec![vec![vec![0.0; nl]; p]; l + 1];
        SliceSolution {
            paths: p,
            y_v: vec![0.0; nv],
            x_vk: inst.services.iter().map(|_| vec![0.0; nv]).collect(),
            x_vks: inst.services.iter().map(|s| vec![vec![0.0; nv]; s.chain_len()]).collect(),
            z_ijk: inst.services.iter().map(|_| vec![0.0; nl]).collect(),
            z_ijksp: inst.services.iter().map(|s| seg(s.chain_len())).collect(),
            r_ijksp: inst.services.iter().map(|s| seg(s.chain_len())).collect(),
            r_ksp: None,
            theta_ks: inst.services.iter().map(|s| vec![0.0; s.chain_len() + 1]).collect(),
        }
    }

    pub fn num_services(&self) -> usize {
        self.x_vk.len()
    }

    /// `Σ y_v + σ Σ λ_s r_ijksp`.
    pub fn objective(&self, inst: &NetworkInstance) -> f64 {
        self.y_v.iter().sum::<f64>() + inst.sigma * self.routed_rate(inst)
    }

    /// Total link capacity consumption `Σ λ_s r_ijksp`.
    pub fn routed_rate(&self, inst: &NetworkInstance) -> f64 {
        let mut total = 0.0;
        for (k, svc) in inst.services.iter().enumerate() {
            for (s, per_path) in self.r_ijksp[k].iter().enumerate() {
                let sum: f64 = per_path.iter().flatten().sum();
                total += svc.rates[s] * sum;
            }
        }
        total
    }

    /// Whether every indicator family is within `tol` of 0 or 1.
    pub fn is_integral(&self, tol: f64) -> bool {
        let near = |v: &f64| (v - v.round()).abs() <= tol;
        self.y_v.iter().all(near)
            && self.x_vk.iter().flatten().all(near)
            && self.x_vks.iter().flatten().flatten().all(near)
            && self.z_ijk.iter().flatten().all(near)
            && self.z_ijksp.iter().flatten().flatten().flatten().all(near)
    }

    /// Values in the column order of `index`. Aggregated models receive
    /// `Σ_p r_ijksp` as their rate variable.
    pub fn pack(&self, index: &VarIndex) -> Vec<f64> {
        let mut out = vec![0.0; index.num_vars()];
        for v in 0..index.num_cloud {
            out[index.y(v)] = self.y_v[v];
        }
        for k in 0..index.num_services() {
            for v in 0..index.num_cloud {
                out[index.x_vk(v, k)] = self.x_vk[k][v];
                for f in 0..index.chain[k] {
                    out[index.x_vks(v, k, f)] = self.x_vks[k][f][v];
                }
            }
            for e in 0..index.num_links {
                out[index.z_ijk(e, k)] = self.z_ijk[k][e];
            }
            for s in 0..=index.chain[k] {
                out[index.theta(k, s)] = self.theta_ks[k][s];
                for e in 0..index.num_links {
                    if index.has_path_links() {
                        for p in 0..index.paths {
                            out[index.z_ijksp(e, k, s, p)] = self.z_ijksp[k][s][p][e];
                            out[index.r(e, k, s, p)] = self.r_ijksp[k][s][p][e];
                        }
                    } else {
                        out[index.r(e, k, s, 0)] = (0..self.paths).map(|p| self.r_ijksp[k][s][p][e]).sum();
                    }
                }
                if index.has_path_split() {
                    for p in 0..index.paths {
                        out[index.r_ksp(k, s, p)] = self.path_fraction(k, s, p);
                    }
                }
            }
        }
        out
    }

    /// `r_ksp` when stored, otherwise the largest link rate of the path.
    pub fn path_fraction(&self, k: usize, s: usize, p: usize) -> f64 {
        match &self.r_ksp {
            Some(r) => r[k][s][p],
            None => self.r_ijksp[k][s][p].iter().copied().fold(0.0, f64::max),
        }
    }

    /// The block of service `k` as a solution of the single-service
    /// instance `inst.with_services(&[k])`, with `y_v = x_vk`.
    pub fn service_block(&self, k: usize) -> SliceSolution {
        SliceSolution {
            paths: self.paths,
            y_v: self.x_vk[k].clone(),
            x_vk: vec![self.x_vk[k].clone()],
            x_vks: vec![self.x_vks[k].clone()],
            z_ijk: vec![self.z_ijk[k].clone()],
            z_ijksp: vec![self.z_ijksp[k].clone()],
            r_ijksp: vec![self.r_ijksp[k].clone()],
            r_ksp: self.r_ksp.as_ref().map(|r| vec![r[k].clone()]),
            theta_ks: vec![self.theta_ks[k].clone()],
        }
    }

    /// Writes a single-service block into service `k`; `y_v` is raised to
    /// cover the block's node use.
    pub fn set_service_block(&mut self, k: usize, block: &SliceSolution) {
        self.x_vk[k] = block.x_vk[0].clone();
        self.x_vks[k] = block.x_vks[0].clone();
        self.z_ijk[k] = block.z_ijk[0].clone();
        self.z_ijksp[k] = block.z_ijksp[0].clone();
        self.r_ijksp[k] = block.r_ijksp[0].clone();
        self.theta_ks[k] = block.theta_ks[0].clone();
        if let (Some(all), Some(b)) = (self.r_ksp.as_mut(), block.r_ksp.as_ref()) {
            all[k] = b[0].clone();
        }
        for (y, x) in self.y_v.iter_mut().zip(&block.x_vk[0]) {
            *y = y.max(*x);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// Tolerance used to snap indicator values onto {0, 1} during extraction.
pub const EXTRACT_INT_TOL: f64 = 1e-6;

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn snap(v: f64) -> f64 {
    let v = clamp01(v);
    if (v - v.round()).abs() <= EXTRACT_INT_TOL {
        v.round()
    } else {
        v
    }
}

/// Maps a primal vector of the model described by `index` to semantic
/// blocks. Fractions are clamped to `[0, 1]`, indicators within 1e-6 of an
/// integer are snapped and delays clamped at 0. For the aggregated LP the
/// rate is placed on path 0 and every per-path indicator is set to the
/// aggregated rate, with the path split `(1, 0, ..)`.
pub fn extract_solution(index: &VarIndex, values: &[f64]) -> Result<SliceSolution> {
    if values.len() != index.num_vars() {
        return Err(Error::LengthMismatch { expected: index.num_vars(), got: values.len() });
    }
    let nv = index.num_cloud;
    let nl = index.num_links;
    let pp = index.paths;
    let mut sol = SliceSolution {
        paths: pp,
        y_v: (0..nv).map(|v| snap(values[index.y(v)])).collect(),
        x_vk: Vec::new(),
        x_vks: Vec::new(),
        z_ijk: Vec::new(),
        z_ijksp: Vec::new(),
        r_ijksp: Vec::new(),
        r_ksp: None,
        theta_ks: Vec::new(),
    };
    let mut split = Vec::new();
    for (k, &l) in index.chain.iter().enumerate() {
        sol.x_vk.push((0..nv).map(|v| snap(values[index.x_vk(v, k)])).collect());
        sol.x_vks.push((0..l).map(|f| (0..nv).map(|v| snap(values[index.x_vks(v, k, f)])).collect()).collect());
        sol.z_ijk.push((0..nl).map(|e| snap(values[index.z_ijk(e, k)])).collect());
        sol.theta_ks.push((0..=l).map(|s| values[index.theta(k, s)].max(0.0)).collect());
        let mut zk = Vec::with_capacity(l + 1);
        let mut rk = Vec::with_capacity(l + 1);
        let mut sk = Vec::with_capacity(l + 1);
        for s in 0..=l {
            match index.kind {
                FormulationKind::Lp2 => {
                    let agg: Vec<f64> = (0..nl).map(|e| clamp01(values[index.r(e, k, s, 0)])).collect();
                    let mut r = vec![vec![0.0; nl]; pp];
                    r[0] = agg.clone();
                    zk.push(vec![agg; pp]);
                    rk.push(r);
                    let mut frac = vec![0.0; pp];
                    frac[0] = 1.0;
                    sk.push(frac);
                }
                _ => {
                    zk.push((0..pp).map(|p| (0..nl).map(|e| snap(values[index.z_ijksp(e, k, s, p)])).collect()).collect());
                    rk.push((0..pp).map(|p| (0..nl).map(|e| clamp01(values[index.r(e, k, s, p)])).collect()).collect());
                    if index.has_path_split() {
                        sk.push((0..pp).map(|p| clamp01(values[index.r_ksp(k, s, p)])).collect());
                    }
                }
            }
        }
        sol.z_ijksp.push(zk);
        sol.r_ijksp.push(rk);
        split.push(sk);
    }
    if index.kind != FormulationKind::Milp {
        sol.r_ksp = Some(split);
    }
    Ok(sol)
}
