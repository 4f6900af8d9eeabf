use std::collections::HashSet;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{build_milp, SliceSolution};
use crate::model::NetworkInstance;

/// Where a pattern came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternSource {
    /// Single-service MILP solved before the master loop.
    Init,
    /// Integral point recovered from the compact pricing LP.
    LpRecovered,
    /// Pricing MILP.
    Milp,
}

impl fmt::Display for PatternSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternSource::Init => "init",
            PatternSource::LpRecovered => "lp-recovered",
            PatternSource::Milp => "milp",
        })
    }
}

/// One complete embedding of a single service, with the aggregates the
/// master problem prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub service: usize,
    /// 1 where a cloud node hosts some function of the service.
    pub chi: Vec<f64>,
    /// Rate processed per cloud node, `Σ_s λ_s x_vks`.
    pub rate_v: Vec<f64>,
    /// Rate carried per link, `Σ_s λ_s Σ_p r_ijksp`.
    pub rate_ij: Vec<f64>,
    /// Master iteration that produced the pattern (0 for initial columns).
    pub iteration: usize,
    pub source: PatternSource,
    /// The service block as a solution of the single-service instance.
    pub embedding: SliceSolution,
}

/// Residual allowed when checking an embedding against its service rows.
const EMBED_TOL: f64 = 1e-6;

/// Aggregates of a single-service embedding.
///
/// `block` is a solution of `inst.with_services(&[k])`; it is checked
/// against every row of that instance's MILP before use.
pub fn pattern_from_solution(
    inst: &NetworkInstance,
    k: usize,
    block: &SliceSolution,
    iteration: usize,
    source: PatternSource,
) -> Result<Pattern> {
    if k >= inst.services.len() {
        return Err(Error::Precondition(format!("service {k} out of range")));
    }
    let sub = inst.with_services(&[k]);
    if block.num_services() != 1 || block.y_v.len() != inst.cloud_nodes.len() {
        return Err(Error::Precondition("embedding is not a single-service block of this instance".into()));
    }
    let (model, idx) = build_milp(&sub);
    let values = block.pack(&idx);
    let (name, res) = worst_row(&model, &values);
    if res > EMBED_TOL {
        return Err(Error::Precondition(format!("embedding of service {k} violates {name} by {res:e}")));
    }
    if !block.is_integral(EMBED_TOL) {
        return Err(Error::Precondition(format!("embedding of service {k} is fractional")));
    }
    Ok(aggregate(inst, k, block, iteration, source))
}

fn aggregate(
    inst: &NetworkInstance,
    k: usize,
    block: &SliceSolution,
    iteration: usize,
    source: PatternSource,
) -> Pattern {
    let svc = &inst.services[k];
    let nv = inst.cloud_nodes.len();
    let mut rate_v = vec![0.0; nv];
    for (f, row) in block.x_vks[0].iter().enumerate() {
        for v in 0..nv {
            rate_v[v] += svc.rates[f + 1] * row[v];
        }
    }
    let mut rate_ij = vec![0.0; inst.links.len()];
    for (s, per_path) in block.r_ijksp[0].iter().enumerate() {
        for rates in per_path {
            for (e, r) in rates.iter().enumerate() {
                rate_ij[e] += svc.rates[s] * r;
            }
        }
    }
    Pattern {
        service: k,
        chi: block.x_vk[0].iter().map(|x| x.round()).collect(),
        rate_v,
        rate_ij,
        iteration,
        source,
        embedding: block.clone(),
    }
}

/// Name and residual of the most violated row or bound.
pub(crate) fn worst_row(model: &crate::lp::LpModel, x: &[f64]) -> (String, f64) {
    let mut worst = ("variable bounds".to_string(), 0.0);
    for (v, &xi) in model.vars.iter().zip(x) {
        worst.1 = f64::max(worst.1, (v.lower - xi).max(xi - v.upper));
    }
    for r in &model.rows {
        let v = r.violation(x);
        if v > worst.1 {
            worst = (r.name.clone(), v);
        }
    }
    worst
}

impl Pattern {
    /// Objective coefficient of the pattern's master column, `σ Σ R_ij`.
    pub fn cost(&self, sigma: f64) -> f64 {
        sigma * self.rate_ij.iter().sum::<f64>()
    }

    /// Hash of `(service, χ, R_v, R_ij)` rounded to 1e-9.
    pub fn key(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.service.hash(&mut h);
        for v in self.chi.iter().chain(&self.rate_v).chain(&self.rate_ij) {
            ((v * 1e9).round() as i64).hash(&mut h);
        }
        h.finish()
    }
}

/// The per-service pattern subsets of the restricted master.
#[derive(Debug, Clone, Default)]
pub struct ColumnPool {
    patterns: Vec<Vec<Pattern>>,
    /// `(service, index)` in insertion order, which is also the order of the
    /// master's pattern columns.
    order: Vec<(usize, usize)>,
    keys: HashSet<u64>,
}

impl ColumnPool {
    pub fn new(num_services: usize) -> Self {
        ColumnPool { patterns: vec![Vec::new(); num_services], order: Vec::new(), keys: HashSet::new() }
    }

    /// Adds `pattern` unless an equal one is pooled. Returns whether it was
    /// added.
    pub fn insert(&mut self, pattern: Pattern) -> bool {
        if !self.keys.insert(pattern.key()) {
            return false;
        }
        let k = pattern.service;
        self.order.push((k, self.patterns[k].len()));
        self.patterns[k].push(pattern);
        true
    }

    pub fn contains(&self, pattern: &Pattern) -> bool {
        self.keys.contains(&pattern.key())
    }

    pub fn num_services(&self) -> usize {
        self.patterns.len()
    }

    pub fn service(&self, k: usize) -> &[Pattern] {
        &self.patterns[k]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Pooled patterns per service.
    pub fn counts(&self) -> Vec<usize> {
        self.patterns.iter().map(Vec::len).collect()
    }

    /// Patterns in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Pattern> + '_ {
        self.order.iter().map(|&(k, c)| &self.patterns[k][c])
    }
}
