//! Model builders for the slicing problem and the mapping between model
//! columns and solution blocks.
//!
//! All builders minimize `Σ y_v + σ Σ λ_s r` and share the placement,
//! capacity, reliability and delay rows; they differ in how traffic is
//! routed. Reliability is linear in log space:
//! `Σ ln γ_v x_vk + Σ ln γ_ij z_ijk ≥ ln Γ^k`.

mod build;
mod index;
mod solution;

use std::collections::BTreeMap;
use std::fmt;

pub use build::{build_formulation, build_lp2, build_milp, build_minlp_linearized, relax};
pub use index::{FormulationKind, VarIndex, VarKey};
pub use solution::{extract_solution, SliceSolution, EXTRACT_INT_TOL};

use crate::lp::LpModel;
use crate::model::NetworkInstance;

/// Variable and row counts of a built model, by family.
#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub kind: FormulationKind,
    pub variables: Vec<(&'static str, usize)>,
    /// Row counts keyed by row family (the name up to its index list).
    pub rows: BTreeMap<String, usize>,
    pub num_vars: usize,
    pub num_rows: usize,
    pub binaries: usize,
    pub nonzeros: usize,
}

impl Census {
    pub fn of(model: &LpModel, index: &VarIndex) -> Census {
        let variables = index::FAMILIES
            .iter()
            .enumerate()
            .map(|(i, name)| (*name, index.family_range(i).len()))
            .collect();
        let mut rows = BTreeMap::new();
        for r in &model.rows {
            let fam = r.name.split('(').next().unwrap_or(&r.name).to_string();
            *rows.entry(fam).or_insert(0) += 1;
        }
        Census {
            kind: index.kind,
            variables,
            rows,
            num_vars: model.num_vars(),
            num_rows: model.num_rows(),
            binaries: model.vars.iter().filter(|v| v.integer).count(),
            nonzeros: model.rows.iter().map(|r| r.coeffs.len()).sum(),
        }
    }

    /// Closed-form `(variables, binaries)` of a formulation.
    ///
    /// With `V` cloud nodes, `L` links, `K` services, `F = Σ ℓ_k` chain
    /// positions, `S = Σ (ℓ_k + 1)` segments and path budget `P`:
    ///
    /// * MILP: `V + VK + VF + LK + 2·L·S·P + S` variables, of which
    ///   `V + VK + VF + LK + L·S·P` are binary;
    /// * linearized MINLP: the MILP count plus `S·P` path fractions;
    /// * aggregated LP: `V + VK + VF + LK + L·S + S`, none binary.
    pub fn predicted(inst: &NetworkInstance, kind: FormulationKind) -> (usize, usize) {
        let v = inst.cloud_nodes.len();
        let l = inst.links.len();
        let k = inst.services.len();
        let f: usize = inst.services.iter().map(|s| s.chain_len()).sum();
        let s = f + k;
        let p = inst.paths;
        let base = v + v * k + v * f + l * k;
        match kind {
            FormulationKind::Milp => (base + 2 * l * s * p + s, base + l * s * p),
            FormulationKind::MinlpLinearized => (base + 2 * l * s * p + s + s * p, base + l * s * p),
            FormulationKind::Lp2 => (base + l * s + s, 0),
        }
    }
}

impl fmt::Display for Census {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model {}: {} variables ({} binary), {} rows, {} nonzeros",
            self.kind.name(), self.num_vars, self.binaries, self.num_rows, self.nonzeros)?;
        writeln!(f, "variables:")?;
        for (name, n) in self.variables.iter().filter(|(_, n)| *n > 0) {
            writeln!(f, "  {name:<10} {n}")?;
        }
        writeln!(f, "rows:")?;
        for (name, n) in &self.rows {
            writeln!(f, "  {name:<10} {n}")?;
        }
        Ok(())
    }
}
