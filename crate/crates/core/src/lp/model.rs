use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.relation {
            Relation::Le => (act - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A linear program with optional integrality marks.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub sense: Sense,
    pub vars: Vec<Variable>,
    pub rows: Vec<Constraint>,
    /// Constant added to the objective.
    pub offset: f64,
}

impl LpModel {
    pub fn new(sense: Sense) -> Self {
        LpModel { sense, vars: Vec::new(), rows: Vec::new(), offset: 0.0 }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.vars.push(Variable { name: name.into(), lower, upper, cost, integer: false });
        self.vars.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.vars.push(Variable { name: name.into(), lower: 0.0, upper: 1.0, cost, integer: true });
        self.vars.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.rows.push(Constraint { name: name.into(), coeffs, relation, rhs });
        self.rows.len() - 1
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.offset + self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum::<f64>()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn check(&self) -> Result<()> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(Error::Model(format!("variable {} has NaN data", v.name)));
            }
            if v.lower > v.upper {
                return Err(Error::Model(format!(
                    "variable {j} ({}) has lower {} > upper {}",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::Model(format!("variable {} has an empty domain", v.name)));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(Error::Model(format!("row {} has a non-finite rhs", r.name)));
            }
            for &(j, a) in &r.coeffs {
                if j >= self.vars.len() {
                    return Err(Error::Model(format!("row {} references variable {j}", r.name)));
                }
                if !a.is_finite() {
                    return Err(Error::Model(format!("row {} has a non-finite coefficient", r.name)));
                }
            }
        }
        Ok(())
    }

    /// Human-readable algebraic listing, one constraint per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, first: bool, c: f64, name: &str| {
            if first {
                let _ = write!(out, " {} {}", fmt_num(c), name);
            } else if c < 0.0 {
                let _ = write!(out, " - {} {}", fmt_num(-c), name);
            } else {
                let _ = write!(out, " + {} {}", fmt_num(c), name);
            }
        };
        out.push_str(match self.sense {
            Sense::Min => "minimize\n  obj:",
            Sense::Max => "maximize\n  obj:",
        });
        let mut first = true;
        for v in self.vars.iter().filter(|v| v.cost != 0.0) {
            term(&mut out, first, v.cost, &v.name);
            first = false;
        }
        if self.offset != 0.0 || first {
            term(&mut out, first, self.offset, "");
        }
        out.push_str("\nsubject to\n");
        for r in &self.rows {
            let _ = write!(out, "  {}:", r.name);
            let mut first = true;
            for &(j, a) in &r.coeffs {
                term(&mut out, first, a, &self.vars[j].name);
                first = false;
            }
            if first {
                out.push_str(" 0");
            }
            let _ = writeln!(out, " {} {}", r.relation.symbol(), fmt_num(r.rhs));
        }
        out.push_str("bounds\n");
        for v in &self.vars {
            let _ = writeln!(out, "  {} <= {} <= {}", fmt_num(v.lower), v.name, fmt_num(v.upper));
        }
        let ints: Vec<&str> = self.vars.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
        if !ints.is_empty() {
            out.push_str("general\n");
            for name in ints {
                let _ = writeln!(out, "  {name}");
            }
        }
        out.push_str("end\n");
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_lists_rows() {
        let mut m = LpModel::new(Sense::Min);
        let x = m.add_var("x", 0.0, 1.0, -1.0);
        let y = m.add_binary("y", -1.0);
        m.add_row("cap", vec![(x, 1.0), (y, -2.5)], Relation::Le, 1.0);
        let text = m.dump();
        assert!(text.contains("obj: -1 x - 1 y"));
        assert!(text.contains("cap: 1 x - 2.5 y <= 1"));
        assert!(text.contains("general\n  y\n"));
    }

    #[test]
    fn check_rejects_bad_models() {
        let mut m = LpModel::new(Sense::Min);
        m.add_var("x", 2.0, 1.0, 0.0);
        assert!(m.check().is_err());
        let mut m = LpModel::new(Sense::Min);
        m.add_var("x", 0.0, 1.0, 0.0);
        m.add_row("r", vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(m.check().is_err());
    }
}
