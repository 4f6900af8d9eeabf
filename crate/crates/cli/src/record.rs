//! Result rows of `solve` and `bench`, and the per-method aggregates.

use std::io;

use serde::{Deserialize, Serialize};

/// Status strings that mean the run produced a usable value.
pub const FEASIBLE_STATUSES: [&str; 4] = ["optimal", "feasible", "solved", "iter-limit"];

/// Instance column of aggregate rows.
pub const AGGREGATE_INSTANCE: &str = "mean";
pub const AGGREGATE_STATUS: &str = "aggregate";

/// One row of the results CSV.
///
/// Per-run rows leave `feasible_count` empty. Aggregate rows carry the mean
/// of every numeric column over the runs of one method (empty cells are
/// skipped) and the number of runs with a feasible status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub method: String,
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub iterations: Option<f64>,
    pub columns: Option<f64>,
    pub milp_pricing: Option<f64>,
    pub wall_time: f64,
    pub seed: Option<u64>,
    /// Share of the integrality gap of the next weaker bound closed by
    /// this one: LP-I over NLP-L on `lp-i` rows, P-LP over LP-I on `p-lp`
    /// rows.
    pub gap_improvement: Option<f64>,
    pub feasible_count: Option<u64>,
}

impl RunRecord {
    pub fn new(instance: &str, method: &str, status: &str) -> Self {
        RunRecord {
            instance: instance.to_string(),
            method: method.to_string(),
            status: status.to_string(),
            objective: None,
            bound: None,
            iterations: None,
            columns: None,
            milp_pricing: None,
            wall_time: 0.0,
            seed: None,
            gap_improvement: None,
            feasible_count: None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        FEASIBLE_STATUSES.contains(&self.status.as_str())
    }

    pub fn is_aggregate(&self) -> bool {
        self.status == AGGREGATE_STATUS
    }
}

/// `(v_lp1 - v_nlpl) / (v_milp - v_nlpl)`, or `None` when the denominator
/// is not clearly positive.
pub fn gap_improvement(v_lp1: f64, v_nlpl: f64, v_milp: f64) -> Option<f64> {
    let denom = v_milp - v_nlpl;
    if !denom.is_finite() || denom <= 1e-9 * v_milp.abs().max(1.0) || !v_lp1.is_finite() {
        return None;
    }
    Some((v_lp1 - v_nlpl) / denom)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// One aggregate row per method, in order of first appearance.
pub fn aggregate(records: &[RunRecord]) -> Vec<RunRecord> {
    let mut methods: Vec<&str> = Vec::new();
    for r in records.iter().filter(|r| !r.is_aggregate()) {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| !r.is_aggregate() && r.method == m).collect();
            let mut agg = RunRecord::new(AGGREGATE_INSTANCE, m, AGGREGATE_STATUS);
            agg.objective = mean(rows.iter().map(|r| r.objective));
            agg.bound = mean(rows.iter().map(|r| r.bound));
            agg.iterations = mean(rows.iter().map(|r| r.iterations));
            agg.columns = mean(rows.iter().map(|r| r.columns));
            agg.milp_pricing = mean(rows.iter().map(|r| r.milp_pricing));
            agg.wall_time = mean(rows.iter().map(|r| Some(r.wall_time))).unwrap_or(0.0);
            agg.gap_improvement = mean(rows.iter().map(|r| r.gap_improvement));
            agg.feasible_count = Some(rows.iter().filter(|r| r.is_feasible()).count() as u64);
            agg
        })
        .collect()
}

pub fn write_csv<W: io::Write>(out: W, records: &[RunRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> csv::Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_improvement_examples() {
        assert!((gap_improvement(0.9, 0.5, 1.0).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(gap_improvement(0.5, 0.5, 1.0), Some(0.0));
        assert_eq!(gap_improvement(1.0, 0.5, 1.0), Some(1.0));
        assert_eq!(gap_improvement(1.0, 1.0, 1.0), None);
        assert_eq!(gap_improvement(1.0, 1.2, 1.0), None);
    }

    fn sample() -> Vec<RunRecord> {
        let mut a = RunRecord::new("i0", "milp", "optimal");
        a.objective = Some(1.25);
        a.bound = Some(1.25);
        a.iterations = Some(3.0);
        a.wall_time = 0.1;
        a.seed = Some(4);
        let mut b = RunRecord::new("i1", "milp", "infeasible");
        b.wall_time = 0.3;
        let mut c = RunRecord::new("i0", "lp-i", "optimal");
        c.objective = Some(0.1 + 0.2);
        c.gap_improvement = Some(1.0 / 3.0);
        c.wall_time = 1e-5;
        vec![a, b, c]
    }

    #[test]
    fn csv_round_trip() {
        let mut rows = sample();
        rows.extend(aggregate(&rows));
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn aggregates_skip_empty_cells() {
        let agg = aggregate(&sample());
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].method, "milp");
        assert_eq!(agg[0].objective, Some(1.25));
        assert!((agg[0].wall_time - 0.2).abs() < 1e-12);
        assert_eq!(agg[0].feasible_count, Some(1));
        assert_eq!(agg[1].gap_improvement, Some(1.0 / 3.0));
    }
}
