//! Batch runs over a set of instance files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nsopt::{load_instance, NetworkInstance};
use rayon::prelude::*;

use crate::record::{aggregate, gap_improvement, RunRecord};
use crate::runner::{run_methods, Method, SolveOptions};

/// Expands glob patterns into a sorted, duplicate-free file list. A pattern
/// that names an existing directory stands for the `*.json` files in it.
pub fn expand_patterns(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for pat in patterns {
        let pat = if Path::new(pat).is_dir() { format!("{}/*.json", pat.trim_end_matches('/')) } else { pat.clone() };
        for entry in glob::glob(&pat).with_context(|| format!("bad pattern {pat}"))? {
            let path = entry?;
            if path.is_file() {
                files.push(path);
            }
        }
    }
    files.sort();
    files.dedup();
    if files.is_empty() {
        bail!("no instance files match {}", patterns.join(" "));
    }
    Ok(files)
}

pub fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Reads an instance and applies the optional `sigma` and path-budget
/// overrides.
pub fn read_instance(path: &Path, sigma: Option<f64>, paths: Option<usize>) -> Result<NetworkInstance> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut inst = load_instance(&bytes).with_context(|| format!("cannot load {}", path.display()))?;
    if let Some(s) = sigma {
        inst.sigma = s;
    }
    if let Some(p) = paths {
        inst.paths = p;
    }
    inst.validate().with_context(|| format!("invalid instance {}", path.display()))?;
    Ok(inst)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub solve: SolveOptions,
    pub sigma: Option<f64>,
    pub paths: Option<usize>,
    pub jobs: usize,
}

/// Extra runs the gap columns need but the user did not ask for.
fn helpers(methods: &[Method]) -> Vec<Method> {
    let mut extra = Vec::new();
    if methods.contains(&Method::Milp) {
        if methods.contains(&Method::LpI) && !methods.contains(&Method::NlpL) {
            extra.push(Method::NlpL);
        }
        if methods.contains(&Method::PLp) && !methods.contains(&Method::LpI) {
            extra.push(Method::LpI);
        }
    }
    extra
}

fn bench_instance(path: &Path, cfg: &BenchConfig) -> Vec<RunRecord> {
    let id = instance_id(path);
    let inst = match read_instance(path, cfg.sigma, cfg.paths) {
        Ok(inst) => inst,
        Err(e) => {
            log::warn!("{id}: {e:#}");
            return cfg.methods.iter().map(|m| RunRecord::new(&id, m.name(), "error")).collect();
        }
    };
    let extra = helpers(&cfg.methods);
    let all: Vec<Method> = cfg.methods.iter().chain(&extra).copied().collect();
    let mut records: Vec<RunRecord> = all
        .iter()
        .zip(run_methods(&inst, &id, &all, &cfg.solve))
        .map(|(m, r)| match r {
            Ok(run) => run.record,
            Err(e) => {
                log::warn!("{id} {}: {e:#}", m.name());
                let mut rec = RunRecord::new(&id, m.name(), "error");
                rec.seed = inst.seed;
                rec
            }
        })
        .collect();

    let value = |name: &str, records: &[RunRecord]| {
        records.iter().find(|r| r.method == name && r.status == "optimal").and_then(|r| r.objective)
    };
    if let Some(milp) = value("milp", &records) {
        let lp1 = value("lp-i", &records);
        let nlpl = value("nlp-l", &records);
        let plp = value("p-lp", &records);
        for r in &mut records {
            r.gap_improvement = match (r.method.as_str(), lp1, nlpl, plp) {
                ("lp-i", Some(lp1), Some(nlpl), _) => gap_improvement(lp1, nlpl, milp),
                ("p-lp", Some(lp1), _, Some(plp)) => gap_improvement(plp, lp1, milp),
                _ => None,
            };
        }
    }
    records.truncate(cfg.methods.len());
    records
}

/// Per-instance records in file order followed by one aggregate row per
/// method.
pub fn run_bench(files: &[PathBuf], cfg: &BenchConfig) -> Result<Vec<RunRecord>> {
    let per_instance: Vec<Vec<RunRecord>> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?;
        pool.install(|| files.par_iter().map(|f| bench_instance(f, cfg)).collect())
    } else {
        files.iter().map(|f| bench_instance(f, cfg)).collect()
    };
    let mut rows: Vec<RunRecord> = per_instance.into_iter().flatten().collect();
    let agg = aggregate(&rows);
    rows.extend(agg);
    Ok(rows)
}
