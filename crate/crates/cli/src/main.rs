use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nsopt::{
    build_lp2, build_milp, build_minlp_linearized, generate_instance, relax, strip_cycles, validate_solution, Census,
    GeneratorConfig, SliceSolution,
};
use nsopt_cli::bench::{expand_patterns, instance_id, read_instance, run_bench, BenchConfig};
use nsopt_cli::{run_method, write_csv, Method, SolveOptions};

/// Exit code of `validate` when the solution breaks a constraint.
const EXIT_INVALID: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "nsopt", version, about = "QoS-aware multipath network slicing optimizer")]
struct Cli {
    /// Generator seed (first seed in batch mode).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit per solve, in seconds.
    #[arg(long, global = true, default_value_t = 1800.0)]
    time_limit: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    #[arg(long, global = true, default_value_t = 1e-6)]
    gap_tol: f64,
    /// Routing cost weight; overrides the instance value [generator default: 0.0005].
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Paths per segment; overrides the instance value [generator default: 2].
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Column generation iteration cap.
    #[arg(long, global = true, default_value_t = 100)]
    iter_max: usize,
    /// Print solver progress to stderr.
    #[arg(long, global = true)]
    trace: bool,
    /// Print variable and row counts of the built model to stderr.
    #[arg(long, global = true)]
    census: bool,
    /// Instances solved in parallel by `bench`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate random instances.
    Generate {
        /// JSON generator config; the count flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        arcs: Option<usize>,
        #[arg(long)]
        clouds: Option<usize>,
        #[arg(long)]
        services: Option<usize>,
        #[arg(long)]
        chain_length: Option<usize>,
        /// Number of instances, with seeds seed..seed+count-1.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output file, or directory when count > 1; stdout if omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Solve one instance and print its run record as CSV.
    Solve {
        instance: PathBuf,
        #[arg(long, short, value_enum)]
        method: Method,
        /// Where to write the solution (integral methods only).
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Where to write the record; stdout if omitted.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Check a solution against every constraint family.
    Validate {
        instance: PathBuf,
        solution: PathBuf,
        /// Remove flow cycles before checking.
        #[arg(long)]
        strip_cycles: bool,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Solve every matching instance with every method and write a CSV.
    Bench {
        /// Instance files, glob patterns or directories.
        #[arg(required = true)]
        instances: Vec<String>,
        #[arg(long, short, value_enum, value_delimiter = ',', required = true)]
        methods: Vec<Method>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print a formulation in algebraic form.
    DumpModel {
        instance: PathBuf,
        #[arg(long, short, value_enum, default_value = "milp")]
        formulation: ModelKind,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelKind {
    Milp,
    MinlpLin,
    LpI,
    LpII,
    NlpL,
}

/// Errors caused by the invocation rather than by a solver.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: impl fmt::Display) -> anyhow::Error {
    UsageError(format!("{e:#}")).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<UsageError>() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if !(cli.time_limit > 0.0) || !(cli.gap_tol >= 0.0) || cli.jobs == 0 {
        return Err(usage("--time-limit and --jobs must be positive, --gap-tol nonnegative"));
    }
    let solve = SolveOptions {
        time_limit: Duration::from_secs_f64(cli.time_limit),
        gap_tol: cli.gap_tol,
        iter_max: cli.iter_max,
    };
    match &cli.command {
        Command::Generate { config, nodes, arcs, clouds, services, chain_length, count, out } => {
            let mut cfg = match config {
                Some(p) => {
                    let text = fs::read(p).with_context(|| format!("cannot read {}", p.display())).map_err(usage)?;
                    serde_json::from_slice(&text).map_err(usage)?
                }
                None => match (nodes, arcs, clouds, services) {
                    (Some(n), Some(a), Some(c), Some(s)) => GeneratorConfig::new(*n, *a, *c, *s),
                    _ => return Err(usage("give --config or all of --nodes, --arcs, --clouds, --services")),
                },
            };
            let overrides = [(nodes, &mut cfg.num_nodes), (arcs, &mut cfg.num_arcs), (clouds, &mut cfg.num_cloud)];
            for (flag, field) in overrides {
                if let Some(v) = flag {
                    *field = *v;
                }
            }
            if let Some(v) = services {
                cfg.num_services = *v;
            }
            if let Some(v) = chain_length {
                cfg.chain_length = *v;
            }
            if let Some(v) = cli.sigma {
                cfg.sigma = v;
            }
            if let Some(v) = cli.paths {
                cfg.paths = v;
            }
            generate(&cfg, cli.seed, *count, out.as_deref())?;
            Ok(0)
        }
        Command::Solve { instance, method, solution, record } => {
            let inst = read_instance(instance, cli.sigma, cli.paths).map_err(usage)?;
            let run = run_method(&inst, &instance_id(instance), *method, &solve)?;
            if cli.census {
                if let Some(c) = &run.census {
                    eprint!("{c}");
                }
            }
            if cli.trace {
                for line in &run.trace {
                    eprintln!("{line}");
                }
            }
            if let Some(path) = solution {
                match &run.solution {
                    Some(sol) => write_file(path, &sol.to_json())?,
                    None => log::warn!("{} produced no solution; {} not written", method.name(), path.display()),
                }
            }
            let records = [run.record];
            match record {
                Some(path) => write_csv(create(path)?, &records)?,
                None => write_csv(io::stdout().lock(), &records)?,
            }
            Ok(0)
        }
        Command::Validate { instance, solution, strip_cycles: strip, json } => {
            let inst = read_instance(instance, cli.sigma, cli.paths).map_err(usage)?;
            let bytes = fs::read(solution).with_context(|| format!("cannot read {}", solution.display())).map_err(usage)?;
            let mut sol = SliceSolution::from_json(&bytes).map_err(usage)?;
            if *strip {
                sol = strip_cycles(&inst, &sol)?;
            }
            let report = validate_solution(&inst, &sol);
            if *json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
            Ok(if report.passed() { 0 } else { EXIT_INVALID })
        }
        Command::Bench { instances, methods, out } => {
            let files = expand_patterns(instances).map_err(usage)?;
            let mut unique: Vec<Method> = Vec::new();
            for m in methods {
                if !unique.contains(m) {
                    unique.push(*m);
                }
            }
            let cfg = BenchConfig { methods: unique, solve, sigma: cli.sigma, paths: cli.paths, jobs: cli.jobs };
            let rows = run_bench(&files, &cfg)?;
            write_csv(create(out)?, &rows)?;
            let failed = rows.iter().filter(|r| r.status == "error").count();
            eprintln!("{} instances, {} records, {} failed runs -> {}", files.len(), rows.len(), failed, out.display());
            Ok(0)
        }
        Command::DumpModel { instance, formulation, out } => {
            let inst = read_instance(instance, cli.sigma, cli.paths).map_err(usage)?;
            let (model, index) = match formulation {
                ModelKind::Milp | ModelKind::LpI => build_milp(&inst),
                ModelKind::MinlpLin | ModelKind::NlpL => build_minlp_linearized(&inst),
                ModelKind::LpII => build_lp2(&inst),
            };
            if cli.census {
                eprint!("{}", Census::of(&model, &index));
            }
            let model = match formulation {
                ModelKind::LpI | ModelKind::NlpL => relax(&model),
                _ => model,
            };
            match out {
                Some(path) => write_file(path, &model.dump())?,
                None => io::stdout().lock().write_all(model.dump().as_bytes())?,
            }
            Ok(0)
        }
    }
}

fn generate(cfg: &GeneratorConfig, seed: u64, count: u64, out: Option<&Path>) -> Result<()> {
    if count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    if count == 1 {
        let inst = generate_instance(cfg, seed).map_err(usage)?;
        return match out {
            Some(path) => write_file(path, &inst.to_json()),
            None => Ok(println!("{}", inst.to_json())),
        };
    }
    let dir = out.ok_or_else(|| usage("batch mode needs --out DIR"))?;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for s in seed..seed + count {
        let inst = generate_instance(cfg, s).map_err(usage)?;
        write_file(&dir.join(format!("instance-{s}.json")), &inst.to_json())?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
