//! Network slicing with end-to-end delay and reliability guarantees and
//! multipath traffic routing.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: substrate network, services, instance I/O and a random generator.
//! * [`lp`]: a bounded-variable revised simplex solver with duals and Farkas rays.
//! * [`milp`]: LP-based branch-and-bound on top of [`lp`].
//! * [`formulations`]: builders for the compact MILP, the linearized MINLP and
//!   the aggregated LP relaxation, plus solution extraction.
//! * [`pricing`]: per-service pricing problems for column generation.
//! * [`ccg`]: the two-stage column generation heuristic.
//! * [`validate`]: an independent solution checker, flow decomposition and
//!   cycle stripping.

pub mod ccg;
pub mod error;
pub mod formulations;
pub mod lp;
pub mod milp;
pub mod model;
pub mod pricing;
pub mod validate;

pub use error::{Error, Result};

pub use ccg::{run_ccg, CcgParams, CcgResult, CcgStatus, ColumnPool, Pattern, PatternSource};
pub use formulations::{
    build_lp2, build_milp, build_minlp_linearized, extract_solution, relax, Census,
    FormulationKind, SliceSolution, VarIndex,
};
pub use lp::{solve_lp, verify_duality, LpModel, LpOutcome, LpParams, LpStatus, Relation, Sense};
pub use milp::{solve_milp, MilpParams, MilpResult, MilpStatus};
pub use model::{
    generate_instance, load_instance, shortest_path_metrics, CloudNode, FunctionStage,
    GeneratorConfig, Link, NetworkInstance, NodeId, ServiceRequest,
};
pub use pricing::{find_pattern, DualPrices, PricingOutcome};
pub use validate::{
    decompose_flow, e2e_metrics, strip_cycles, validate_solution, ConstraintFamily,
    FlowDecomposition, ValidationReport,
};
