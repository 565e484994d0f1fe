//! Online mirror descent with machine-checked dual certificates.
//!
//! The crate runs mirror-descent trajectories over linear costs on a convex
//! body, mechanically constructs a dual solution to the matching offline
//! program from the trajectory, verifies that solution against the program's
//! constraints, and reports the resulting performance bounds. Every bound
//! the library claims is backed by a feasibility check and a weak-duality
//! comparison that execute on each run.

pub mod body;
pub mod certificate;
pub mod config;
pub mod engine;
pub mod error;
pub mod norm;
pub mod oracle;
pub mod pipeline;
pub mod projection;
pub mod regularizer;
pub mod report;
pub mod serialize;
pub mod vector;

pub use body::Body;
pub use config::{parse_cost_model, ComparatorSpec, OutputFormat, ResolvedRun, RunConfig, Setting};
pub use certificate::{
    build_drift_expert, build_oco_pball, build_onela_2ball, build_onela_mts, check_feasibility,
    check_feasibility_with_tol, shift_for_cap, weak_duality_gap, DualCertificate,
    FeasibilityReport, ProgramFamily, Violation, DEFAULT_FEASIBILITY_TOL,
};
pub use engine::{
    omd_step, run, service_decomposition, Lookahead, Scenario, ServiceDecomposition, Trace,
    TraceStep,
};
pub use error::{Error, Result};
pub use norm::{dual_exponent, holder_gap, norm, NormSpec};
pub use oracle::{
    euclidean_project_body, gen_comparator_path, gen_costs, linear_minimizer, measured_drift,
    offline_drifting_opt, offline_fixed_opt, offline_onela_opt, path_service_at,
    path_service_before, ComparatorKind, ComparatorPath, CostModel, CostModelKind, OracleResult,
};
pub use pipeline::{
    check_duals, emit_sweep_csv, run_scenario, sweep, RunArtifacts, SweepParam, SweepPoint,
    REPLAY_TOL,
};
pub use projection::{
    bregman_project, project_ball_l2, project_pball, project_simplex_shifted_entropy,
    projection_lemma_gap, ProjectionResult,
};
pub use regularizer::{Regularizer, RegularizerKind};
pub use serialize::{
    emit_bundle, emit_certificate_csv, emit_report, emit_report_csv, emit_trace_csv,
    parse_bundle, parse_report, to_json_bytes, Bundle, ReportEnvelope, SciFormatter,
    REPORT_SCHEMA, TRACE_SCHEMA,
};
pub use report::{
    bound_report, BoundInputs, CheckRecord, FeasibilitySummary, OracleSummary, Report, RunMeta,
};
pub use vector::Vector;
