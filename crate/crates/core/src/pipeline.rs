//! End-to-end execution and re-verification.
//!
//! `run_scenario` takes a raw config through the full chain: resolve,
//! trajectory, dual certificate, offline oracle, verification report.
//! `check_duals` replays a stored bundle from scratch and re-derives
//! everything it can, so a corrupted trace or certificate surfaces as a
//! failing check rather than silent acceptance. `sweep` runs a grid of
//! configs and tabulates the bound quantities for trend inspection.

use std::time::Instant;

use crate::certificate::{
    build_drift_expert, build_oco_pball, build_onela_2ball, build_onela_mts,
    check_feasibility_with_tol, DualCertificate, ProgramFamily,
};
use crate::config::{ResolvedRun, RunConfig, Setting};
use crate::engine::{run, Scenario, Trace};
use crate::error::{Error, Result};
use crate::norm::NormSpec;
use crate::oracle::{
    gen_comparator_path, offline_drifting_opt, offline_fixed_opt, offline_onela_opt,
    ComparatorPath, OracleResult,
};
use crate::report::{
    bound_report, BoundInputs, CheckRecord, FeasibilitySummary, OracleSummary, Report, RunMeta,
};
use crate::serialize::Bundle;
use crate::vector::Vector;

/// Tolerance for replaying a stored trajectory step by step.
pub const REPLAY_TOL: f64 = 1e-9;

/// Everything a finished run produces.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    /// Normalized config with every default written out.
    pub config: RunConfig,
    pub trace: Trace,
    pub certificate: DualCertificate,
    /// Comparator path behind the drifting-regret checks (0-lookahead only).
    pub comparator: Option<ComparatorPath>,
    /// Offline optimum for the weak-duality and competitive checks.
    pub oracle: Option<OracleResult>,
    pub report: Report,
}

fn at_stage(name: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::InvalidInput(format!("stage '{name}': {e}"))
}

fn costs_of(trace: &Trace) -> Vec<Vector> {
    trace.steps.iter().map(|s| s.cost.clone()).collect()
}

fn build_certificate(resolved: &ResolvedRun, trace: &Trace, drift: f64) -> Result<DualCertificate> {
    let eta = resolved.scenario.eta;
    match resolved.config.setting {
        Setting::OcoPball => build_oco_pball(trace, eta),
        Setting::DriftExpert => build_drift_expert(
            trace,
            eta,
            resolved.alpha.expect("expert settings resolve a cap"),
            drift,
        ),
        Setting::Onela2Ball => build_onela_2ball(trace, eta),
        Setting::OnelaMts => build_onela_mts(
            trace,
            eta,
            resolved.alpha.expect("expert settings resolve a cap"),
        ),
    }
}

/// Offline optimum matching the certificate's program. Numeric convergence
/// failures degrade to `None` (the report then marks oracle-dependent checks
/// as skipped); structural errors propagate.
fn run_oracle(resolved: &ResolvedRun, trace: &Trace, drift: f64) -> Result<Option<OracleResult>> {
    if trace.is_empty() {
        return Ok(None);
    }
    let costs = costs_of(trace);
    let body = &resolved.scenario.body;
    let outcome = match resolved.config.setting {
        Setting::OcoPball => offline_fixed_opt(&costs, body).map(|(point, value)| OracleResult {
            value,
            path: ComparatorPath {
                points: vec![point; trace.len()],
                drift_l1: 0.0,
                drift_lp: 0.0,
            },
            converged: true,
            iterations: 0,
        }),
        Setting::DriftExpert => offline_drifting_opt(&costs, body, drift),
        Setting::Onela2Ball => offline_onela_opt(&costs, body, &NormSpec::Finite(2.0), 1.0, None),
        Setting::OnelaMts => offline_onela_opt(
            &costs,
            body,
            &NormSpec::Finite(1.0),
            resolved.alpha.expect("expert settings resolve a cap"),
            None,
        ),
    };
    match outcome {
        Ok(res) => Ok(Some(res)),
        Err(Error::Numeric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn generate_comparator(resolved: &ResolvedRun, t_len: usize) -> Result<Option<ComparatorPath>> {
    let Some(kind) = &resolved.comparator else {
        return Ok(None);
    };
    if t_len == 0 {
        return Ok(None);
    }
    let budget = resolved.drift_budget.unwrap_or(0.0);
    gen_comparator_path(
        kind,
        &resolved.scenario.body,
        t_len,
        budget,
        resolved.config.seed,
    )
    .map(Some)
}

fn finish_report(
    mut report: Report,
    resolved: &ResolvedRun,
    trace: &Trace,
    certificate: &DualCertificate,
    oracle: &Option<OracleResult>,
    started: Instant,
) -> Result<Report> {
    if resolved.feasibility_tol != report.feasibility.tol {
        let feas = check_feasibility_with_tol(
            certificate,
            &costs_of(trace),
            &resolved.scenario.body,
            resolved.feasibility_tol,
        )
        .map_err(at_stage("feasibility"))?;
        report.feasibility = FeasibilitySummary::from(&feas);
    }
    report.oracle = oracle.as_ref().map(|o| OracleSummary {
        value: o.value,
        converged: o.converged,
        iterations: o.iterations,
    });
    report.meta = Some(RunMeta {
        seed: resolved.config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
    });
    Ok(report)
}

/// Execute a config end to end. Deterministic for a fixed config: the same
/// seed yields the same trace, certificate, oracle value, and check verdicts
/// (only the timing metadata varies).
pub fn run_scenario(config: &RunConfig) -> Result<RunArtifacts> {
    let started = Instant::now();
    let resolved = config.resolve().map_err(at_stage("config"))?;
    let trace = run(&resolved.scenario).map_err(at_stage("run"))?;
    let comparator = generate_comparator(&resolved, trace.len()).map_err(at_stage("comparator"))?;
    // The drifting-expert objective charges the cap against the comparator's
    // measured drift, never the configured budget.
    let drift = comparator.as_ref().map_or(0.0, |c| match resolved.config.setting {
        Setting::DriftExpert => c.halved_l1_drift(),
        _ => c.drift_lp,
    });
    let certificate =
        build_certificate(&resolved, &trace, drift).map_err(at_stage("certificate"))?;
    let oracle = run_oracle(&resolved, &trace, drift).map_err(at_stage("oracle"))?;
    let report = bound_report(&BoundInputs {
        trace: &trace,
        certificate: &certificate,
        comparator: comparator.as_ref(),
        opt_value: oracle.as_ref().map(|o| o.value),
        epsilon: resolved.epsilon,
    })
    .map_err(at_stage("report"))?;
    let report = finish_report(report, &resolved, &trace, &certificate, &oracle, started)?;
    Ok(RunArtifacts {
        config: resolved.config,
        trace,
        certificate,
        comparator,
        oracle,
        report,
    })
}

/// Worst absolute deviation between a stored trace and its from-scratch
/// replay, across every recorded quantity.
fn replay_deviation(stored: &Trace, replayed: &Trace) -> f64 {
    let mut worst: f64 = 0.0;
    let mut track = |d: f64| {
        if d > worst {
            worst = d;
        }
    };
    for (s, r) in stored.steps.iter().zip(&replayed.steps) {
        for (a, b) in s.x.iter().zip(r.x.iter()) {
            track((a - b).abs());
        }
        for (a, b) in s.y_gradient.iter().zip(r.y_gradient.iter()) {
            track((a - b).abs());
        }
        track((s.lambda - r.lambda).abs());
        track((s.service - r.service).abs());
        track((s.movement - r.movement).abs());
    }
    track((stored.total_service - replayed.total_service).abs());
    track((stored.total_movement - replayed.total_movement).abs());
    worst
}

/// Worst absolute deviation between two certificates over the dual
/// variables and the objective.
fn certificate_deviation(stored: &DualCertificate, rebuilt: &DualCertificate) -> f64 {
    if stored.a.len() != rebuilt.a.len() || stored.b.len() != rebuilt.b.len() {
        return f64::MAX;
    }
    let mut worst = (stored.objective - rebuilt.objective).abs();
    for (a, b) in stored.a.iter().zip(&rebuilt.a) {
        worst = worst.max((a - b).abs());
    }
    for (u, v) in stored.b.iter().zip(&rebuilt.b) {
        for (a, b) in u.iter().zip(v.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Re-verify a stored bundle from first principles.
///
/// The stored trajectory is replayed step by step, the certificate is
/// rebuilt from the stored trace and compared against the stored one, and
/// the full bound report is recomputed. When the bundle carries its config,
/// the comparator and oracle are regenerated too, so the outcome matches the
/// original in-process report check for check.
pub fn check_duals(bundle: &Bundle, tol_override: Option<f64>) -> Result<Report> {
    let started = Instant::now();
    let trace = &bundle.trace;
    let costs = costs_of(trace);

    let scenario = Scenario {
        body: trace.body.clone(),
        regularizer: trace.regularizer.clone(),
        eta: trace.eta,
        lookahead: trace.lookahead,
        x0: trace.x0.clone(),
        costs: costs.clone(),
    };
    scenario.validate().map_err(at_stage("replay"))?;
    let replayed = run(&scenario).map_err(at_stage("replay"))?;
    if replayed.len() != trace.len() {
        return Err(Error::InvalidInput(format!(
            "stage 'replay': stored trace has {} steps, replay produced {}",
            trace.len(),
            replayed.len()
        )));
    }
    let replay_check = CheckRecord::bound(
        "trace_replay",
        replay_deviation(trace, &replayed),
        0.0,
        REPLAY_TOL,
        true,
    );

    // Resolve the stored config when present; it carries the comparator,
    // oracle parameters, and tolerance defaults.
    let resolved = match &bundle.config {
        Some(cfg) => Some(cfg.resolve().map_err(at_stage("config"))?),
        None => None,
    };

    let program = bundle
        .certificate
        .as_ref()
        .map(|c| c.program)
        .or_else(|| resolved.as_ref().map(|r| match r.config.setting {
            Setting::OcoPball => ProgramFamily::OcoPball,
            Setting::DriftExpert => ProgramFamily::DriftExpert,
            Setting::Onela2Ball => ProgramFamily::Onela2Ball,
            Setting::OnelaMts => ProgramFamily::OnelaMts,
        }))
        .ok_or_else(|| {
            Error::InvalidInput(
                "stage 'certificate': bundle has neither a certificate nor a config".into(),
            )
        })?;

    let comparator = match &resolved {
        Some(r) => generate_comparator(r, trace.len()).map_err(at_stage("comparator"))?,
        None => None,
    };
    let drift = match (&bundle.certificate, &comparator) {
        // Reuse the stored budget so the rebuilt objective is comparable.
        (Some(cert), _) if cert.drift_budget.is_some() => cert.drift_budget.unwrap(),
        (_, Some(c)) if program == ProgramFamily::DriftExpert => c.halved_l1_drift(),
        (_, Some(c)) => c.drift_lp,
        _ => 0.0,
    };

    let rebuilt = rebuild_certificate(trace, program, bundle.certificate.as_ref(), drift)
        .map_err(at_stage("certificate"))?;
    let (certificate, cert_check) = match &bundle.certificate {
        Some(stored) => {
            let check = CheckRecord::bound(
                "certificate_match",
                certificate_deviation(stored, &rebuilt),
                0.0,
                REPLAY_TOL,
                true,
            );
            (stored.clone(), check)
        }
        None => (rebuilt, CheckRecord::skipped("certificate_match")),
    };

    let oracle = match &resolved {
        Some(r) => run_oracle(r, trace, drift).map_err(at_stage("oracle"))?,
        None => None,
    };

    let mut report = bound_report(&BoundInputs {
        trace,
        certificate: &certificate,
        comparator: comparator.as_ref(),
        opt_value: oracle.as_ref().map(|o| o.value),
        epsilon: resolved.as_ref().and_then(|r| r.epsilon),
    })
    .map_err(at_stage("report"))?;
    report.checks.insert(0, cert_check);
    report.checks.insert(0, replay_check);

    let feas_tol = tol_override
        .or(resolved.as_ref().map(|r| r.feasibility_tol))
        .unwrap_or(report.feasibility.tol);
    if feas_tol != report.feasibility.tol {
        let feas = check_feasibility_with_tol(&certificate, &costs, &trace.body, feas_tol)
            .map_err(at_stage("feasibility"))?;
        report.feasibility = FeasibilitySummary::from(&feas);
    }
    report.oracle = oracle.as_ref().map(|o| OracleSummary {
        value: o.value,
        converged: o.converged,
        iterations: o.iterations,
    });
    report.meta = Some(RunMeta {
        seed: resolved.as_ref().map_or(0, |r| r.config.seed),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timing_ms: started.elapsed().as_secs_f64() * 1e3,
    });
    Ok(report)
}

fn rebuild_certificate(
    trace: &Trace,
    program: ProgramFamily,
    stored: Option<&DualCertificate>,
    drift: f64,
) -> Result<DualCertificate> {
    let eta = trace.eta;
    match program {
        ProgramFamily::OcoPball => build_oco_pball(trace, eta),
        ProgramFamily::DriftExpert => {
            let alpha = stored.and_then(|c| c.alpha).ok_or_else(|| {
                Error::InvalidInput("drifting-expert rebuild needs the stored cap".into())
            })?;
            build_drift_expert(trace, eta, alpha, drift)
        }
        ProgramFamily::Onela2Ball => build_onela_2ball(trace, eta),
        ProgramFamily::OnelaMts => {
            let alpha = stored.and_then(|c| c.alpha).ok_or_else(|| {
                Error::InvalidInput("metrical-task-system rebuild needs the stored cap".into())
            })?;
            build_onela_mts(trace, eta, alpha)
        }
    }
}

/// The parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Eta,
    Drift,
}

impl SweepParam {
    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::Drift => "drift",
        }
    }
}

/// One grid point of a sweep: the headline quantities of the run's bounds.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub service: f64,
    pub movement: f64,
    pub dual_objective: f64,
    pub opt: Option<f64>,
    pub service_minus_opt: Option<f64>,
    pub movement_over_opt: Option<f64>,
    pub all_pass: bool,
}

/// Run the base config once per grid value of `param`. Aggregation is
/// single-threaded and rows keep the grid order.
pub fn sweep(base: &RunConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("sweep: empty value grid".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = base.clone();
        match param {
            SweepParam::Eta => cfg.eta = Some(value),
            SweepParam::Drift => cfg.drift = Some(value),
        }
        let arts = run_scenario(&cfg)
            .map_err(|e| Error::InvalidInput(format!("sweep at {}={value}: {e}", param.as_str())))?;
        let opt = arts.oracle.as_ref().map(|o| o.value);
        points.push(SweepPoint {
            value,
            service: arts.trace.total_service,
            movement: arts.trace.total_movement,
            dual_objective: arts.certificate.objective,
            opt,
            service_minus_opt: opt.map(|o| arts.trace.total_service - o),
            movement_over_opt: opt.and_then(|o| {
                if o.abs() > 1e-12 {
                    Some(arts.trace.total_movement / o)
                } else {
                    None
                }
            }),
            all_pass: arts.report.passes(),
        });
    }
    Ok(points)
}

/// Tabulate sweep rows as CSV in grid order.
#[must_use]
pub fn emit_sweep_csv(param: SweepParam, points: &[SweepPoint]) -> String {
    let mut out = format!(
        "{},service,movement,dual_objective,opt,service_minus_opt,movement_over_opt,pass\n",
        param.as_str()
    );
    let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
    for p in points {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{}\n",
            p.value,
            p.service,
            p.movement,
            p.dual_objective,
            fmt_opt(p.opt),
            fmt_opt(p.service_minus_opt),
            fmt_opt(p.movement_over_opt),
            p.all_pass
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OutputFormat;
    use crate::serialize::{emit_bundle, parse_bundle};

    fn demo_config(setting: Setting, n: usize, t_len: usize, seed: u64) -> RunConfig {
        let mut cfg = RunConfig::new(setting, n, t_len);
        cfg.seed = seed;
        cfg
    }

    #[test]
    fn run_scenario_passes_for_every_setting() {
        for (setting, n, t_len) in [
            (Setting::OcoPball, 2, 60),
            (Setting::DriftExpert, 5, 80),
            (Setting::Onela2Ball, 2, 60),
            (Setting::OnelaMts, 4, 80),
        ] {
            let mut cfg = demo_config(setting, n, t_len, 11);
            if setting == Setting::DriftExpert {
                cfg.drift = Some(2.0);
            }
            let arts = run_scenario(&cfg).unwrap();
            assert!(
                arts.report.passes(),
                "{setting} failures: {:?}",
                arts.report.failures()
            );
            assert!(arts.report.meta.is_some());
            assert_eq!(arts.trace.len(), t_len);
        }
    }

    #[test]
    fn empty_horizon_run_trivially_passes() {
        let arts = run_scenario(&demo_config(Setting::DriftExpert, 10, 0, 0)).unwrap();
        assert!(arts.trace.is_empty());
        assert!(arts.report.passes(), "{:?}", arts.report.failures());
        assert!(arts.oracle.is_none());
        let skipped: Vec<&str> = arts
            .report
            .checks
            .iter()
            .filter(|c| c.skipped)
            .map(|c| c.name.as_str())
            .collect();
        assert!(skipped.contains(&"weak_duality"));
    }

    #[test]
    fn seed_determinism_reaches_the_report() {
        let run_once = || {
            let mut cfg = demo_config(Setting::Onela2Ball, 2, 50, 33);
            cfg.format = Some(OutputFormat::Json);
            run_scenario(&cfg).unwrap()
        };
        let a = run_once();
        let b = run_once();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.certificate, b.certificate);
        assert_eq!(a.oracle.as_ref().unwrap().value, b.oracle.as_ref().unwrap().value);
        for (x, y) in a.report.checks.iter().zip(&b.report.checks) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn check_duals_agrees_with_the_fresh_report() {
        let mut cfg = demo_config(Setting::DriftExpert, 5, 60, 5);
        cfg.drift = Some(2.0);
        let arts = run_scenario(&cfg).unwrap();
        let bundle = Bundle::new(
            Some(arts.config.clone()),
            arts.trace.clone(),
            Some(arts.certificate.clone()),
        );
        let bytes = emit_bundle(&bundle).unwrap();
        let verdict = check_duals(&parse_bundle(&bytes).unwrap(), None).unwrap();
        assert!(verdict.passes(), "{:?}", verdict.failures());
        // The re-verification repeats every original check with the same
        // outcome, plus the replay and certificate comparisons up front.
        assert_eq!(verdict.checks[0].name, "trace_replay");
        assert_eq!(verdict.checks[1].name, "certificate_match");
        let fresh: Vec<_> = arts.report.checks.iter().collect();
        let redone: Vec<_> = verdict.checks.iter().skip(2).collect();
        assert_eq!(fresh.len(), redone.len());
        for (a, b) in fresh.iter().zip(&redone) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.pass, b.pass);
            assert_eq!(a.lhs, b.lhs);
            assert_eq!(a.rhs, b.rhs);
        }
    }

    #[test]
    fn check_duals_catches_a_corrupted_point() {
        let arts = run_scenario(&demo_config(Setting::Onela2Ball, 2, 30, 8)).unwrap();
        let mut trace = arts.trace.clone();
        let mid = trace.steps.len() / 2;
        let mut coords = trace.steps[mid].x.as_slice().to_vec();
        coords[0] += 1e-3;
        trace.steps[mid].x = Vector::computed(coords, "corrupted point").unwrap();
        let bundle = Bundle::new(Some(arts.config.clone()), trace, Some(arts.certificate.clone()));
        let verdict = check_duals(&bundle, None).unwrap();
        assert!(!verdict.passes());
        let replay = verdict.checks.iter().find(|c| c.name == "trace_replay").unwrap();
        assert!(!replay.pass);
    }

    #[test]
    fn check_duals_catches_a_corrupted_multiplier() {
        let arts = run_scenario(&demo_config(Setting::OcoPball, 2, 30, 4)).unwrap();
        let mut cert = arts.certificate.clone();
        let mid = cert.a.len() / 2;
        cert.a[mid] -= 5e-4;
        let bundle = Bundle::new(Some(arts.config.clone()), arts.trace.clone(), Some(cert));
        let verdict = check_duals(&bundle, None).unwrap();
        assert!(!verdict.passes());
        let m = verdict
            .checks
            .iter()
            .find(|c| c.name == "certificate_match")
            .unwrap();
        assert!(!m.pass);
    }

    #[test]
    fn check_duals_without_config_still_verifies() {
        let arts = run_scenario(&demo_config(Setting::OnelaMts, 3, 40, 15)).unwrap();
        let bundle = Bundle::new(None, arts.trace.clone(), Some(arts.certificate.clone()));
        let verdict = check_duals(&bundle, None).unwrap();
        assert!(verdict.passes(), "{:?}", verdict.failures());
        assert!(verdict.oracle.is_none());
        let wd = verdict.checks.iter().find(|c| c.name == "weak_duality").unwrap();
        assert!(wd.skipped);
    }

    #[test]
    fn eta_sweep_shows_the_movement_service_tradeoff() {
        let cfg = demo_config(Setting::Onela2Ball, 2, 120, 2);
        let grid = [1.0, 1.5, 2.0, 3.0];
        let points = sweep(&cfg, SweepParam::Eta, &grid).unwrap();
        assert_eq!(points.len(), grid.len());
        assert!(points.iter().all(|p| p.all_pass));
        let csv = emit_sweep_csv(SweepParam::Eta, &points);
        assert!(csv.starts_with("eta,service,movement,"));
        assert_eq!(csv.lines().count(), 1 + grid.len());
        // Directional sanity with slack: larger steps move more against the
        // same optimum, and the service gap to the optimum shrinks or holds.
        let tol = 1e-6;
        for w in points.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            assert!(
                hi.movement_over_opt.unwrap() >= lo.movement_over_opt.unwrap() - tol,
                "movement ratio fell: {:?} -> {:?}",
                lo.movement_over_opt,
                hi.movement_over_opt
            );
        }
    }
}
