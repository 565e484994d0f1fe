//! Emission and parsing of run artifacts.
//!
//! JSON artifacts carry a schema tag and print every float with 17
//! significant digits, so emission is deterministic byte for byte and
//! `parse(emit(x)) = x` exactly. Two envelope kinds exist:
//!
//! - `driftbench-trace/1`: config, trace, and optionally the certificate.
//!   Nothing in it depends on wall-clock state, so rerunning a seeded config
//!   reproduces the bytes exactly.
//! - `driftbench-report/1`: a check report, including run metadata such as
//!   timings, which is why reports travel in their own envelope rather than
//!   inside the trace bundle.
//!
//! CSV is an emit-only tabular view, one row per iteration, with the fixed
//! column order `t, c_1..c_n, x_1..x_n, lambda, service, movement`.

use std::io;

use serde::{Deserialize, Serialize};

use crate::certificate::DualCertificate;
use crate::config::RunConfig;
use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::report::Report;

/// Schema tag of trace bundles.
pub const TRACE_SCHEMA: &str = "driftbench-trace/1";
/// Schema tag of report envelopes.
pub const REPORT_SCHEMA: &str = "driftbench-report/1";

/// JSON formatter that prints every float with 17 significant digits
/// (`{:.16e}`), enough for exact `f64` round-trips, while leaving integers
/// and structure in serde_json's compact form.
pub struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize any value to compact JSON with full-precision floats.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    Ok(out)
}

fn from_json_bytes<'a, T: Deserialize<'a>>(bytes: &'a [u8], what: &str) -> Result<T> {
    serde_json::from_slice(bytes)
        .map_err(|e| Error::InvalidInput(format!("failed to parse {what}: {e}")))
}

/// The trace artifact: everything needed to re-verify a run, and nothing
/// that varies between identical reruns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub trace: Trace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<DualCertificate>,
}

impl Bundle {
    #[must_use]
    pub fn new(config: Option<RunConfig>, trace: Trace, certificate: Option<DualCertificate>) -> Self {
        Bundle {
            schema: TRACE_SCHEMA.to_string(),
            config,
            trace,
            certificate,
        }
    }
}

/// The report artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub schema: String,
    pub report: Report,
}

impl ReportEnvelope {
    #[must_use]
    pub fn new(report: Report) -> Self {
        ReportEnvelope {
            schema: REPORT_SCHEMA.to_string(),
            report,
        }
    }
}

/// Emit a trace bundle as schema-tagged JSON bytes.
pub fn emit_bundle(bundle: &Bundle) -> Result<Vec<u8>> {
    to_json_bytes(bundle)
}

/// Parse a trace bundle, rejecting unknown schema tags.
pub fn parse_bundle(bytes: &[u8]) -> Result<Bundle> {
    let bundle: Bundle = from_json_bytes(bytes, "trace bundle")?;
    if bundle.schema != TRACE_SCHEMA {
        return Err(Error::InvalidInput(format!(
            "unsupported trace schema '{}' (expected '{TRACE_SCHEMA}')",
            bundle.schema
        )));
    }
    Ok(bundle)
}

/// Emit a report envelope as schema-tagged JSON bytes.
pub fn emit_report(report: &Report) -> Result<Vec<u8>> {
    to_json_bytes(&ReportEnvelope::new(report.clone()))
}

/// Parse a report envelope, rejecting unknown schema tags.
pub fn parse_report(bytes: &[u8]) -> Result<Report> {
    let envelope: ReportEnvelope = from_json_bytes(bytes, "report")?;
    if envelope.schema != REPORT_SCHEMA {
        return Err(Error::InvalidInput(format!(
            "unsupported report schema '{}' (expected '{REPORT_SCHEMA}')",
            envelope.schema
        )));
    }
    Ok(envelope.report)
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Emit a trace as CSV: a header line and one row per iteration with the
/// column order `t, c_1..c_n, x_1..x_n, lambda, service, movement`.
#[must_use]
pub fn emit_trace_csv(trace: &Trace) -> String {
    let n = trace.x0.dim();
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",c_{i}"));
    }
    for i in 1..=n {
        out.push_str(&format!(",x_{i}"));
    }
    out.push_str(",lambda,service,movement\n");
    for step in &trace.steps {
        out.push_str(&step.t.to_string());
        for c in step.cost.iter() {
            out.push(',');
            out.push_str(&fmt_float(*c));
        }
        for x in step.x.iter() {
            out.push(',');
            out.push_str(&fmt_float(*x));
        }
        out.push(',');
        out.push_str(&fmt_float(step.lambda));
        out.push(',');
        out.push_str(&fmt_float(step.service));
        out.push(',');
        out.push_str(&fmt_float(step.movement));
        out.push('\n');
    }
    out
}

/// Emit a certificate as CSV: one row per dual index, with the step
/// multiplier `a` and the vector `b` side by side where both exist.
#[must_use]
pub fn emit_certificate_csv(cert: &DualCertificate) -> String {
    let n = cert.b.first().map_or(0, |b| b.dim());
    let mut out = String::from("row,a");
    for i in 1..=n {
        out.push_str(&format!(",b_{i}"));
    }
    out.push('\n');
    let rows = cert.a.len().max(cert.b.len());
    for j in 0..rows {
        out.push_str(&j.to_string());
        out.push(',');
        if let Some(a) = cert.a.get(j) {
            out.push_str(&fmt_float(*a));
        }
        for i in 0..n {
            out.push(',');
            if let Some(b) = cert.b.get(j) {
                out.push_str(&fmt_float(b.as_slice()[i]));
            }
        }
        out.push('\n');
    }
    out
}

/// Emit a report as CSV: one row per check with the pass flag and slack.
#[must_use]
pub fn emit_report_csv(report: &Report) -> String {
    let mut out = String::from("name,lhs,rhs,slack,tol,pass,gating,skipped\n");
    for check in &report.checks {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            check.name,
            fmt_float(check.lhs),
            fmt_float(check.rhs),
            fmt_float(check.slack),
            fmt_float(check.tol),
            check.pass,
            check.gating,
            check.skipped
        ));
    }
    out
}
