//! Verdicts, per-check report lines, the aggregate report type that every
//! verification routine returns, and the flattened records written to disk.

use crate::quadrature::TracePoint;
use crate::scalar::C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    ExpectedFailure,
    Divergent,
    Inconclusive,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::ExpectedFailure => "expected-failure",
            Verdict::Divergent => "divergent",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pass" => Ok(Verdict::Pass),
            "expected-failure" => Ok(Verdict::ExpectedFailure),
            "divergent" => Ok(Verdict::Divergent),
            "inconclusive" => Ok(Verdict::Inconclusive),
            "fail" => Ok(Verdict::Fail),
            _ => Err(format!("unknown verdict '{s}'")),
        }
    }
}

/// One compared quantity.
#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub label: String,
    pub estimate: C64,
    pub reference: C64,
    pub abs_error: f64,
    /// Statistical standard error, or the quadrature error estimate.
    pub uncertainty: f64,
    /// Largest accepted `abs_error`.
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl CheckLine {
    /// Deterministic comparison: pass iff `|estimate - reference| <= tol`.
    pub fn within(label: impl Into<String>, estimate: C64, reference: C64, tol: f64) -> Self {
        let abs_error = (estimate - reference).norm();
        let verdict = if abs_error <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        CheckLine {
            label: label.into(),
            estimate,
            reference,
            abs_error,
            uncertainty: 0.0,
            tolerance: tol,
            verdict,
        }
    }

    /// Statistical comparison: pass iff the difference is within `k` combined
    /// standard errors plus a small absolute floor for exactly-known zeros.
    pub fn statistical(
        label: impl Into<String>,
        estimate: C64,
        stderr: f64,
        reference: C64,
        ref_err: f64,
        k: f64,
    ) -> Self {
        let abs_error = (estimate - reference).norm();
        let sigma = stderr.hypot(ref_err);
        let tolerance = k * sigma + 1e-9;
        let verdict = if abs_error <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        CheckLine {
            label: label.into(),
            estimate,
            reference,
            abs_error,
            uncertainty: sigma,
            tolerance,
            verdict,
        }
    }

    pub fn with_verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn with_uncertainty(mut self, u: f64) -> Self {
        self.uncertainty = u;
        self
    }
}

/// Result of one verification routine.
#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub lines: Vec<CheckLine>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub trace: Vec<TracePoint>,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>) -> Self {
        VerificationReport {
            check: check.into(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, line: CheckLine) {
        self.lines.push(line);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Worst line verdict, ordered pass < expected-failure < divergent <
    /// inconclusive < fail. An empty report passes.
    pub fn verdict(&self) -> Verdict {
        self.lines
            .iter()
            .map(|l| l.verdict)
            .max()
            .unwrap_or(Verdict::Pass)
    }

    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.verdict == Verdict::Pass)
    }

    pub fn max_abs_error(&self) -> f64 {
        self.lines.iter().map(|l| l.abs_error).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckLine> {
        self.lines.iter().filter(|l| l.verdict == Verdict::Fail)
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.lines.extend(other.lines);
        self.notes.extend(other.notes);
        self.trace.extend(other.trace);
    }
}

// ---------------------------------------------------------------------------
// Records and emission

/// One report line as written to disk.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRecord {
    /// Suite entry the line belongs to.
    pub check: String,
    pub label: String,
    pub inputs: BTreeMap<String, String>,
    pub estimate: [f64; 2],
    pub reference: [f64; 2],
    pub abs_error: f64,
    pub uncertainty: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub expected: Verdict,
    /// Wall time of the whole entry; only written when timings are requested,
    /// so that reports stay byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl ReportRecord {
    /// Lines flagged as expected failures or divergences by the routine that
    /// produced them carry that verdict as their expectation; all others are
    /// expected to pass unless `allow` admits their verdict.
    pub fn from_line(
        check: &str,
        inputs: &BTreeMap<String, String>,
        line: &CheckLine,
        allow: &[Verdict],
    ) -> Self {
        let expected = match line.verdict {
            Verdict::ExpectedFailure | Verdict::Divergent => line.verdict,
            v if allow.contains(&v) => v,
            _ => Verdict::Pass,
        };
        ReportRecord {
            check: check.to_string(),
            label: line.label.clone(),
            inputs: inputs.clone(),
            estimate: [line.estimate.re, line.estimate.im],
            reference: [line.reference.re, line.reference.im],
            abs_error: line.abs_error,
            uncertainty: line.uncertainty,
            tolerance: line.tolerance,
            verdict: line.verdict,
            expected,
            wall_time_s: None,
        }
    }

    pub fn as_expected(&self) -> bool {
        self.verdict == self.expected
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// Pretty-printed JSON.
    Json,
    /// Fixed-width text table.
    Table,
}

/// Writes `records`; identical records give identical bytes.
pub fn emit_report(
    records: &[ReportRecord],
    format: ReportFormat,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, records)?;
            writeln!(out)
        }
        ReportFormat::Table => {
            writeln!(
                out,
                "{:<28} {:<40} {:>24} {:>24} {:>10} {:>10} {:<16}",
                "check", "label", "estimate", "reference", "abs_err", "uncert", "verdict"
            )?;
            for r in records {
                let mark = if r.as_expected() { "" } else { "  UNEXPECTED" };
                let time = r
                    .wall_time_s
                    .map(|t| format!("  {t:.3}s"))
                    .unwrap_or_default();
                writeln!(
                    out,
                    "{:<28} {:<40} {:>24} {:>24} {:>10.3e} {:>10.3e} {:<16}{mark}{time}",
                    r.check,
                    r.label,
                    fmt_complex(r.estimate),
                    fmt_complex(r.reference),
                    r.abs_error,
                    r.uncertainty,
                    r.verdict.to_string()
                )?;
            }
            Ok(())
        }
    }
}

fn fmt_complex([re, im]: [f64; 2]) -> String {
    if im == 0.0 {
        format!("{re:.10e}")
    } else {
        format!("{re:.4e}{im:+.4e}i")
    }
}

/// Convergence trace as CSV with columns `level,value,error`.
pub fn write_trace_csv(trace: &[TracePoint], out: &mut dyn Write) -> crate::error::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in trace {
        w.serialize(t)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
