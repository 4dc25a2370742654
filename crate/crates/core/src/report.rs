//! Suite results and their tab-separated report file.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::verdict::{Verdict, VerdictStatus};

pub const REPORT_HEADER: &str = "script\tstatus\tduration_s\ttrace\tfailing_line\tfailing_seq\treason";

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptResult {
    pub script_name: String,
    pub verdict: Verdict,
    pub duration_secs: f64,
    pub trace_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub results: Vec<ScriptResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("missing or wrong header row")]
    Header,
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Totals {
    pub passed: usize,
    pub failed: usize,
}

impl SuiteReport {
    pub fn push(&mut self, result: ScriptResult) {
        self.results.push(result);
    }

    pub fn totals(&self) -> Totals {
        let passed = self.results.iter().filter(|r| r.verdict.is_passed()).count();
        Totals {
            passed,
            failed: self.results.len() - passed,
        }
    }

    /// Failed over total; 0 for an empty suite.
    pub fn failure_rate(&self) -> f64 {
        if self.results.is_empty() {
            return 0.0;
        }
        self.totals().failed as f64 / self.results.len() as f64
    }

    pub fn all_passed(&self) -> bool {
        self.totals().failed == 0
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.results {
            let status = match r.verdict.status() {
                VerdictStatus::Passed => "PASSED",
                VerdictStatus::Failed => "FAILED",
            };
            let opt = |v: Option<String>| v.unwrap_or_else(|| "-".to_string());
            out.push_str(&format!(
                "{}\t{}\t{:.3}\t{}\t{}\t{}\t{}\n",
                escape(&r.script_name),
                status,
                r.duration_secs,
                opt(r.trace_path.as_deref().map(escape)),
                opt(r.verdict.failing_line.map(|l| l.to_string())),
                opt(r.verdict.failing_seq.map(|s| s.to_string())),
                opt(r.verdict.reason().map(escape)),
            ));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<SuiteReport, ReportError> {
        let mut lines = text.lines();
        if lines.next() != Some(REPORT_HEADER) {
            return Err(ReportError::Header);
        }
        let mut report = SuiteReport::default();
        for (i, row) in lines.enumerate() {
            if row.is_empty() {
                continue;
            }
            let line = i + 2;
            let err = |message: &str| ReportError::Row {
                line,
                message: message.to_string(),
            };
            let cols: Vec<&str> = row.split('\t').collect();
            let [name, status, dur, trace, fline, fseq, reason] = cols[..] else {
                return Err(err("expected 7 columns"));
            };
            let duration_secs: f64 = dur.parse().map_err(|_| err("bad duration"))?;
            let verdict = match status {
                "PASSED" => Verdict::passed(),
                "FAILED" => Verdict::failed(
                    opt(reason).map(unescape).unwrap_or_default(),
                    opt(fline).map(|v| v.parse()).transpose().map_err(|_| err("bad line"))?,
                    opt(fseq).map(|v| v.parse()).transpose().map_err(|_| err("bad seq"))?,
                ),
                _ => return Err(err("status must be PASSED or FAILED")),
            };
            report.push(ScriptResult {
                script_name: unescape(name),
                verdict,
                duration_secs,
                trace_path: opt(trace).map(unescape),
            });
        }
        Ok(report)
    }
}

fn opt(c: &str) -> Option<&str> {
    if c == "-" {
        None
    } else {
        Some(c)
    }
}

/// A cell that is exactly `-` is written `\-` to keep it apart from an
/// absent value.
fn escape(s: &str) -> String {
    if s == "-" {
        return "\\-".to_string();
    }
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(name: &str, verdict: Verdict) -> ScriptResult {
        ScriptResult {
            script_name: name.to_string(),
            verdict,
            duration_secs: 1.5,
            trace_path: None,
        }
    }

    #[test]
    fn three_of_ten_failing() {
        let mut r = SuiteReport::default();
        for i in 0..10 {
            let v = if i % 4 == 1 { Verdict::failed("assert", Some(3), Some(9)) } else { Verdict::passed() };
            r.push(result(&format!("s{i}.sfs"), v));
        }
        assert_eq!(r.totals(), Totals { passed: 7, failed: 3 });
        assert!((r.failure_rate() - 0.3).abs() < 1e-12);
        assert!(!r.all_passed());
    }

    #[test]
    fn tsv_round_trip() {
        let mut r = SuiteReport::default();
        r.push(result("a.sfs", Verdict::passed()));
        let mut b = result("b c.sfs", Verdict::failed("line 4:\tx != \"y\"\nz", Some(4), None));
        b.trace_path = Some("traces/b.tsv".to_string());
        r.push(b);
        let text = r.to_tsv();
        assert!(text.starts_with(REPORT_HEADER));
        assert_eq!(SuiteReport::from_tsv(&text).unwrap(), r);
        assert_eq!(SuiteReport::from_tsv("nope\n"), Err(ReportError::Header));
    }

    #[test]
    fn empty_suite_rate_is_zero() {
        assert_eq!(SuiteReport::default().failure_rate(), 0.0);
    }
}
