//! Runs a list of script files in order and collects their verdicts.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tvstress_core::report::{ScriptResult, SuiteReport};
use tvstress_core::script::{parse_script, validate};
use tvstress_core::{Verdict, VerdictStatus};

use crate::interpreter::{run_script, InterpreterConfig};

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("script not found: {}", .0.display())]
    MissingScript(PathBuf),
    #[error("cannot write trace {}: {source}", path.display())]
    Trace { path: PathBuf, source: io::Error },
}

/// Fails if any script is missing, before anything is contacted.
pub fn check_scripts(paths: &[PathBuf]) -> Result<(), SuiteError> {
    match paths.iter().find(|p| !p.is_file()) {
        Some(p) => Err(SuiteError::MissingScript(p.clone())),
        None => Ok(()),
    }
}

fn trace_file(dir: &Path, index: usize, script: &Path) -> PathBuf {
    let stem = script.file_stem().map_or_else(|| "script".into(), |s| s.to_string_lossy());
    dir.join(format!("{:02}-{stem}.tsv", index + 1))
}

/// Parses, validates and runs one script. Parse and validation errors
/// give a failed verdict with an empty trace.
pub fn run_file(path: &Path, cfg: &InterpreterConfig) -> Result<(Verdict, tvstress_core::ExecutionTrace), SuiteError> {
    let name = path.display().to_string();
    let source = std::fs::read_to_string(path).map_err(|_| SuiteError::MissingScript(path.to_path_buf()))?;
    let empty = || tvstress_core::ExecutionTrace::new(name.clone(), crate::clock::unix_ms());
    let ast = match parse_script(&source, &name) {
        Ok(a) => a,
        Err(e) => return Ok((Verdict::failed(e.message(), Some(e.line()), None), empty())),
    };
    if let Some(d) = validate(&ast).into_iter().next() {
        return Ok((Verdict::failed(d.kind.to_string(), Some(d.line), None), empty()));
    }
    Ok(run_script(&ast, cfg))
}

/// Runs every script in order. Traces go to `<trace_dir>/<NN>-<stem>.tsv`.
pub fn run_suite(paths: &[PathBuf], cfg: &InterpreterConfig, trace_dir: Option<&Path>) -> Result<SuiteReport, SuiteError> {
    check_scripts(paths)?;
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir).map_err(|source| SuiteError::Trace { path: dir.to_path_buf(), source })?;
    }
    let mut report = SuiteReport::default();
    for (i, path) in paths.iter().enumerate() {
        let started = Instant::now();
        let (verdict, trace) = run_file(path, cfg)?;
        let duration_secs = started.elapsed().as_secs_f64();
        let trace_path = match trace_dir {
            Some(dir) => {
                let p = trace_file(dir, i, path);
                std::fs::write(&p, trace.to_tsv()).map_err(|source| SuiteError::Trace { path: p.clone(), source })?;
                Some(p.display().to_string())
            }
            None => None,
        };
        report.push(ScriptResult {
            script_name: path.display().to_string(),
            verdict,
            duration_secs,
            trace_path,
        });
    }
    Ok(report)
}

/// Human-readable summary table.
pub fn format_table(report: &SuiteReport) -> String {
    let width = report.results.iter().map(|r| r.script_name.len()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:<6}  {:>9}  DETAIL", "SCRIPT", "STATUS", "TIME");
    for r in &report.results {
        let status = match r.verdict.status() {
            VerdictStatus::Passed => "PASS",
            VerdictStatus::Failed => "FAIL",
        };
        let detail = match (r.verdict.failing_line, r.verdict.reason()) {
            (Some(l), Some(why)) => format!("line {l}: {why}"),
            (None, Some(why)) => why.to_string(),
            _ => String::new(),
        };
        let _ = writeln!(out, "{:<width$}  {:<6}  {:>8.2}s  {detail}", r.script_name, status, r.duration_secs);
    }
    let t = report.totals();
    let _ = writeln!(
        out,
        "{} passed, {} failed, failure rate {:.1}%",
        t.passed,
        t.failed,
        report.failure_rate() * 100.0
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use tvstress_core::report::ScriptResult;

    #[test]
    fn trace_files_are_numbered() {
        let p = trace_file(Path::new("out"), 2, Path::new("dir/voice_launch.sfs"));
        assert_eq!(p, Path::new("out/03-voice_launch.tsv"));
    }

    #[test]
    fn table_totals() {
        let mut r = SuiteReport::default();
        for (name, v) in [("a.sfs", Verdict::passed()), ("bb.sfs", Verdict::failed("boom", Some(4), Some(9)))] {
            r.push(ScriptResult { script_name: name.into(), verdict: v, duration_secs: 0.5, trace_path: None });
        }
        let t = format_table(&r);
        assert!(t.contains("line 4: boom"), "{t}");
        assert!(t.ends_with("1 passed, 1 failed, failure rate 50.0%\n"), "{t}");
    }

    #[test]
    fn missing_script_is_reported_before_running() {
        let err = check_scripts(&[PathBuf::from("/nonexistent/a.sfs")]).unwrap_err();
        assert!(matches!(err, SuiteError::MissingScript(_)));
    }

    #[test]
    fn invalid_script_gets_failed_verdict() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.sfs");
        std::fs::write(&p, "assert nope == \"x\"\n").unwrap();
        let (v, trace) = run_file(&p, &InterpreterConfig::new(Default::default())).unwrap();
        assert_eq!(v.failing_line, Some(1));
        assert!(v.reason().unwrap().contains("nope"), "{v:?}");
        assert!(trace.events.is_empty());
    }
}
