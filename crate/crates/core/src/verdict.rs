use alloc::string::String;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    Passed,
    Failed,
}

/// Outcome of one script run. A reason is present exactly when failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    status: VerdictStatus,
    reason: Option<String>,
    pub failing_seq: Option<u64>,
    pub failing_line: Option<usize>,
}

impl Verdict {
    pub fn passed() -> Self {
        Verdict {
            status: VerdictStatus::Passed,
            reason: None,
            failing_seq: None,
            failing_line: None,
        }
    }

    pub fn failed(reason: impl Into<String>, failing_line: Option<usize>, failing_seq: Option<u64>) -> Self {
        Verdict {
            status: VerdictStatus::Failed,
            reason: Some(reason.into()),
            failing_seq,
            failing_line,
        }
    }

    pub fn status(&self) -> VerdictStatus {
        self.status
    }

    pub fn is_passed(&self) -> bool {
        self.status == VerdictStatus::Passed
    }

    pub fn reason(&self) -> Option<&str> {
        self.reason.as_deref()
    }
}
