//! Printing and re-parsing: scripts, requests, frames and reports.

use proptest::collection::vec;
use proptest::prelude::*;

use tvstress_core::agent_proto::{AgentRequest, CalibrationKind, QueryTarget};
use tvstress_core::gui::{Attribute, Condition, WaitLevel};
use tvstress_core::monkey::{DeviceRequest, Keycode};
use tvstress_core::report::{ScriptResult, SuiteReport};
use tvstress_core::script::{parse_script, Expr, ForeachSource, Literal, Operand, ScriptAst, Statement, StatementKind};
use tvstress_core::voice::VoiceFrame;
use tvstress_core::{Percentage, ReleaseTarget, ResourceKind, Verdict};

fn var() -> impl Strategy<Value = String> {
    "v_[a-z0-9_]{0,6}"
}

fn text() -> impl Strategy<Value = String> {
    "[ -~\t\né\"\\\\]{0,16}"
}

fn kind() -> impl Strategy<Value = ResourceKind> {
    prop::sample::select(ResourceKind::ALL.to_vec())
}

fn pct() -> impl Strategy<Value = Percentage> {
    (0i64..=100).prop_map(|p| Percentage::new(p).unwrap())
}

fn operand() -> impl Strategy<Value = Operand> {
    prop_oneof!["[ -~é]{1,16}".prop_map(Operand::Str), var().prop_map(Operand::Var)]
}

fn list() -> impl Strategy<Value = Vec<Literal>> {
    prop_oneof![
        vec(text().prop_map(Literal::Str), 0..4),
        vec(any::<i64>().prop_map(Literal::Int), 0..4),
    ]
}

fn atom() -> impl Strategy<Value = Expr> {
    prop_oneof![
        var().prop_map(Expr::Var),
        text().prop_map(Expr::Str),
        any::<i64>().prop_map(Expr::Int),
        list().prop_map(Expr::List),
        (var(), "[a-z]{1,8}").prop_map(|(var, prop)| Expr::Property { var, prop }),
        (var(), prop_oneof![(0i64..100).prop_map(Expr::Int), var().prop_map(Expr::Var)])
            .prop_map(|(list, i)| Expr::Index { list, index: Box::new(i) }),
    ]
}

fn simple() -> impl Strategy<Value = StatementKind> {
    use StatementKind::*;
    prop_oneof![
        Just(Connect),
        operand().prop_map(|activity| StartActivity { activity }),
        prop::sample::select(Keycode::ALL.to_vec()).prop_map(|k| Press { key: k.wire_name().into() }),
        (kind(), pct()).prop_map(|(resource, percentage)| ConsumeResource { resource, percentage }),
        prop_oneof![Just(ReleaseTarget::All), kind().prop_map(ReleaseTarget::Kind)]
            .prop_map(|target| ReleaseResource { target }),
        (kind(), var()).prop_map(|(resource, into)| QueryResource { resource, into }),
        operand().prop_map(|text| Voice { text }),
        (operand(), -40i64..80).prop_map(|(text, snr_db)| VoiceNoisy { text, snr_db }),
        (
            prop::sample::select(vec![WaitLevel::System, WaitLevel::App, WaitLevel::Window, WaitLevel::Control]),
            text(),
            prop::sample::select(vec![Condition::Exists, Condition::Visible, Condition::Focused]),
            5000u64..100_000,
            prop::option::of(1u64..5000),
        )
            .prop_map(|(level, subject, condition, timeout_ms, poll_ms)| WaitUi {
                condition: if level.supports_focus() { condition } else { Condition::Exists },
                level,
                subject,
                timeout_ms,
                poll_ms
            }),
        var().prop_map(|into| FocusedWindow { into }),
        (operand(), operand(), var()).prop_map(|(window, control, into)| GetControl { window, control, into }),
        (var(), prop::sample::select(Attribute::ALL.to_vec()), var())
            .prop_map(|(handle, attr, into)| GetAttribute { handle, attr, into }),
        (atom(), atom())
            .prop_map(|(a, b)| Expr::Eq(Box::new(a), Box::new(b)))
            .prop_map(|condition| Assert { condition }),
        (0u64..1_000_000).prop_map(|millis| Sleep { millis }),
        (var(), prop_oneof![text().prop_map(Literal::Str), any::<i64>().prop_map(Literal::Int), list().prop_map(Literal::List)])
            .prop_map(|(name, value)| Let { name, value }),
    ]
}

fn foreach_head() -> impl Strategy<Value = StatementKind> {
    (
        prop::option::of(var()),
        var(),
        prop_oneof![var().prop_map(ForeachSource::Var), list().prop_map(ForeachSource::List)],
    )
        .prop_map(|(index, item, source)| StatementKind::Foreach { index, item, source })
}

/// A statement list with balanced, possibly nested blocks.
fn body(depth: u32) -> BoxedStrategy<Vec<StatementKind>> {
    let leaf = vec(simple(), 0..6).boxed();
    if depth == 0 {
        return leaf;
    }
    vec(
        prop_oneof![
            3 => simple().prop_map(|s| vec![s]),
            1 => (foreach_head(), body(depth - 1)).prop_map(|(head, inner)| {
                let mut v = vec![head];
                v.extend(inner);
                v.push(StatementKind::End);
                v
            }),
        ],
        0..6,
    )
    .prop_map(|chunks| chunks.into_iter().flatten().collect())
    .boxed()
}

proptest! {
    #[test]
    fn script_print_parse(kinds in body(2)) {
        let ast = ScriptAst {
            source_name: "gen.sfs".into(),
            statements: kinds
                .into_iter()
                .enumerate()
                .map(|(index, kind)| Statement { index, line: index + 1, kind })
                .collect(),
        };
        let text = ast.to_string();
        let back = parse_script(&text, "gen.sfs").map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &ast);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn comments_and_blank_lines_shift_lines_only(kinds in body(1), pad in vec(0usize..3, 0..20)) {
        let plain: String = kinds.iter().map(|k| format!("{k}\n")).collect();
        let mut padded = String::new();
        for (i, k) in kinds.iter().enumerate() {
            for _ in 0..pad.get(i).copied().unwrap_or(0) {
                padded.push_str("   # note\n\n");
            }
            padded.push_str(&format!("  {k}  \n"));
        }
        let a = parse_script(&plain, "a").unwrap();
        let b = parse_script(&padded, "a").unwrap();
        prop_assert_eq!(a.statements.len(), b.statements.len());
        for (x, y) in a.statements.iter().zip(&b.statements) {
            prop_assert_eq!(&x.kind, &y.kind);
            prop_assert_eq!(x.index, y.index);
            prop_assert!(y.line >= x.line);
        }
    }

    #[test]
    fn agent_request_line(kind in kind(), p in pct(), sel in 0usize..9, q in 0usize..6) {
        let req = match sel {
            0 => AgentRequest::Ping,
            1 => AgentRequest::Consume { kind, percentage: p },
            2 => AgentRequest::Release(ReleaseTarget::Kind(kind)),
            3 => AgentRequest::Release(ReleaseTarget::All),
            4 => AgentRequest::Query(QueryTarget::ALL[q]),
            5 => AgentRequest::Calibrate(CalibrationKind::Network),
            6 => AgentRequest::Calibrate(CalibrationKind::StorageBandwidth),
            7 => AgentRequest::Reset,
            _ => AgentRequest::Quit,
        };
        let line = req.to_string();
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(AgentRequest::parse(&line), Ok(req));
    }

    #[test]
    fn device_request_line(window in any::<u32>(), control in "[A-Za-z0-9_.]{1,10}", sel in 0usize..8, k in 0usize..7, a in 0usize..5) {
        let req = match sel {
            0 => DeviceRequest::Ping,
            1 => DeviceRequest::GetFocus,
            2 => DeviceRequest::ListWindows,
            3 => DeviceRequest::DumpQ { window, control: None, attr: None },
            4 => DeviceRequest::DumpQ { window, control: Some(control), attr: Some(Attribute::ALL[a]) },
            5 => DeviceRequest::Press(Keycode::ALL[k]),
            6 => DeviceRequest::StartActivity(control),
            _ => DeviceRequest::Quit,
        };
        prop_assert_eq!(DeviceRequest::parse(&req.to_string()), Ok(req));
    }

    #[test]
    fn voice_frame_bytes(rate in any::<u32>(), samples in vec(any::<i16>(), 0..512)) {
        let frame = VoiceFrame { sample_rate: rate, samples };
        let bytes = frame.encode();
        prop_assert_eq!(VoiceFrame::decode(&bytes), Ok(frame));
    }

    #[test]
    fn truncated_voice_frames_are_rejected(samples in vec(any::<i16>(), 1..64), cut in 1usize..64) {
        let bytes = VoiceFrame { sample_rate: 16_000, samples }.encode();
        let cut = cut.min(bytes.len());
        prop_assert!(VoiceFrame::decode(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn report_tsv(rows in vec((
        "[a-z]{1,8}\\.sfs",
        any::<bool>(),
        0u32..100_000,
        prop::option::of("[a-z/]{1,12}\\.tsv"),
        prop::option::of(1usize..500),
        prop::option::of(0u64..500),
        "[ -~]{0,30}",
    ), 0..12)) {
        let mut report = SuiteReport::default();
        for (name, ok, ms, trace, line, seq, reason) in rows {
            let verdict = if ok { Verdict::passed() } else { Verdict::failed(reason, line, seq) };
            report.push(ScriptResult {
                script_name: name,
                verdict,
                duration_secs: ms as f64 / 1000.0,
                trace_path: trace,
            });
        }
        let back = SuiteReport::from_tsv(&report.to_tsv()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back.totals(), report.totals());
        prop_assert_eq!(back.to_tsv(), report.to_tsv());
    }
}
