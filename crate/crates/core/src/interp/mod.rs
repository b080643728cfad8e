//! Deterministic test execution with trace recording.

mod exec;
pub mod trace;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lang::{Expr, Program, StatementId, StmtKind, StmtRef};
use crate::slicer::SlicingCriterion;

pub use exec::Value;
pub use trace::{EventKind, Location, TestOutcome, TestStatus, Trace, TraceEvent, TrapKind};

pub const DEFAULT_STEP_LIMIT: usize = 1_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecConfig {
    /// Maximum number of trace events per test.
    pub step_limit: usize,
    /// Maximum call depth before a stack-overflow trap.
    pub max_depth: usize,
    /// When false, events are counted but not stored.
    pub record: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            step_limit: DEFAULT_STEP_LIMIT,
            max_depth: DEFAULT_MAX_DEPTH,
            record: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("unknown test `{0}`")]
    UnknownTest(String),
    #[error("step limit must be positive")]
    ZeroStepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestRun {
    pub trace: Trace,
    pub outcome: TestOutcome,
}

/// Results of running every test, keyed by test name.
pub type SuiteRun = BTreeMap<String, TestRun>;

pub fn run_test(p: &Program, test: &str, cfg: &ExecConfig) -> Result<TestRun, ExecError> {
    if cfg.step_limit == 0 {
        return Err(ExecError::ZeroStepLimit);
    }
    let tc = p
        .test(test)
        .ok_or_else(|| ExecError::UnknownTest(test.to_string()))?;
    let mut m = exec::Machine::new(p, cfg.step_limit, cfg.max_depth, cfg.record);
    let status = match m.run_test_body(&tc.body) {
        Ok(()) => TestStatus::Pass,
        Err(stop) => stop.into_status(),
    };
    Ok(TestRun {
        outcome: TestOutcome {
            test: test.to_string(),
            status,
            steps: m.steps,
        },
        trace: Trace {
            test: test.to_string(),
            events: m.events,
        },
    })
}

/// Runs every test on fresh global state. One test's failure never affects
/// another.
pub fn run_suite(p: &Program, cfg: &ExecConfig) -> Result<SuiteRun, ExecError> {
    p.tests()
        .map(|t| Ok((t.name.clone(), run_test(p, &t.name, cfg)?)))
        .collect()
}

/// Runs `test` and evaluates `expr` right after the top-level test statement
/// `after` completes. Returns `None` if that point is never reached.
pub(crate) fn observe(
    p: &Program,
    test: &str,
    after: StatementId,
    expr: &Expr,
    cfg: &ExecConfig,
) -> Result<(TestStatus, Option<Result<Value, TrapKind>>), ExecError> {
    let tc = p
        .test(test)
        .ok_or_else(|| ExecError::UnknownTest(test.to_string()))?;
    let mut m = exec::Machine::new(p, cfg.step_limit, cfg.max_depth, false);
    m.probe = Some(exec::Probe {
        after,
        expr,
        value: None,
    });
    let status = match m.run_test_body(&tc.body) {
        Ok(()) => TestStatus::Pass,
        Err(stop) => stop.into_status(),
    };
    Ok((status, m.probe.and_then(|p| p.value)))
}

/// One criterion per executed enabled assertion instance, ordered by test
/// name then event index.
pub fn generate_criteria(suite: &SuiteRun) -> Vec<SlicingCriterion> {
    let mut out = Vec::new();
    for (test, run) in suite {
        for ev in &run.trace.events {
            if ev.kind == EventKind::Assert {
                out.push(SlicingCriterion {
                    test: test.clone(),
                    event: ev.idx,
                    locations: ev.uses.clone(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("event at position {pos} has idx {idx}")]
    NonDenseIndex { pos: usize, idx: usize },
    #[error("event {idx}: parent {parent} does not precede it")]
    ForwardParent { idx: usize, parent: usize },
    #[error("event {idx}: ctrl_parent {parent} is not a predicate instance")]
    BadCtrlParent { idx: usize, parent: usize },
    #[error("event {idx}: call_parent {parent} is not a call binding")]
    BadCallParent { idx: usize, parent: usize },
    #[error("event {idx}: outcome present iff the event evaluates an if/while condition")]
    BadOutcome { idx: usize },
    #[error("event {idx}: use of {loc} has no earlier definition")]
    UndefinedUse { idx: usize, loc: String },
}

/// Structural validation of a recorded trace against its program.
pub fn validate_trace(p: &Program, trace: &Trace) -> Result<(), TraceError> {
    let mut defined: BTreeSet<&Location> = BTreeSet::new();
    for (pos, ev) in trace.events.iter().enumerate() {
        if ev.idx != pos {
            return Err(TraceError::NonDenseIndex { pos, idx: ev.idx });
        }
        if let Some(parent) = ev.ctrl_parent {
            if parent >= pos {
                return Err(TraceError::ForwardParent { idx: pos, parent });
            }
            if trace.events[parent].kind != EventKind::Predicate {
                return Err(TraceError::BadCtrlParent { idx: pos, parent });
            }
        }
        if let Some(parent) = ev.call_parent {
            if parent >= pos {
                return Err(TraceError::ForwardParent { idx: pos, parent });
            }
            if trace.events[parent].kind != EventKind::Call {
                return Err(TraceError::BadCallParent { idx: pos, parent });
            }
        }
        let is_pred_stmt = p
            .find_stmt(ev.stmt)
            .is_some_and(|s| matches!(s.kind, StmtKind::If { .. } | StmtKind::While { .. }));
        let is_pred_event = ev.kind == EventKind::Predicate;
        if ev.outcome.is_some() != is_pred_event || (is_pred_event && !is_pred_stmt) {
            return Err(TraceError::BadOutcome { idx: pos });
        }
        for loc in &ev.uses {
            if !loc.is_initialized_global() && !defined.contains(loc) {
                return Err(TraceError::UndefinedUse {
                    idx: pos,
                    loc: loc.to_string(),
                });
            }
        }
        defined.extend(ev.defs.iter());
    }
    Ok(())
}

/// Indices of events whose statement belongs to the program under test.
pub fn put_events(trace: &Trace) -> impl Iterator<Item = &TraceEvent> {
    trace.events.iter().filter(|e| e.put)
}

/// Statement reference of every event, for quick comparisons in tests.
pub fn stmt_sequence(trace: &Trace) -> Vec<StmtRef> {
    trace.events.iter().map(|e| e.stmt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, AssertionId, P1_SOURCE};

    fn s(n: u32) -> StmtRef {
        StmtRef::Stmt(StatementId(n))
    }

    #[test]
    fn p1_trace_shape() {
        let p = parse(P1_SOURCE).unwrap();
        let run = run_test(&p, "t1", &ExecConfig::default()).unwrap();
        assert_eq!(run.outcome.status, TestStatus::Pass);
        let seq = stmt_sequence(&run.trace);
        // call binding, s1..s5, completion of the test statement, A1
        assert_eq!(
            seq,
            vec![s(6), s(1), s(2), s(3), s(4), s(5), s(6), StmtRef::Assert(AssertionId(1))]
        );
        assert_eq!(run.trace.events[2].outcome, Some(true));
        assert_eq!(run.trace.events[3].ctrl_parent, Some(2));
        assert!(run.trace.events[1..6].iter().all(|e| e.call_parent == Some(0)));
        assert_eq!(run.outcome.steps, 8);
        validate_trace(&p, &run.trace).unwrap();
    }

    #[test]
    fn single_assert_test() {
        let p = parse("test t { assert true; }").unwrap();
        let run = run_test(&p, "t", &ExecConfig::default()).unwrap();
        assert_eq!(run.trace.len(), 1);
        assert!(run.outcome.status.is_pass());
    }

    #[test]
    fn division_by_zero_traps() {
        let p = parse("fn f(x) { return 1 / x; } test t { r = f(0); }").unwrap();
        let run = run_test(&p, "t", &ExecConfig::default()).unwrap();
        assert!(matches!(
            run.outcome.status,
            TestStatus::Trap { kind: TrapKind::DivByZero, .. }
        ));
        let p = parse("test t { x = 1 / 0; }").unwrap();
        let run = run_test(&p, "t", &ExecConfig::default()).unwrap();
        assert!(matches!(
            run.outcome.status,
            TestStatus::Trap { kind: TrapKind::DivByZero, .. }
        ));
    }

    #[test]
    fn other_traps() {
        let cfg = ExecConfig::default();
        let p = parse("global a[2]; test t { a[2] = 1; }").unwrap();
        assert!(matches!(
            run_test(&p, "t", &cfg).unwrap().outcome.status,
            TestStatus::Trap { kind: TrapKind::IndexOutOfBounds, .. }
        ));
        let p = parse("fn f() { x = 1; } test t { y = f(); }").unwrap();
        assert!(matches!(
            run_test(&p, "t", &cfg).unwrap().outcome.status,
            TestStatus::Trap { kind: TrapKind::MissingReturn, .. }
        ));
        let p = parse("fn f(n) { return f(n + 1); } test t { y = f(0); }").unwrap();
        assert!(matches!(
            run_test(&p, "t", &cfg).unwrap().outcome.status,
            TestStatus::Trap { kind: TrapKind::StackOverflow, .. }
        ));
        let p = parse("fn f(c) { if (c) { y = 1; } return y; } test t { r = f(false); }").unwrap();
        assert!(matches!(
            run_test(&p, "t", &cfg).unwrap().outcome.status,
            TestStatus::Trap { kind: TrapKind::Uninitialized, .. }
        ));
    }

    #[test]
    fn step_limit_times_out() {
        let p = parse("test t { while (true) { x = 1; } }").unwrap();
        let cfg = ExecConfig {
            step_limit: 50,
            ..ExecConfig::default()
        };
        let run = run_test(&p, "t", &cfg).unwrap();
        assert_eq!(run.outcome.status, TestStatus::Timeout);
        assert_eq!(run.outcome.steps, 50);
        assert!(run_test(&p, "t", &ExecConfig { step_limit: 0, ..cfg }).is_err());
    }

    #[test]
    fn unknown_test_is_an_error() {
        let p = parse(P1_SOURCE).unwrap();
        assert_eq!(
            run_test(&p, "nope", &ExecConfig::default()),
            Err(ExecError::UnknownTest("nope".into()))
        );
    }

    #[test]
    fn suite_runs_tests_independently() {
        let src = "global g = 0;
            fn bump() { g = g + 1; return g; }
            test a { x = bump(); assert x == 1; }
            test b { x = bump(); assert x == 2; }
            test c { x = bump(); assert x == 1; }";
        let p = parse(src).unwrap();
        let suite = run_suite(&p, &ExecConfig::default()).unwrap();
        assert_eq!(suite.len(), 3);
        assert!(suite["a"].outcome.status.is_pass());
        assert_eq!(
            suite["b"].outcome.status,
            TestStatus::AssertionFailure(AssertionId(2))
        );
        assert!(suite["c"].outcome.status.is_pass());
        assert!(run_suite(&parse("").unwrap(), &ExecConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn criteria_from_p1() {
        let p = parse(P1_SOURCE).unwrap();
        let suite = run_suite(&p, &ExecConfig::default()).unwrap();
        let crit = generate_criteria(&suite);
        assert_eq!(crit.len(), 1);
        assert_eq!(crit[0].event, 7);
        let expected: BTreeSet<_> = [Location::Local {
            activation: 0,
            name: "r".into(),
        }]
        .into();
        assert_eq!(crit[0].locations, expected);
    }

    #[test]
    fn criteria_per_assertion_instance() {
        let src = "test t { i = 0; while (i < 3) { assert i >= 0; i = i + 1; } }";
        let p = parse(src).unwrap();
        let suite = run_suite(&p, &ExecConfig::default()).unwrap();
        assert_eq!(generate_criteria(&suite).len(), 3);
        let mut p = p;
        p.set_enabled(|_| false);
        let suite = run_suite(&p, &ExecConfig::default()).unwrap();
        assert!(generate_criteria(&suite).is_empty());
    }

    #[test]
    fn p1_trace_dump_format() {
        let p = parse(P1_SOURCE).unwrap();
        let run = run_test(&p, "t1", &ExecConfig::default()).unwrap();
        let mut buf = Vec::new();
        run.trace.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(
            lines[0],
            r#"{"idx":0,"stmt":"s6","test":"t1","defs":["local:1:a","local:1:b"],"uses":[],"ctrl_parent":null,"call_parent":null,"outcome":null}"#
        );
        assert_eq!(
            lines[4],
            r#"{"idx":4,"stmt":"s4","test":"t1","defs":["global:g"],"uses":["local:1:a","local:1:b"],"ctrl_parent":null,"call_parent":0,"outcome":null}"#
        );
        assert_eq!(
            lines[6],
            r#"{"idx":6,"stmt":"s6","test":"t1","defs":["local:0:r"],"uses":["ret:0"],"ctrl_parent":null,"call_parent":null,"outcome":null}"#
        );
    }

    #[test]
    fn array_locations_are_element_precise() {
        let src = "global a[4]; fn set(i, v) { a[i] = v; return a[i]; } test t { x = set(3, 9); assert a[3] == 9; }";
        let p = parse(src).unwrap();
        let run = run_test(&p, "t", &ExecConfig::default()).unwrap();
        let elem = Location::ArrayElem {
            name: "a".into(),
            index: 3,
        };
        assert_eq!(elem.to_string(), "arr:global:a[3]");
        assert!(run.trace.events.iter().any(|e| e.defs.contains(&elem)));
        validate_trace(&p, &run.trace).unwrap();
    }

    #[test]
    fn observe_captures_value_after_statement() {
        let p = parse(P1_SOURCE).unwrap();
        let (status, v) = observe(&p, "t1", StatementId(6), &Expr::var("g"), &ExecConfig::default()).unwrap();
        assert!(status.is_pass());
        assert_eq!(v, Some(Ok(Value::Int(7))));
    }
}
