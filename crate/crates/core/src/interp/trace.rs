//! Trace data model and its JSON Lines dump format.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, Write};

use serde::{Serialize, Serializer};

use crate::lang::{AssertionId, StatementId, StmtRef};

/// Memory granularity for def/use tracking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Local { activation: u32, name: String },
    Global(String),
    /// Element of a global array at a concrete runtime index.
    ArrayElem { name: String, index: i64 },
    /// Value returned to the call whose binding event has this index.
    CallResult(usize),
}

impl Location {
    /// Globals (scalars and array elements) start out defined by their
    /// initializers, so a use without a prior def is legal for them.
    pub fn is_initialized_global(&self) -> bool {
        matches!(self, Location::Global(_) | Location::ArrayElem { .. })
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Local { activation, name } => write!(f, "local:{activation}:{name}"),
            Location::Global(name) => write!(f, "global:{name}"),
            Location::ArrayElem { name, index } => write!(f, "arr:global:{name}[{index}]"),
            Location::CallResult(idx) => write!(f, "ret:{idx}"),
        }
    }
}

impl Serialize for Location {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// What produced an event. Not part of the dump format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Completion of an assign, array-assign, call or return statement.
    Stmt,
    /// Evaluation of an if/while condition.
    Predicate,
    /// Parameter binding at a call; `stmt` is the statement containing the
    /// call expression.
    Call,
    Assert,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub idx: usize,
    pub stmt: StmtRef,
    pub defs: BTreeSet<Location>,
    pub uses: BTreeSet<Location>,
    pub ctrl_parent: Option<usize>,
    pub call_parent: Option<usize>,
    pub outcome: Option<bool>,
    pub kind: EventKind,
    /// `stmt` belongs to the program under test.
    pub put: bool,
}

impl TraceEvent {
    pub fn put_statement(&self) -> Option<StatementId> {
        if self.put {
            self.stmt.statement()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub test: String,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Writes one JSON object per event.
    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for ev in &self.events {
            let record = EventRecord {
                idx: ev.idx,
                stmt: ev.stmt,
                test: &self.test,
                defs: &ev.defs,
                uses: &ev.uses,
                ctrl_parent: ev.ctrl_parent,
                call_parent: ev.call_parent,
                outcome: ev.outcome,
            };
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct EventRecord<'a> {
    idx: usize,
    stmt: StmtRef,
    test: &'a str,
    defs: &'a BTreeSet<Location>,
    uses: &'a BTreeSet<Location>,
    ctrl_parent: Option<usize>,
    call_parent: Option<usize>,
    outcome: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrapKind {
    DivByZero,
    IndexOutOfBounds,
    MissingReturn,
    Uninitialized,
    TypeMismatch,
    StackOverflow,
}

impl fmt::Display for TrapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrapKind::DivByZero => "div-by-zero",
            TrapKind::IndexOutOfBounds => "index-out-of-bounds",
            TrapKind::MissingReturn => "missing-return",
            TrapKind::Uninitialized => "uninitialized",
            TrapKind::TypeMismatch => "type-mismatch",
            TrapKind::StackOverflow => "stack-overflow",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TestStatus {
    Pass,
    AssertionFailure(AssertionId),
    Trap { kind: TrapKind, stmt: StmtRef },
    Timeout,
}

impl TestStatus {
    pub fn is_pass(&self) -> bool {
        matches!(self, TestStatus::Pass)
    }
}

impl fmt::Display for TestStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestStatus::Pass => f.write_str("pass"),
            TestStatus::AssertionFailure(site) => write!(f, "assertion-failure({site})"),
            TestStatus::Trap { kind, stmt } => write!(f, "trap({kind}, {stmt})"),
            TestStatus::Timeout => f.write_str("timeout"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestOutcome {
    pub test: String,
    pub status: TestStatus,
    pub steps: usize,
}
