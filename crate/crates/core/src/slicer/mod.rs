//! Dynamic dependence graphs and backward dynamic slicing.
//!
//! A slice starts at a criterion event, follows the data dependences of the
//! criterion's locations, and then closes transitively over data, control
//! and call dependences. Its statement projection keeps only statements of
//! the program under test; the assertion event itself is test code.

pub mod oracle;

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::interp::{Location, Trace};
use crate::lang::{BranchArm, StatementId, StmtRef};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SlicingCriterion {
    pub test: String,
    pub event: usize,
    pub locations: BTreeSet<Location>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SliceError {
    #[error("event {event}: use of {loc} has no prior definition")]
    DanglingUse { event: usize, loc: String },
    #[error("criterion event {0} is not in the trace")]
    UnknownEvent(usize),
    #[error("criterion location {loc} is not used by event {event}")]
    NotAUse { event: usize, loc: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataEdge {
    /// The using (later) event.
    pub from: usize,
    /// The defining (earlier) event.
    pub to: usize,
    pub loc: Location,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct NodeInfo {
    stmt: StmtRef,
    put: bool,
    outcome: Option<bool>,
    ctrl_parent: Option<usize>,
    call_parent: Option<usize>,
}

/// Trace-indexed dependence graph. All edges point from a later event to
/// an earlier one.
#[derive(Debug, Clone)]
pub struct DynamicDependenceGraph {
    pub test: String,
    pub data_edges: Vec<DataEdge>,
    pub ctrl_edges: Vec<(usize, usize)>,
    pub call_edges: Vec<(usize, usize)>,
    nodes: Vec<NodeInfo>,
    /// Per node: indices into `data_edges` leaving that node.
    data_out: Vec<Vec<usize>>,
    uses: Vec<BTreeSet<Location>>,
}

impl DynamicDependenceGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn stmt(&self, event: usize) -> StmtRef {
        self.nodes[event].stmt
    }

    /// Data dependences of `event`, as (location, defining event).
    pub fn data_preds(&self, event: usize) -> impl Iterator<Item = (&Location, usize)> {
        self.data_out[event].iter().map(|&i| {
            let e = &self.data_edges[i];
            (&e.loc, e.to)
        })
    }

    /// Every predecessor of `event` over data, control and call edges.
    pub fn preds(&self, event: usize) -> impl Iterator<Item = usize> + '_ {
        let n = &self.nodes[event];
        self.data_out[event]
            .iter()
            .map(|&i| self.data_edges[i].to)
            .chain(n.ctrl_parent)
            .chain(n.call_parent)
    }
}

/// Builds the graph in one forward pass using a last-definition table.
pub fn build_ddg(trace: &Trace) -> Result<DynamicDependenceGraph, SliceError> {
    let mut last_def: HashMap<&Location, usize> = HashMap::new();
    let mut g = DynamicDependenceGraph {
        test: trace.test.clone(),
        data_edges: Vec::new(),
        ctrl_edges: Vec::new(),
        call_edges: Vec::new(),
        nodes: Vec::with_capacity(trace.len()),
        data_out: Vec::with_capacity(trace.len()),
        uses: Vec::with_capacity(trace.len()),
    };
    for ev in &trace.events {
        let mut out = Vec::with_capacity(ev.uses.len());
        for loc in &ev.uses {
            match last_def.get(loc) {
                Some(&def) => {
                    out.push(g.data_edges.len());
                    g.data_edges.push(DataEdge {
                        from: ev.idx,
                        to: def,
                        loc: loc.clone(),
                    });
                }
                None if loc.is_initialized_global() => {}
                None => {
                    return Err(SliceError::DanglingUse {
                        event: ev.idx,
                        loc: loc.to_string(),
                    })
                }
            }
        }
        g.data_out.push(out);
        g.uses.push(ev.uses.clone());
        if let Some(p) = ev.ctrl_parent {
            g.ctrl_edges.push((ev.idx, p));
        }
        if let Some(p) = ev.call_parent {
            g.call_edges.push((ev.idx, p));
        }
        g.nodes.push(NodeInfo {
            stmt: ev.stmt,
            put: ev.put,
            outcome: ev.outcome,
            ctrl_parent: ev.ctrl_parent,
            call_parent: ev.call_parent,
        });
        for loc in &ev.defs {
            last_def.insert(loc, ev.idx);
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    pub criterion: SlicingCriterion,
    pub events: BTreeSet<usize>,
    /// PUT statements among `events`.
    pub statements: BTreeSet<StatementId>,
    /// (predicate, outcome) of every PUT predicate instance among `events`.
    pub arms: BTreeSet<BranchArm>,
}

impl Slice {
    pub(crate) fn from_events(
        criterion: SlicingCriterion,
        events: BTreeSet<usize>,
        info: impl Fn(usize) -> (StmtRef, bool, Option<bool>),
    ) -> Slice {
        let mut statements = BTreeSet::new();
        let mut arms = BTreeSet::new();
        for &e in &events {
            let (stmt, put, outcome) = info(e);
            let Some(id) = stmt.statement().filter(|_| put) else { continue };
            statements.insert(id);
            if let Some(outcome) = outcome {
                arms.insert(BranchArm { pred: id, outcome });
            }
        }
        Slice {
            criterion,
            events,
            statements,
            arms,
        }
    }
}

fn check_criterion(
    c: &SlicingCriterion,
    len: usize,
    uses: impl Fn(&Location) -> bool,
) -> Result<(), SliceError> {
    if c.event >= len {
        return Err(SliceError::UnknownEvent(c.event));
    }
    if let Some(loc) = c.locations.iter().find(|l| !uses(l)) {
        return Err(SliceError::NotAUse {
            event: c.event,
            loc: loc.to_string(),
        });
    }
    Ok(())
}

pub fn backward_slice(
    ddg: &DynamicDependenceGraph,
    c: &SlicingCriterion,
) -> Result<Slice, SliceError> {
    check_criterion(c, ddg.node_count(), |loc| ddg.uses[c.event].contains(loc))?;
    let root = &ddg.nodes[c.event];
    let mut seen = vec![false; ddg.node_count()];
    let mut stack: Vec<usize> = ddg
        .data_preds(c.event)
        .filter(|(loc, _)| c.locations.contains(*loc))
        .map(|(_, def)| def)
        .chain(root.ctrl_parent)
        .chain(root.call_parent)
        .collect();
    seen[c.event] = true;
    while let Some(e) = stack.pop() {
        if std::mem::replace(&mut seen[e], true) {
            continue;
        }
        stack.extend(ddg.preds(e).filter(|&p| !seen[p]));
    }
    let events = seen
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| s.then_some(i))
        .collect();
    Ok(Slice::from_events(c.clone(), events, |e| {
        let n = &ddg.nodes[e];
        (n.stmt, n.put, n.outcome)
    }))
}

/// Checked statements and checked branch arms: the union over all slices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckedSet {
    pub statements: BTreeSet<StatementId>,
    pub arms: BTreeSet<BranchArm>,
}

pub fn union_slices<'a>(slices: impl IntoIterator<Item = &'a Slice>) -> CheckedSet {
    let mut out = CheckedSet::default();
    for s in slices {
        out.statements.extend(s.statements.iter().copied());
        out.arms.extend(s.arms.iter().copied());
    }
    out
}

#[derive(Serialize)]
struct SliceRecord<'a> {
    test: &'a str,
    event: usize,
    statements: Vec<StatementId>,
    arm_outcomes: Vec<(StatementId, bool)>,
}

/// One JSON object per slice.
pub fn write_slices_jsonl<'a>(
    slices: impl IntoIterator<Item = &'a Slice>,
    mut w: impl Write,
) -> io::Result<()> {
    for s in slices {
        let record = SliceRecord {
            test: &s.criterion.test,
            event: s.criterion.event,
            statements: s.statements.iter().copied().collect(),
            arm_outcomes: s.arms.iter().map(|a| (a.pred, a.outcome)).collect(),
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{generate_criteria, run_suite, run_test, ExecConfig};
    use crate::lang::{parse, P1_SOURCE};

    fn ids(v: &[u32]) -> BTreeSet<StatementId> {
        v.iter().copied().map(StatementId).collect()
    }

    fn p1() -> (Trace, SlicingCriterion) {
        let p = parse(P1_SOURCE).unwrap();
        let suite = run_suite(&p, &ExecConfig::default()).unwrap();
        let c = generate_criteria(&suite).remove(0);
        (suite["t1"].trace.clone(), c)
    }

    #[test]
    fn single_event_graph() {
        let p = parse("test t { assert true; }").unwrap();
        let run = run_test(&p, "t", &ExecConfig::default()).unwrap();
        let g = build_ddg(&run.trace).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.data_edges.is_empty() && g.ctrl_edges.is_empty() && g.call_edges.is_empty());
    }

    #[test]
    fn straight_line_chain() {
        let p = parse("test t { x = 1; y = x; z = y; }").unwrap();
        let run = run_test(&p, "t", &ExecConfig::default()).unwrap();
        let g = build_ddg(&run.trace).unwrap();
        let edges: Vec<_> = g.data_edges.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(edges, vec![(1, 0), (2, 1)]);
    }

    #[test]
    fn p1_graph_edges() {
        let (trace, _) = p1();
        let g = build_ddg(&trace).unwrap();
        let stmt_edge = |from: u32, to: u32| {
            g.data_edges.iter().any(|e| {
                g.stmt(e.from) == StmtRef::Stmt(StatementId(from))
                    && g.stmt(e.to) == StmtRef::Stmt(StatementId(to))
            })
        };
        // s3 -> s1 and s5 -> s3 via d
        assert!(stmt_edge(3, 1));
        assert!(stmt_edge(5, 3));
        // A1 -> def of r (event 6, the completion of the test statement)
        assert!(g.data_preds(7).any(|(_, def)| def == 6));
        // s3 is control dependent on s2
        assert!(g.ctrl_edges.contains(&(3, 2)));
        // nothing in the assertion's dependences reaches s4
        assert!(!g.data_edges.iter().any(|e| e.to == 4));
    }

    #[test]
    fn p1_slice() {
        let (trace, c) = p1();
        let g = build_ddg(&trace).unwrap();
        let s = backward_slice(&g, &c).unwrap();
        assert_eq!(s.statements, ids(&[1, 2, 3, 5]));
        assert!(s.events.contains(&7));
        let u = union_slices([&s]);
        assert_eq!(u.statements, ids(&[1, 2, 3, 5]));
        assert_eq!(
            u.arms,
            [BranchArm { pred: StatementId(2), outcome: true }].into()
        );
    }

    #[test]
    fn empty_criterion_without_parents_is_empty() {
        let (trace, mut c) = p1();
        c.locations.clear();
        let g = build_ddg(&trace).unwrap();
        let s = backward_slice(&g, &c).unwrap();
        assert!(s.statements.is_empty());
        assert_eq!(s.events, [7].into());
    }

    #[test]
    fn loop_predicates_enter_the_slice() {
        let src = "global acc = 0;
            fn f(n) { i = 0; while (i < n) { acc = acc + i; i = i + 1; } return 0; }
            test t { x = f(3); assert acc == 3; }";
        let p = parse(src).unwrap();
        let suite = run_suite(&p, &ExecConfig::default()).unwrap();
        let c = generate_criteria(&suite).remove(0);
        let g = build_ddg(&suite["t"].trace).unwrap();
        let s = backward_slice(&g, &c).unwrap();
        // i = 0, while, acc = acc + i, i = i + 1
        assert_eq!(s.statements, ids(&[1, 2, 3, 4]));
        let enter = BranchArm { pred: StatementId(2), outcome: true };
        let exit = BranchArm { pred: StatementId(2), outcome: false };
        assert!(s.arms.contains(&enter));
        assert!(!s.arms.contains(&exit));
    }

    #[test]
    fn bad_criteria_are_rejected() {
        let (trace, c) = p1();
        let g = build_ddg(&trace).unwrap();
        let far = SlicingCriterion { event: 99, ..c.clone() };
        assert_eq!(backward_slice(&g, &far), Err(SliceError::UnknownEvent(99)));
        let mut wrong = c;
        wrong.locations.insert(Location::CallResult(3));
        assert!(matches!(backward_slice(&g, &wrong), Err(SliceError::NotAUse { .. })));
    }

    #[test]
    fn dangling_use_is_reported() {
        let (mut trace, _) = p1();
        trace.events[1].uses.insert(Location::Local {
            activation: 9,
            name: "zz".into(),
        });
        assert!(matches!(build_ddg(&trace), Err(SliceError::DanglingUse { event: 1, .. })));
    }

    #[test]
    fn union_of_disjoint_slices() {
        let (trace, c) = p1();
        let mk = |stmts: &[u32]| Slice {
            criterion: c.clone(),
            events: BTreeSet::new(),
            statements: ids(stmts),
            arms: BTreeSet::new(),
        };
        let u = union_slices(&[mk(&[1, 2]), mk(&[4])]);
        assert_eq!(u.statements, ids(&[1, 2, 4]));
        assert_eq!(union_slices(&[]), CheckedSet::default());
        drop(trace);
    }

    #[test]
    fn slice_dump_format() {
        let (trace, c) = p1();
        let s = backward_slice(&build_ddg(&trace).unwrap(), &c).unwrap();
        let mut buf = Vec::new();
        write_slices_jsonl([&s], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"test\":\"t1\",\"event\":7,\"statements\":[\"s1\",\"s2\",\"s3\",\"s5\"],\"arm_outcomes\":[[\"s2\",true]]}\n"
        );
    }
}
