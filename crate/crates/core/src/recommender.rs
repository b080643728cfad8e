//! Static assertion recommender.
//!
//! A flow-insensitive static dependence graph over-approximates the dynamic
//! dependences of every run. Candidate assertion targets (scalar globals
//! and call results already bound in tests) are scored by how many gap
//! statements their static backward closure contains.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::interp::{self, EventKind, ExecConfig, ExecError, TestStatus, Trace, TrapKind, Value};
use crate::lang::{
    walk_stmts, AssertionId, BinOp, Expr, GlobalKind, Program, Span, StatementId, Stmt, StmtKind,
    StmtRef,
};
use crate::slicer::{build_ddg, SliceError};

/// A statement, or the parameter-binding part of the calls it contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SdgNode {
    Stmt(StmtRef),
    Call(StmtRef),
}

impl SdgNode {
    fn stmt(self) -> StmtRef {
        match self {
            SdgNode::Stmt(s) | SdgNode::Call(s) => s,
        }
    }
}

impl fmt::Display for SdgNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SdgNode::Stmt(s) => write!(f, "{s}"),
            SdgNode::Call(s) => write!(f, "call@{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Data,
    Control,
    Call,
}

/// Edges point from a dependent node to the node it depends on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StaticDependenceGraph {
    edges: BTreeSet<(SdgNode, SdgNode, EdgeKind)>,
    preds: BTreeMap<SdgNode, BTreeSet<SdgNode>>,
    put: BTreeSet<StatementId>,
}

impl StaticDependenceGraph {
    fn add(&mut self, from: SdgNode, to: SdgNode, kind: EdgeKind) {
        self.edges.insert((from, to, kind));
        self.preds.entry(from).or_default().insert(to);
    }

    pub fn edges(&self) -> impl Iterator<Item = &(SdgNode, SdgNode, EdgeKind)> {
        self.edges.iter()
    }

    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.2 == kind).count()
    }

    pub fn has_edge(&self, from: SdgNode, to: SdgNode) -> bool {
        self.preds.get(&from).is_some_and(|p| p.contains(&to))
    }

    /// Backward reachability from `roots`, roots included.
    pub fn closure(&self, roots: impl IntoIterator<Item = SdgNode>) -> BTreeSet<SdgNode> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<SdgNode> = roots.into_iter().collect();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if let Some(ps) = self.preds.get(&n) {
                stack.extend(ps.iter().filter(|p| !seen.contains(*p)));
            }
        }
        seen
    }

    /// Program-under-test statements in the closure of `roots`.
    pub fn closure_statements(
        &self,
        roots: impl IntoIterator<Item = SdgNode>,
    ) -> BTreeSet<StatementId> {
        self.closure(roots)
            .into_iter()
            .filter_map(|n| n.stmt().statement())
            .filter(|id| self.put.contains(id))
            .collect()
    }

    /// Dynamic dependences of `trace`, lifted to nodes, that have no static
    /// edge. Empty when the over-approximation holds.
    pub fn missing_dynamic_edges(&self, trace: &Trace) -> Result<Vec<(SdgNode, SdgNode)>, SliceError> {
        let ddg = build_ddg(trace)?;
        let node = |e: usize| {
            let ev = &trace.events[e];
            match ev.kind {
                EventKind::Call => SdgNode::Call(ev.stmt),
                _ => SdgNode::Stmt(ev.stmt),
            }
        };
        let dynamic: BTreeSet<(SdgNode, SdgNode)> = ddg
            .data_edges
            .iter()
            .map(|e| (e.from, e.to))
            .chain(ddg.ctrl_edges.iter().copied())
            .chain(ddg.call_edges.iter().copied())
            .map(|(a, b)| (node(a), node(b)))
            .collect();
        Ok(dynamic
            .into_iter()
            .filter(|&(a, b)| !self.has_edge(a, b))
            .collect())
    }
}

#[derive(Default)]
struct ExprUses<'a> {
    vars: Vec<&'a str>,
    arrays: Vec<&'a str>,
    calls: Vec<&'a str>,
}

/// Splits the uses of `e` between the statement's own evaluation (`top`)
/// and the argument evaluation of the calls it contains (`args`).
fn scan<'a>(e: &'a Expr, top: &mut ExprUses<'a>, args: &mut ExprUses<'a>) {
    match e {
        Expr::Int(_) | Expr::Bool(_) => {}
        Expr::Var(v) => top.vars.push(v),
        Expr::Index { array, index } => {
            top.arrays.push(array);
            scan(index, top, args);
        }
        Expr::Unary { expr, .. } => scan(expr, top, args),
        Expr::Binary { lhs, rhs, .. } => {
            scan(lhs, top, args);
            scan(rhs, top, args);
        }
        Expr::Call { func, args: a } => {
            top.calls.push(func);
            // every binding of the statement shares one node
            for x in a {
                x.walk(&mut |n| match n {
                    Expr::Var(v) => args.vars.push(v),
                    Expr::Index { array, .. } => args.arrays.push(array),
                    Expr::Call { func, .. } => args.calls.push(func),
                    _ => {}
                });
            }
        }
    }
}

struct Body<'a> {
    func: Option<&'a str>,
    params: &'a [String],
    stmts: &'a [Stmt],
}

fn bodies(p: &Program) -> Vec<Body<'_>> {
    p.functions()
        .map(|f| Body {
            func: Some(&f.name),
            params: &f.params,
            stmts: &f.body,
        })
        .chain(p.tests().map(|t| Body {
            func: None,
            params: &[],
            stmts: &t.body,
        }))
        .collect()
}

fn called_functions(s: &Stmt) -> Vec<&str> {
    let mut out = Vec::new();
    for e in s.own_exprs() {
        e.walk(&mut |n| {
            if let Expr::Call { func, .. } = n {
                out.push(func.as_str());
            }
        });
    }
    out
}

/// Visits every statement with its nearest enclosing predicate.
fn walk_with_pred<'a>(body: &'a [Stmt], pred: Option<StmtRef>, f: &mut impl FnMut(&'a Stmt, Option<StmtRef>)) {
    for s in body {
        f(s, pred);
        for c in s.children() {
            walk_with_pred(std::slice::from_ref(c), Some(s.id), f);
        }
    }
}

pub fn build_sdg(p: &Program) -> StaticDependenceGraph {
    let scalar_globals: BTreeSet<&str> = p
        .globals()
        .filter(|g| matches!(g.kind, GlobalKind::Scalar(_)))
        .map(|g| g.name.as_str())
        .collect();

    let mut call_sites: HashMap<&str, Vec<StmtRef>> = HashMap::new();
    let mut returns: HashMap<&str, Vec<StmtRef>> = HashMap::new();
    let mut global_defs: HashMap<&str, Vec<StmtRef>> = HashMap::new();
    let mut array_defs: HashMap<&str, Vec<StmtRef>> = HashMap::new();
    let bodies = bodies(p);
    let mut local_defs: Vec<HashMap<&str, Vec<StmtRef>>> = Vec::with_capacity(bodies.len());
    for b in &bodies {
        let mut locals: HashMap<&str, Vec<StmtRef>> = HashMap::new();
        walk_stmts(b.stmts, &mut |s| {
            for f in called_functions(s) {
                call_sites.entry(f).or_default().push(s.id);
            }
            match &s.kind {
                StmtKind::Assign { target, .. } if scalar_globals.contains(target.as_str()) => {
                    global_defs.entry(target).or_default().push(s.id);
                }
                StmtKind::Assign { target, .. } => locals.entry(target).or_default().push(s.id),
                StmtKind::ArrayAssign { array, .. } => array_defs.entry(array).or_default().push(s.id),
                StmtKind::Return(Some(_)) => {
                    if let Some(f) = b.func {
                        returns.entry(f).or_default().push(s.id);
                    }
                }
                _ => {}
            }
        });
        local_defs.push(locals);
    }

    let mut g = StaticDependenceGraph {
        put: p.put_statements().iter().filter_map(|s| s.id.statement()).collect(),
        ..Default::default()
    };
    let none = Vec::new();
    for (b, locals) in bodies.iter().zip(&local_defs) {
        let sites = b.func.and_then(|f| call_sites.get(f)).unwrap_or(&none);
        walk_with_pred(b.stmts, None, &mut |s, pred| {
            let mut top = ExprUses::default();
            let mut args = ExprUses::default();
            for e in s.own_exprs() {
                scan(e, &mut top, &mut args);
            }
            if matches!(s.kind, StmtKind::Call(_)) {
                // a discarded result is never used
                top.calls.clear();
            }
            let has_call = !called_functions(s).is_empty();
            let stmt_node = SdgNode::Stmt(s.id);
            let call_node = SdgNode::Call(s.id);
            let mut nodes = vec![(stmt_node, &top)];
            if has_call {
                nodes.push((call_node, &args));
            }
            for (node, uses) in nodes {
                for v in &uses.vars {
                    let defs = if scalar_globals.contains(v) {
                        global_defs.get(v)
                    } else {
                        locals.get(v)
                    };
                    for &d in defs.unwrap_or(&none) {
                        g.add(node, SdgNode::Stmt(d), EdgeKind::Data);
                    }
                    if b.params.iter().any(|p| p == v) {
                        for &site in sites {
                            g.add(node, SdgNode::Call(site), EdgeKind::Data);
                        }
                    }
                }
                for a in &uses.arrays {
                    for &d in array_defs.get(a).unwrap_or(&none) {
                        g.add(node, SdgNode::Stmt(d), EdgeKind::Data);
                    }
                }
                for f in &uses.calls {
                    for &r in returns.get(f).unwrap_or(&none) {
                        g.add(node, SdgNode::Stmt(r), EdgeKind::Data);
                    }
                }
                if let Some(pred) = pred {
                    g.add(node, SdgNode::Stmt(pred), EdgeKind::Control);
                }
                for &site in sites {
                    g.add(node, SdgNode::Call(site), EdgeKind::Call);
                }
            }
        });
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TargetKind {
    Global,
    CallResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recommendation {
    pub rank: usize,
    pub kind: TargetKind,
    /// Name of the variable to assert on.
    pub target: String,
    pub test: String,
    /// Top-level test statement after which the assertion goes.
    pub after: StatementId,
    pub would_check: BTreeSet<StatementId>,
    pub score: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Recommendations {
    pub items: Vec<Recommendation>,
    /// Gap statements no candidate's closure reaches.
    pub unobservable: Vec<StatementId>,
}

/// Functions transitively called from `stmts`.
fn reachable_functions<'a>(p: &'a Program, stmts: &'a [Stmt]) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<&str> = Vec::new();
    walk_stmts(stmts, &mut |s| stack.extend(called_functions(s)));
    while let Some(f) = stack.pop() {
        if !seen.insert(f) {
            continue;
        }
        if let Some(func) = p.function(f) {
            walk_stmts(&func.body, &mut |s| stack.extend(called_functions(s)));
        }
    }
    seen
}

/// True when an enabled assertion after `after` in `body` already reads
/// `target` and nothing in between may redefine it.
fn already_asserted(body: &[Stmt], after: StatementId, target: &str) -> bool {
    let start = match body.iter().position(|s| s.id.statement() == Some(after)) {
        Some(i) => i + 1,
        None => return false,
    };
    for s in &body[start..] {
        match &s.kind {
            StmtKind::Assert { cond, enabled: true } => {
                let mut reads = false;
                cond.walk(&mut |e| reads |= matches!(e, Expr::Var(v) if v == target));
                if reads {
                    return true;
                }
            }
            StmtKind::Assert { .. } => {}
            _ if !called_functions(s).is_empty() => return false,
            StmtKind::Assign { target: t, .. } if t == target => return false,
            _ => {}
        }
    }
    false
}

fn candidates(p: &Program, sdg: &StaticDependenceGraph, gaps: &BTreeSet<StatementId>) -> Vec<Recommendation> {
    let mut out = Vec::new();
    let scalar_globals: Vec<&str> = p
        .globals()
        .filter(|g| matches!(g.kind, GlobalKind::Scalar(_)))
        .map(|g| g.name.as_str())
        .collect();

    for g in scalar_globals {
        let mut best: Option<Recommendation> = None;
        for t in p.tests() {
            let after = t
                .body
                .iter()
                .filter(|s| !called_functions(s).is_empty())
                .filter_map(|s| s.id.statement())
                .last();
            let Some(after) = after else { continue };
            let reach = reachable_functions(p, &t.body);
            let mut roots = Vec::new();
            for f in p.functions().filter(|f| reach.contains(f.name.as_str())) {
                walk_stmts(&f.body, &mut |s| {
                    if matches!(&s.kind, StmtKind::Assign { target, .. } if target == g) {
                        roots.push(SdgNode::Stmt(s.id));
                    }
                });
            }
            walk_stmts(&t.body, &mut |s| {
                if matches!(&s.kind, StmtKind::Assign { target, .. } if target == g) {
                    roots.push(SdgNode::Stmt(s.id));
                }
            });
            if already_asserted(&t.body, after, g) {
                continue;
            }
            let would_check: BTreeSet<StatementId> =
                sdg.closure_statements(roots).intersection(gaps).copied().collect();
            let score = would_check.len();
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(Recommendation {
                    rank: 0,
                    kind: TargetKind::Global,
                    target: g.to_string(),
                    test: t.name.clone(),
                    after,
                    would_check,
                    score,
                });
            }
        }
        out.extend(best);
    }

    for t in p.tests() {
        for s in &t.body {
            let (StmtRef::Stmt(id), StmtKind::Assign { target, value }) = (s.id, &s.kind) else {
                continue;
            };
            if !value.contains_call() || already_asserted(&t.body, id, target) {
                continue;
            }
            let would_check: BTreeSet<StatementId> = sdg
                .closure_statements([SdgNode::Stmt(s.id)])
                .intersection(gaps)
                .copied()
                .collect();
            out.push(Recommendation {
                rank: 0,
                kind: TargetKind::CallResult,
                target: target.clone(),
                test: t.name.clone(),
                after: id,
                score: would_check.len(),
                would_check,
            });
        }
    }
    out
}

/// Top-`k` assertion targets by the number of gap statements they would
/// check. Candidates scoring zero are never emitted.
pub fn recommend(p: &Program, gaps: &[StatementId], k: usize) -> Recommendations {
    let gaps: BTreeSet<StatementId> = gaps.iter().copied().collect();
    if gaps.is_empty() {
        return Recommendations::default();
    }
    let sdg = build_sdg(p);
    let all = candidates(p, &sdg, &gaps);
    let reached: BTreeSet<StatementId> = all.iter().flat_map(|c| c.would_check.iter().copied()).collect();
    let mut items: Vec<Recommendation> = all.into_iter().filter(|c| c.score >= 1).collect();
    items.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then_with(|| a.would_check.first().cmp(&b.would_check.first()))
            .then_with(|| a.target.cmp(&b.target))
            .then_with(|| a.test.cmp(&b.test))
            .then_with(|| a.after.cmp(&b.after))
    });
    items.truncate(k);
    for (i, r) in items.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Recommendations {
        items,
        unobservable: gaps.difference(&reached).copied().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecommendError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("test `{test}` has no top-level statement {after}")]
    NoInsertionPoint { test: String, after: StatementId },
    #[error("test `{test}` fails before the insertion point: {status}")]
    NotGreen { test: String, status: TestStatus },
    #[error("`{target}` cannot be evaluated after {after}: {kind}")]
    NotEvaluable {
        target: String,
        after: StatementId,
        kind: TrapKind,
    },
}

/// Inserts `assert <target> == <observed value>;` at the recommendation's
/// insertion point. The value is recorded from one run of the enclosing
/// test on `p`.
pub fn apply_recommendation(
    p: &Program,
    r: &Recommendation,
    cfg: &ExecConfig,
) -> Result<Program, RecommendError> {
    let no_point = || RecommendError::NoInsertionPoint {
        test: r.test.clone(),
        after: r.after,
    };
    let tc = p.test(&r.test).ok_or_else(|| ExecError::UnknownTest(r.test.clone()))?;
    let pos = tc
        .body
        .iter()
        .position(|s| s.id == StmtRef::Stmt(r.after))
        .ok_or_else(no_point)?;
    let target = Expr::Var(r.target.clone());
    let (status, value) = interp::observe(p, &r.test, r.after, &target, cfg)?;
    let value: Value = match value {
        Some(Ok(v)) => v,
        Some(Err(kind)) => {
            return Err(RecommendError::NotEvaluable {
                target: r.target.clone(),
                after: r.after,
                kind,
            })
        }
        None => return Err(RecommendError::NotGreen { test: r.test.clone(), status }),
    };
    if !status.is_pass() {
        return Err(RecommendError::NotGreen { test: r.test.clone(), status });
    }
    let id = AssertionId(p.max_assertion_id() + 1);
    let mut q = p.clone();
    let body = &mut q
        .tests_mut()
        .find(|t| t.name == r.test)
        .expect("looked up above")
        .body;
    body.insert(
        pos + 1,
        Stmt {
            id: StmtRef::Assert(id),
            span: Span::default(),
            kind: StmtKind::Assert {
                cond: Expr::binary(BinOp::Eq, target, value.to_expr()),
                enabled: true,
            },
        },
    );
    let run = interp::run_test(&q, &r.test, &ExecConfig { record: false, ..*cfg })?;
    if !run.outcome.status.is_pass() {
        return Err(RecommendError::NotGreen {
            test: r.test.clone(),
            status: run.outcome.status,
        });
    }
    Ok(q)
}
