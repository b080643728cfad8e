//! Tree-walking interpreter that records one trace event per executed
//! statement instance.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::lang::{
    BinOp, Expr, Function, GlobalKind, Program, StatementId, Stmt, StmtKind, StmtRef, UnOp,
};

use super::trace::{EventKind, Location, TestStatus, TrapKind, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl Value {
    pub fn to_expr(self) -> Expr {
        match self {
            Value::Int(v) => Expr::Int(v),
            Value::Bool(b) => Expr::Bool(b),
        }
    }
}

#[derive(Debug)]
pub(crate) enum Stop {
    Trap(TrapKind, StmtRef),
    AssertFail(crate::lang::AssertionId),
    Timeout,
}

impl Stop {
    pub(crate) fn into_status(self) -> TestStatus {
        match self {
            Stop::Trap(kind, stmt) => TestStatus::Trap { kind, stmt },
            Stop::AssertFail(site) => TestStatus::AssertionFailure(site),
            Stop::Timeout => TestStatus::Timeout,
        }
    }
}

enum Flow {
    Normal,
    Return(Option<Value>),
}

struct Frame {
    activation: u32,
    locals: HashMap<String, Value>,
    call_parent: Option<usize>,
}

/// Value capture request: after the top-level test statement `after`
/// completes, evaluate `expr` in the test's frame.
pub(crate) struct Probe<'e> {
    pub after: StatementId,
    pub expr: &'e Expr,
    pub value: Option<Result<Value, TrapKind>>,
}

pub(crate) struct Machine<'p, 'e> {
    functions: HashMap<&'p str, &'p Function>,
    globals: HashMap<String, Value>,
    arrays: HashMap<String, Vec<i64>>,
    pub(crate) events: Vec<TraceEvent>,
    pub(crate) steps: usize,
    record: bool,
    step_limit: usize,
    max_depth: usize,
    depth: usize,
    next_activation: u32,
    put: BTreeSet<StatementId>,
    pub(crate) probe: Option<Probe<'e>>,
}

type Exec<T> = Result<T, Stop>;

impl<'p, 'e> Machine<'p, 'e> {
    pub(crate) fn new(
        program: &'p Program,
        step_limit: usize,
        max_depth: usize,
        record: bool,
    ) -> Self {
        let mut globals = HashMap::new();
        let mut arrays = HashMap::new();
        for g in program.globals() {
            match &g.kind {
                GlobalKind::Scalar(Expr::Bool(b)) => {
                    globals.insert(g.name.clone(), Value::Bool(*b));
                }
                GlobalKind::Scalar(Expr::Int(v)) => {
                    globals.insert(g.name.clone(), Value::Int(*v));
                }
                // rejected by the static checks
                GlobalKind::Scalar(_) => {
                    globals.insert(g.name.clone(), Value::Int(0));
                }
                GlobalKind::Array(len) => {
                    arrays.insert(g.name.clone(), vec![0; *len]);
                }
            }
        }
        let put = program
            .put_statements()
            .iter()
            .filter_map(|s| s.id.statement())
            .collect();
        Machine {
            functions: program.functions().map(|f| (f.name.as_str(), f)).collect(),
            globals,
            arrays,
            events: Vec::new(),
            steps: 0,
            record,
            step_limit,
            max_depth,
            depth: 0,
            next_activation: 0,
            put,
            probe: None,
        }
    }

    pub(crate) fn run_test_body(&mut self, body: &'p [Stmt]) -> Exec<()> {
        let mut frame = Frame {
            activation: self.fresh_activation(),
            locals: HashMap::new(),
            call_parent: None,
        };
        for s in body {
            self.exec_stmt(s, &mut frame, None)?;
            self.maybe_probe(s, &mut frame);
        }
        Ok(())
    }

    fn maybe_probe(&mut self, s: &Stmt, frame: &mut Frame) {
        let Some(probe) = self.probe.take() else { return };
        let mut probe = probe;
        if probe.value.is_none() && s.id == StmtRef::Stmt(probe.after) {
            let saved = (self.record, self.steps, self.step_limit);
            // evaluation must leave no trace
            self.record = false;
            self.step_limit = usize::MAX;
            let mut uses = Vec::new();
            let v = self.eval(probe.expr, frame, s.id, None, &mut uses);
            (self.record, self.steps, self.step_limit) = saved;
            probe.value = Some(v.map_err(|stop| match stop {
                Stop::Trap(kind, _) => kind,
                _ => TrapKind::TypeMismatch,
            }));
        }
        self.probe = Some(probe);
    }

    fn fresh_activation(&mut self) -> u32 {
        let a = self.next_activation;
        self.next_activation += 1;
        a
    }

    #[allow(clippy::too_many_arguments)]
    fn emit(
        &mut self,
        stmt: StmtRef,
        kind: EventKind,
        defs: Vec<Location>,
        uses: Vec<Location>,
        ctrl_parent: Option<usize>,
        call_parent: Option<usize>,
        outcome: Option<bool>,
    ) -> Exec<usize> {
        if self.steps >= self.step_limit {
            return Err(Stop::Timeout);
        }
        let idx = self.steps;
        self.steps += 1;
        if self.record {
            let put = stmt.statement().is_some_and(|id| self.put.contains(&id));
            self.events.push(TraceEvent {
                idx,
                stmt,
                defs: defs.into_iter().collect(),
                uses: uses.into_iter().collect(),
                ctrl_parent,
                call_parent,
                outcome,
                kind,
                put,
            });
        }
        Ok(idx)
    }

    fn var_location(&self, name: &str, frame: &Frame) -> Location {
        if self.globals.contains_key(name) {
            Location::Global(name.to_string())
        } else {
            Location::Local {
                activation: frame.activation,
                name: name.to_string(),
            }
        }
    }

    fn exec_block(&mut self, body: &'p [Stmt], frame: &mut Frame, ctrl: Option<usize>) -> Exec<Flow> {
        for s in body {
            if let Flow::Return(v) = self.exec_stmt(s, frame, ctrl)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, s: &'p Stmt, frame: &mut Frame, ctrl: Option<usize>) -> Exec<Flow> {
        let id = s.id;
        let mut uses = Vec::new();
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, frame, id, ctrl, &mut uses)?;
                let loc = self.var_location(target, frame);
                self.emit(id, EventKind::Stmt, vec![loc], uses, ctrl, frame.call_parent, None)?;
                match self.globals.get_mut(target.as_str()) {
                    Some(slot) => *slot = v,
                    None => {
                        frame.locals.insert(target.clone(), v);
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::ArrayAssign {
                array,
                index,
                value,
            } => {
                let i = self.eval_int(index, frame, id, ctrl, &mut uses)?;
                let v = self.eval_int(value, frame, id, ctrl, &mut uses)?;
                let len = self.arrays.get(array.as_str()).map_or(0, Vec::len);
                if i < 0 || i as usize >= len {
                    return Err(Stop::Trap(TrapKind::IndexOutOfBounds, id));
                }
                let loc = Location::ArrayElem {
                    name: array.clone(),
                    index: i,
                };
                self.emit(id, EventKind::Stmt, vec![loc], uses, ctrl, frame.call_parent, None)?;
                if let Some(arr) = self.arrays.get_mut(array.as_str()) {
                    arr[i as usize] = v;
                }
                Ok(Flow::Normal)
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let b = self.eval_bool(cond, frame, id, ctrl, &mut uses)?;
                let pred = self.emit(
                    id,
                    EventKind::Predicate,
                    Vec::new(),
                    uses,
                    ctrl,
                    frame.call_parent,
                    Some(b),
                )?;
                let body = if b { then_body } else { else_body };
                self.exec_block(body, frame, Some(pred))
            }
            StmtKind::While { cond, body } => loop {
                let mut uses = Vec::new();
                let b = self.eval_bool(cond, frame, id, ctrl, &mut uses)?;
                let pred = self.emit(
                    id,
                    EventKind::Predicate,
                    Vec::new(),
                    uses,
                    ctrl,
                    frame.call_parent,
                    Some(b),
                )?;
                if !b {
                    return Ok(Flow::Normal);
                }
                if let Flow::Return(v) = self.exec_block(body, frame, Some(pred))? {
                    return Ok(Flow::Return(v));
                }
            },
            StmtKind::Call(call) => {
                let Expr::Call { func, args } = call else {
                    unreachable!("parser only builds call statements from calls")
                };
                // result discarded, so the completion event uses nothing
                self.call(func, args, frame, id, ctrl)?;
                self.emit(id, EventKind::Stmt, Vec::new(), Vec::new(), ctrl, frame.call_parent, None)?;
                Ok(Flow::Normal)
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => Some(self.eval(e, frame, id, ctrl, &mut uses)?),
                    None => None,
                };
                let defs = match (v, frame.call_parent) {
                    (Some(_), Some(call)) => vec![Location::CallResult(call)],
                    _ => Vec::new(),
                };
                self.emit(id, EventKind::Stmt, defs, uses, ctrl, frame.call_parent, None)?;
                Ok(Flow::Return(v))
            }
            StmtKind::Assert { cond, enabled } => {
                if !*enabled {
                    return Ok(Flow::Normal);
                }
                let v = self.eval(cond, frame, id, ctrl, &mut uses)?;
                self.emit(id, EventKind::Assert, Vec::new(), uses, ctrl, frame.call_parent, None)?;
                match (v, id) {
                    (Value::Bool(true), _) => Ok(Flow::Normal),
                    (Value::Bool(false), StmtRef::Assert(site)) => Err(Stop::AssertFail(site)),
                    _ => Err(Stop::Trap(TrapKind::TypeMismatch, id)),
                }
            }
        }
    }

    /// Performs a call: emits the binding event, runs the callee and returns
    /// the binding event index with the returned value (if any).
    fn call(
        &mut self,
        func: &str,
        args: &[Expr],
        frame: &mut Frame,
        stmt: StmtRef,
        ctrl: Option<usize>,
    ) -> Exec<(usize, Option<Value>)> {
        let callee = *self
            .functions
            .get(func)
            .expect("static checks reject undefined functions");
        let mut arg_uses = Vec::new();
        let mut values = Vec::with_capacity(args.len());
        for a in args {
            values.push(self.eval(a, frame, stmt, ctrl, &mut arg_uses)?);
        }
        if self.depth >= self.max_depth {
            return Err(Stop::Trap(TrapKind::StackOverflow, stmt));
        }
        let activation = self.fresh_activation();
        let defs = callee
            .params
            .iter()
            .map(|p| Location::Local {
                activation,
                name: p.clone(),
            })
            .collect();
        let call_idx = self.emit(stmt, EventKind::Call, defs, arg_uses, ctrl, frame.call_parent, None)?;
        let mut callee_frame = Frame {
            activation,
            locals: callee.params.iter().cloned().zip(values).collect(),
            call_parent: Some(call_idx),
        };
        self.depth += 1;
        let flow = self.exec_block(&callee.body, &mut callee_frame, None);
        self.depth -= 1;
        let ret = match flow? {
            Flow::Return(v) => v,
            Flow::Normal => None,
        };
        Ok((call_idx, ret))
    }

    fn eval_int(
        &mut self,
        e: &Expr,
        frame: &mut Frame,
        stmt: StmtRef,
        ctrl: Option<usize>,
        uses: &mut Vec<Location>,
    ) -> Exec<i64> {
        match self.eval(e, frame, stmt, ctrl, uses)? {
            Value::Int(v) => Ok(v),
            Value::Bool(_) => Err(Stop::Trap(TrapKind::TypeMismatch, stmt)),
        }
    }

    fn eval_bool(
        &mut self,
        e: &Expr,
        frame: &mut Frame,
        stmt: StmtRef,
        ctrl: Option<usize>,
        uses: &mut Vec<Location>,
    ) -> Exec<bool> {
        match self.eval(e, frame, stmt, ctrl, uses)? {
            Value::Bool(b) => Ok(b),
            Value::Int(_) => Err(Stop::Trap(TrapKind::TypeMismatch, stmt)),
        }
    }

    fn eval(
        &mut self,
        e: &Expr,
        frame: &mut Frame,
        stmt: StmtRef,
        ctrl: Option<usize>,
        uses: &mut Vec<Location>,
    ) -> Exec<Value> {
        let trap = |kind| Stop::Trap(kind, stmt);
        match e {
            Expr::Int(v) => Ok(Value::Int(*v)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Var(name) => {
                if let Some(v) = self.globals.get(name.as_str()) {
                    uses.push(Location::Global(name.clone()));
                    return Ok(*v);
                }
                let v = *frame
                    .locals
                    .get(name.as_str())
                    .ok_or_else(|| trap(TrapKind::Uninitialized))?;
                uses.push(Location::Local {
                    activation: frame.activation,
                    name: name.clone(),
                });
                Ok(v)
            }
            Expr::Index { array, index } => {
                let i = self.eval_int(index, frame, stmt, ctrl, uses)?;
                let arr = self
                    .arrays
                    .get(array.as_str())
                    .expect("static checks reject unknown arrays");
                if i < 0 || i as usize >= arr.len() {
                    return Err(trap(TrapKind::IndexOutOfBounds));
                }
                uses.push(Location::ArrayElem {
                    name: array.clone(),
                    index: i,
                });
                Ok(Value::Int(arr[i as usize]))
            }
            Expr::Unary { op, expr } => match (op, self.eval(expr, frame, stmt, ctrl, uses)?) {
                (UnOp::Neg, Value::Int(v)) => Ok(Value::Int(v.wrapping_neg())),
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                _ => Err(trap(TrapKind::TypeMismatch)),
            },
            Expr::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs, frame, stmt, ctrl, uses)?;
                match (op, l) {
                    (BinOp::And, Value::Bool(false)) => return Ok(Value::Bool(false)),
                    (BinOp::Or, Value::Bool(true)) => return Ok(Value::Bool(true)),
                    _ => {}
                }
                let r = self.eval(rhs, frame, stmt, ctrl, uses)?;
                binary(*op, l, r).map_err(trap)
            }
            Expr::Call { func, args } => {
                let (call_idx, ret) = self.call(func, args, frame, stmt, ctrl)?;
                let v = ret.ok_or_else(|| trap(TrapKind::MissingReturn))?;
                uses.push(Location::CallResult(call_idx));
                Ok(v)
            }
        }
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, TrapKind> {
    use Value::{Bool, Int};
    Ok(match (op, l, r) {
        (BinOp::Add, Int(a), Int(b)) => Int(a.wrapping_add(b)),
        (BinOp::Sub, Int(a), Int(b)) => Int(a.wrapping_sub(b)),
        (BinOp::Mul, Int(a), Int(b)) => Int(a.wrapping_mul(b)),
        (BinOp::Div | BinOp::Rem, Int(_), Int(0)) => return Err(TrapKind::DivByZero),
        (BinOp::Div, Int(a), Int(b)) => Int(a.wrapping_div(b)),
        (BinOp::Rem, Int(a), Int(b)) => Int(a.wrapping_rem(b)),
        (BinOp::Lt, Int(a), Int(b)) => Bool(a < b),
        (BinOp::Le, Int(a), Int(b)) => Bool(a <= b),
        (BinOp::Gt, Int(a), Int(b)) => Bool(a > b),
        (BinOp::Ge, Int(a), Int(b)) => Bool(a >= b),
        (BinOp::Eq, Int(a), Int(b)) => Bool(a == b),
        (BinOp::Ne, Int(a), Int(b)) => Bool(a != b),
        (BinOp::Eq, Bool(a), Bool(b)) => Bool(a == b),
        (BinOp::Ne, Bool(a), Bool(b)) => Bool(a != b),
        (BinOp::And, Bool(a), Bool(b)) => Bool(a && b),
        (BinOp::Or, Bool(a), Bool(b)) => Bool(a || b),
        _ => return Err(TrapKind::TypeMismatch),
    })
}
