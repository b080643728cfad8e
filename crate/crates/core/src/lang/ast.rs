//! Abstract syntax tree for Slang programs.
//!
//! Statement and assertion identifiers are assigned by the parser in source
//! preorder. Spans are carried for diagnostics only and never take part in
//! structural equality, so a program compares equal to its pretty-printed
//! and reparsed form.

use std::fmt;

use serde::{Serialize, Serializer};

/// Identifier of a (non-assertion) statement, displayed as `s<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StatementId(pub u32);

/// Identifier of an assertion site in a test, displayed as `A<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssertionId(pub u32);

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for AssertionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

/// Either kind of statement identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StmtRef {
    Stmt(StatementId),
    Assert(AssertionId),
}

impl StmtRef {
    pub fn statement(self) -> Option<StatementId> {
        match self {
            StmtRef::Stmt(id) => Some(id),
            StmtRef::Assert(_) => None,
        }
    }
}

impl fmt::Display for StmtRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StmtRef::Stmt(id) => id.fmt(f),
            StmtRef::Assert(id) => id.fmt(f),
        }
    }
}

macro_rules! display_serialize {
    ($($ty:ty),*) => {$(
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
    )*};
}
display_serialize!(StatementId, AssertionId, StmtRef);

/// One arm of a two-way branch: `true` is the then/enter arm, `false` the
/// else/exit arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchArm {
    pub pred: StatementId,
    pub outcome: bool,
}

impl fmt::Display for BranchArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.pred, self.outcome)
    }
}

/// Source position (1-based). Always compares equal.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem
        )
    }

    pub fn is_relational(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    /// Local, parameter, or scalar global; resolved against the program's
    /// globals at run time.
    Var(String),
    /// Element read of a global array.
    Index { array: String, index: Box<Expr> },
    Unary { op: UnOp, expr: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { func: String, args: Vec<Expr> },
}

impl Expr {
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// Visits this expression and all subexpressions in evaluation order
    /// (operands before the node itself).
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
            Expr::Index { index, .. } => index.walk(f),
            Expr::Unary { expr, .. } => expr.walk(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| a.walk(f)),
        }
        f(self);
    }

    /// Mutable counterpart of [`Expr::walk`], same order.
    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Expr)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
            Expr::Index { index, .. } => index.walk_mut(f),
            Expr::Unary { expr, .. } => expr.walk_mut(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.walk_mut(f);
                rhs.walk_mut(f);
            }
            Expr::Call { args, .. } => args.iter_mut().for_each(|a| a.walk_mut(f)),
        }
        f(self);
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Call { .. }));
        found
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign { target: String, value: Expr },
    ArrayAssign { array: String, index: Expr, value: Expr },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    /// Expression statement; the expression is always a call.
    Call(Expr),
    Return(Option<Expr>),
    Assert { cond: Expr, enabled: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: StmtRef,
    pub span: Span,
    pub kind: StmtKind,
}

impl Stmt {
    pub fn is_predicate(&self) -> bool {
        matches!(self.kind, StmtKind::If { .. } | StmtKind::While { .. })
    }

    /// Expressions evaluated by this statement itself, excluding nested
    /// statement bodies.
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::ArrayAssign { index, value, .. } => vec![index, value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Call(e) => vec![e],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Assert { cond, .. } => vec![cond],
        }
    }

    pub fn own_exprs_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::ArrayAssign { index, value, .. } => vec![index, value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Call(e) => vec![e],
            StmtKind::Return(e) => e.iter_mut().collect(),
            StmtKind::Assert { cond, .. } => vec![cond],
        }
    }

    pub fn children(&self) -> impl Iterator<Item = &Stmt> {
        let (a, b): (&[Stmt], &[Stmt]) = match &self.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => (then_body, else_body),
            StmtKind::While { body, .. } => (body, &[]),
            _ => (&[], &[]),
        };
        a.iter().chain(b.iter())
    }
}

/// Visits every statement of a block in preorder.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in body {
        f(s);
        match &s.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                walk_stmts(then_body, f);
                walk_stmts(else_body, f);
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}

pub fn walk_stmts_mut(body: &mut [Stmt], f: &mut impl FnMut(&mut Stmt)) {
    for s in body {
        f(s);
        match &mut s.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                walk_stmts_mut(then_body, f);
                walk_stmts_mut(else_body, f);
            }
            StmtKind::While { body, .. } => walk_stmts_mut(body, f),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GlobalKind {
    Scalar(Expr),
    /// Zero-initialised integer array of the given length.
    Array(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Global {
    pub name: String,
    pub span: Span,
    pub kind: GlobalKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub span: Span,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub span: Span,
    pub body: Vec<Stmt>,
}

/// A view of one assertion inside a test.
#[derive(Debug, Clone, Copy)]
pub struct AssertionSite<'a> {
    pub id: AssertionId,
    pub test: &'a str,
    pub cond: &'a Expr,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Global(Global),
    Function(Function),
    Test(TestCase),
}

/// A parsed Slang compilation unit. Items keep their source order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub fn globals(&self) -> impl Iterator<Item = &Global> {
        self.items.iter().filter_map(|i| match i {
            Item::Global(g) => Some(g),
            _ => None,
        })
    }

    pub fn functions(&self) -> impl Iterator<Item = &Function> {
        self.items.iter().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn tests(&self) -> impl Iterator<Item = &TestCase> {
        self.items.iter().filter_map(|i| match i {
            Item::Test(t) => Some(t),
            _ => None,
        })
    }

    pub fn tests_mut(&mut self) -> impl Iterator<Item = &mut TestCase> {
        self.items.iter_mut().filter_map(|i| match i {
            Item::Test(t) => Some(t),
            _ => None,
        })
    }

    pub fn functions_mut(&mut self) -> impl Iterator<Item = &mut Function> {
        self.items.iter_mut().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions().find(|f| f.name == name)
    }

    pub fn test(&self, name: &str) -> Option<&TestCase> {
        self.tests().find(|t| t.name == name)
    }

    pub fn global(&self, name: &str) -> Option<&Global> {
        self.globals().find(|g| g.name == name)
    }

    /// All assertion sites in test declaration order.
    pub fn assertions(&self) -> Vec<AssertionSite<'_>> {
        let mut out = Vec::new();
        for t in self.tests() {
            walk_stmts(&t.body, &mut |s| {
                if let (StmtRef::Assert(id), StmtKind::Assert { cond, enabled }) = (s.id, &s.kind)
                {
                    out.push(AssertionSite {
                        id,
                        test: &t.name,
                        cond,
                        enabled: *enabled,
                    });
                }
            });
        }
        out
    }

    /// Enables exactly the assertions for which `keep` returns true.
    pub fn set_enabled(&mut self, mut keep: impl FnMut(AssertionId) -> bool) {
        for t in self.tests_mut() {
            walk_stmts_mut(&mut t.body, &mut |s| {
                if let (StmtRef::Assert(id), StmtKind::Assert { enabled, .. }) = (s.id, &mut s.kind)
                {
                    *enabled = keep(id);
                }
            });
        }
    }

    /// Looks up a statement anywhere in the program.
    pub fn find_stmt(&self, id: StmtRef) -> Option<&Stmt> {
        let mut found = None;
        let bodies = self.items.iter().filter_map(|i| match i {
            Item::Function(f) => Some(&f.body),
            Item::Test(t) => Some(&t.body),
            Item::Global(_) => None,
        });
        for body in bodies {
            walk_stmts(body, &mut |s| {
                if s.id == id {
                    found = Some(s);
                }
            });
            if found.is_some() {
                break;
            }
        }
        found
    }

    /// Statements of the program under test (bodies of non-test functions),
    /// in preorder.
    pub fn put_statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        for f in self.functions() {
            walk_stmts(&f.body, &mut |s| out.push(s));
        }
        out
    }

    pub fn max_assertion_id(&self) -> u32 {
        self.assertions().iter().map(|a| a.id.0).max().unwrap_or(0)
    }
}
