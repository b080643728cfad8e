//! Static well-formedness checks run after parsing.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::Diagnostic;

pub fn check_program(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut scalars = BTreeSet::new();
    let mut arrays = BTreeSet::new();
    let mut funcs: BTreeMap<&str, usize> = BTreeMap::new();
    let mut tests = BTreeSet::new();

    for item in &p.items {
        match item {
            Item::Global(g) => {
                if scalars.contains(g.name.as_str()) || arrays.contains(g.name.as_str()) {
                    diags.push(Diagnostic::static_err(
                        g.span,
                        format!("duplicate global `{}`", g.name),
                    ));
                }
                match &g.kind {
                    GlobalKind::Scalar(init) => {
                        if !matches!(init, Expr::Int(_) | Expr::Bool(_)) {
                            diags.push(Diagnostic::static_err(
                                g.span,
                                format!("initializer of global `{}` must be a literal", g.name),
                            ));
                        }
                        scalars.insert(g.name.as_str());
                    }
                    GlobalKind::Array(_) => {
                        arrays.insert(g.name.as_str());
                    }
                }
            }
            Item::Function(f) => {
                if funcs.insert(&f.name, f.params.len()).is_some() {
                    diags.push(Diagnostic::static_err(
                        f.span,
                        format!("duplicate function `{}`", f.name),
                    ));
                }
            }
            Item::Test(t) => {
                if !tests.insert(t.name.as_str()) {
                    diags.push(Diagnostic::static_err(
                        t.span,
                        format!("duplicate test `{}`", t.name),
                    ));
                }
            }
        }
    }

    let env = Env {
        scalars: &scalars,
        arrays: &arrays,
        funcs: &funcs,
        tests: &tests,
    };
    for item in &p.items {
        match item {
            Item::Function(f) => {
                let mut locals = BTreeSet::new();
                for param in &f.params {
                    if scalars.contains(param.as_str()) || arrays.contains(param.as_str()) {
                        diags.push(Diagnostic::static_err(
                            f.span,
                            format!("parameter `{param}` of `{}` shadows a global", f.name),
                        ));
                    }
                    if !locals.insert(param.clone()) {
                        diags.push(Diagnostic::static_err(
                            f.span,
                            format!("duplicate parameter `{param}` in `{}`", f.name),
                        ));
                    }
                }
                env.block(&f.body, &mut locals, false, &mut diags);
            }
            Item::Test(t) => {
                let mut locals = BTreeSet::new();
                env.block(&t.body, &mut locals, true, &mut diags);
            }
            Item::Global(_) => {}
        }
    }
    diags
}

struct Env<'a> {
    scalars: &'a BTreeSet<&'a str>,
    arrays: &'a BTreeSet<&'a str>,
    funcs: &'a BTreeMap<&'a str, usize>,
    tests: &'a BTreeSet<&'a str>,
}

impl Env<'_> {
    /// Locals are declared by their first assignment in textual order; the
    /// set leaks out of nested blocks.
    fn block(
        &self,
        body: &[Stmt],
        locals: &mut BTreeSet<String>,
        in_test: bool,
        diags: &mut Vec<Diagnostic>,
    ) {
        for s in body {
            for e in s.own_exprs() {
                self.expr(e, s.span, locals, diags);
            }
            match &s.kind {
                StmtKind::Assign { target, .. } => {
                    if self.arrays.contains(target.as_str()) {
                        diags.push(Diagnostic::static_err(
                            s.span,
                            format!("cannot assign to array `{target}` without an index"),
                        ));
                    } else if !self.scalars.contains(target.as_str()) {
                        locals.insert(target.clone());
                    }
                }
                StmtKind::ArrayAssign { array, .. } => {
                    if !self.arrays.contains(array.as_str()) {
                        diags.push(Diagnostic::static_err(
                            s.span,
                            format!("`{array}` is not a global array"),
                        ));
                    }
                }
                StmtKind::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    self.block(then_body, locals, in_test, diags);
                    self.block(else_body, locals, in_test, diags);
                }
                StmtKind::While { body, .. } => self.block(body, locals, in_test, diags),
                StmtKind::Return(_) if in_test => {
                    diags.push(Diagnostic::static_err(
                        s.span,
                        "`return` is not allowed in tests".to_string(),
                    ));
                }
                _ => {}
            }
        }
    }

    fn expr(&self, e: &Expr, span: Span, locals: &BTreeSet<String>, diags: &mut Vec<Diagnostic>) {
        e.walk(&mut |e| match e {
            Expr::Var(name) => {
                if self.arrays.contains(name.as_str()) {
                    diags.push(Diagnostic::static_err(
                        span,
                        format!("array `{name}` used without an index"),
                    ));
                } else if !self.scalars.contains(name.as_str()) && !locals.contains(name) {
                    diags.push(Diagnostic::static_err(
                        span,
                        format!("undeclared variable `{name}`"),
                    ));
                }
            }
            Expr::Index { array, .. } => {
                if !self.arrays.contains(array.as_str()) {
                    diags.push(Diagnostic::static_err(
                        span,
                        format!("`{array}` is not a global array"),
                    ));
                }
            }
            Expr::Call { func, args } => match self.funcs.get(func.as_str()) {
                Some(&arity) if arity != args.len() => diags.push(Diagnostic::static_err(
                    span,
                    format!(
                        "function `{func}` takes {arity} argument(s) but {} were given",
                        args.len()
                    ),
                )),
                Some(_) => {}
                None if self.tests.contains(func.as_str()) => diags.push(Diagnostic::static_err(
                    span,
                    format!("test `{func}` cannot be called"),
                )),
                None => diags.push(Diagnostic::static_err(
                    span,
                    format!("undefined function `{func}`"),
                )),
            },
            _ => {}
        });
    }
}
