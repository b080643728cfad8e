//! The Slang toy language: lexer, parser, AST, static checks and printer.

pub mod ast;
mod check;
mod lexer;
mod parser;
pub mod printer;

use std::fmt;

pub use ast::*;
pub use printer::{print_expr, print_program, stmt_header};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    Static,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn syntax(span: Span, message: String) -> Self {
        Diagnostic {
            kind: DiagnosticKind::Syntax,
            line: span.line,
            col: span.col,
            message,
        }
    }

    pub(crate) fn static_err(span: Span, message: String) -> Self {
        Diagnostic {
            kind: DiagnosticKind::Static,
            line: span.line,
            col: span.col,
            message,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::Static => "error",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.col, kind, self.message)
    }
}

/// Diagnostics produced by [`parse`]. A syntax error stops parsing, so it is
/// always alone; static errors are all reported.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

pub fn parse(source: &str) -> Result<Program, ParseError> {
    let fail = |d: Diagnostic| ParseError {
        diagnostics: vec![d],
    };
    let toks = lexer::tokenize(source).map_err(fail)?;
    let program = parser::Parser::new(toks).program().map_err(fail)?;
    let diagnostics = check::check_program(&program);
    if diagnostics.is_empty() {
        Ok(program)
    } else {
        Err(ParseError { diagnostics })
    }
}

/// Runs the static checks on an already-built program (e.g. a mutant).
pub fn check(p: &Program) -> Result<(), ParseError> {
    let diagnostics = check::check_program(p);
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(ParseError { diagnostics })
    }
}

/// The coverage denominators: every PUT statement and every PUT branch arm,
/// ordered by id.
pub fn enumerate_structures(p: &Program) -> (Vec<StatementId>, Vec<BranchArm>) {
    let mut stmts = Vec::new();
    let mut arms = Vec::new();
    for s in p.put_statements() {
        let Some(id) = s.id.statement() else { continue };
        stmts.push(id);
        if s.is_predicate() {
            arms.push(BranchArm {
                pred: id,
                outcome: true,
            });
            arms.push(BranchArm {
                pred: id,
                outcome: false,
            });
        }
    }
    stmts.sort();
    arms.sort();
    (stmts, arms)
}

/// Reference program used throughout the tests and docs.
pub const P1_SOURCE: &str = "\
global g = 0;
fn add_abs(a, b) {
  d = a - b;          # s1
  if (d < 0) {        # s2
    d = 0 - d;        # s3
  }
  g = a + b;          # s4
  return d;           # s5
}
test t1 {
  r = add_abs(2, 5);
  assert r == 3;      # A1
}
";
