//! Canonical pretty-printer. `parse(print(p)) == p` for every well-formed
//! program.

use std::fmt::Write;

use super::ast::*;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    let mut prev_global = false;
    for (i, item) in p.items.iter().enumerate() {
        let is_global = matches!(item, Item::Global(_));
        if i > 0 && !(is_global && prev_global) {
            out.push('\n');
        }
        prev_global = is_global;
        match item {
            Item::Global(g) => match &g.kind {
                GlobalKind::Scalar(init) => {
                    let _ = writeln!(out, "global {} = {};", g.name, print_expr(init));
                }
                GlobalKind::Array(len) => {
                    let _ = writeln!(out, "global {}[{}];", g.name, len);
                }
            },
            Item::Function(f) => {
                let _ = writeln!(out, "fn {}({}) {{", f.name, f.params.join(", "));
                print_block(&mut out, &f.body, 1);
                out.push_str("}\n");
            }
            Item::Test(t) => {
                let _ = writeln!(out, "test {} {{", t.name);
                print_block(&mut out, &t.body, 1);
                out.push_str("}\n");
            }
        }
    }
    out
}

fn print_block(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        print_stmt(out, s, depth);
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            let _ = writeln!(out, "if ({}) {{", print_expr(cond));
            print_block(out, then_body, depth + 1);
            indent(out, depth);
            if else_body.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                print_block(out, else_body, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", print_expr(cond));
            print_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        _ => {
            out.push_str(&stmt_header(s));
            out.push('\n');
        }
    }
}

/// One-line rendering of a statement; compound statements render as their
/// header only (`if (c)`, `while (c)`).
pub fn stmt_header(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Assign { target, value } => format!("{} = {};", target, print_expr(value)),
        StmtKind::ArrayAssign {
            array,
            index,
            value,
        } => format!(
            "{}[{}] = {};",
            array,
            print_expr(index),
            print_expr(value)
        ),
        StmtKind::If { cond, .. } => format!("if ({})", print_expr(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", print_expr(cond)),
        StmtKind::Call(e) => format!("{};", print_expr(e)),
        StmtKind::Return(None) => "return;".to_string(),
        StmtKind::Return(Some(e)) => format!("return {};", print_expr(e)),
        StmtKind::Assert { cond, enabled } => {
            let prefix = if *enabled { "" } else { "skip " };
            format!("{}assert {};", prefix, print_expr(cond))
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Var(name) => out.push_str(name),
        Expr::Index { array, index } => {
            out.push_str(array);
            out.push('[');
            write_expr(out, index);
            out.push(']');
        }
        Expr::Unary { op, expr } => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            // A non-negative literal directly under `-` would be folded by
            // the parser, so keep it parenthesised.
            let wrap = matches!(**expr, Expr::Binary { .. })
                || (*op == UnOp::Neg && matches!(**expr, Expr::Int(v) if v >= 0));
            if wrap {
                out.push('(');
                write_expr(out, expr);
                out.push(')');
            } else {
                write_expr(out, expr);
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            write_operand(out, lhs, |p| p < prec);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, |p| p <= prec);
        }
        Expr::Call { func, args } => {
            out.push_str(func);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a);
            }
            out.push(')');
        }
    }
}

fn write_operand(out: &mut String, e: &Expr, needs_parens: impl Fn(u8) -> bool) {
    match e {
        Expr::Binary { op, .. } if needs_parens(op.precedence()) => {
            out.push('(');
            write_expr(out, e);
            out.push(')');
        }
        _ => write_expr(out, e),
    }
}
