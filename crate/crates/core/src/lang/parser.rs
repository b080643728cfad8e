//! Recursive-descent parser. Assigns statement and assertion identifiers in
//! source preorder as it goes.

use super::ast::*;
use super::lexer::Tok;
use super::Diagnostic;

pub(crate) struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    next_stmt: u32,
    next_assert: u32,
    /// Inside a test body; enables `assert`.
    in_test: bool,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    pub(crate) fn new(toks: Vec<(Tok, Span)>) -> Self {
        Parser {
            toks,
            pos: 0,
            next_stmt: 1,
            next_assert: 1,
            in_test: false,
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, what: &str) -> PResult<T> {
        Err(Diagnostic::syntax(
            self.span(),
            format!("expected {what}, found {}", self.peek().describe()),
        ))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            _ => self.error("identifier"),
        }
    }

    pub(crate) fn program(&mut self) -> PResult<Program> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Global => items.push(Item::Global(self.global()?)),
                Tok::Fn => items.push(Item::Function(self.function()?)),
                Tok::Test => items.push(Item::Test(self.test()?)),
                _ => return self.error("`global`, `fn` or `test`"),
            }
        }
        Ok(Program { items })
    }

    fn global(&mut self) -> PResult<Global> {
        let span = self.span();
        self.expect(Tok::Global, "`global`")?;
        let name = self.ident()?;
        let kind = if *self.peek() == Tok::LBracket {
            self.advance();
            let len = match self.advance() {
                Tok::Int(n) if n > 0 => n as usize,
                _ => {
                    self.pos -= 1;
                    return self.error("positive array length");
                }
            };
            self.expect(Tok::RBracket, "`]`")?;
            GlobalKind::Array(len)
        } else {
            self.expect(Tok::Assign, "`=`")?;
            GlobalKind::Scalar(self.expr()?)
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(Global { name, span, kind })
    }

    fn function(&mut self) -> PResult<Function> {
        let span = self.span();
        self.expect(Tok::Fn, "`fn`")?;
        let name = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident()?);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.in_test = false;
        let body = self.block()?;
        Ok(Function {
            name,
            span,
            params,
            body,
        })
    }

    fn test(&mut self) -> PResult<TestCase> {
        let span = self.span();
        self.expect(Tok::Test, "`test`")?;
        let name = self.ident()?;
        self.in_test = true;
        let body = self.block();
        self.in_test = false;
        Ok(TestCase {
            name,
            span,
            body: body?,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.error("`}`");
            }
            out.push(self.stmt()?);
        }
        self.advance();
        Ok(out)
    }

    fn fresh_stmt(&mut self) -> StmtRef {
        let id = StmtRef::Stmt(StatementId(self.next_stmt));
        self.next_stmt += 1;
        id
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Assert | Tok::Skip => {
                let enabled = if *self.peek() == Tok::Skip {
                    self.advance();
                    false
                } else {
                    true
                };
                if !self.in_test {
                    return Err(Diagnostic::syntax(
                        span,
                        "assertions are only allowed inside tests".to_string(),
                    ));
                }
                self.expect(Tok::Assert, "`assert`")?;
                let id = StmtRef::Assert(AssertionId(self.next_assert));
                self.next_assert += 1;
                let cond = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt {
                    id,
                    span,
                    kind: StmtKind::Assert { cond, enabled },
                })
            }
            Tok::If => {
                let id = self.fresh_stmt();
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_body = self.block()?;
                let else_body = if *self.peek() == Tok::Else {
                    self.advance();
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(Stmt {
                    id,
                    span,
                    kind: StmtKind::If {
                        cond,
                        then_body,
                        else_body,
                    },
                })
            }
            Tok::While => {
                let id = self.fresh_stmt();
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                Ok(Stmt {
                    id,
                    span,
                    kind: StmtKind::While { cond, body },
                })
            }
            Tok::Return => {
                let id = self.fresh_stmt();
                self.advance();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt {
                    id,
                    span,
                    kind: StmtKind::Return(value),
                })
            }
            Tok::Ident(name) => {
                let id = self.fresh_stmt();
                let kind = match self.peek_at(1) {
                    Tok::Assign => {
                        self.advance();
                        self.advance();
                        StmtKind::Assign {
                            target: name,
                            value: self.expr()?,
                        }
                    }
                    Tok::LBracket => {
                        self.advance();
                        self.advance();
                        let index = self.expr()?;
                        self.expect(Tok::RBracket, "`]`")?;
                        self.expect(Tok::Assign, "`=`")?;
                        StmtKind::ArrayAssign {
                            array: name,
                            index,
                            value: self.expr()?,
                        }
                    }
                    Tok::LParen => {
                        let call = self.expr()?;
                        if !matches!(call, Expr::Call { .. }) {
                            return Err(Diagnostic::syntax(
                                span,
                                "expression statements must be calls".to_string(),
                            ));
                        }
                        StmtKind::Call(call)
                    }
                    _ => {
                        self.advance();
                        return self.error("`=`, `[` or `(`");
                    }
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(Stmt { id, span, kind })
            }
            _ => self.error("statement"),
        }
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Minus => {
                self.advance();
                // `-<literal>` folds into a negative literal
                if let Tok::Int(v) = *self.peek() {
                    if !matches!(self.peek_at(1), Tok::LBracket | Tok::LParen) {
                        self.advance();
                        return Ok(Expr::Int(-v));
                    }
                }
                Ok(Expr::Unary {
                    op: UnOp::Neg,
                    expr: Box::new(self.unary()?),
                })
            }
            Tok::Bang => {
                self.advance();
                Ok(Expr::Unary {
                    op: UnOp::Not,
                    expr: Box::new(self.unary()?),
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            Tok::True => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.advance();
                match self.peek() {
                    Tok::LParen => {
                        self.advance();
                        let mut args = Vec::new();
                        if *self.peek() != Tok::RParen {
                            loop {
                                args.push(self.expr()?);
                                if *self.peek() == Tok::Comma {
                                    self.advance();
                                } else {
                                    break;
                                }
                            }
                        }
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(Expr::Call { func: name, args })
                    }
                    Tok::LBracket => {
                        self.advance();
                        let index = self.expr()?;
                        self.expect(Tok::RBracket, "`]`")?;
                        Ok(Expr::Index {
                            array: name,
                            index: Box::new(index),
                        })
                    }
                    _ => Ok(Expr::Var(name)),
                }
            }
            _ => self.error("expression"),
        }
    }
}
