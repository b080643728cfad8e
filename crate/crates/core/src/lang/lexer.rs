use super::ast::Span;
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Global,
    Fn,
    Test,
    If,
    Else,
    While,
    Return,
    Assert,
    Skip,
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Eof => "end of file".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Global => "global",
            Tok::Fn => "fn",
            Tok::Test => "test",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Return => "return",
            Tok::Assert => "assert",
            Tok::Skip => "skip",
            Tok::True => "true",
            Tok::False => "false",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1u32, 1u32);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let span = Span::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump!();
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut text = String::new();
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                text.push(d);
                bump!();
            }
            let value = text
                .parse::<i64>()
                .map_err(|_| Diagnostic::syntax(span, format!("integer literal `{text}` out of range")))?;
            out.push((Tok::Int(value), span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while let Some(&d) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                text.push(d);
                bump!();
            }
            let tok = match text.as_str() {
                "global" => Tok::Global,
                "fn" => Tok::Fn,
                "test" => Tok::Test,
                "if" => Tok::If,
                "else" => Tok::Else,
                "while" => Tok::While,
                "return" => Tok::Return,
                "assert" => Tok::Assert,
                "skip" => Tok::Skip,
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(text),
            };
            out.push((tok, span));
            continue;
        }
        bump!();
        let next = chars.peek().copied();
        let two = |second: char, yes: Tok, no: Option<Tok>| -> Option<(Tok, bool)> {
            if next == Some(second) {
                Some((yes, true))
            } else {
                no.map(|t| (t, false))
            }
        };
        let tok = match c {
            '(' => Some((Tok::LParen, false)),
            ')' => Some((Tok::RParen, false)),
            '{' => Some((Tok::LBrace, false)),
            '}' => Some((Tok::RBrace, false)),
            '[' => Some((Tok::LBracket, false)),
            ']' => Some((Tok::RBracket, false)),
            ',' => Some((Tok::Comma, false)),
            ';' => Some((Tok::Semi, false)),
            '+' => Some((Tok::Plus, false)),
            '-' => Some((Tok::Minus, false)),
            '*' => Some((Tok::Star, false)),
            '/' => Some((Tok::Slash, false)),
            '%' => Some((Tok::Percent, false)),
            '=' => two('=', Tok::EqEq, Some(Tok::Assign)),
            '<' => two('=', Tok::Le, Some(Tok::Lt)),
            '>' => two('=', Tok::Ge, Some(Tok::Gt)),
            '!' => two('=', Tok::Ne, Some(Tok::Bang)),
            '&' => two('&', Tok::AndAnd, None),
            '|' => two('|', Tok::OrOr, None),
            _ => None,
        };
        match tok {
            Some((t, consumed_second)) => {
                if consumed_second {
                    bump!();
                }
                out.push((t, span));
            }
            None => return Err(Diagnostic::syntax(span, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, Span::new(line, col)));
    Ok(out)
}
