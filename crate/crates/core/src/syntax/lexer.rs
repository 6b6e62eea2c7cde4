//! Tokenizer for `.fpl` sources and queries.

use super::ast::{BoundOp, Span};
use super::{Diagnostic, Severity};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Var(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bar,
    Dot,
    ColonDash,
    ColonTilde,
    ColonHash,
    Plus,
    Minus,
    Star,
    Slash,
    SlashSlash,
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
    ArithEq,
    ArithNe,
    Bound(BoundOp),
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: &str = match self {
            Tok::Name(n) => return write!(f, "`{n}`"),
            Tok::Var(v) => return write!(f, "variable `{v}`"),
            Tok::Num(n) => return write!(f, "number {n}"),
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Bar => "`|`",
            Tok::Dot => "`.`",
            Tok::ColonDash => "`:-`",
            Tok::ColonTilde => "`:~`",
            Tok::ColonHash => "`:#`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::SlashSlash => "`//`",
            Tok::Eq => "`=`",
            Tok::Lt => "`<`",
            Tok::Gt => "`>`",
            Tok::Le => "`=<`",
            Tok::Ge => "`>=`",
            Tok::ArithEq => "`=:=`",
            Tok::ArithNe => "`=\\=`",
            Tok::Bound(op) => return write!(f, "`{op}`"),
        };
        write!(f, "{s}")
    }
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let span = Span { line, col };
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => bump!(),
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    bump!();
                }
            }
            '(' => {
                toks.push((Tok::LParen, span));
                bump!();
            }
            ')' => {
                toks.push((Tok::RParen, span));
                bump!();
            }
            '[' => {
                toks.push((Tok::LBracket, span));
                bump!();
            }
            ']' => {
                toks.push((Tok::RBracket, span));
                bump!();
            }
            ',' => {
                toks.push((Tok::Comma, span));
                bump!();
            }
            '|' => {
                toks.push((Tok::Bar, span));
                bump!();
            }
            '+' => {
                toks.push((Tok::Plus, span));
                bump!();
            }
            '-' => {
                toks.push((Tok::Minus, span));
                bump!();
            }
            '*' => {
                toks.push((Tok::Star, span));
                bump!();
            }
            '/' => {
                bump!();
                if i < chars.len() && chars[i] == '/' {
                    bump!();
                    toks.push((Tok::SlashSlash, span));
                } else {
                    toks.push((Tok::Slash, span));
                }
            }
            '<' => {
                toks.push((Tok::Lt, span));
                bump!();
            }
            '>' => {
                bump!();
                if i < chars.len() && chars[i] == '=' {
                    bump!();
                    toks.push((Tok::Ge, span));
                } else {
                    toks.push((Tok::Gt, span));
                }
            }
            '=' => {
                bump!();
                match chars.get(i) {
                    Some('<') => {
                        bump!();
                        toks.push((Tok::Le, span));
                    }
                    Some(':') => {
                        bump!();
                        if chars.get(i) == Some(&'=') {
                            bump!();
                            toks.push((Tok::ArithEq, span));
                        } else {
                            return Err(err(span, "expected `=:=`"));
                        }
                    }
                    Some('\\') => {
                        bump!();
                        if chars.get(i) == Some(&'=') {
                            bump!();
                            toks.push((Tok::ArithNe, span));
                        } else {
                            return Err(err(span, "expected `=\\=`"));
                        }
                    }
                    _ => toks.push((Tok::Eq, span)),
                }
            }
            ':' => {
                bump!();
                match chars.get(i) {
                    Some('-') => {
                        bump!();
                        toks.push((Tok::ColonDash, span));
                    }
                    Some('~') => {
                        bump!();
                        toks.push((Tok::ColonTilde, span));
                    }
                    Some('#') => {
                        bump!();
                        toks.push((Tok::ColonHash, span));
                    }
                    _ => return Err(err(span, "stray `:`; expected `:-`, `:~` or `:#`")),
                }
            }
            '.' => {
                // Truth-bound operators are dotted: .<. .=<. .>. .>=. .=.
                // with .<=. accepted as a spelling of =<; a bare dot ends
                // a statement.
                let mut j = i + 1;
                let mut op = String::new();
                while j < chars.len() && matches!(chars[j], '<' | '>' | '=') {
                    op.push(chars[j]);
                    j += 1;
                }
                if !op.is_empty() && chars.get(j) == Some(&'.') {
                    let bound = match op.as_str() {
                        "<" => BoundOp::Lt,
                        "=<" | "<=" => BoundOp::Le,
                        ">" => BoundOp::Gt,
                        ">=" => BoundOp::Ge,
                        "=" => BoundOp::Eq,
                        _ => return Err(err(span, &format!("unknown truth bound `.{op}.`"))),
                    };
                    for _ in 0..op.len() + 2 {
                        bump!();
                    }
                    toks.push((Tok::Bound(bound), span));
                } else {
                    toks.push((Tok::Dot, span));
                    bump!();
                }
            }
            '\'' => {
                bump!();
                let mut name = String::new();
                loop {
                    match chars.get(i) {
                        Some('\'') => {
                            bump!();
                            break;
                        }
                        Some('\n') | None => {
                            return Err(err(span, "unterminated quoted name"));
                        }
                        Some(&ch) => {
                            name.push(ch);
                            bump!();
                        }
                    }
                }
                toks.push((Tok::Name(name), span));
            }
            _ if c.is_ascii_digit() => {
                let mut text = String::new();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    text.push(chars[i]);
                    bump!();
                }
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    text.push('.');
                    bump!();
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        text.push(chars[i]);
                        bump!();
                    }
                }
                match text.parse::<f64>() {
                    Ok(n) => toks.push((Tok::Num(n), span)),
                    Err(_) => return Err(err(span, &format!("bad number `{text}`"))),
                }
            }
            _ if c.is_ascii_lowercase() => {
                // In `0.2v0.5` and `[0,0.1]v0.5` the `v` joins truth parts;
                // without the preceding number or `]` it would fuse with the
                // digits into one name. Everywhere else (`p(v0)`) names may
                // start with `v`.
                let glues_union = c == 'v'
                    && chars.get(i + 1).is_some_and(|ch| ch.is_ascii_digit())
                    && i > 0
                    && (chars[i - 1].is_ascii_digit() || chars[i - 1] == ']')
                    && matches!(toks.last(), Some((Tok::Num(_) | Tok::RBracket, _)));
                if glues_union {
                    toks.push((Tok::Name("v".to_string()), span));
                    bump!();
                } else {
                    let mut name = String::new();
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        name.push(chars[i]);
                        bump!();
                    }
                    toks.push((Tok::Name(name), span));
                }
            }
            _ if c.is_ascii_uppercase() || c == '_' => {
                let mut name = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    name.push(chars[i]);
                    bump!();
                }
                toks.push((Tok::Var(name), span));
            }
            _ => return Err(err(span, &format!("unexpected character `{c}`"))),
        }
    }
    Ok(toks)
}

fn err(span: Span, message: &str) -> Diagnostic {
    Diagnostic {
        severity: Severity::Error,
        span,
        message: message.to_string(),
    }
}
