//! Recursive-descent parser for statements, terms and queries.
//!
//! Terms use standard Prolog operator precedences (see
//! [`super::ast::infix_op`]); `,` builds pairs inside parentheses and
//! separates goals at the top level. Truth literals (`0.7`, `[0.2,0.5]`,
//! unions joined by `v`) are parsed in truth positions only, so the name
//! `v` stays an ordinary constant elsewhere.

use crate::truth::{BorelSet, Interval};

use super::ast::{infix_op, OpKind, PiecewiseDecl, Query, QueryGoal, Span, Statement, Term};
use super::lexer::Tok;
use super::{Diagnostic, Severity};

pub struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    anon: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    pub fn new(toks: Vec<(Tok, Span)>) -> Parser {
        Parser { toks, pos: 0, anon: 0 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, s)| *s)
            .unwrap_or_default()
    }

    fn next(&mut self) -> Option<(Tok, Span)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            span: self.span(),
            message: msg.into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Span> {
        match self.next() {
            Some((t, s)) if t == tok => Ok(s),
            Some((t, s)) => Err(Diagnostic {
                severity: Severity::Error,
                span: s,
                message: format!("expected {tok}, found {t}"),
            }),
            None => Err(self.error(format!("expected {tok}, found end of input"))),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// Parse all statements, recovering at `.` boundaries after an error.
    pub fn statements(&mut self) -> (Vec<Statement>, Vec<Diagnostic>) {
        let mut out = Vec::new();
        let mut diags = Vec::new();
        while !self.at_end() {
            match self.statement() {
                Ok(st) => out.push(st),
                Err(d) => {
                    diags.push(d);
                    while let Some((t, _)) = self.next() {
                        if t == Tok::Dot {
                            break;
                        }
                    }
                }
            }
        }
        (out, diags)
    }

    fn statement(&mut self) -> PResult<Statement> {
        let span = self.span();
        if self.peek() == Some(&Tok::ColonDash) {
            self.next();
            return self.directive(span);
        }
        let head = self.head()?;
        match self.next() {
            Some((Tok::Dot, _)) => Ok(Statement::CrispClause { head, body: Vec::new(), span }),
            Some((Tok::ColonDash, _)) => {
                let body = self.goals()?;
                self.expect(Tok::Dot)?;
                Ok(Statement::CrispClause { head, body, span })
            }
            Some((Tok::ColonTilde, _)) => self.fuzzy_tail(head, span),
            Some((Tok::ColonHash, _)) => self.piecewise_tail(head, span),
            Some((t, s)) => Err(Diagnostic {
                severity: Severity::Error,
                span: s,
                message: format!("expected `.`, `:-`, `:~` or `:#` after clause head, found {t}"),
            }),
            None => Err(self.error("unterminated statement")),
        }
    }

    fn head(&mut self) -> PResult<Term> {
        match self.next() {
            Some((Tok::Name(name), _)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.next();
                    let args = self.args()?;
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Const(name))
                }
            }
            Some((t, s)) => Err(Diagnostic {
                severity: Severity::Error,
                span: s,
                message: format!("expected a clause head, found {t}"),
            }),
            None => Err(self.error("expected a clause head")),
        }
    }

    fn directive(&mut self, span: Span) -> PResult<Statement> {
        match self.next() {
            Some((Tok::Name(n), _)) if n == "default" => {
                self.expect(Tok::LParen)?;
                let name = match self.next() {
                    Some((Tok::Name(n), _)) => n,
                    _ => return Err(self.error("expected a predicate name in default declaration")),
                };
                self.expect(Tok::Slash)?;
                let arity = match self.next() {
                    Some((Tok::Num(n), s)) if n.fract() == 0.0 && n >= 0.0 => {
                        let _ = s;
                        n as usize
                    }
                    _ => return Err(self.error("expected a non-negative arity")),
                };
                self.expect(Tok::Comma)?;
                let value = self.truth_literal()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                Ok(Statement::DefaultDecl { name, arity, value, span })
            }
            Some((Tok::Name(n), s)) => Err(Diagnostic {
                severity: Severity::Error,
                span: s,
                message: format!("unknown directive `{n}`"),
            }),
            _ => Err(self.error("expected a directive name after `:-`")),
        }
    }

    fn fuzzy_tail(&mut self, head: Term, span: Span) -> PResult<Statement> {
        match self.peek() {
            Some(Tok::Num(_)) | Some(Tok::LBracket) => {
                let truth = self.truth_literal()?;
                self.expect(Tok::Dot)?;
                Ok(Statement::FuzzyFact { head, truth, span })
            }
            Some(Tok::Name(_)) => {
                // An aggregator annotation is a name directly followed by
                // the first body atom (two adjacent names cannot be one
                // term); otherwise the body starts here and the aggregator
                // defaults to min. Unknown names are caught in validation.
                let aggregator = if matches!(self.peek2(), Some(Tok::Name(_) | Tok::Var(_))) {
                    let (tok, _) = self.next().unwrap();
                    match tok {
                        Tok::Name(n) => n,
                        _ => unreachable!(),
                    }
                } else {
                    "min".to_string()
                };
                let body = self.goals()?;
                self.expect(Tok::Dot)?;
                Ok(Statement::FuzzyClause { head, aggregator, body, span })
            }
            _ => {
                let body = self.goals()?;
                self.expect(Tok::Dot)?;
                Ok(Statement::FuzzyClause { head, aggregator: "min".to_string(), body, span })
            }
        }
    }

    fn piecewise_tail(&mut self, head: Term, span: Span) -> PResult<Statement> {
        let name = match head {
            Term::Const(name) => name,
            other => {
                return Err(self.error(format!(
                    "piecewise declaration head must be a bare name, found `{other}`"
                )))
            }
        };
        match self.next() {
            Some((Tok::Name(n), _)) if n == "fuzzy_predicate" => {}
            _ => return Err(self.error("expected `fuzzy_predicate` after `:#`")),
        }
        self.expect(Tok::LParen)?;
        self.expect(Tok::LBracket)?;
        let mut points = Vec::new();
        loop {
            self.expect(Tok::LParen)?;
            let x = self.signed_num()?;
            self.expect(Tok::Comma)?;
            let y = self.signed_num()?;
            self.expect(Tok::RParen)?;
            points.push((x, y));
            match self.next() {
                Some((Tok::Comma, _)) => continue,
                Some((Tok::RBracket, _)) => break,
                _ => return Err(self.error("expected `,` or `]` in point list")),
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        Ok(Statement::Piecewise(PiecewiseDecl { name, points, span }))
    }

    fn signed_num(&mut self) -> PResult<f64> {
        match self.next() {
            Some((Tok::Num(n), _)) => Ok(n),
            Some((Tok::Minus, _)) => match self.next() {
                Some((Tok::Num(n), _)) => Ok(-n),
                _ => Err(self.error("expected a number after `-`")),
            },
            _ => Err(self.error("expected a number")),
        }
    }

    fn truth_literal(&mut self) -> PResult<BorelSet> {
        let mut parts = Vec::new();
        loop {
            let span = self.span();
            let part = match self.next() {
                Some((Tok::Num(n), _)) => Interval::point(n),
                Some((Tok::LBracket, _)) => {
                    let lo = self.signed_num()?;
                    self.expect(Tok::Comma)?;
                    let hi = self.signed_num()?;
                    self.expect(Tok::RBracket)?;
                    Interval::new(lo, hi)
                }
                _ => {
                    return Err(Diagnostic {
                        severity: Severity::Error,
                        span,
                        message: "expected a truth value (number or [lo,hi])".to_string(),
                    })
                }
            };
            match part {
                Ok(iv) => parts.push(iv),
                Err(e) => {
                    return Err(Diagnostic {
                        severity: Severity::Error,
                        span,
                        message: e.to_string(),
                    })
                }
            }
            match self.peek() {
                Some(Tok::Name(n)) if n == "v" => {
                    self.next();
                }
                _ => break,
            }
        }
        Ok(BorelSet::from_intervals(parts))
    }

    fn goals(&mut self) -> PResult<Vec<Term>> {
        let mut goals = vec![self.term(999)?];
        while self.peek() == Some(&Tok::Comma) {
            self.next();
            goals.push(self.term(999)?);
        }
        Ok(goals)
    }

    fn args(&mut self) -> PResult<Vec<Term>> {
        let mut args = vec![self.term(999)?];
        loop {
            match self.next() {
                Some((Tok::Comma, _)) => args.push(self.term(999)?),
                Some((Tok::RParen, _)) => return Ok(args),
                Some((t, s)) => {
                    return Err(Diagnostic {
                        severity: Severity::Error,
                        span: s,
                        message: format!("expected `,` or `)` in argument list, found {t}"),
                    })
                }
                None => return Err(self.error("unterminated argument list")),
            }
        }
    }

    pub fn term(&mut self, max_prec: u16) -> PResult<Term> {
        let mut left = self.primary()?;
        loop {
            let Some(op) = self.peek().and_then(tok_op) else { break };
            let Some((prec, kind)) = infix_op(op) else { break };
            if prec > max_prec {
                break;
            }
            let op = op.to_string();
            self.next();
            let right_max = match kind {
                OpKind::Xfy => prec,
                OpKind::Xfx | OpKind::Yfx => prec - 1,
            };
            let right = self.term(right_max)?;
            left = Term::Compound(op, vec![left, right]);
        }
        Ok(left)
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.next() {
            Some((Tok::Num(n), _)) => Ok(Term::Num(n)),
            Some((Tok::Minus, _)) => match self.next() {
                Some((Tok::Num(n), _)) => Ok(Term::Num(-n)),
                _ => Err(self.error("expected a number after unary `-`")),
            },
            Some((Tok::Var(v), _)) => {
                if v == "_" {
                    // Every bare underscore is a distinct variable; the
                    // `#` keeps generated names out of the user namespace.
                    self.anon += 1;
                    Ok(Term::Var(format!("_#{}", self.anon)))
                } else {
                    Ok(Term::Var(v))
                }
            }
            Some((Tok::Name(name), _)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.next();
                    let args = self.args()?;
                    Ok(Term::Compound(name, args))
                } else {
                    Ok(Term::Const(name))
                }
            }
            Some((Tok::LParen, _)) => {
                let t = self.term(1000)?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some((Tok::LBracket, _)) => self.list(),
            Some((t, s)) => Err(Diagnostic {
                severity: Severity::Error,
                span: s,
                message: format!("expected a term, found {t}"),
            }),
            None => Err(self.error("expected a term, found end of input")),
        }
    }

    fn list(&mut self) -> PResult<Term> {
        if self.peek() == Some(&Tok::RBracket) {
            self.next();
            return Ok(Term::Const("[]".to_string()));
        }
        let mut items = vec![self.term(999)?];
        while self.peek() == Some(&Tok::Comma) {
            self.next();
            items.push(self.term(999)?);
        }
        let tail = if self.peek() == Some(&Tok::Bar) {
            self.next();
            self.term(999)?
        } else {
            Term::Const("[]".to_string())
        };
        self.expect(Tok::RBracket)?;
        Ok(items
            .into_iter()
            .rev()
            .fold(tail, |t, h| Term::Compound(".".to_string(), vec![h, t])))
    }

    /// Parse a query: a conjunction of atoms and truth-bound conditions,
    /// optionally `.`-terminated.
    pub fn query(&mut self) -> PResult<Query> {
        let mut goals = Vec::new();
        loop {
            let span = self.span();
            let term = self.term(999)?;
            let bound = match self.peek() {
                Some(Tok::Bound(op)) => Some(*op),
                _ => None,
            };
            if let Some(op) = bound {
                let var = match term {
                    Term::Var(v) if v.starts_with("_#") => {
                        return Err(self.error(
                            "truth bounds need a named variable; `_` cannot carry one",
                        ))
                    }
                    Term::Var(v) => v,
                    other => {
                        return Err(self.error(format!(
                            "truth bounds apply to variables, found `{other}`"
                        )))
                    }
                };
                self.next();
                let value = self.signed_num()?;
                goals.push(QueryGoal::Bound { var, op, value, span });
            } else {
                goals.push(QueryGoal::Atom(term, span));
            }
            match self.next() {
                Some((Tok::Comma, _)) => continue,
                Some((Tok::Dot, _)) => {
                    if !self.at_end() {
                        return Err(self.error("unexpected input after query end"));
                    }
                    break;
                }
                None => break,
                Some((t, s)) => {
                    return Err(Diagnostic {
                        severity: Severity::Error,
                        span: s,
                        message: format!("expected `,` or `.` in query, found {t}"),
                    })
                }
            }
        }
        Ok(Query { goals })
    }
}

fn tok_op(tok: &Tok) -> Option<&'static str> {
    match tok {
        Tok::Comma => Some(","),
        Tok::Eq => Some("="),
        Tok::Lt => Some("<"),
        Tok::Gt => Some(">"),
        Tok::Le => Some("=<"),
        Tok::Ge => Some(">="),
        Tok::ArithEq => Some("=:="),
        Tok::ArithNe => Some("=\\="),
        Tok::Plus => Some("+"),
        Tok::Minus => Some("-"),
        Tok::Star => Some("*"),
        Tok::Slash => Some("/"),
        Tok::SlashSlash => Some("//"),
        Tok::Name(n) if n == "is" => Some("is"),
        Tok::Name(n) if n == "mod" => Some("mod"),
        _ => None,
    }
}
