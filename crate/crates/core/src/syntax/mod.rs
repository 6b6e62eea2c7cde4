//! Source syntax: lexer, parser, AST and static validation.
//!
//! The entry points are [`parse_program`] for a whole source file and
//! [`parse_query`] for a single goal conjunction. Both report problems as
//! [`Diagnostics`], a list of positioned errors and warnings; a program
//! only loads when it is free of errors, while warnings travel alongside
//! the parsed result so callers can surface them without failing.

use std::fmt;
use std::sync::Arc;

use crate::aggregate::Registry;

pub mod ast;
mod lexer;
mod parser;
mod validate;

pub use ast::{
    crisp_builtin, BoundOp, FuzzifyError, PiecewiseDecl, PredKey, PredKind, Program, Query,
    QueryGoal, Span, Statement, Term,
};

/// How serious a diagnostic is. Errors abort loading, warnings do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A single positioned message about the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {}: {}", self.span, kind, self.message)
    }
}

/// An ordered collection of diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub items: Vec<Diagnostic>,
}

impl Diagnostics {
    pub fn new() -> Diagnostics {
        Diagnostics::default()
    }

    pub fn push(&mut self, d: Diagnostic) {
        self.items.push(d);
    }

    pub fn error(&mut self, span: Span, message: impl Into<String>) {
        self.items.push(Diagnostic {
            severity: Severity::Error,
            span,
            message: message.into(),
        });
    }

    pub fn warning(&mut self, span: Span, message: impl Into<String>) {
        self.items.push(Diagnostic {
            severity: Severity::Warning,
            span,
            message: message.into(),
        });
    }

    pub fn has_errors(&self) -> bool {
        self.items.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The warnings alone, for callers that loaded successfully.
    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter().filter(|d| d.severity == Severity::Warning)
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.items.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}

/// Parse and validate a complete source text.
///
/// On success returns the indexed program together with any warnings; on
/// failure returns every diagnostic collected, warnings included, in
/// source order.
pub fn parse_program(src: &str, registry: Arc<Registry>) -> Result<(Program, Diagnostics), Diagnostics> {
    let toks = match lexer::lex(src) {
        Ok(toks) => toks,
        Err(d) => {
            return Err(Diagnostics { items: vec![d] });
        }
    };
    let mut parser = parser::Parser::new(toks);
    let (statements, parse_errors) = parser.statements();
    let program = Program::new(statements, registry);
    let mut diags = Diagnostics { items: parse_errors };
    diags.items.extend(validate::validate(&program).items);
    diags.items.sort_by_key(|d| (d.span.line, d.span.col));
    if diags.has_errors() {
        Err(diags)
    } else {
        let warnings = Diagnostics {
            items: diags.warnings().cloned().collect(),
        };
        Ok((program, warnings))
    }
}

/// Parse a query such as `p(X, V), V .>. 0.5`.
pub fn parse_query(src: &str) -> Result<Query, Diagnostics> {
    let toks = lexer::lex(src).map_err(|d| Diagnostics { items: vec![d] })?;
    if toks.is_empty() {
        return Err(Diagnostics {
            items: vec![Diagnostic {
                severity: Severity::Error,
                span: Span::default(),
                message: "empty query".to_string(),
            }],
        });
    }
    let mut parser = parser::Parser::new(toks);
    parser.query().map_err(|d| Diagnostics { items: vec![d] })
}
