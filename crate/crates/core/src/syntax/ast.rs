//! Terms, statements and the indexed program representation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::aggregate::Registry;
use crate::truth::BorelSet;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// First-order terms. Lists are `'.'(Head, Tail)` chains ending in `[]`,
/// pairs written `(a,b)` are `','(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(String),
    Const(String),
    Num(f64),
    Compound(String, Vec<Term>),
}

impl Term {
    /// Functor name and arguments; constants are 0-ary functors.
    pub fn functor(&self) -> Option<(&str, &[Term])> {
        match self {
            Term::Const(name) => Some((name, &[])),
            Term::Compound(name, args) => Some((name, args)),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Num(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Collect variable names in order of first occurrence.
    pub fn vars_into(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.iter().any(|x| x == v) {
                    out.push(v.clone());
                }
            }
            Term::Compound(_, args) => args.iter().for_each(|a| a.vars_into(out)),
            _ => {}
        }
    }
}

/// Operator table shared by the parser and the renderer. Each entry is
/// (precedence, kind); standard Prolog conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpKind {
    Xfx,
    Xfy,
    Yfx,
}

pub fn infix_op(name: &str) -> Option<(u16, OpKind)> {
    match name {
        "," => Some((1000, OpKind::Xfy)),
        "is" | "=" | "<" | ">" | "=<" | ">=" | "=:=" | "=\\=" => Some((700, OpKind::Xfx)),
        "+" | "-" => Some((500, OpKind::Yfx)),
        "*" | "/" | "//" | "mod" => Some((400, OpKind::Yfx)),
        _ => None,
    }
}

/// The crisp builtins usable in crisp bodies and queries.
pub fn crisp_builtin(name: &str, arity: usize) -> bool {
    arity == 2 && matches!(name, "=" | "<" | ">" | "=<" | ">=" | "=:=" | "=\\=" | "is")
}

fn list_parts(term: &Term) -> Option<(Vec<&Term>, Option<&Term>)> {
    let mut items = Vec::new();
    let mut cur = term;
    loop {
        match cur {
            Term::Compound(name, args) if name == "." && args.len() == 2 => {
                items.push(&args[0]);
                cur = &args[1];
            }
            Term::Const(name) if name == "[]" => return Some((items, None)),
            _ if !items.is_empty() => return Some((items, Some(cur))),
            _ => return None,
        }
    }
}

fn fmt_term(term: &Term, max_prec: u16, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match term {
        // Generated anonymous variables print back as the `_` they came from.
        Term::Var(v) if v.starts_with("_#") => write!(f, "_"),
        Term::Var(v) => write!(f, "{v}"),
        Term::Const(c) => write!(f, "{c}"),
        Term::Num(n) => write!(f, "{n}"),
        Term::Compound(name, args) => {
            if let Some((items, tail)) = list_parts(term) {
                write!(f, "[")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    fmt_term(item, 999, f)?;
                }
                if let Some(t) = tail {
                    write!(f, "|")?;
                    fmt_term(t, 999, f)?;
                }
                return write!(f, "]");
            }
            if args.len() == 2 {
                if let Some((prec, kind)) = infix_op(name) {
                    let (lmax, rmax) = match kind {
                        OpKind::Xfx => (prec - 1, prec - 1),
                        OpKind::Xfy => (prec - 1, prec),
                        OpKind::Yfx => (prec, prec - 1),
                    };
                    let parens = prec > max_prec;
                    if parens {
                        write!(f, "(")?;
                    }
                    fmt_term(&args[0], lmax, f)?;
                    // Word operators need surrounding space, symbols do not.
                    if name.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                        write!(f, " {name} ")?;
                    } else {
                        write!(f, "{name}")?;
                    }
                    fmt_term(&args[1], rmax, f)?;
                    if parens {
                        write!(f, ")")?;
                    }
                    return Ok(());
                }
            }
            write!(f, "{name}(")?;
            for (k, arg) in args.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                fmt_term(arg, 999, f)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, 1200, f)
    }
}

/// Predicate identity: name plus the arity the atom is written with in
/// program text. Fuzzy predicates carry no truth argument in source, so
/// queries address them with one extra argument (the truth slot).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredKey {
    pub name: String,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: impl Into<String>, arity: usize) -> PredKey {
        PredKey { name: name.into(), arity }
    }

    pub fn of(term: &Term) -> Option<PredKey> {
        term.functor().map(|(name, args)| PredKey::new(name, args.len()))
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseDecl {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    FuzzyFact {
        head: Term,
        truth: BorelSet,
        span: Span,
    },
    FuzzyClause {
        head: Term,
        aggregator: String,
        body: Vec<Term>,
        span: Span,
    },
    CrispClause {
        head: Term,
        body: Vec<Term>,
        span: Span,
    },
    Piecewise(PiecewiseDecl),
    DefaultDecl {
        name: String,
        arity: usize,
        value: BorelSet,
        span: Span,
    },
}

impl Statement {
    pub fn span(&self) -> Span {
        match self {
            Statement::FuzzyFact { span, .. }
            | Statement::FuzzyClause { span, .. }
            | Statement::CrispClause { span, .. }
            | Statement::DefaultDecl { span, .. } => *span,
            Statement::Piecewise(p) => p.span,
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::FuzzyFact { head, truth, .. } => write!(f, "{head} :~ {truth}."),
            Statement::FuzzyClause { head, aggregator, body, .. } => {
                write!(f, "{head} :~{aggregator} ")?;
                for (k, atom) in body.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    fmt_term(atom, 999, f)?;
                }
                write!(f, ".")
            }
            Statement::CrispClause { head, body, .. } => {
                write!(f, "{head}")?;
                if !body.is_empty() {
                    write!(f, " :- ")?;
                    for (k, goal) in body.iter().enumerate() {
                        if k > 0 {
                            write!(f, ", ")?;
                        }
                        fmt_term(goal, 999, f)?;
                    }
                }
                write!(f, ".")
            }
            Statement::Piecewise(p) => {
                write!(f, "{} :# fuzzy_predicate([", p.name)?;
                for (k, (x, y)) in p.points.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "({x},{y})")?;
                }
                write!(f, "]).")
            }
            Statement::DefaultDecl { name, arity, value, .. } => {
                write!(f, ":- default({name}/{arity}, {value}).")
            }
        }
    }
}

/// How a predicate reference resolves within a validated program.
#[derive(Debug, Clone, PartialEq)]
pub enum PredKind {
    /// Defined by crisp clauses (or explicitly fuzzified with none).
    Crisp,
    /// Defined by fuzzy facts or clauses.
    Fuzzy,
    /// Defined by a piecewise membership declaration.
    Piecewise,
    /// `f_<p>` wrapper over the crisp predicate given by the key.
    Wrapper(PredKey),
    /// Known only through a default declaration.
    DefaultOnly,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzifyError {
    #[error("cannot fuzzify `{0}`: it is not a crisp predicate")]
    NotCrisp(PredKey),
}

/// A parsed program with per-predicate indexes.
#[derive(Debug, Clone)]
pub struct Program {
    pub statements: Vec<Statement>,
    pub registry: Arc<Registry>,
    fuzzy_defs: BTreeMap<PredKey, Vec<usize>>,
    crisp_defs: BTreeMap<PredKey, Vec<usize>>,
    piecewise: BTreeMap<PredKey, usize>,
    defaults: BTreeMap<PredKey, usize>,
    fuzzified: BTreeSet<PredKey>,
}

impl Program {
    pub fn new(statements: Vec<Statement>, registry: Arc<Registry>) -> Program {
        let mut p = Program {
            statements,
            registry,
            fuzzy_defs: BTreeMap::new(),
            crisp_defs: BTreeMap::new(),
            piecewise: BTreeMap::new(),
            defaults: BTreeMap::new(),
            fuzzified: BTreeSet::new(),
        };
        for (idx, st) in p.statements.iter().enumerate() {
            match st {
                Statement::FuzzyFact { head, .. } | Statement::FuzzyClause { head, .. } => {
                    if let Some(key) = PredKey::of(head) {
                        p.fuzzy_defs.entry(key).or_default().push(idx);
                    }
                }
                Statement::CrispClause { head, .. } => {
                    if let Some(key) = PredKey::of(head) {
                        p.crisp_defs.entry(key).or_default().push(idx);
                    }
                }
                Statement::Piecewise(decl) => {
                    p.piecewise
                        .entry(PredKey::new(decl.name.clone(), 1))
                        .or_insert(idx);
                }
                Statement::DefaultDecl { name, arity, .. } => {
                    p.defaults
                        .entry(PredKey::new(name.clone(), *arity))
                        .or_insert(idx);
                }
            }
        }
        p
    }

    pub fn empty(registry: Arc<Registry>) -> Program {
        Program::new(Vec::new(), registry)
    }

    /// Fuzzy facts and clauses for a predicate, in source order.
    pub fn fuzzy_items(&self, key: &PredKey) -> impl Iterator<Item = &Statement> {
        self.fuzzy_defs
            .get(key)
            .into_iter()
            .flatten()
            .map(|&i| &self.statements[i])
    }

    /// Crisp clauses for a predicate, in source order.
    pub fn crisp_items(&self, key: &PredKey) -> impl Iterator<Item = &Statement> {
        self.crisp_defs
            .get(key)
            .into_iter()
            .flatten()
            .map(|&i| &self.statements[i])
    }

    pub fn piecewise_decl(&self, key: &PredKey) -> Option<&PiecewiseDecl> {
        match self.piecewise.get(key).map(|&i| &self.statements[i]) {
            Some(Statement::Piecewise(decl)) => Some(decl),
            _ => None,
        }
    }

    pub fn declared_default(&self, key: &PredKey) -> Option<&BorelSet> {
        match self.defaults.get(key).map(|&i| &self.statements[i]) {
            Some(Statement::DefaultDecl { value, .. }) => Some(value),
            _ => None,
        }
    }

    /// Every predicate key that appears in some index, for validation walks.
    pub fn known_keys(&self) -> BTreeSet<PredKey> {
        let mut keys = BTreeSet::new();
        keys.extend(self.fuzzy_defs.keys().cloned());
        keys.extend(self.crisp_defs.keys().cloned());
        keys.extend(self.piecewise.keys().cloned());
        keys.extend(self.defaults.keys().cloned());
        keys
    }

    pub fn has_fuzzy_defs(&self, key: &PredKey) -> bool {
        self.fuzzy_defs.contains_key(key)
    }

    pub fn has_crisp_defs(&self, key: &PredKey) -> bool {
        self.crisp_defs.contains_key(key) || self.fuzzified.contains(key)
    }

    /// Register the fuzzified wrapper `f_<name>` for a crisp predicate.
    ///
    /// Wrappers for crisp predicates with clauses are derived automatically;
    /// calling this is only needed to fuzzify a predicate with no clauses
    /// (it then behaves as defined-but-empty, so the wrapper defaults).
    pub fn fuzzify(&mut self, key: &PredKey) -> Result<PredKey, FuzzifyError> {
        match self.kind(&key.name, key.arity) {
            PredKind::Crisp | PredKind::Unknown => {}
            _ => return Err(FuzzifyError::NotCrisp(key.clone())),
        }
        let wrapper = PredKey::new(format!("f_{}", key.name), key.arity);
        if self.has_fuzzy_defs(&wrapper) || self.piecewise.contains_key(&wrapper) {
            return Err(FuzzifyError::NotCrisp(key.clone()));
        }
        self.fuzzified.insert(key.clone());
        Ok(wrapper)
    }

    /// Resolve a predicate reference written with `arity` arguments.
    pub fn kind(&self, name: &str, arity: usize) -> PredKind {
        let key = PredKey::new(name, arity);
        if self.fuzzy_defs.contains_key(&key) {
            return PredKind::Fuzzy;
        }
        if self.piecewise.contains_key(&key) {
            return PredKind::Piecewise;
        }
        if self.crisp_defs.contains_key(&key) || self.fuzzified.contains(&key) {
            return PredKind::Crisp;
        }
        if let Some(target) = name.strip_prefix("f_") {
            let target = PredKey::new(target, arity);
            if self.crisp_defs.contains_key(&target) || self.fuzzified.contains(&target) {
                return PredKind::Wrapper(target);
            }
        }
        if self.defaults.contains_key(&key) {
            return PredKind::DefaultOnly;
        }
        PredKind::Unknown
    }

    /// Default truth value for a fuzzy predicate reference: the declared
    /// default if any, the closed-world {[0,0]} for fuzzified wrappers,
    /// and the open-world {[0,1]} otherwise.
    pub fn default_value(&self, name: &str, arity: usize) -> BorelSet {
        let key = PredKey::new(name, arity);
        if let Some(v) = self.declared_default(&key) {
            return v.clone();
        }
        if let PredKind::Wrapper(_) = self.kind(name, arity) {
            return BorelSet::point(0.0).unwrap();
        }
        BorelSet::full()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for st in &self.statements {
            writeln!(f, "{st}")?;
        }
        Ok(())
    }
}

/// Truth-bound comparison operators, query-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl fmt::Display for BoundOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundOp::Lt => ".<.",
            BoundOp::Le => ".=<.",
            BoundOp::Gt => ".>.",
            BoundOp::Ge => ".>=.",
            BoundOp::Eq => ".=.",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryGoal {
    Atom(Term, Span),
    Bound {
        var: String,
        op: BoundOp,
        value: f64,
        span: Span,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub goals: Vec<QueryGoal>,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, goal) in self.goals.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            match goal {
                QueryGoal::Atom(t, _) => fmt_term(t, 999, f)?,
                QueryGoal::Bound { var, op, value, .. } => write!(f, "{var} {op} {value}")?,
            }
        }
        write!(f, ".")
    }
}
