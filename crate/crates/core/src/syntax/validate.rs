//! Static checks on a parsed program.
//!
//! Errors flag programs the engine cannot give a coherent meaning to
//! (a predicate both crisp and fuzzy, unknown aggregators, malformed
//! piecewise declarations). Warnings flag places where a silent global
//! default or a derived wrapper kicks in, since those are easy to
//! trip over unintentionally.

use std::collections::BTreeMap;

use super::ast::{crisp_builtin, PredKey, PredKind, Program, Statement, Term};
use super::{Diagnostics, Span};

pub fn validate(program: &Program) -> Diagnostics {
    let mut diags = Diagnostics::new();

    let mut fuzzy_first: BTreeMap<PredKey, Span> = BTreeMap::new();
    let mut crisp_first: BTreeMap<PredKey, Span> = BTreeMap::new();
    let mut piecewise_seen: BTreeMap<String, Span> = BTreeMap::new();
    let mut default_seen: BTreeMap<PredKey, Span> = BTreeMap::new();

    for st in &program.statements {
        match st {
            Statement::FuzzyFact { head, span, .. } => {
                check_head(head, *span, &mut diags);
                if let Some(key) = PredKey::of(head) {
                    fuzzy_first.entry(key).or_insert(*span);
                }
            }
            Statement::FuzzyClause { head, aggregator, body, span } => {
                check_head(head, *span, &mut diags);
                if let Some(key) = PredKey::of(head) {
                    fuzzy_first.entry(key).or_insert(*span);
                }
                if !program.registry.contains(aggregator) {
                    diags.error(*span, format!("unknown aggregator `{aggregator}`"));
                }
                for atom in body {
                    check_fuzzy_body_atom(program, atom, *span, &mut diags);
                }
            }
            Statement::CrispClause { head, body, span } => {
                check_head(head, *span, &mut diags);
                if let Some(key) = PredKey::of(head) {
                    crisp_first.entry(key).or_insert(*span);
                }
                for goal in body {
                    check_crisp_body_goal(program, goal, *span, &mut diags);
                }
            }
            Statement::Piecewise(decl) => {
                if let Some(prev) = piecewise_seen.get(&decl.name) {
                    diags.error(
                        decl.span,
                        format!(
                            "duplicate piecewise declaration for `{}` (first at {prev})",
                            decl.name
                        ),
                    );
                } else {
                    piecewise_seen.insert(decl.name.clone(), decl.span);
                }
                if decl.points.len() < 2 {
                    diags.error(
                        decl.span,
                        format!("piecewise `{}` needs at least two points", decl.name),
                    );
                }
                if decl.points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    diags.error(
                        decl.span,
                        format!("piecewise `{}`: x not strictly increasing", decl.name),
                    );
                }
                for &(x, y) in &decl.points {
                    if !(0.0..=1.0).contains(&y) || !y.is_finite() || !x.is_finite() {
                        diags.error(
                            decl.span,
                            format!("piecewise `{}`: point ({x},{y}) has membership outside [0,1]", decl.name),
                        );
                    }
                }
            }
            Statement::DefaultDecl { name, arity, span, .. } => {
                let key = PredKey::new(name.clone(), *arity);
                if let Some(prev) = default_seen.get(&key) {
                    diags.error(
                        *span,
                        format!("duplicate default declaration for {key} (first at {prev})"),
                    );
                } else {
                    default_seen.insert(key.clone(), *span);
                }
                if program.crisp_items(&key).next().is_some() {
                    diags.error(
                        *span,
                        format!("default declared for crisp predicate {key}; crisp predicates are closed-world"),
                    );
                }
                if program.piecewise_decl(&key).is_some() {
                    diags.warning(
                        *span,
                        format!("default declared for piecewise predicate {key} is never consulted"),
                    );
                }
            }
        }
    }

    for (key, span) in &fuzzy_first {
        if crisp_first.contains_key(key) {
            diags.error(*span, format!("{key} both crisp and fuzzy"));
        }
        if piecewise_seen.contains_key(&key.name) && key.arity == 1 {
            diags.error(
                *span,
                format!("{key} defined by both clauses and a piecewise declaration"),
            );
        }
        if program.declared_default(key).is_none() {
            diags.warning(
                *span,
                format!("fuzzy predicate {key} has no default declaration; underivable atoms take [0,1]"),
            );
        }
        // An explicit fuzzy f_<p> takes the place of the wrapper the
        // engine would otherwise derive for a crisp p.
        if let Some(target) = key.name.strip_prefix("f_") {
            let target = PredKey::new(target, key.arity);
            if crisp_first.contains_key(&target) {
                diags.warning(
                    *span,
                    format!("fuzzy definition of {key} replaces the derived wrapper for crisp {target}"),
                );
            }
        }
    }

    for (name, span) in &piecewise_seen {
        let key = PredKey::new(name.clone(), 1);
        if crisp_first.contains_key(&key) {
            diags.error(*span, format!("{key} both crisp and fuzzy"));
        }
    }

    // A crisp predicate at arity n+1 captures the query arity of a fuzzy
    // predicate at arity n, making the fuzzy one unaddressable.
    for (key, span) in &fuzzy_first {
        let crisp_key = PredKey::new(key.name.clone(), key.arity + 1);
        if crisp_first.contains_key(&crisp_key) {
            diags.error(
                *span,
                format!("crisp {crisp_key} shadows fuzzy {key} at its query arity; queries cannot reach the fuzzy predicate"),
            );
        }
    }

    diags
}

fn check_head(head: &Term, span: Span, diags: &mut Diagnostics) {
    match head.functor() {
        None => diags.error(span, "clause head must be an atom".to_string()),
        Some((name, args)) => {
            if crisp_builtin(name, args.len()) || name == "." || name == "," || name == "[]" {
                diags.error(span, format!("cannot redefine builtin `{name}/{}`", args.len()));
            }
        }
    }
}

fn check_fuzzy_body_atom(program: &Program, atom: &Term, span: Span, diags: &mut Diagnostics) {
    let Some((name, args)) = atom.functor() else {
        diags.error(span, format!("fuzzy body atom must be a predicate call, found `{atom}`"));
        return;
    };
    let arity = args.len();
    if crisp_builtin(name, arity) || name == "," {
        diags.error(
            span,
            format!("builtin `{name}/{arity}` cannot appear in a fuzzy body; only fuzzy atoms aggregate"),
        );
        return;
    }
    match program.kind(name, arity) {
        PredKind::Crisp => diags.error(
            span,
            format!("crisp predicate {name}/{arity} cannot appear in a fuzzy body; use its fuzzified form f_{name}/{arity}"),
        ),
        PredKind::Unknown => diags.warning(
            span,
            format!("{name}/{arity} has no definition or default; it takes the open-world default [0,1]"),
        ),
        PredKind::Fuzzy | PredKind::Piecewise | PredKind::Wrapper(_) | PredKind::DefaultOnly => {}
    }
}

fn check_crisp_body_goal(program: &Program, goal: &Term, span: Span, diags: &mut Diagnostics) {
    let Some((name, args)) = goal.functor() else {
        diags.error(span, format!("crisp body goal must be a predicate call, found `{goal}`"));
        return;
    };
    let arity = args.len();
    if crisp_builtin(name, arity) {
        return;
    }
    match program.kind(name, arity) {
        PredKind::Crisp => {}
        PredKind::Fuzzy | PredKind::Piecewise | PredKind::Wrapper(_) | PredKind::DefaultOnly => {
            diags.error(
                span,
                format!("fuzzy predicate {name}/{arity} cannot appear in a crisp body"),
            )
        }
        PredKind::Unknown => diags.error(span, format!("unknown predicate {name}/{arity} in crisp clause")),
    }
}
