//! Triangular substitutions and unification with occurs check.

use std::collections::BTreeMap;

use crate::syntax::Term;

/// A binding map from variable names to terms. Bindings are triangular:
/// a bound term may mention variables that are themselves bound, and
/// [`Subst::walk`]/[`Subst::apply`] chase the chain on demand.
#[derive(Debug, Clone, Default)]
pub struct Subst {
    map: BTreeMap<String, Term>,
}

impl Subst {
    pub fn new() -> Subst {
        Subst::default()
    }

    pub fn is_bound(&self, var: &str) -> bool {
        self.map.contains_key(var)
    }

    /// Resolve a term one level: follow variable bindings until an
    /// unbound variable or a non-variable term surfaces.
    pub fn walk<'a>(&'a self, term: &'a Term) -> &'a Term {
        let mut cur = term;
        while let Term::Var(v) = cur {
            match self.map.get(v) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    /// Resolve a term fully, substituting through compounds.
    pub fn apply(&self, term: &Term) -> Term {
        let walked = self.walk(term);
        match walked {
            Term::Compound(name, args) => Term::Compound(
                name.clone(),
                args.iter().map(|a| self.apply(a)).collect(),
            ),
            other => other.clone(),
        }
    }

    fn occurs(&self, var: &str, term: &Term) -> bool {
        match self.walk(term) {
            Term::Var(v) => v == var,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(var, a)),
            _ => false,
        }
    }

    /// Extend the substitution so that `a` and `b` become equal, or
    /// report failure leaving the substitution in an undefined partial
    /// state (callers clone before trying).
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), _) => {
                if self.occurs(x, &b) {
                    false
                } else {
                    self.map.insert(x.clone(), b);
                    true
                }
            }
            (_, Term::Var(y)) => {
                if self.occurs(y, &a) {
                    false
                } else {
                    self.map.insert(y.clone(), a);
                    true
                }
            }
            (Term::Num(x), Term::Num(y)) => x == y,
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.unify(x, y))
            }
            _ => false,
        }
    }
}

/// Most general unifier of two terms, as a fresh substitution.
pub fn mgu(a: &Term, b: &Term) -> Option<Subst> {
    let mut s = Subst::new();
    if s.unify(a, b) {
        Some(s)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(src: &str) -> Term {
        let q = crate::syntax::parse_query(src).unwrap();
        match q.goals.into_iter().next().unwrap() {
            crate::syntax::QueryGoal::Atom(t, _) => t,
            other => panic!("expected atom, got {other:?}"),
        }
    }

    #[test]
    fn binds_constants() {
        let s = mgu(&term("tall(X)"), &term("tall(john)")).unwrap();
        assert_eq!(s.apply(&Term::Var("X".into())).to_string(), "john");
    }

    #[test]
    fn clash_through_shared_variable_fails() {
        assert!(mgu(&term("f(X,X)"), &term("f(a,b)")).is_none());
    }

    #[test]
    fn unifies_nested_structures() {
        let s = mgu(&term("p(X,g(Y))"), &term("p(g(a),Z)")).unwrap();
        assert_eq!(s.apply(&Term::Var("X".into())).to_string(), "g(a)");
        assert_eq!(s.apply(&Term::Var("Z".into())).to_string(), "g(Y)");
    }

    #[test]
    fn occurs_check_rejects_cyclic_bindings() {
        assert!(mgu(&term("p(X)"), &term("p(g(X))")).is_none());
        assert!(mgu(&term("p(X,Y)"), &term("p(g(Y),g(X))")).is_none());
    }

    #[test]
    fn application_is_idempotent() {
        let s = mgu(&term("p(X,Y,Z)"), &term("p(g(Y),h(Z),a)")).unwrap();
        let t = term("q(X,Y,Z)");
        let once = s.apply(&t);
        let twice = s.apply(&once);
        assert_eq!(once, twice);
        assert_eq!(once.to_string(), "q(g(h(a)),h(a),a)");
    }

    #[test]
    fn lists_unify_elementwise() {
        let s = mgu(&term("p([a,b|T])"), &term("p([a,b,c])")).unwrap();
        assert_eq!(s.apply(&Term::Var("T".into())).to_string(), "[c]");
    }
}
