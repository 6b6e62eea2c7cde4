//! Bottom-up declarative semantics for ground programs.
//!
//! A program over a finite universe of constants is grounded into fuzzy
//! facts and clauses with no variables, crisp predicates are pre-evaluated
//! into their fuzzified wrapper facts, and the immediate-consequence
//! operator [`tp_step`] is iterated from the bottom interpretation by
//! [`lfp`]. The module doubles as an independent oracle for the top-down
//! [`crate::engine`]: on terminating programs both assign every ground
//! atom the same truth value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::eval_piecewise;
use crate::syntax::{crisp_builtin, PredKey, PredKind, Program, Statement, Term};
use crate::truth::BorelSet;

/// Per-atom convergence tolerance used by [`lfp`] callers by default.
pub const DEFAULT_LFP_EPS: f64 = 1e-9;
/// Iteration budget used by [`lfp`] callers by default.
pub const DEFAULT_MAX_ITERS: usize = 1_000;

/// Most instantiations a single statement may ground to.
const INSTANTIATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundError {
    /// A clause argument contains variables under a function symbol, so its
    /// instances cannot be enumerated over a finite universe.
    #[error("cannot ground `{atom}`: argument `{arg}` nests variables inside a compound term")]
    OpenCompound { atom: String, arg: String },
    #[error("grounding `{statement}` needs {count} instantiations (cap {INSTANTIATION_CAP})")]
    TooManyInstances { statement: String, count: u128 },
    #[error("unknown aggregator `{0}`")]
    UnknownAggregator(String),
}

/// A ground atom: predicate name plus rendered constant arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundAtom {
    name: String,
    args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(name: S, args: Vec<String>) -> GroundAtom {
        GroundAtom { name: name.into(), args }
    }

    /// An atom with no arguments.
    pub fn propositional<S: Into<String>>(name: S) -> GroundAtom {
        GroundAtom::new(name, Vec::new())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn args(&self) -> &[String] {
        &self.args
    }

    pub fn key(&self) -> PredKey {
        PredKey::new(&self.name, self.args.len())
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

/// Default truth per predicate, shared by a ground program and all
/// interpretations built over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Defaults {
    per_pred: BTreeMap<PredKey, BorelSet>,
}

impl Defaults {
    pub fn new(per_pred: BTreeMap<PredKey, BorelSet>) -> Defaults {
        Defaults { per_pred }
    }

    /// The default truth of an atom of the given predicate. Predicates the
    /// ground program never mentions are open-world.
    pub fn lookup(&self, key: &PredKey) -> BorelSet {
        self.per_pred.get(key).cloned().unwrap_or_else(BorelSet::full)
    }
}

/// A ground fuzzy clause: head supported by aggregating the body values.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundClause {
    pub head: GroundAtom,
    pub aggregator: String,
    pub body: Vec<GroundAtom>,
}

/// A program instantiated over its finite universe of ground argument
/// terms. Crisp predicates appear as wrapper facts `f_<p>` with truth 1,
/// piecewise predicates as facts at every numeric constant.
#[derive(Debug, Clone)]
pub struct GroundProgram {
    facts: Vec<(GroundAtom, BorelSet)>,
    clauses: Vec<GroundClause>,
    atoms: BTreeSet<GroundAtom>,
    defaults: Arc<Defaults>,
    registry: Arc<crate::aggregate::Registry>,
}

impl GroundProgram {
    pub fn facts(&self) -> &[(GroundAtom, BorelSet)] {
        &self.facts
    }

    pub fn clauses(&self) -> &[GroundClause] {
        &self.clauses
    }

    /// Every atom occurring in a fact, clause head, or clause body.
    pub fn atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.atoms.iter()
    }

    pub fn defaults(&self) -> &Arc<Defaults> {
        &self.defaults
    }

    /// The empty interpretation over this program's defaults.
    pub fn bottom(&self) -> Interpretation {
        Interpretation::bottom(self.defaults.clone())
    }
}

/// A fuzzy interpretation: explicit truth on a finite set of atoms, the
/// per-predicate default everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    values: BTreeMap<GroundAtom, BorelSet>,
    defaults: Arc<Defaults>,
}

impl Interpretation {
    pub fn bottom(defaults: Arc<Defaults>) -> Interpretation {
        Interpretation { values: BTreeMap::new(), defaults }
    }

    /// Assign an explicit truth value. Values must be non-empty: emptiness
    /// marks a failed derivation, never an interpretation entry.
    pub fn insert(&mut self, atom: GroundAtom, value: BorelSet) {
        assert!(!value.is_empty(), "interpretation values must be non-empty");
        self.values.insert(atom, value);
    }

    pub fn is_explicit(&self, atom: &GroundAtom) -> bool {
        self.values.contains_key(atom)
    }

    /// The truth of an atom: its explicit value, or its predicate default.
    pub fn value_of(&self, atom: &GroundAtom) -> BorelSet {
        match self.values.get(atom) {
            Some(v) => v.clone(),
            None => self.defaults.lookup(&atom.key()),
        }
    }

    pub fn explicit(&self) -> impl Iterator<Item = (&GroundAtom, &BorelSet)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn defaults(&self) -> &Arc<Defaults> {
        &self.defaults
    }

    /// Largest per-atom value discrepancy between two interpretations,
    /// compared over both explicit sets with default fallback.
    pub fn discrepancy(&self, other: &Interpretation) -> f64 {
        let mut worst = 0f64;
        for atom in self.values.keys().chain(other.values.keys()) {
            worst = worst.max(self.value_of(atom).discrepancy(&other.value_of(atom)));
        }
        worst
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (atom, value) in &self.values {
            writeln!(f, "{atom} = {value}")?;
        }
        Ok(())
    }
}

/// Result of iterating [`tp_step`] to a fixed point.
#[derive(Debug, Clone)]
pub enum LfpOutcome {
    Converged { interpretation: Interpretation, iterations: usize },
    /// The iteration budget ran out; the last two interpretations still
    /// differ by `discrepancy` on some atom.
    Diverged {
        previous: Interpretation,
        last: Interpretation,
        discrepancy: f64,
        iterations: usize,
    },
}

impl LfpOutcome {
    pub fn converged(&self) -> bool {
        matches!(self, LfpOutcome::Converged { .. })
    }

    /// The most recent interpretation, converged or not.
    pub fn interpretation(&self) -> &Interpretation {
        match self {
            LfpOutcome::Converged { interpretation, .. } => interpretation,
            LfpOutcome::Diverged { last, .. } => last,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            LfpOutcome::Converged { iterations, .. }
            | LfpOutcome::Diverged { iterations, .. } => *iterations,
        }
    }
}

/// Instantiate a program over the universe of ground argument terms
/// appearing in it. Crisp predicates are closed under their clauses and
/// re-emitted as `f_<p>` wrapper facts; piecewise predicates become facts
/// at every numeric constant of the universe.
pub fn ground(program: &Program) -> Result<GroundProgram, GroundError> {
    check_datalog(program)?;
    let universe = collect_universe(program);
    let elements: Vec<Term> = universe.values().cloned().collect();

    let crisp = crisp_closure(program, &elements)?;

    let mut facts: Vec<(GroundAtom, BorelSet)> = Vec::new();
    let mut clauses: Vec<GroundClause> = Vec::new();

    for st in &program.statements {
        match st {
            Statement::FuzzyFact { head, truth, .. } => {
                for_each_instance(st, head, &[], &elements, |asg| {
                    facts.push((ground_atom(head, asg)?, truth.clone()));
                    Ok(())
                })?;
            }
            Statement::FuzzyClause { head, aggregator, body, .. } => {
                if program.registry.get(aggregator).is_none() {
                    return Err(GroundError::UnknownAggregator(aggregator.clone()));
                }
                for_each_instance(st, head, body, &elements, |asg| {
                    let body = body
                        .iter()
                        .map(|b| ground_atom(b, asg))
                        .collect::<Result<Vec<_>, _>>()?;
                    clauses.push(GroundClause {
                        head: ground_atom(head, asg)?,
                        aggregator: aggregator.clone(),
                        body,
                    });
                    Ok(())
                })?;
            }
            Statement::CrispClause { .. } | Statement::Piecewise(_) | Statement::DefaultDecl { .. } => {}
        }
    }

    // Every provable crisp atom becomes a wrapper fact with truth 1.
    for atom in &crisp {
        facts.push((
            GroundAtom::new(format!("f_{}", atom.name), atom.args.clone()),
            BorelSet::point(1.0).expect("1 is a truth value"),
        ));
    }

    for st in &program.statements {
        let Statement::Piecewise(decl) = st else { continue };
        for term in &elements {
            let Term::Num(x) = term else { continue };
            let y = eval_piecewise(decl, *x);
            facts.push((
                GroundAtom::new(decl.name.clone(), vec![term.to_string()]),
                BorelSet::point(y).expect("piecewise values lie in [0,1]"),
            ));
        }
    }

    let mut atoms: BTreeSet<GroundAtom> = BTreeSet::new();
    atoms.extend(facts.iter().map(|(a, _)| a.clone()));
    for c in &clauses {
        atoms.insert(c.head.clone());
        atoms.extend(c.body.iter().cloned());
    }

    let mut per_pred = BTreeMap::new();
    for key in atoms.iter().map(GroundAtom::key).chain(program.known_keys()) {
        let value = program.default_value(&key.name, key.arity);
        per_pred.insert(key, value);
    }
    // Wrapper keys stay closed-world even when the crisp predicate proves
    // nothing, in which case no wrapper fact put the key in `atoms`.
    for key in program.known_keys() {
        if matches!(program.kind(&key.name, key.arity), PredKind::Crisp) {
            let wrapper = PredKey::new(format!("f_{}", key.name), key.arity);
            let value = program.default_value(&wrapper.name, wrapper.arity);
            per_pred.entry(wrapper).or_insert(value);
        }
    }

    Ok(GroundProgram {
        facts,
        clauses,
        atoms,
        defaults: Arc::new(Defaults::new(per_pred)),
        registry: program.registry.clone(),
    })
}

/// One application of the immediate-consequence operator: every fact and
/// every clause contributes a support, body values read from `i` with
/// default fallback, and each atom's new value is the union of its
/// supports. Atoms with no support are left to their defaults.
pub fn tp_step(gp: &GroundProgram, i: &Interpretation) -> Interpretation {
    let mut next = Interpretation::bottom(gp.defaults.clone());
    let mut add = |atom: &GroundAtom, support: BorelSet| {
        if support.is_empty() {
            return;
        }
        let merged = match next.values.get(atom) {
            Some(old) => old.union(&support),
            None => support,
        };
        next.values.insert(atom.clone(), merged);
    };
    for (atom, value) in &gp.facts {
        add(atom, value.clone());
    }
    for clause in &gp.clauses {
        let inputs: Vec<BorelSet> = clause.body.iter().map(|b| i.value_of(b)).collect();
        let agg = gp
            .registry
            .get(&clause.aggregator)
            .expect("grounding checked the aggregator");
        let support = agg.apply_sets(&inputs).expect("body values are non-empty");
        add(&clause.head, support);
    }
    next
}

/// Interval budget for a single atom's value. Convergent iterations stay
/// tiny because nearby pieces merge; sequences that keep minting new
/// pieces every step (self-referential `mean`, say) double an atom's
/// piece count per iteration, and each aggregation is quadratic in it,
/// so they are cut off here instead of grinding to a halt.
const GROWTH_CAP: usize = 512;

/// Iterate [`tp_step`] from the bottom interpretation until two
/// consecutive interpretations agree within `eps` on every atom, or the
/// iteration budget runs out.
pub fn lfp(gp: &GroundProgram, eps: f64, max_iters: usize) -> LfpOutcome {
    let mut current = gp.bottom();
    let mut iterations = 0;
    loop {
        let next = tp_step(gp, &current);
        iterations += 1;
        let discrepancy = current.discrepancy(&next);
        if discrepancy <= eps {
            return LfpOutcome::Converged { interpretation: next, iterations };
        }
        let widest = next.explicit().map(|(_, v)| v.intervals().len()).max().unwrap_or(0);
        if iterations >= max_iters || widest > GROWTH_CAP {
            return LfpOutcome::Diverged { previous: current, last: next, discrepancy, iterations };
        }
        current = next;
    }
}

/// Whether `i` models the program: every fact and clause head is explicit
/// and the required truth is included in the assigned one.
pub fn is_model(gp: &GroundProgram, i: &Interpretation) -> bool {
    let facts_hold = gp
        .facts
        .iter()
        .all(|(atom, v)| i.is_explicit(atom) && v.included_in(&i.value_of(atom)));
    let clauses_hold = gp.clauses.iter().all(|clause| {
        if !i.is_explicit(&clause.head) {
            return false;
        }
        let inputs: Vec<BorelSet> = clause.body.iter().map(|b| i.value_of(b)).collect();
        let agg = gp
            .registry
            .get(&clause.aggregator)
            .expect("grounding checked the aggregator");
        let support = agg.apply_sets(&inputs).expect("body values are non-empty");
        support.included_in(&i.value_of(&clause.head))
    });
    facts_hold && clauses_hold
}

/// Pointwise intersection of two interpretations over shared defaults.
/// Atoms explicit in only one argument, or whose values intersect to the
/// empty set, fall back to their default.
pub fn meet(i1: &Interpretation, i2: &Interpretation) -> Interpretation {
    let mut out = Interpretation::bottom(i1.defaults.clone());
    for (atom, v1) in &i1.values {
        let Some(v2) = i2.values.get(atom) else { continue };
        let both = v1.intersect(v2);
        if !both.is_empty() {
            out.values.insert(atom.clone(), both);
        }
    }
    out
}

/// The interpretation order: explicit atoms of `i1` are explicit in `i2`
/// with pointwise included values.
pub fn interp_included(i1: &Interpretation, i2: &Interpretation) -> bool {
    i1.values.iter().all(|(atom, v1)| match i2.values.get(atom) {
        Some(v2) => v1.included_in(v2),
        None => false,
    })
}

/// Reject arguments that nest variables inside compound terms. Such
/// clauses build terms outside the universe when instantiated, which is
/// exactly how a Herbrand universe goes infinite; the top-down engine
/// handles them instead.
fn check_datalog(program: &Program) -> Result<(), GroundError> {
    fn check_atom(atom: &Term) -> Result<(), GroundError> {
        let Term::Compound(name, args) = atom else { return Ok(()) };
        if crisp_builtin(name, args.len()) {
            return Ok(());
        }
        for arg in args {
            if matches!(arg, Term::Compound(..)) && !arg.is_ground() {
                return Err(GroundError::OpenCompound {
                    atom: atom.to_string(),
                    arg: arg.to_string(),
                });
            }
        }
        Ok(())
    }
    for st in &program.statements {
        match st {
            Statement::FuzzyFact { head, .. } => check_atom(head)?,
            Statement::FuzzyClause { head, body, .. }
            | Statement::CrispClause { head, body, .. } => {
                check_atom(head)?;
                for b in body {
                    check_atom(b)?;
                }
            }
            Statement::Piecewise(_) | Statement::DefaultDecl { .. } => {}
        }
    }
    Ok(())
}

/// Universe of ground argument terms, keyed by rendering. Arguments of
/// built-in atoms are formulas, not data, and stay out.
fn collect_universe(program: &Program) -> BTreeMap<String, Term> {
    fn scan_atom(atom: &Term, universe: &mut BTreeMap<String, Term>) {
        let Term::Compound(name, args) = atom else { return };
        if crisp_builtin(name, args.len()) {
            return;
        }
        for arg in args {
            if arg.is_ground() {
                universe.insert(arg.to_string(), arg.clone());
            }
        }
    }
    let mut universe = BTreeMap::new();
    for st in &program.statements {
        match st {
            Statement::FuzzyFact { head, .. } => scan_atom(head, &mut universe),
            Statement::FuzzyClause { head, body, .. }
            | Statement::CrispClause { head, body, .. } => {
                scan_atom(head, &mut universe);
                body.iter().for_each(|b| scan_atom(b, &mut universe));
            }
            Statement::Piecewise(decl) => {
                for (x, _) in &decl.points {
                    let t = Term::Num(*x);
                    universe.insert(t.to_string(), t);
                }
            }
            Statement::DefaultDecl { .. } => {}
        }
    }
    universe
}

/// Run `body` once per assignment of the statement's variables to
/// universe elements, after checking the instantiation cap.
fn for_each_instance<F>(
    st: &Statement,
    head: &Term,
    body_terms: &[Term],
    elements: &[Term],
    mut body: F,
) -> Result<(), GroundError>
where
    F: FnMut(&BTreeMap<String, Term>) -> Result<(), GroundError>,
{
    let mut seen = Vec::new();
    head.vars_into(&mut seen);
    for t in body_terms {
        t.vars_into(&mut seen);
    }
    let vars: Vec<String> = seen.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let count = (elements.len() as u128)
        .checked_pow(vars.len() as u32)
        .unwrap_or(u128::MAX);
    if count > INSTANTIATION_CAP {
        return Err(GroundError::TooManyInstances { statement: st.to_string(), count });
    }
    let mut asg = BTreeMap::new();
    each_assignment(&vars, elements, &mut asg, &mut body)
}

fn each_assignment<F>(
    vars: &[String],
    elements: &[Term],
    asg: &mut BTreeMap<String, Term>,
    body: &mut F,
) -> Result<(), GroundError>
where
    F: FnMut(&BTreeMap<String, Term>) -> Result<(), GroundError>,
{
    let Some((var, rest)) = vars.split_first() else {
        return body(asg);
    };
    for element in elements {
        asg.insert(var.clone(), element.clone());
        each_assignment(rest, elements, asg, body)?;
    }
    asg.remove(var);
    Ok(())
}

/// Ground an atom under an assignment. Arguments must come out as
/// constants, numbers, or ground compounds.
fn ground_atom(atom: &Term, asg: &BTreeMap<String, Term>) -> Result<GroundAtom, GroundError> {
    let Some((name, args)) = atom.functor() else {
        // A bare constant is a propositional atom.
        if let Term::Const(name) = atom {
            return Ok(GroundAtom::propositional(name.clone()));
        }
        return Err(GroundError::OpenCompound { atom: atom.to_string(), arg: atom.to_string() });
    };
    let mut out = Vec::with_capacity(args.len());
    for arg in args {
        let value = substitute(arg, asg);
        if !value.is_ground() {
            return Err(GroundError::OpenCompound {
                atom: atom.to_string(),
                arg: arg.to_string(),
            });
        }
        out.push(render_arg(&value));
    }
    Ok(GroundAtom::new(name, out))
}

/// Render an argument unambiguously: pair terms keep their parentheses so
/// `p((a,b))` does not read back as a two-argument atom.
fn render_arg(term: &Term) -> String {
    match term {
        Term::Compound(name, args) if name == "," && args.len() == 2 => format!("({term})"),
        _ => term.to_string(),
    }
}

fn substitute(term: &Term, asg: &BTreeMap<String, Term>) -> Term {
    match term {
        Term::Var(v) => asg.get(v).cloned().unwrap_or_else(|| term.clone()),
        Term::Compound(name, args) => {
            Term::Compound(name.clone(), args.iter().map(|a| substitute(a, asg)).collect())
        }
        _ => term.clone(),
    }
}

/// All crisp atoms provable over the universe, by naive bottom-up rounds.
fn crisp_closure(program: &Program, elements: &[Term]) -> Result<BTreeSet<GroundAtom>, GroundError> {
    let mut derived: BTreeSet<GroundAtom> = BTreeSet::new();
    loop {
        let mut changed = false;
        for st in &program.statements {
            let Statement::CrispClause { head, body, .. } = st else { continue };
            for_each_instance(st, head, body, elements, |asg| {
                let holds = body.iter().all(|atom| crisp_holds(atom, asg, &derived));
                if holds && derived.insert(ground_atom(head, asg)?) {
                    changed = true;
                }
                Ok(())
            })?;
        }
        if !changed {
            return Ok(derived);
        }
    }
}

/// Whether a ground crisp body atom holds: built-ins are evaluated, user
/// atoms looked up in the derived set.
fn crisp_holds(atom: &Term, asg: &BTreeMap<String, Term>, derived: &BTreeSet<GroundAtom>) -> bool {
    if let Term::Compound(name, args) = atom {
        if crisp_builtin(name, args.len()) {
            let lhs = substitute(&args[0], asg);
            let rhs = substitute(&args[1], asg);
            return match name.as_str() {
                "=" => lhs == rhs,
                "is" => match (&lhs, eval_ground(&rhs)) {
                    (Term::Num(n), Some(v)) => *n == v,
                    _ => false,
                },
                _ => match (eval_ground(&lhs), eval_ground(&rhs)) {
                    (Some(a), Some(b)) => match name.as_str() {
                        "<" => a < b,
                        ">" => a > b,
                        "=<" => a <= b,
                        ">=" => a >= b,
                        "=:=" => a == b,
                        "=\\=" => a != b,
                        _ => false,
                    },
                    _ => false,
                },
            };
        }
    }
    match ground_atom(atom, asg) {
        Ok(ga) => derived.contains(&ga),
        Err(_) => false,
    }
}

/// Arithmetic over ground terms; `None` when the term is not numeric.
/// Instantiations that fail to evaluate simply do not hold.
fn eval_ground(term: &Term) -> Option<f64> {
    match term {
        Term::Num(n) => Some(*n),
        Term::Compound(op, args) if args.len() == 2 => {
            let a = eval_ground(&args[0])?;
            let b = eval_ground(&args[1])?;
            match op.as_str() {
                "+" => Some(a + b),
                "-" => Some(a - b),
                "*" => Some(a * b),
                "/" => (b != 0.0).then(|| a / b),
                "//" => (b != 0.0).then(|| (a / b).floor()),
                "mod" => (b != 0.0).then(|| a - b * (a / b).floor()),
                _ => None,
            }
        }
        _ => None,
    }
}
