//! The transition machine behind [`solve`]: goal selection, the three
//! fuzzy rules, crisp SLD steps, and answer materialization.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::syntax::{
    crisp_builtin, BoundOp, PiecewiseDecl, PredKey, PredKind, Program, Query, QueryGoal,
    Statement, Term,
};
use crate::truth::{BorelSet, EPS};

use super::subst::Subst;
use super::{render_term, Answer, EngineError, SolveOptions, Strategy, DEFAULT_DEPTH_LIMIT};

#[derive(Clone)]
enum GoalItem {
    /// A fuzzy atom (source arity); its truth lands in slot `out`.
    Fuzzy { atom: Term, out: usize },
    /// A crisp atom solved by SLD resolution.
    Crisp { atom: Term },
    /// Pending aggregation for a rule-2 expansion, queued after the body.
    Agg {
        name: String,
        head: Term,
        delta: String,
        inputs: Vec<usize>,
        out: usize,
    },
}

#[derive(Clone)]
struct State {
    goals: VecDeque<GoalItem>,
    subst: Subst,
    slots: Vec<Option<BorelSet>>,
    depth: usize,
}

enum QVar {
    Term(String),
    Truth(String, usize),
}

/// Lazy enumeration of derivations; each item is one answer already
/// restricted by the query's truth bounds.
pub struct Solutions<'p> {
    program: &'p Program,
    work: VecDeque<State>,
    strategy: Strategy,
    limit: usize,
    trace: Option<Box<dyn FnMut(String) + 'p>>,
    rename: usize,
    qvars: Vec<QVar>,
    bounds: Vec<(usize, BoundOp, f64)>,
    done: bool,
}

pub(super) fn solve<'p>(
    program: &'p Program,
    query: &Query,
    options: SolveOptions<'p>,
) -> Result<Solutions<'p>, EngineError> {
    let mut goals = VecDeque::new();
    let mut qvars: Vec<QVar> = Vec::new();
    let mut truth_slots: BTreeMap<String, usize> = BTreeMap::new();
    let mut truth_pos: BTreeMap<String, usize> = BTreeMap::new();
    let mut term_vars: BTreeSet<String> = BTreeSet::new();
    let mut slot_count = 0usize;

    let note_term_vars = |t: &Term, qvars: &mut Vec<QVar>, term_vars: &mut BTreeSet<String>| {
        let mut vars = Vec::new();
        t.vars_into(&mut vars);
        for v in vars {
            if v.starts_with("_#") {
                continue;
            }
            if term_vars.insert(v.clone()) {
                qvars.push(QVar::Term(v));
            }
        }
    };

    for goal in &query.goals {
        let QueryGoal::Atom(t, _) = goal else { continue };
        let Some((name, args)) = t.functor() else {
            return Err(EngineError::BadGoal(t.to_string()));
        };
        let m = args.len();
        if crisp_builtin(name, m) || program.kind(name, m) == PredKind::Crisp {
            note_term_vars(t, &mut qvars, &mut term_vars);
            goals.push_back(GoalItem::Crisp { atom: t.clone() });
            continue;
        }
        let fuzzy_kind = if m >= 1 {
            program.kind(name, m - 1)
        } else {
            PredKind::Unknown
        };
        match fuzzy_kind {
            PredKind::Fuzzy
            | PredKind::Piecewise
            | PredKind::Wrapper(_)
            | PredKind::DefaultOnly => {
                let Term::Var(slot_var) = &args[m - 1] else {
                    return Err(EngineError::TruthSlot { atom: t.to_string() });
                };
                let slot_var = slot_var.clone();
                if truth_slots.contains_key(&slot_var) {
                    return Err(EngineError::TruthVarReuse(slot_var));
                }
                let src_args = args[..m - 1].to_vec();
                if src_args.iter().any(|a| {
                    let mut vs = Vec::new();
                    a.vars_into(&mut vs);
                    vs.contains(&slot_var)
                }) {
                    return Err(EngineError::TruthSlot { atom: t.to_string() });
                }
                for a in &src_args {
                    note_term_vars(a, &mut qvars, &mut term_vars);
                }
                let slot = slot_count;
                slot_count += 1;
                truth_slots.insert(slot_var.clone(), slot);
                if !slot_var.starts_with("_#") {
                    truth_pos.insert(slot_var.clone(), qvars.iter().filter(|q| matches!(q, QVar::Truth(..))).count());
                    qvars.push(QVar::Truth(slot_var, slot));
                }
                let atom = if src_args.is_empty() {
                    Term::Const(name.to_string())
                } else {
                    Term::Compound(name.to_string(), src_args)
                };
                goals.push_back(GoalItem::Fuzzy { atom, out: slot });
            }
            _ => {
                if matches!(
                    program.kind(name, m),
                    PredKind::Fuzzy | PredKind::Piecewise | PredKind::Wrapper(_) | PredKind::DefaultOnly
                ) {
                    return Err(EngineError::Existence(format!(
                        "{name}/{m} is fuzzy; query it with {} arguments, the last receiving the truth value",
                        m + 1
                    )));
                }
                return Err(EngineError::Existence(format!("{name}/{m}")));
            }
        }
    }

    if let Some(clash) = term_vars.iter().find(|v| truth_slots.contains_key(*v)) {
        return Err(EngineError::TruthVarReuse(clash.clone()));
    }

    let mut bounds = Vec::new();
    for goal in &query.goals {
        let QueryGoal::Bound { var, op, value, .. } = goal else { continue };
        let Some(&pos) = truth_pos.get(var) else {
            return Err(EngineError::BoundTarget { var: var.clone() });
        };
        bounds.push((pos, *op, *value));
    }

    let initial = State {
        goals,
        subst: Subst::new(),
        slots: vec![None; slot_count],
        depth: 0,
    };
    Ok(Solutions {
        program,
        work: VecDeque::from([initial]),
        strategy: options.strategy,
        limit: options.depth_limit.unwrap_or(DEFAULT_DEPTH_LIMIT),
        trace: options.trace,
        rename: 0,
        qvars,
        bounds,
        done: false,
    })
}

impl Iterator for Solutions<'_> {
    type Item = Result<Answer, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let state = match self.strategy {
                Strategy::DepthFirst => self.work.pop_back(),
                Strategy::BreadthFirst => self.work.pop_front(),
            }?;
            if state.goals.is_empty() {
                if let Some(answer) = self.materialize(&state) {
                    return Some(Ok(answer));
                }
                continue;
            }
            match self.expand(state) {
                Ok(children) => match self.strategy {
                    Strategy::DepthFirst => {
                        for child in children.into_iter().rev() {
                            self.work.push_back(child);
                        }
                    }
                    Strategy::BreadthFirst => self.work.extend(children),
                },
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

impl Solutions<'_> {
    fn emit(&mut self, line: String) {
        if let Some(sink) = &mut self.trace {
            sink(line);
        }
    }

    fn fresh(&mut self) -> usize {
        self.rename += 1;
        self.rename
    }

    fn deepen(&self, state: &State, goal: &Term) -> Result<usize, EngineError> {
        if state.depth + 1 > self.limit {
            Err(EngineError::DepthLimit {
                goal: render_term(goal),
                limit: self.limit,
            })
        } else {
            Ok(state.depth + 1)
        }
    }

    fn expand(&mut self, mut state: State) -> Result<Vec<State>, EngineError> {
        let item = state.goals.pop_front().expect("non-empty goals");
        match item {
            GoalItem::Crisp { atom } => self.expand_crisp(state, &atom),
            GoalItem::Fuzzy { atom, out } => self.expand_fuzzy(state, &atom, out),
            GoalItem::Agg { name, head, delta, inputs, out } => {
                let sets: Vec<BorelSet> = inputs
                    .iter()
                    .map(|&i| state.slots[i].clone().expect("body truth bound"))
                    .collect();
                let agg = self.program.registry.get(&name).expect("validated aggregator");
                let result = agg.apply_sets(&sets).expect("aggregation over bound slots");
                if result.is_empty() {
                    return Ok(Vec::new());
                }
                let shown = render_term(&state.subst.apply(&head));
                self.emit(format!("rule2 {shown} {delta} {result}"));
                state.slots[out] = Some(result);
                Ok(vec![state])
            }
        }
    }

    fn expand_crisp(&mut self, state: State, atom: &Term) -> Result<Vec<State>, EngineError> {
        let goal = state.subst.apply(atom);
        let expansions = crisp_expand(self.program, &state.subst, &goal, &mut self.rename)?;
        let mut children = Vec::new();
        for (front, subst) in expansions {
            let mut child = state.clone();
            child.subst = subst;
            child.depth = self.deepen(&state, &goal)?;
            for g in front.into_iter().rev() {
                child.goals.push_front(GoalItem::Crisp { atom: g });
            }
            children.push(child);
        }
        Ok(children)
    }

    fn expand_fuzzy(&mut self, state: State, atom: &Term, out: usize) -> Result<Vec<State>, EngineError> {
        let goal = state.subst.apply(atom);
        let (name, args) = goal.functor().expect("fuzzy atoms are calls");
        let name = name.to_string();
        let arity = args.len();
        match self.program.kind(&name, arity) {
            PredKind::Piecewise => {
                let key = PredKey::new(name.clone(), 1);
                let decl = self.program.piecewise_decl(&key).expect("indexed piecewise");
                let Term::Num(x) = &args[0] else {
                    return Err(EngineError::PiecewiseType {
                        pred: name,
                        arg: render_term(&args[0]),
                    });
                };
                let mu = eval_piecewise(decl, *x);
                let set = BorelSet::point(mu).expect("interpolation stays in [0,1]");
                let mut child = state.clone();
                child.depth = self.deepen(&state, &goal)?;
                child.slots[out] = Some(set.clone());
                self.emit(format!("rule1 {} {{}} {set}", render_term(&goal)));
                Ok(vec![child])
            }
            PredKind::Wrapper(target) => {
                let crisp_goal = if args.is_empty() {
                    Term::Const(target.name.clone())
                } else {
                    Term::Compound(target.name.clone(), args.to_vec())
                };
                let solutions = crisp_search(
                    self.program,
                    &state.subst,
                    &crisp_goal,
                    state.depth,
                    self.limit,
                    &mut self.rename,
                )?;
                if solutions.is_empty() {
                    let value = self.program.default_value(&name, arity);
                    let mut child = state.clone();
                    child.depth = self.deepen(&state, &goal)?;
                    child.slots[out] = Some(value.clone());
                    self.emit(format!("rule3 {} {{}} {value}", render_term(&goal)));
                    return Ok(vec![child]);
                }
                let mut children = Vec::new();
                for (subst, depth) in solutions {
                    let mut child = state.clone();
                    let delta = binding_delta(&goal, &state.subst, &subst);
                    child.subst = subst;
                    child.depth = depth + 1;
                    if child.depth > self.limit {
                        return Err(EngineError::DepthLimit {
                            goal: render_term(&goal),
                            limit: self.limit,
                        });
                    }
                    child.slots[out] = Some(BorelSet::point(1.0).expect("unit point"));
                    let shown = render_term(&child.subst.apply(&goal));
                    self.emit(format!("rule1 {shown} {delta} 1"));
                    children.push(child);
                }
                Ok(children)
            }
            PredKind::Crisp => Err(EngineError::BadGoal(format!(
                "{name}/{arity} is crisp and cannot take a truth value"
            ))),
            PredKind::Fuzzy | PredKind::DefaultOnly | PredKind::Unknown => {
                let key = PredKey::new(name.clone(), arity);
                let items: Vec<Statement> = self.program.fuzzy_items(&key).cloned().collect();
                let mut children = Vec::new();
                let mut any_unified = false;
                for st in items {
                    match st {
                        Statement::FuzzyFact { head, truth, .. } => {
                            let head = rename_term(&head, self.fresh());
                            let mut subst = state.subst.clone();
                            if !subst.unify(&head, &goal) {
                                continue;
                            }
                            any_unified = true;
                            let mut child = state.clone();
                            let delta = binding_delta(&goal, &state.subst, &subst);
                            child.subst = subst;
                            child.depth = self.deepen(&state, &goal)?;
                            child.slots[out] = Some(truth.clone());
                            let shown = render_term(&child.subst.apply(&goal));
                            self.emit(format!("rule1 {shown} {delta} {truth}"));
                            children.push(child);
                        }
                        Statement::FuzzyClause { head, aggregator, body, .. } => {
                            let k = self.fresh();
                            let head = rename_term(&head, k);
                            let mut subst = state.subst.clone();
                            if !subst.unify(&head, &goal) {
                                continue;
                            }
                            any_unified = true;
                            let mut child = state.clone();
                            let delta = binding_delta(&goal, &state.subst, &subst);
                            child.subst = subst;
                            child.depth = self.deepen(&state, &goal)?;
                            let base = child.slots.len();
                            child.slots.extend(std::iter::repeat_n(None, body.len()));
                            let agg_item = GoalItem::Agg {
                                name: aggregator.clone(),
                                head: goal.clone(),
                                delta,
                                inputs: (base..base + body.len()).collect(),
                                out,
                            };
                            child.goals.push_front(agg_item);
                            for (i, b) in body.iter().enumerate().rev() {
                                child.goals.push_front(GoalItem::Fuzzy {
                                    atom: rename_term(b, k),
                                    out: base + i,
                                });
                            }
                            children.push(child);
                        }
                        _ => unreachable!("fuzzy index holds only fuzzy statements"),
                    }
                }
                if !any_unified {
                    let value = self.program.default_value(&name, arity);
                    let mut child = state.clone();
                    child.depth = self.deepen(&state, &goal)?;
                    child.slots[out] = Some(value.clone());
                    self.emit(format!("rule3 {} {{}} {value}", render_term(&goal)));
                    children.push(child);
                }
                Ok(children)
            }
        }
    }

    fn materialize(&self, state: &State) -> Option<Answer> {
        let mut terms = Vec::new();
        let mut truths = Vec::new();
        for qv in &self.qvars {
            match qv {
                QVar::Term(name) => {
                    terms.push((name.clone(), state.subst.apply(&Term::Var(name.clone()))));
                }
                QVar::Truth(name, slot) => {
                    truths.push((name.clone(), state.slots[*slot].clone().expect("query atom solved")));
                }
            }
        }
        for (pos, op, value) in &self.bounds {
            let restricted = apply_bound(&truths[*pos].1, *op, *value)?;
            truths[*pos].1 = restricted;
        }
        Some(Answer { terms, truths })
    }
}

/// New bindings a transition introduced for the variables of `goal`,
/// rendered `{X=john,Y=_}`; `{}` when ground or unchanged.
fn binding_delta(goal: &Term, before: &Subst, after: &Subst) -> String {
    let mut vars = Vec::new();
    goal.vars_into(&mut vars);
    let mut parts = Vec::new();
    for v in vars {
        let var = Term::Var(v.clone());
        if before.is_bound(&v) {
            continue;
        }
        let walked = after.walk(&var);
        if walked != &var {
            let display = if v.starts_with("_#") { "_".to_string() } else { v.clone() };
            parts.push(format!("{display}={}", render_term(&after.apply(&var))));
        }
    }
    format!("{{{}}}", parts.join(","))
}

/// One SLD step for a crisp goal: each element is the goals to push plus
/// the extended substitution. Builtins yield at most one child.
fn crisp_expand(
    program: &Program,
    subst: &Subst,
    goal: &Term,
    rename: &mut usize,
) -> Result<Vec<(Vec<Term>, Subst)>, EngineError> {
    let Some((name, args)) = goal.functor() else {
        return Err(EngineError::BadGoal(render_term(goal)));
    };
    let m = args.len();
    if crisp_builtin(name, m) {
        let mut s = subst.clone();
        let child = match name {
            "=" => s.unify(&args[0], &args[1]),
            "is" => {
                let v = eval_arith(&s, &args[1])?;
                s.unify(&args[0], &Term::Num(v))
            }
            _ => {
                let x = eval_arith(&s, &args[0])?;
                let y = eval_arith(&s, &args[1])?;
                match name {
                    "<" => x < y,
                    ">" => x > y,
                    "=<" => x <= y,
                    ">=" => x >= y,
                    "=:=" => x == y,
                    "=\\=" => x != y,
                    _ => unreachable!("builtin table"),
                }
            }
        };
        return Ok(if child { vec![(Vec::new(), s)] } else { Vec::new() });
    }
    if program.kind(name, m) != PredKind::Crisp {
        return Err(EngineError::Existence(format!("{name}/{m}")));
    }
    let key = PredKey::new(name, m);
    let mut children = Vec::new();
    for st in program.crisp_items(&key) {
        let Statement::CrispClause { head, body, .. } = st else {
            continue;
        };
        *rename += 1;
        let head = rename_term(head, *rename);
        let mut s = subst.clone();
        if s.unify(&head, goal) {
            let front = body.iter().map(|b| rename_term(b, *rename)).collect();
            children.push((front, s));
        }
    }
    Ok(children)
}

/// Depth-first SLD search from `base`, returning each solution's
/// substitution and the transition count it reached.
fn crisp_search(
    program: &Program,
    base: &Subst,
    goal: &Term,
    base_depth: usize,
    limit: usize,
    rename: &mut usize,
) -> Result<Vec<(Subst, usize)>, EngineError> {
    let mut out = Vec::new();
    let mut stack: Vec<(VecDeque<Term>, Subst, usize)> =
        vec![(VecDeque::from([goal.clone()]), base.clone(), base_depth)];
    while let Some((mut goals, subst, depth)) = stack.pop() {
        let Some(g) = goals.pop_front() else {
            out.push((subst, depth));
            continue;
        };
        if depth + 1 > limit {
            return Err(EngineError::DepthLimit {
                goal: render_term(&subst.apply(&g)),
                limit,
            });
        }
        let applied = subst.apply(&g);
        let children = crisp_expand(program, &subst, &applied, rename)?;
        for (front, s) in children.into_iter().rev() {
            let mut next = goals.clone();
            for term in front.into_iter().rev() {
                next.push_front(term);
            }
            stack.push((next, s, depth + 1));
        }
    }
    Ok(out)
}

/// Standard SLD resolution for a crisp goal, eagerly enumerated in
/// depth-first clause order. Exhaustion with no answers is failure.
pub fn solve_crisp(
    program: &Program,
    goal: &Term,
    depth_limit: Option<usize>,
) -> Result<Vec<Subst>, EngineError> {
    let limit = depth_limit.unwrap_or(DEFAULT_DEPTH_LIMIT);
    let mut rename = 0usize;
    let solutions = crisp_search(program, &Subst::new(), goal, 0, limit, &mut rename)?;
    Ok(solutions.into_iter().map(|(s, _)| s).collect())
}

/// Membership value of a piecewise declaration at `x`: linear
/// interpolation between the bracketing points, clamped outside.
pub fn eval_piecewise(decl: &PiecewiseDecl, x: f64) -> f64 {
    let points = &decl.points;
    if x <= points[0].0 {
        return points[0].1;
    }
    if x >= points[points.len() - 1].0 {
        return points[points.len() - 1].1;
    }
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        // Return declared values exactly; interpolate strictly between knots.
        if x == x1 {
            return y1;
        }
        if x < x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    unreachable!("bracketing point exists")
}

fn eval_arith(subst: &Subst, term: &Term) -> Result<f64, EngineError> {
    let walked = subst.walk(term).clone();
    match &walked {
        Term::Num(n) => Ok(*n),
        Term::Var(_) => Err(EngineError::Instantiation(render_term(&subst.apply(term)))),
        Term::Const(c) => Err(EngineError::ArithType(c.clone())),
        Term::Compound(op, args) => match (op.as_str(), args.len()) {
            ("-", 1) => Ok(-eval_arith(subst, &args[0])?),
            (op_name, 2) => {
                let x = eval_arith(subst, &args[0])?;
                let y = eval_arith(subst, &args[1])?;
                match op_name {
                    "+" => Ok(x + y),
                    "-" => Ok(x - y),
                    "*" => Ok(x * y),
                    "/" | "//" | "mod" if y == 0.0 => {
                        Err(EngineError::ZeroDivisor(render_term(&subst.apply(term))))
                    }
                    "/" => Ok(x / y),
                    "//" => Ok((x / y).floor()),
                    "mod" => Ok(x - y * (x / y).floor()),
                    _ => Err(EngineError::ArithType(render_term(&walked))),
                }
            }
            _ => Err(EngineError::ArithType(render_term(&walked))),
        },
    }
}

fn rename_term(term: &Term, k: usize) -> Term {
    match term {
        Term::Var(v) => Term::Var(format!("{v}#{k}")),
        Term::Compound(name, args) => Term::Compound(
            name.clone(),
            args.iter().map(|a| rename_term(a, k)).collect(),
        ),
        other => other.clone(),
    }
}

fn apply_bound(set: &BorelSet, op: BoundOp, x: f64) -> Option<BorelSet> {
    let satisfied = match op {
        BoundOp::Gt => set.sup().is_some_and(|s| s > x),
        BoundOp::Ge => set.sup().is_some_and(|s| s >= x - EPS),
        BoundOp::Lt => set.inf().is_some_and(|i| i < x),
        BoundOp::Le => set.inf().is_some_and(|i| i <= x + EPS),
        BoundOp::Eq => set.contains(x),
    };
    if !satisfied {
        return None;
    }
    let x = x.clamp(0.0, 1.0);
    let window = match op {
        BoundOp::Gt | BoundOp::Ge => BorelSet::interval(x, 1.0).expect("clamped"),
        BoundOp::Lt | BoundOp::Le => BorelSet::interval(0.0, x).expect("clamped"),
        BoundOp::Eq => BorelSet::point(x).expect("clamped"),
    };
    let restricted = set.intersect(&window);
    if restricted.is_empty() {
        None
    } else {
        Some(restricted)
    }
}
