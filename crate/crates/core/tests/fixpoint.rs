//! Bottom-up evaluation on whole programs, and its agreement with the
//! top-down engine.

use std::sync::Arc;

use fpl_core::aggregate::Registry;
use fpl_core::engine::{success_set, SolveOptions};
use fpl_core::fixpoint::{
    ground, interp_included, is_model, lfp, meet, tp_step, GroundAtom, GroundError,
    GroundProgram, Interpretation, LfpOutcome,
};
use fpl_core::syntax::{parse_program, parse_query, PredKind, Program};
use fpl_core::truth::{BorelSet, Interval};

const TEENAGER: &str = include_str!("../../../programs/teenager_student.fpl");

fn load(src: &str) -> Program {
    let registry = Arc::new(Registry::with_builtins());
    match parse_program(src, registry) {
        Ok((program, _)) => program,
        Err(diags) => panic!("program should load:\n{diags}"),
    }
}

fn converged(gp: &GroundProgram) -> Interpretation {
    match lfp(gp, 1e-9, 1_000) {
        LfpOutcome::Converged { interpretation, .. } => interpretation,
        LfpOutcome::Diverged { discrepancy, .. } => {
            panic!("expected convergence, still moving by {discrepancy}")
        }
    }
}

fn atom(name: &str, args: &[&str]) -> GroundAtom {
    GroundAtom::new(name, args.iter().map(|s| s.to_string()).collect())
}

fn set(src: &str) -> BorelSet {
    let parts = src.split('v').map(|p| {
        let p = p.trim();
        if let Some(inner) = p.strip_prefix('[').and_then(|p| p.strip_suffix(']')) {
            let (lo, hi) = inner.split_once(',').unwrap();
            Interval::new(lo.parse().unwrap(), hi.parse().unwrap()).unwrap()
        } else {
            Interval::point(p.parse().unwrap()).unwrap()
        }
    });
    BorelSet::from_intervals(parts)
}

/// Union of engine answers to the atom queried with a fresh truth slot.
fn engine_truth(program: &Program, a: &GroundAtom) -> BorelSet {
    let src = if a.args().is_empty() {
        format!("{}(V)", a.name())
    } else {
        format!("{}({},V)", a.name(), a.args().join(","))
    };
    let query = parse_query(&src).unwrap();
    let answers = success_set(program, &query, SolveOptions::default()).unwrap();
    answers
        .iter()
        .fold(BorelSet::empty(), |acc, ans| acc.union(&ans.truths[0].1))
}

#[test]
fn teenager_student_fixpoint_values() {
    let program = load(TEENAGER);
    let gp = ground(&program).unwrap();
    let m = converged(&gp);
    assert!(m.value_of(&atom("teenager_student", &["john"])).approx_eq(&set("1"), 1e-9));
    assert!(m.value_of(&atom("teenager_student", &["susan"])).approx_eq(&set("0"), 1e-9));
    assert!(m.value_of(&atom("teenager_student", &["peter"])).approx_eq(&set("[0,1]"), 1e-9));
    assert!(m.value_of(&atom("teenager_student", &["nick"])).approx_eq(&set("0"), 1e-9));
    // Atoms outside the explicit set read their predicate default.
    assert!(m.value_of(&atom("age_about_15", &["peter"])).approx_eq(&set("[0,1]"), 1e-9));
    assert!(m.value_of(&atom("f_student", &["susan"])).approx_eq(&set("0"), 1e-9));
}

#[test]
fn teenager_student_grounds_over_its_constants() {
    let program = load(TEENAGER);
    let gp = ground(&program).unwrap();
    let wrappers: Vec<String> = gp
        .facts()
        .iter()
        .filter(|(a, _)| a.name() == "f_student")
        .map(|(a, _)| a.to_string())
        .collect();
    assert_eq!(wrappers, ["f_student(john)", "f_student(peter)"]);
    // One clause instance per universe constant.
    assert_eq!(gp.clauses().len(), 4);
    let heads: Vec<String> = gp.clauses().iter().map(|c| c.head.to_string()).collect();
    assert_eq!(
        heads,
        [
            "teenager_student(john)",
            "teenager_student(nick)",
            "teenager_student(peter)",
            "teenager_student(susan)",
        ]
    );
}

#[test]
fn engine_and_fixpoint_agree_on_the_teenager_program() {
    let program = load(TEENAGER);
    let gp = ground(&program).unwrap();
    let m = converged(&gp);
    for a in gp.atoms() {
        let top_down = engine_truth(&program, a);
        let bottom_up = m.value_of(a);
        assert!(
            top_down.approx_eq(&bottom_up, 1e-9),
            "{a}: engine {top_down} vs fixpoint {bottom_up}"
        );
    }
}

#[test]
fn engine_and_fixpoint_agree_through_crisp_closure() {
    let program = load(concat!(
        "parent(tom, bob).\nparent(bob, ann).\n",
        "ancestor(X,Y) :- parent(X,Y).\n",
        "ancestor(X,Z) :- parent(X,Y), ancestor(Y,Z).\n",
        "likes(tom) :~ 0.8.\n",
        "rel(X,Y) :~prod f_ancestor(X,Y), likes(X).\n",
        ":- default(likes/1, 0.1).\n",
        ":- default(rel/2, 0).\n",
    ));
    let gp = ground(&program).unwrap();
    let m = converged(&gp);
    assert!(m.value_of(&atom("rel", &["tom", "ann"])).approx_eq(&set("0.8"), 1e-9));
    assert!(m.value_of(&atom("rel", &["bob", "ann"])).approx_eq(&set("0.1"), 1e-9));
    assert!(m.value_of(&atom("rel", &["ann", "tom"])).approx_eq(&set("0"), 1e-9));
    for a in gp.atoms() {
        let top_down = engine_truth(&program, a);
        let bottom_up = m.value_of(a);
        assert!(
            top_down.approx_eq(&bottom_up, 1e-9),
            "{a}: engine {top_down} vs fixpoint {bottom_up}"
        );
    }
}

#[test]
fn kleene_chain_grows_on_a_monotone_program() {
    // Declared defaults sit inside the values the first step derives, so
    // every body read can only widen from one step to the next.
    let program = load(concat!(
        "p(a) :~ [0.4,0.6].\n",
        "q(X) :~min p(X), r(X).\n",
        "s(X) :~max q(X), p(X).\n",
        ":- default(p/1, 0.5).\n",
        ":- default(q/1, 0.3).\n",
        ":- default(s/1, 0.5).\n",
    ));
    let gp = ground(&program).unwrap();
    let mut chain = vec![gp.bottom()];
    for _ in 0..6 {
        chain.push(tp_step(&gp, chain.last().unwrap()));
    }
    for pair in chain.windows(2) {
        assert!(
            interp_included(&pair[0], &pair[1]),
            "chain step went down:\n{}\nvs\n{}",
            pair[0],
            pair[1]
        );
    }
    let m = converged(&gp);
    assert!(m.value_of(&atom("q", &["a"])).approx_eq(&set("[0,0.6]"), 1e-9));
    assert!(m.value_of(&atom("s", &["a"])).approx_eq(&set("[0.4,0.6]"), 1e-9));
}

#[test]
fn lfp_is_least_among_discretized_models() {
    let program = load("p :~ [0.2,0.8].\nq :~min p, r.\n:- default(r/0, [0.3,0.5]).");
    let gp = ground(&program).unwrap();
    let m = converged(&gp);
    assert!(m.value_of(&atom("q", &[])).approx_eq(&set("[0.2,0.5]"), 1e-9));
    assert!(is_model(&gp, &m));

    // Every assignment of interval values built from the endpoints that
    // occur in the program; the lfp must sit below every model.
    let candidates = [
        set("0.2"),
        set("0.3"),
        set("0.5"),
        set("0.8"),
        set("[0.2,0.5]"),
        set("[0.2,0.8]"),
        set("[0.3,0.5]"),
        set("0.2v0.8"),
        set("[0,1]"),
    ];
    let mut models = 0;
    for p in &candidates {
        for q in &candidates {
            let mut cand = gp.bottom();
            cand.insert(atom("p", &[]), p.clone());
            cand.insert(atom("q", &[]), q.clone());
            if is_model(&gp, &cand) {
                models += 1;
                assert!(
                    interp_included(&m, &cand),
                    "model p={p}, q={q} is not above the lfp"
                );
            }
        }
    }
    assert!(models > 1, "the grid should contain models besides the lfp");
}

#[test]
fn models_are_exactly_the_pre_fixpoints() {
    let program = load("p :~ 0.4.\nq :~max p, s.\n:- default(s/0, 0.2).");
    let gp = ground(&program).unwrap();
    let grid = [set("0.2"), set("0.4"), set("[0.2,0.4]"), set("[0,1]"), set("0.4v0.9")];
    for p in &grid {
        for q in &grid {
            let mut cand = gp.bottom();
            cand.insert(atom("p", &[]), p.clone());
            cand.insert(atom("q", &[]), q.clone());
            let model = is_model(&gp, &cand);
            let pre_fixpoint = interp_included(&tp_step(&gp, &cand), &cand);
            assert_eq!(model, pre_fixpoint, "p={p}, q={q}");
        }
    }
}

#[test]
fn meet_of_two_models_is_a_model() {
    let program = load("p :~ 0.5.\nq :~min p, p.");
    let gp = ground(&program).unwrap();
    let m = converged(&gp);
    let mut wide1 = gp.bottom();
    wide1.insert(atom("p", &[]), set("[0.4,0.7]"));
    wide1.insert(atom("q", &[]), set("[0,0.7]"));
    let mut wide2 = gp.bottom();
    wide2.insert(atom("p", &[]), set("[0.5,1]"));
    wide2.insert(atom("q", &[]), set("[0.3,1]v0.1"));
    assert!(is_model(&gp, &wide1));
    assert!(is_model(&gp, &wide2));
    let both = meet(&wide1, &wide2);
    assert!(is_model(&gp, &both));
    assert!(interp_included(&m, &both));
    assert!(both.value_of(&atom("p", &[])).approx_eq(&set("[0.5,0.7]"), 1e-9));
}

#[test]
fn grounding_rejects_list_recursion() {
    let program = load("len([], 0).\nlen([_|T], N) :- len(T, M), N is M+1.\nq :~min f_len.");
    // f_len/0 has no crisp base; the point is the grounding error below.
    let err = ground(&program).unwrap_err();
    assert!(matches!(err, GroundError::OpenCompound { .. }), "{err}");
}

#[test]
fn grounding_enforces_the_instantiation_cap() {
    let mut src = String::new();
    for c in ["a", "b", "c", "d", "e", "f", "g", "h"] {
        src.push_str(&format!("q({c}) :~ 0.5.\n"));
    }
    src.push_str("p(A,B,C,D,E,F,G) :~min q(A), q(B), q(C), q(D), q(E), q(F), q(G).");
    let program = load(&src);
    let err = ground(&program).unwrap_err();
    assert!(matches!(err, GroundError::TooManyInstances { count, .. } if count == 8u128.pow(7)));
}

#[test]
fn interpretation_prints_sorted_atom_lines() {
    let program = load("b :~ 0.3.\na :~ [0.1,0.2].");
    let gp = ground(&program).unwrap();
    let m = converged(&gp);
    assert_eq!(m.to_string(), "a = [0.1,0.2]\nb = 0.3\n");
}

mod differential {
    //! Randomized cross-check: on acyclic programs the top-down engine and
    //! the fixpoint must assign every in-universe atom the same truth.

    use std::collections::BTreeSet;

    use super::*;
    use proptest::prelude::*;

    const TRUTHS: [&str; 8] =
        ["0", "1", "0.3", "0.75", "[0.2,0.5]", "0.1v0.9", "[0,0.4]v[0.6,1]", "[0.25,0.75]"];
    const AGGS: [&str; 5] = ["min", "max", "prod", "luka", "mean"];

    fn truth_src() -> impl Strategy<Value = &'static str> {
        proptest::sample::select(&TRUTHS[..])
    }

    fn body_arg() -> impl Strategy<Value = &'static str> {
        prop_oneof![2 => Just("X"), 1 => Just("a"), 1 => Just("b")]
    }

    /// Facts, clauses over strictly lower predicates, and an optional
    /// default, rendered as program text for one predicate.
    fn pred_src(
        pred: &'static str,
        lower: &'static [&'static str],
        min_facts: usize,
        max_clauses: usize,
    ) -> impl Strategy<Value = String> {
        type Clause = (&'static str, Vec<(&'static str, &'static str)>);
        let facts = proptest::collection::vec(
            (proptest::sample::select(&["a", "b"][..]), truth_src()),
            min_facts..3,
        );
        let clauses: BoxedStrategy<Vec<Clause>> = if lower.is_empty() {
            Just(Vec::new()).boxed()
        } else {
            let clause = (
                proptest::sample::select(&AGGS[..]),
                proptest::collection::vec(
                    (proptest::sample::select(lower), body_arg()),
                    1..4,
                ),
            );
            proptest::collection::vec(clause, 0..=max_clauses).boxed()
        };
        let default = proptest::option::of(truth_src());
        (facts, clauses, default).prop_map(move |(facts, clauses, default)| {
            let mut src = String::new();
            for (c, t) in facts {
                src.push_str(&format!("{pred}({c}) :~ {t}.\n"));
            }
            for (agg, body) in clauses {
                let body: Vec<String> =
                    body.iter().map(|(q, arg)| format!("{q}({arg})")).collect();
                src.push_str(&format!("{pred}(X) :~{agg} {}.\n", body.join(", ")));
            }
            if let Some(t) = default {
                src.push_str(&format!(":- default({pred}/1, {t}).\n"));
            }
            src
        })
    }

    /// Three strata keep the programs acyclic, so the engine terminates
    /// and the Kleene iteration settles after one pass per stratum.
    fn program_src() -> impl Strategy<Value = String> {
        (
            pred_src("s", &[], 1, 0),
            pred_src("t", &[], 0, 0),
            pred_src("q", &["s", "t"], 0, 2),
            pred_src("r", &["s", "t"], 0, 2),
            pred_src("p", &["s", "t", "q", "r"], 0, 2),
        )
            .prop_map(|(s, t, q, r, p)| format!("{s}{t}{q}{r}{p}"))
    }

    proptest! {
        #[test]
        fn engine_and_fixpoint_agree_on_random_acyclic_programs(src in program_src()) {
            let program = load(&src);
            let gp = ground(&program).unwrap();
            let m = match lfp(&gp, 1e-9, 50) {
                LfpOutcome::Converged { interpretation, .. } => interpretation,
                LfpOutcome::Diverged { discrepancy, .. } => {
                    panic!("acyclic program failed to converge (moving by {discrepancy}):\n{src}")
                }
            };

            // Explicit atoms, plus one atom per predicate and universe
            // constant to cover the default fallback on both sides.
            let mut atoms: BTreeSet<GroundAtom> = gp.atoms().cloned().collect();
            let universe: BTreeSet<String> =
                atoms.iter().flat_map(|a| a.args().iter().cloned()).collect();
            for key in program.known_keys() {
                for c in &universe {
                    atoms.insert(GroundAtom::new(key.name.clone(), vec![c.clone()]));
                }
            }

            for a in &atoms {
                // A body may reference a predicate the program never
                // defines; both sides then read the open-world default
                // inside derivations, but querying such an atom directly
                // is an existence error, so it has no engine truth.
                if matches!(program.kind(a.name(), a.args().len()), PredKind::Unknown) {
                    continue;
                }
                let top_down = engine_truth(&program, a);
                let bottom_up = m.value_of(a);
                prop_assert!(
                    top_down.approx_eq(&bottom_up, 1e-9),
                    "{a}: engine {top_down} vs fixpoint {bottom_up}\n{src}"
                );
            }
        }
    }
}
