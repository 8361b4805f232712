use metaterm::corpus::{corpus_names, corpus_program, corpus_queries};
use metaterm::encode::{
    clause_encode, clause_encode_extended, ground_decode, ground_encode, Filler,
};
use metaterm::engine::{
    build_ldnf_forest, call_set, replay_witness, termination_status, Budget, TerminationStatus,
};
use metaterm::program::{Clause, Program};
use metaterm::syntax::{parse_program, parse_query_for};
use metaterm::term::Term;

fn cases() -> Vec<(&'static str, Program, &'static str)> {
    corpus_names()
        .into_iter()
        .flat_map(|n| {
            let p = corpus_program(n).unwrap();
            corpus_queries(n).iter().map(move |q| (n, p.clone(), *q))
        })
        .collect()
}

#[test]
fn terminates_implies_complete_and_loops_replay() {
    let (mut t, mut l) = (0, 0);
    for (name, p, q) in cases() {
        let query = parse_query_for(&p, q).unwrap();
        let f = build_ldnf_forest(&p, &query, Budget::default()).unwrap();
        match termination_status(&f) {
            TerminationStatus::Terminates { .. } => {
                t += 1;
                assert!(f.complete(), "{name} {q}");
            }
            TerminationStatus::LoopDetected { witness } => {
                l += 1;
                assert!(replay_witness(&p, &witness), "{name} {q}: {witness:?}");
            }
            TerminationStatus::BudgetExhausted => assert!(f.truncated(), "{name} {q}"),
        }
    }
    assert!(t >= 10 && l >= 4, "{t} terminating, {l} looping");
}

#[test]
fn larger_budgets_keep_calls() {
    for (name, p, q) in cases() {
        let query = parse_query_for(&p, q).unwrap();
        let mut prev = None;
        for n in [20, 100, 500, 2000] {
            let budget = Budget {
                max_nodes: n,
                max_depth: 200,
            };
            let calls = call_set(&build_ldnf_forest(&p, &query, budget).unwrap()).calls;
            if let Some(prev) = &prev {
                let prev: &metaterm::engine::AtomSet = prev;
                assert!(
                    prev.iter().all(|a| calls.contains_variant(a)),
                    "{name} {q} at {n}"
                );
            }
            prev = Some(calls);
        }
    }
}

fn strip(c: &Clause, k: usize) -> Term {
    let h = &c.head;
    Term::app("clause", h.args()[..h.args().len() - k].to_vec())
}

#[test]
fn encodings_agree_and_round_trip() {
    for n in corpus_names() {
        let p = corpus_program(n).unwrap();
        let ce = clause_encode(&p).unwrap();
        assert!(ce.clauses().iter().all(|c| c.body.is_empty()), "{n}");
        for k in 0..3 {
            let ced = clause_encode_extended(&p, k, &Filler::FreshVars).unwrap();
            assert_eq!(ced.len(), ce.len());
            for (a, b) in ced.clauses().iter().zip(ce.clauses()) {
                assert!(a.body.is_empty());
                assert_eq!(strip(a, k), b.head, "{n} k={k}");
            }
        }
        let (clauses, table) = ground_encode(&p);
        let back = ground_decode(&clauses, &table).unwrap();
        assert!(back.variant_eq(&p), "{n}");
    }
}

#[test]
fn permute_clause_encoding() {
    let p = parse_program("permute(L, [El, T]) :- delete(El, L, L1), permute(L1, T).").unwrap();
    let (g, _) = ground_encode(&p);
    assert_eq!(
        g[0].to_string(),
        "if(atom(p(0), [v(0), term(f(0), [v(1), term(f(0), [v(2), c(0)])])]), \
         and(atom(p(1), [v(1), v(0), v(3)]), atom(p(0), [v(3), v(2)])))"
    );
    let p = corpus_program("permute").unwrap();
    let (g, t) = ground_encode(&p);
    assert_eq!(
        g[1].to_string(),
        "if(atom(p(0), [v(0), term(f(0), [v(1), v(2)])]), \
         and(atom(p(1), [v(1), v(0), v(3)]), atom(p(0), [v(3), v(2)])))"
    );
    assert!(ground_decode(&g, &t).unwrap().variant_eq(&p));
}
