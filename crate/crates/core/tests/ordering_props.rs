use std::collections::BTreeMap;

use metaterm::corpus::corpus_program;
use metaterm::engine::{build_ld_tree, decrease_obligations, termination_status, Budget};
use metaterm::ordering::{
    check_obligations, compare, search_ordering, Coeffs, Comparison, LinearLevelMapping,
    LinearNorm, OrderingSpec, Status, Strategy as Search, Verdict,
};
use metaterm::program::{PredKey, Query};
use metaterm::syntax::parse_query_for;
use metaterm::term::{Term, Var};
use proptest::prelude::*;

fn key(s: &str) -> PredKey {
    s.parse().unwrap()
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::constant("a")),
        Just(Term::constant("b")),
        (0..2u64).prop_map(|id| Term::Var(Var {
            id,
            name: "V".into()
        })),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(s, t)| Term::app("g", vec![s, t])),
        ]
    })
}

fn rpo() -> impl Strategy<Value = OrderingSpec> {
    let status = |mul: bool| if mul { Status::Mul } else { Status::Lex };
    (
        Just(vec!["f/1", "g/2", "a/0", "b/0"]).prop_shuffle(),
        any::<bool>(),
    )
        .prop_map(move |(p, mul)| OrderingSpec::Rpo {
            precedence: p.into_iter().map(key).collect(),
            status: BTreeMap::from([(key("g/2"), status(mul))]),
        })
}

fn linear() -> impl Strategy<Value = OrderingSpec> {
    (
        0..3u64,
        0..3u64,
        0..3u64,
        0..3u64,
        0..3u64,
        0..3u64,
        0..3u64,
    )
        .prop_map(|(cf, af, cg, ag1, ag2, ca, cb)| {
            OrderingSpec::Linear(LinearLevelMapping {
                predicates: BTreeMap::new(),
                norm: LinearNorm {
                    functors: BTreeMap::from([
                        (key("f/1"), Coeffs::new(cf, vec![af])),
                        (key("g/2"), Coeffs::new(cg, vec![ag1, ag2])),
                        (key("a/0"), Coeffs::new(ca, vec![])),
                        (key("b/0"), Coeffs::new(cb, vec![])),
                    ]),
                },
            })
        })
}

fn ordering() -> impl Strategy<Value = OrderingSpec> {
    prop_oneof![rpo(), linear()]
}

/// Linear orderings compare levels of atoms; wrap terms as `t(X)`.
fn atom(o: &OrderingSpec, t: &Term) -> Term {
    match o {
        OrderingSpec::Rpo { .. } => t.clone(),
        _ => Term::app("t", vec![t.clone()]),
    }
}

fn gt(o: &OrderingSpec, s: &Term, t: &Term) -> bool {
    compare(o, &atom(o, s), &atom(o, t)) == Comparison::Greater
}

fn subterms(t: &Term, out: &mut Vec<Term>) {
    for a in t.args() {
        out.push(a.clone());
        subterms(a, out);
    }
}

proptest! {
    #[test]
    fn irreflexive_and_acyclic(o in ordering(), s in term(), t in term()) {
        prop_assert!(!gt(&o, &s, &s));
        prop_assert!(!(gt(&o, &s, &t) && gt(&o, &t, &s)));
    }

    #[test]
    fn transitive(o in ordering(), s in term(), t in term(), u in term()) {
        if gt(&o, &s, &t) && gt(&o, &t, &u) {
            prop_assert!(gt(&o, &s, &u));
        }
    }

    #[test]
    fn rpo_subterm(o in rpo(), s in term()) {
        let mut subs = Vec::new();
        subterms(&s, &mut subs);
        for t in subs {
            prop_assert!(gt(&o, &s, &t), "{} > {}", s, t);
        }
    }

    /// Acceptability on a complete sample implies every seed terminates.
    #[test]
    fn soundness_link(
        cp in 0..3u64, ap in 0..3u64,
        cf in 0..3u64, af in 0..3u64, c0 in 0..2u64,
    ) {
        let p = corpus_program("nat").unwrap();
        let seeds: Vec<Query> = ["nat(0)", "nat(s(s(0)))", "nat(X)"]
            .iter()
            .map(|s| parse_query_for(&p, s).unwrap())
            .collect();
        let budget = Budget::default();
        let obs = decrease_obligations(&p, &seeds, budget).unwrap();
        let o = OrderingSpec::Linear(LinearLevelMapping {
            predicates: BTreeMap::from([(key("nat/1"), Coeffs::new(cp, vec![ap]))]),
            norm: LinearNorm {
                functors: BTreeMap::from([
                    (key("s/1"), Coeffs::new(cf, vec![af])),
                    (key("0/0"), Coeffs::new(c0, vec![])),
                ]),
            },
        });
        let r = check_obligations(&o, &obs);
        if r.verdict == Verdict::AcceptableOnSample {
            prop_assert!(obs.complete);
            for s in &seeds {
                let f = build_ld_tree(&p, s, budget).unwrap();
                prop_assert!(termination_status(&f).terminates());
            }
        }
    }
}

#[test]
fn soundness_link_on_corpus() {
    let budget = Budget::default();
    let cases: [(&str, &[&str]); 4] = [
        ("ex12", &["l(0)", "l(f(0))", "l(f(f(0)))"]),
        ("append", &["app([a, b], [c], X)", "app(X, Y, [a, b, c])"]),
        ("nat", &["nat(s(s(0)))"]),
        ("permute", &["permute([a, b, c], X)"]),
    ];
    for (name, seeds) in cases {
        let p = corpus_program(name).unwrap();
        let qs: Vec<Query> = seeds
            .iter()
            .map(|s| parse_query_for(&p, s).unwrap())
            .collect();
        let obs = decrease_obligations(&p, &qs, budget).unwrap();
        let mut found = 0;
        for strategy in [Search::Linear { bound: 3 }, Search::Rpo] {
            let r = search_ordering(&obs, &strategy);
            let Some(o) = r.found() else { continue };
            found += 1;
            // search/check agreement
            let rep = check_obligations(o, &obs);
            assert_eq!(
                rep.verdict,
                Verdict::AcceptableOnSample,
                "{name} {strategy:?}"
            );
            for q in &qs {
                let f = build_ld_tree(&p, q, budget).unwrap();
                assert!(termination_status(&f).terminates(), "{name}");
            }
        }
        assert!(found > 0, "{name}: no ordering found");
    }
}

#[test]
fn looping_seed_never_accepted() {
    let p = corpus_program("ex12").unwrap();
    let q = parse_query_for(&p, "p(X)").unwrap();
    let obs = decrease_obligations(&p, &[q], Budget::default()).unwrap();
    for strategy in [Search::Linear { bound: 3 }, Search::Rpo] {
        let r = search_ordering(&obs, &strategy);
        assert!(r.found().is_none(), "{strategy:?}: {r:?}");
    }
}
