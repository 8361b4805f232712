use std::collections::BTreeMap;

use metaterm::catalog::{compose_meta_program, get_interpreter, make_meta_query, ExtraArgs};
use metaterm::corpus::corpus_program;
use metaterm::engine::{decrease_obligations, Budget, ObligationSet};
use metaterm::ordering::{
    check_obligations, compare, search_ordering, Coeffs, Comparison, LinearLevelMapping,
    LinearNorm, OrderingSpec, SearchResult, Strategy, Verdict,
};
use metaterm::program::{PredKey, Program, Query};
use metaterm::syntax::{parse_query_for, parse_term};
use metaterm::term::VarSupply;

fn object_obligations(name: &str, seeds: &[&str]) -> ObligationSet {
    let p = corpus_program(name).unwrap();
    let qs: Vec<Query> = seeds
        .iter()
        .map(|s| parse_query_for(&p, s).unwrap())
        .collect();
    decrease_obligations(&p, &qs, Budget::default()).unwrap()
}

fn meta_obligations(name: &str, seeds: &[&str]) -> (Program, ObligationSet) {
    let p = corpus_program(name).unwrap();
    let m0 = get_interpreter("m0").unwrap();
    let mp = compose_meta_program(&m0, &p).unwrap();
    let mut supply = VarSupply::new();
    let qs: Vec<Query> = seeds
        .iter()
        .map(|s| {
            let q = parse_query_for(&p, s).unwrap();
            make_meta_query(&m0, &mp, &q, &ExtraArgs::Fresh, &mut supply)
                .unwrap()
                .query()
        })
        .collect();
    let obs = decrease_obligations(&mp.program, &qs, Budget::default()).unwrap();
    (mp.program, obs)
}

const EX12_SEEDS: [&str; 3] = ["l(0)", "l(f(0))", "l(f(f(0)))"];
const EX13_SEEDS: [&str; 3] = ["p([a, b, c])", "p([a, b, c, d])", "p([a, b, c, d, e])"];

fn key(s: &str) -> PredKey {
    s.parse().unwrap()
}

/// |solve(A)| = ‖A‖, ‖(A, B)‖ = 1 + ‖A‖ + ‖B‖, ‖p(X)‖ = 1 + ‖X‖,
/// ‖[H|T]‖ = 1 + 3‖T‖, ‖[]‖ = 0.
fn ex13_mapping() -> OrderingSpec {
    OrderingSpec::Linear(LinearLevelMapping {
        predicates: BTreeMap::from([(key("solve/1"), Coeffs::new(0, vec![1]))]),
        norm: LinearNorm {
            functors: BTreeMap::from([
                (key(",/2"), Coeffs::new(1, vec![1, 1])),
                (key("p/1"), Coeffs::new(1, vec![1])),
                (key("./2"), Coeffs::new(1, vec![0, 3])),
                (key("[]/0"), Coeffs::new(0, vec![])),
            ]),
        },
    })
}

#[test]
fn interpreted_ex12_found_at_bound_3() {
    let obs = object_obligations("ex12", &EX12_SEEDS);
    assert!(obs.complete);
    let r = search_ordering(&obs, &Strategy::Linear { bound: 3 });
    let o = r.found().expect("mapping");
    assert_eq!(
        check_obligations(o, &obs).verdict,
        Verdict::AcceptableOnSample
    );
}

#[test]
fn meta_ex12_has_no_linear_mapping_within_10() {
    let (_, obs) = meta_obligations("ex12", &EX12_SEEDS);
    assert!(obs.complete);
    let r = search_ordering(&obs, &Strategy::Linear { bound: 10 });
    assert!(
        matches!(
            r,
            SearchResult::NoneWithinBound {
                exhausted: true,
                ..
            }
        ),
        "{r:?}"
    );
}

#[test]
fn meta_ex12_rpo_found() {
    let (_, obs) = meta_obligations("ex12", &EX12_SEEDS);
    let r = search_ordering(&obs, &Strategy::Rpo);
    let o = r.found().expect("precedence");
    assert_eq!(
        check_obligations(o, &obs).verdict,
        Verdict::AcceptableOnSample
    );
    for (a, b) in [
        ("solve(p(f(0)))", "solve(p(0))"),
        ("solve(p(f(f(0))))", "solve(p(f(0)))"),
        ("solve(r(f(0)))", "solve(r(0))"),
        ("solve(r(f(f(0))))", "solve(r(f(0)))"),
    ] {
        assert_eq!(
            compare(o, &parse_term(a).unwrap(), &parse_term(b).unwrap()),
            Comparison::Greater,
            "{a} > {b}"
        );
    }
}

#[test]
fn meta_ex13_found_and_given_mapping_verifies() {
    let (_, obs) = meta_obligations("ex13", &EX13_SEEDS);
    assert!(obs.complete && !obs.obligations.is_empty());
    assert_eq!(
        check_obligations(&ex13_mapping(), &obs).verdict,
        Verdict::AcceptableOnSample
    );
    let r = search_ordering(&obs, &Strategy::Linear { bound: 3 });
    let o = r.found().expect("mapping");
    assert_eq!(
        check_obligations(o, &obs).verdict,
        Verdict::AcceptableOnSample
    );
}

#[test]
fn ex13_mapping_orders_conjunction_above_conjunct() {
    let a = parse_term("solve((p([a]), p([])))").unwrap();
    let b = parse_term("solve(p([a]))").unwrap();
    assert_eq!(compare(&ex13_mapping(), &a, &b), Comparison::Greater);
}
