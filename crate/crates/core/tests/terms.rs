use std::collections::BTreeSet;
use std::sync::Arc;

use metaterm::program::{
    conjunction_to_list, forms_partition, list_to_conjunction, Clause, Literal, PredKey, Program,
};
use metaterm::term::{
    is_instance, is_variant, match_term, rename_with, unify, Substitution, Term, Var, VarId,
    VarSupply,
};
use proptest::prelude::*;

const VARS: u64 = 3;

fn var(id: VarId) -> Term {
    Term::Var(Var {
        id,
        name: Arc::from(["X", "Y", "Z", "U", "V", "W"][id as usize % 6]),
    })
}

fn c(n: &str) -> Term {
    Term::constant(n)
}

/// Terms of depth at most 3 over X, Y, Z, constants a, b and f/1, g/2.
fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![(0..VARS).prop_map(var), Just(c("a")), Just(c("b"))];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(s, t)| Term::app("g", vec![s, t])),
        ]
    })
}

fn ground_candidates() -> Vec<Term> {
    let (a, b) = (c("a"), c("b"));
    let f = |t: Term| Term::app("f", vec![t]);
    let g = |s: Term, t: Term| Term::app("g", vec![s, t]);
    vec![
        a.clone(),
        b.clone(),
        f(a.clone()),
        f(b.clone()),
        f(f(a.clone())),
        g(a.clone(), a.clone()),
        g(a.clone(), b.clone()),
        g(b.clone(), a.clone()),
        g(f(a.clone()), a.clone()),
    ]
}

fn ground_subst(vals: &[Term]) -> Substitution {
    Substitution::from_bindings(
        vals.iter()
            .enumerate()
            .map(|(i, t)| (var(i as VarId).as_var().unwrap().clone(), t.clone())),
    )
    .unwrap()
}

fn tuple(s: &Substitution) -> Term {
    Term::app("t", (0..VARS).map(|i| s.apply(&var(i))).collect())
}

proptest! {
    #[test]
    fn mgu_unifies(s in term(), t in term()) {
        if let Some(u) = unify(&s, &t) {
            prop_assert_eq!(u.apply(&s), u.apply(&t));
            prop_assert!(u.is_idempotent());
        }
    }

    #[test]
    fn occurs_check(t in term(), i in 0..VARS) {
        let x = var(i);
        if t != x && t.contains_var(i) {
            prop_assert!(unify(&x, &t).is_none());
        }
    }

    /// Every ground unifier found by enumeration factors through the mgu; if
    /// there is no mgu there is no unifier.
    #[test]
    fn brute_force_unifiers_factor_through_mgu(s in term(), t in term()) {
        let cands = ground_candidates();
        let mgu = unify(&s, &t);
        let n = cands.len();
        for code in 0..n.pow(VARS as u32) {
            let vals: Vec<Term> = (0..VARS as usize).map(|k| cands[code / n.pow(k as u32) % n].clone()).collect();
            let u = ground_subst(&vals);
            if u.apply(&s) != u.apply(&t) {
                continue;
            }
            let m = mgu.as_ref();
            prop_assert!(m.is_some(), "unifier {:?} but no mgu", vals);
            prop_assert!(match_term(&tuple(m.unwrap()), &tuple(&u)).is_some());
        }
    }

    #[test]
    fn variance_is_an_equivalence(s in term(), t in term()) {
        let mut supply = VarSupply::new();
        supply.reserve(&s);
        supply.reserve(&t);
        let r = rename_with(&s, &mut Default::default(), &mut supply);
        prop_assert!(is_variant(&s, &s));
        prop_assert!(is_variant(&s, &r) && is_variant(&r, &s));
        let rr = rename_with(&r, &mut Default::default(), &mut supply);
        prop_assert!(is_variant(&s, &rr));
        prop_assert_eq!(is_variant(&s, &t), is_variant(&t, &s));
    }

    #[test]
    fn instance_order(s in term(), t in term(), u in term()) {
        prop_assert!(is_instance(&s, &s));
        if is_instance(&s, &t) && is_instance(&t, &u) {
            prop_assert!(is_instance(&s, &u));
        }
        if is_instance(&s, &t) && is_instance(&t, &s) {
            prop_assert!(is_variant(&s, &t));
        }
        if let Some(m) = unify(&s, &t) {
            prop_assert!(is_instance(&m.apply(&s), &s));
        }
    }

    #[test]
    fn conjunction_round_trip(ts in prop::collection::vec(term().prop_filter("no conj", |t| {
        !t.is_functor(",", 2) && !t.is_functor("true", 0)
    }), 1..6)) {
        prop_assert_eq!(conjunction_to_list(&list_to_conjunction(&ts)), ts);
    }

    /// A partition stays a partition under substitution, and concatenating
    /// partitions of two sequences partitions their concatenation.
    #[test]
    fn partition_properties(
        w in prop::collection::vec(term(), 1..7),
        w2 in prop::collection::vec(term(), 1..5),
        cuts in prop::collection::vec(any::<bool>(), 6),
        cuts2 in prop::collection::vec(any::<bool>(), 4),
        x in term(),
        y in term(),
    ) {
        let split = |w: &[Term], cuts: &[bool]| {
            let mut parts = vec![vec![w[0].clone()]];
            for (t, cut) in w[1..].iter().zip(cuts) {
                if *cut {
                    parts.push(vec![t.clone()]);
                } else {
                    parts.last_mut().unwrap().push(t.clone());
                }
            }
            parts
        };
        let parts = split(&w, &cuts);
        prop_assert!(forms_partition(&parts, &w));
        if let Some(th) = unify(&x, &y) {
            let pw: Vec<Term> = w.iter().map(|t| th.apply(t)).collect();
            let pp: Vec<Vec<Term>> = parts.iter().map(|p| p.iter().map(|t| th.apply(t)).collect()).collect();
            prop_assert!(forms_partition(&pp, &pw));
        }
        let parts2 = split(&w2, &cuts2);
        let both: Vec<Vec<Term>> = parts.iter().chain(&parts2).cloned().collect();
        let whole: Vec<Term> = w.iter().chain(&w2).cloned().collect();
        prop_assert!(forms_partition(&both, &whole));
    }

    /// depends_on is the transitive closure of refers_to.
    #[test]
    fn dependency_closure(edges in prop::collection::vec((0..5usize, 0..5usize), 0..10)) {
        let name = |i: usize| format!("p{i}");
        let clauses: Vec<Clause> = edges
            .iter()
            .map(|&(i, j)| Clause { head: c(&name(i)), body: vec![Literal::pos(c(&name(j)))] })
            .collect();
        let g = Program::new(clauses).dependency_graph();
        let mut reach = [[false; 5]; 5];
        for &(i, j) in &edges {
            reach[i][j] = true;
        }
        for k in 0..5 {
            for i in 0..5 {
                for j in 0..5 {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        let used: BTreeSet<usize> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
        for &i in &used {
            for &j in &used {
                let (p, q) = (PredKey::new(&name(i), 0), PredKey::new(&name(j), 0));
                prop_assert_eq!(g.depends_on(&p, &q), reach[i][j], "{} -> {}", i, j);
                prop_assert_eq!(g.refers_to(&p, &q), edges.contains(&(i, j)));
            }
        }
    }
}

#[test]
fn occurs_check_examples() {
    let x = var(0);
    assert!(unify(&x, &Term::app("f", vec![x.clone()])).is_none());
    let s = Term::app("g", vec![x.clone(), var(1)]);
    let t = Term::app("g", vec![var(1), Term::app("f", vec![x.clone()])]);
    assert!(unify(&s, &t).is_none());
}
