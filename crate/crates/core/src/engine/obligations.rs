//! Decrease obligations: for every harvested call `A`, every clause
//! `H :- B1, ..., Bn` with `θ = mgu(A, H)`, every `Bi` mutually recursive
//! with `A` and every computed answer `σ` of `(B1, ..., Bi-1)θ`, the pair
//! `A > Biθσ`.

use serde::Serialize;

use super::{build_tracking, call_set, is_builtin, Budget, EngineError, NodeStatus};
use crate::program::{Literal, PredKey, Program, Query};
use crate::term::{canonical_seq, unify, Term, VarSupply};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Obligation {
    pub caller: Term,
    pub callee: Term,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObligationSet {
    pub obligations: Vec<Obligation>,
    /// The harvested calls the obligations were generated from.
    pub calls: Vec<Term>,
    /// False if any seed run or prefix run was truncated.
    pub complete: bool,
}

pub fn decrease_obligations(
    p: &Program,
    seeds: &[Query],
    budget: Budget,
) -> Result<ObligationSet, EngineError> {
    let mut calls = super::AtomSet::default();
    let mut complete = true;
    for s in seeds {
        let f = build_tracking(
            p,
            s,
            s.iter().map(|l| l.atom.clone()).collect(),
            budget,
            true,
        )?;
        let cs = call_set(&f);
        complete &= !cs.truncated;
        for c in cs.calls.iter().filter(|c| !is_builtin(c)) {
            calls.insert(c);
        }
    }
    let dg = p.dependency_graph();
    let mut supply = VarSupply::new();
    p.clauses()
        .iter()
        .flat_map(|c| c.terms())
        .for_each(|t| supply.reserve(t));
    calls.iter().for_each(|t| supply.reserve(t));

    let mut seen = std::collections::HashSet::new();
    let mut obligations = Vec::new();
    for a in calls.iter() {
        let Some(ka) = PredKey::of(a) else { continue };
        for &ci in p.clauses_for(&ka) {
            let c = p.clause(ci).rename(&mut supply);
            let Some(theta) = unify(a, &c.head) else {
                continue;
            };
            for (i, b) in c.body.iter().enumerate() {
                let Some(kb) = PredKey::of(&b.atom) else {
                    continue;
                };
                if !b.positive || !dg.mutually_recursive(&ka, &kb) {
                    continue;
                }
                let target = theta.apply(&b.atom);
                let prefix: Vec<Literal> = c.body[..i]
                    .iter()
                    .map(|l| l.map_atom(|t| theta.apply(t)))
                    .collect();
                let instances = if prefix.is_empty() {
                    vec![target]
                } else {
                    let f = build_tracking(p, &prefix, vec![target], budget, true)?;
                    complete &= !f.truncated();
                    f.main()
                        .nodes
                        .iter()
                        .filter(|n| n.status == NodeStatus::Success)
                        .map(|n| n.answer[0].clone())
                        .collect()
                };
                for callee in instances {
                    let ob = Obligation {
                        caller: a.clone(),
                        callee,
                    };
                    if seen.insert(canonical_seq(&[ob.caller.clone(), ob.callee.clone()])) {
                        obligations.push(ob);
                    }
                }
            }
        }
    }
    Ok(ObligationSet {
        obligations,
        calls: calls.atoms.clone(),
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, parse_query_for};

    #[test]
    fn obligations_follow_computed_answers() {
        let src = "l(X) :- p(X), r(X). p(X) :- q(X,Y), p(Y). r(f(X)) :- s(Y), r(X). q(f(Z),Z). p(0). r(0). s(0).";
        let p = parse_program(src).unwrap();
        let q = parse_query_for(&p, "l(f(0))").unwrap();
        let obs = decrease_obligations(&p, &[q], Budget::default()).unwrap();
        assert!(obs.complete);
        let shown: Vec<String> = obs
            .obligations
            .iter()
            .map(|o| format!("{} > {}", o.caller, o.callee))
            .collect();
        assert_eq!(shown, ["p(f(0)) > p(0)", "r(f(0)) > r(0)"]);
    }
}
