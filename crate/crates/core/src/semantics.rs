//! Computed-answer semantics: the immediate consequence operator on
//! π-interpretations (sets of atoms up to variance), its powers, and an
//! execution-based approximation of the semantics.

use serde::Serialize;

use crate::engine::{build_ld_tree, computed_answers, AtomSet, Budget};
use crate::error::{Error, Result};
use crate::program::{Literal, Program};
use crate::term::{unify, Substitution, Term, VarSupply};

pub const DEFAULT_POWER_CAP: usize = 12;

pub type PiInterpretation = AtomSet;

fn definite(p: &Program) -> Result<()> {
    if p.is_definite() {
        Ok(())
    } else {
        Err(Error::Precondition(
            "the consequence operator is defined for definite programs only".into(),
        ))
    }
}

/// Extends `theta` so that `b` is solved by a renamed member of `i` or by a
/// built-in; one result per way of doing so.
fn solve_atom(
    b: &Term,
    i: &PiInterpretation,
    theta: &Substitution,
    supply: &mut VarSupply,
) -> Vec<Substitution> {
    let goal = theta.apply(b);
    match goal.functor() {
        Some(("true", 0)) | Some(("nl", 0)) | Some(("write", 1)) => return vec![theta.clone()],
        Some(("fail", 0)) => return vec![],
        Some(("=", 2)) => {
            return unify(&goal.args()[0], &goal.args()[1])
                .map(|s| theta.compose(&s))
                .into_iter()
                .collect()
        }
        _ => {}
    }
    let mut out = Vec::new();
    for a in i.iter() {
        let mut map = std::collections::HashMap::new();
        let renamed = crate::term::rename_with(a, &mut map, supply);
        if let Some(s) = unify(&goal, &renamed) {
            out.push(theta.compose(&s));
        }
    }
    out
}

/// One application of the operator: heads `A'θ` for every clause
/// `A' :- B1, ..., Bn` and renamed-apart members `B'1, ..., B'n` of `i` with
/// `θ = mgu((B1, ..., Bn), (B'1, ..., B'n))`. Unification runs atom by atom,
/// accumulating the substitution.
pub fn tpi_step(
    p: &Program,
    i: &PiInterpretation,
    supply: &mut VarSupply,
) -> Result<PiInterpretation> {
    definite(p)?;
    p.clauses()
        .iter()
        .flat_map(|c| c.terms())
        .for_each(|t| supply.reserve(t));
    i.iter().for_each(|t| supply.reserve(t));
    let mut out = PiInterpretation::default();
    for c in p.clauses() {
        let c = c.rename(supply);
        let mut thetas = vec![Substitution::new()];
        for b in &c.body {
            thetas = thetas
                .iter()
                .flat_map(|t| solve_atom(&b.atom, i, t, supply))
                .collect();
            if thetas.is_empty() {
                break;
            }
        }
        for t in thetas {
            out.insert(&t.apply(&c.head));
        }
    }
    Ok(out)
}

/// `n`-fold iteration from the empty interpretation.
pub fn tpi_power(p: &Program, n: usize, supply: &mut VarSupply) -> Result<PiInterpretation> {
    let mut i = PiInterpretation::default();
    for _ in 0..n {
        i = tpi_step(p, &i, supply)?;
    }
    Ok(i)
}

/// Iterates until two successive powers agree up to variance, or `cap`.
/// Returns the last power and the index at which it stabilised.
pub fn tpi_fixpoint(
    p: &Program,
    cap: usize,
    supply: &mut VarSupply,
) -> Result<(PiInterpretation, Option<usize>)> {
    let mut i = PiInterpretation::default();
    for n in 1..=cap {
        let next = tpi_step(p, &i, supply)?;
        if same_atoms(&next, &i) {
            return Ok((i, Some(n - 1)));
        }
        i = next;
    }
    Ok((i, None))
}

pub fn same_atoms(a: &AtomSet, b: &AtomSet) -> bool {
    a.len() == b.len() && a.iter().all(|t| b.contains_variant(t))
}

pub fn subset_atoms(a: &AtomSet, b: &AtomSet) -> bool {
    a.iter().all(|t| b.contains_variant(t))
}

#[derive(Clone, Debug, Serialize)]
pub struct Approximation {
    pub atoms: PiInterpretation,
    /// False if any most-general query was truncated.
    pub complete: bool,
}

/// Runs `p(X1, ..., Xn)` for every defined predicate and collects the
/// answer atoms.
pub fn o_semantics_approx(
    p: &Program,
    budget: Budget,
    supply: &mut VarSupply,
) -> Result<Approximation> {
    definite(p)?;
    p.clauses()
        .iter()
        .flat_map(|c| c.terms())
        .for_each(|t| supply.reserve(t));
    let mut atoms = PiInterpretation::default();
    let mut complete = true;
    for k in p.predicates() {
        let args: Vec<Term> = (0..k.arity)
            .map(|j| supply.fresh_term(&format!("X{}", j + 1)))
            .collect();
        let q = vec![Literal::pos(Term::app(&k.name, args))];
        let f = build_ld_tree(p, &q, budget)?;
        let ans = computed_answers(&f);
        complete &= ans.complete;
        for a in ans.instances {
            atoms.insert(&a[0]);
        }
    }
    Ok(Approximation { atoms, complete })
}
