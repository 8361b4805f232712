//! Runs an object query and its meta-level counterpart and cross-checks
//! answers, call sets and termination.

use std::collections::HashSet;

use serde::Serialize;

use crate::catalog::{
    compose_meta_program, get_interpreter, make_meta_query, EncodingKind, ExtraArgs,
    InterpreterSpec, MetaProgram, MetaQuery,
};
use crate::classify::InterpreterClass;
use crate::encode::{GroundDecoder, CLAUSE};
use crate::engine::{
    build_ldnf_forest, call_set, computed_answers, is_builtin, meta_call_view, termination_status,
    AtomSet, Budget, Forest, TerminationStatus,
};
use crate::error::Result;
use crate::program::{
    flatten_conjunction, list_to_conjunction, Literal, Program, Query, CONJ, TRUE,
};
use crate::syntax::format_query;
use crate::term::{canonical_seq, is_instance, Term, VarSupply};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Pass,
    Fail,
    Inconclusive,
}

impl Check {
    pub fn label(self) -> &'static str {
        match self {
            Check::Pass => "pass",
            Check::Fail => "fail",
            Check::Inconclusive => "inconclusive",
        }
    }
}

/// Both runs of one (interpreter, program, query) case.
pub struct Case {
    pub interpreter: InterpreterSpec,
    pub program: Program,
    pub query: Query,
    pub meta_program: MetaProgram,
    pub meta_query: MetaQuery,
    pub object: Forest,
    pub meta: Forest,
    pub budget: Budget,
}

pub fn run_case(
    i: &InterpreterSpec,
    p: &Program,
    q: &Query,
    extra: &ExtraArgs,
    budget: Budget,
) -> Result<Case> {
    let mp = compose_meta_program(i, p)?;
    let mut supply = VarSupply::new();
    p.clauses()
        .iter()
        .flat_map(|c| c.terms())
        .for_each(|t| supply.reserve(t));
    mp.program
        .clauses()
        .iter()
        .flat_map(|c| c.terms())
        .for_each(|t| supply.reserve(t));
    let mq = make_meta_query(i, &mp, q, extra, &mut supply)?;
    let object = build_ldnf_forest(p, q, budget)?;
    let meta = build_ldnf_forest(&mp.program, &mq.query(), budget)?;
    Ok(Case {
        interpreter: i.clone(),
        program: p.clone(),
        query: q.to_vec(),
        meta_program: mp,
        meta_query: mq,
        object,
        meta,
        budget,
    })
}

fn query_term(q: &[Literal]) -> Term {
    list_to_conjunction(&q.iter().map(Literal::to_term).collect::<Vec<_>>())
}

/// Object answers as instances of the query, written as one term.
pub fn object_answers(c: &Case) -> Vec<Term> {
    computed_answers(&c.object)
        .distinct()
        .into_iter()
        .map(|atoms| {
            let lits: Vec<Literal> = c
                .query
                .iter()
                .zip(atoms)
                .map(|(l, a)| Literal {
                    positive: l.positive,
                    atom: a,
                })
                .collect();
            query_term(&lits)
        })
        .collect()
}

/// Meta answers mapped back to instances of the object query.
pub fn meta_answers(c: &Case) -> Result<Vec<Term>> {
    let goals = computed_answers(&c.meta).distinct();
    let mut out = Vec::new();
    if c.interpreter.encoding == EncodingKind::Ground {
        let (_, table) = c.meta_program.ground.as_ref().expect("ground encoding");
        let mut supply = VarSupply::new();
        goals.iter().for_each(|g| supply.reserve(&g[0]));
        for g in &goals {
            let mut d = GroundDecoder::new(table, &mut supply, true);
            let lits = d.formula(&g[0].args()[2])?;
            out.push(query_term(&lits));
        }
    } else {
        out.extend(goals.iter().map(|g| g[0].args()[0].clone()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct AnswerCheck {
    /// Every meta answer is an instance of an object answer.
    pub sound: Check,
    /// Every object answer is an instance of a meta answer.
    pub complete: Check,
    /// Both answer sets are complete and equal up to variance.
    pub equal: bool,
    pub object_answers: Vec<Term>,
    pub meta_answers: Vec<Term>,
}

fn covered(xs: &[Term], by: &[Term], by_complete: bool, xs_complete: bool) -> Check {
    let all = xs.iter().all(|x| by.iter().any(|y| is_instance(x, y)));
    match (all, by_complete, xs_complete) {
        (false, true, _) => Check::Fail,
        (false, false, _) => Check::Inconclusive,
        (true, _, true) => Check::Pass,
        (true, _, false) => Check::Inconclusive,
    }
}

fn same_up_to_variance(a: &[Term], b: &[Term]) -> bool {
    let ka: HashSet<Vec<Term>> = a
        .iter()
        .map(|t| canonical_seq(std::slice::from_ref(t)))
        .collect();
    let kb: HashSet<Vec<Term>> = b
        .iter()
        .map(|t| canonical_seq(std::slice::from_ref(t)))
        .collect();
    ka == kb
}

pub fn answer_check(c: &Case) -> Result<AnswerCheck> {
    let obj = object_answers(c);
    let meta = meta_answers(c)?;
    let (oc, mc) = (c.object.complete(), c.meta.complete());
    Ok(AnswerCheck {
        sound: covered(&meta, &obj, oc, mc),
        complete: covered(&obj, &meta, mc, oc),
        equal: oc && mc && same_up_to_variance(&obj, &meta),
        object_answers: obj,
        meta_answers: meta,
    })
}

/// Soundness and completeness of `i` on one object query, with fresh extra
/// arguments.
pub fn answer_correspondence(
    i: &InterpreterSpec,
    p: &Program,
    q: &Query,
    budget: Budget,
) -> Result<AnswerCheck> {
    answer_check(&run_case(i, p, q, &ExtraArgs::Fresh, budget)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CallMode {
    /// Object calls and the meta `solve` calls on atoms are variants of each
    /// other, both ways.
    VariantBijection,
    /// Every meta `solve` call's goal is an instance of a goal solved by the
    /// vanilla interpreter on the same query.
    InstanceCover,
    /// Every object resolvent is, up to renaming, split across the `solve`
    /// goals of some meta resolvent, and conversely.
    Partition,
}

#[derive(Clone, Debug, Serialize)]
pub struct CallCheck {
    pub mode: CallMode,
    pub holds: Check,
    /// Meta-side calls (as `solve` atoms) without a counterpart.
    pub unmatched_meta: Vec<Term>,
    /// Reference-side calls without a counterpart.
    pub unmatched_reference: Vec<Term>,
}

fn solve_goals(f: &Forest, solve: &str) -> (Vec<Term>, bool) {
    let v = meta_call_view(f, CLAUSE);
    let goals = v
        .calls
        .iter()
        .filter(|t| t.functor().is_some_and(|(n, k)| n == solve && k >= 1))
        .cloned()
        .collect();
    (goals, v.truncated)
}

fn is_object_atom(t: &Term) -> bool {
    !(t.is_functor(TRUE, 0) || t.is_functor(CONJ, 2) || t.is_functor(crate::program::NEG, 1))
}

pub fn call_check(c: &Case, mode: CallMode) -> Result<CallCheck> {
    let solve = c.interpreter.entry.name.to_string();
    match mode {
        CallMode::VariantBijection => {
            let obj = call_set(&c.object);
            let objs: Vec<Term> = obj
                .calls
                .iter()
                .filter(|t| !is_builtin(t))
                .cloned()
                .collect();
            let (goals, mtrunc) = solve_goals(&c.meta, &solve);
            let metas: Vec<Term> = goals
                .into_iter()
                .filter(|g| is_object_atom(&g.args()[0]))
                .collect();
            let oset = AtomSet::from_atoms(&objs);
            let mset = AtomSet::from_atoms(metas.iter().map(|g| &g.args()[0]));
            let unmatched_meta: Vec<Term> = metas
                .iter()
                .filter(|g| !oset.contains_variant(&g.args()[0]))
                .cloned()
                .collect();
            let unmatched_reference: Vec<Term> = objs
                .iter()
                .filter(|a| !mset.contains_variant(a))
                .cloned()
                .collect();
            let holds = if obj.truncated || mtrunc {
                Check::Inconclusive
            } else if unmatched_meta.is_empty() && unmatched_reference.is_empty() {
                Check::Pass
            } else {
                Check::Fail
            };
            Ok(CallCheck {
                mode,
                holds,
                unmatched_meta,
                unmatched_reference,
            })
        }
        CallMode::InstanceCover => {
            let m0 = get_interpreter("m0")?;
            let reference = run_case(&m0, &c.program, &c.query, &ExtraArgs::Fresh, c.budget)?;
            let (refs, rtrunc) = solve_goals(&reference.meta, "solve");
            let (goals, mtrunc) = solve_goals(&c.meta, &solve);
            let unmatched_meta: Vec<Term> = goals
                .iter()
                .filter(|g| !refs.iter().any(|r| is_instance(&g.args()[0], &r.args()[0])))
                .cloned()
                .collect();
            let holds = match (unmatched_meta.is_empty(), rtrunc, mtrunc) {
                (false, false, _) => Check::Fail,
                (false, true, _) => Check::Inconclusive,
                (true, _, true) => Check::Inconclusive,
                (true, _, false) => Check::Pass,
            };
            Ok(CallCheck {
                mode,
                holds,
                unmatched_meta,
                unmatched_reference: vec![],
            })
        }
        CallMode::Partition => Ok(partition_check(c, &solve)),
    }
}

/// Object resolvents and meta resolvents made only of `solve` goals, each
/// flattened to its atom sequence, must coincide up to renaming.
fn partition_check(c: &Case, solve: &str) -> CallCheck {
    let key = |ts: &[Term]| canonical_seq(ts);
    let mut objs: Vec<Vec<Term>> = Vec::new();
    let mut okeys = HashSet::new();
    for n in &c.object.main().nodes {
        let seq: Vec<Term> = n.goals.iter().map(|g| g.literal.to_term()).collect();
        if okeys.insert(key(&seq)) {
            objs.push(seq);
        }
    }
    let mut metas: Vec<Vec<Term>> = Vec::new();
    let mut mkeys = HashSet::new();
    for n in &c.meta.main().nodes {
        let all_solve = n.goals.iter().all(|g| {
            g.literal.positive
                && g.literal
                    .atom
                    .functor()
                    .is_some_and(|(f, k)| f == solve && k >= 1)
        });
        if !all_solve {
            continue;
        }
        let mut seq = Vec::new();
        for g in &n.goals {
            flatten_conjunction(&g.literal.atom.args()[0], &mut seq);
        }
        if mkeys.insert(key(&seq)) {
            metas.push(seq);
        }
    }
    let show = |s: &Vec<Term>| {
        Term::constant(&format_query(
            &s.iter().map(Literal::from_term).collect::<Vec<_>>(),
        ))
    };
    let unmatched_reference: Vec<Term> = objs
        .iter()
        .filter(|s| !mkeys.contains(&key(s)))
        .map(show)
        .collect();
    let unmatched_meta: Vec<Term> = metas
        .iter()
        .filter(|s| !okeys.contains(&key(s)))
        .map(show)
        .collect();
    let holds = if !c.object.complete() || !c.meta.complete() {
        Check::Inconclusive
    } else if unmatched_meta.is_empty() && unmatched_reference.is_empty() {
        Check::Pass
    } else {
        Check::Fail
    };
    CallCheck {
        mode: CallMode::Partition,
        holds,
        unmatched_meta,
        unmatched_reference,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterexampleKind {
    /// The object query terminates, the meta-query loops.
    Violation,
    /// The meta-query terminates, the object query loops.
    Improvement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "kind", rename_all = "snake_case")]
pub enum PreservationVerdict {
    /// Both directions hold on this case.
    Preserved,
    Counterexample(CounterexampleKind),
    Inconclusive,
}

impl PreservationVerdict {
    pub fn label(self) -> &'static str {
        match self {
            PreservationVerdict::Preserved => "preserved",
            PreservationVerdict::Counterexample(CounterexampleKind::Violation) => {
                "counterexample(violation)"
            }
            PreservationVerdict::Counterexample(CounterexampleKind::Improvement) => {
                "counterexample(improvement)"
            }
            PreservationVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PreservationReport {
    pub interpreter: String,
    pub query: String,
    pub meta_query: String,
    pub object_status: TerminationStatus,
    pub meta_status: TerminationStatus,
    pub object_floundered: bool,
    pub meta_floundered: bool,
    pub answers: AnswerCheck,
    pub calls: Option<CallCheck>,
    /// Object termination implies meta termination.
    pub non_violation: Check,
    /// Meta termination implies object termination.
    pub non_improvement: Check,
    pub verdict: PreservationVerdict,
    /// Whether the meta-query is restricted; `None` when not applicable.
    pub restricted_query: Option<bool>,
    /// Whether the interpreter's class promises preservation for this query.
    pub preservation_expected: bool,
    pub budget: Budget,
}

fn directions(o: &TerminationStatus, m: &TerminationStatus) -> (Check, Check) {
    use TerminationStatus as S;
    let nv = match (o, m) {
        (S::LoopDetected { .. }, _) => Check::Pass,
        (S::Terminates { .. }, S::Terminates { .. }) => Check::Pass,
        (S::Terminates { .. }, S::LoopDetected { .. }) => Check::Fail,
        _ => Check::Inconclusive,
    };
    let ni = match (m, o) {
        (S::LoopDetected { .. }, _) => Check::Pass,
        (S::Terminates { .. }, S::Terminates { .. }) => Check::Pass,
        (S::Terminates { .. }, S::LoopDetected { .. }) => Check::Fail,
        _ => Check::Inconclusive,
    };
    (nv, ni)
}

pub fn default_call_mode(class: InterpreterClass) -> Option<CallMode> {
    match class {
        InterpreterClass::Vanilla => Some(CallMode::VariantBijection),
        InterpreterClass::DoubleExtended | InterpreterClass::Restricted => {
            Some(CallMode::InstanceCover)
        }
        _ => None,
    }
}

pub fn preservation_report(
    i: &InterpreterSpec,
    p: &Program,
    q: &Query,
    extra: &ExtraArgs,
    budget: Budget,
) -> Result<PreservationReport> {
    let c = run_case(i, p, q, extra, budget)?;
    report_for(&c)
}

pub fn report_for(c: &Case) -> Result<PreservationReport> {
    let class = c.interpreter.classify().class;
    let object_status = termination_status(&c.object);
    let meta_status = termination_status(&c.meta);
    let (non_violation, non_improvement) = directions(&object_status, &meta_status);
    let verdict = match (non_violation, non_improvement) {
        (Check::Fail, _) => PreservationVerdict::Counterexample(CounterexampleKind::Violation),
        (_, Check::Fail) => PreservationVerdict::Counterexample(CounterexampleKind::Improvement),
        (Check::Pass, Check::Pass) => PreservationVerdict::Preserved,
        _ => PreservationVerdict::Inconclusive,
    };
    let calls = match default_call_mode(class) {
        Some(m) if c.program.is_definite() => Some(call_check(c, m)?),
        _ => None,
    };
    let restricted_query = c.meta_query.restricted;
    let preservation_expected = match class {
        InterpreterClass::Vanilla | InterpreterClass::Normal | InterpreterClass::GroundRep => true,
        InterpreterClass::Restricted => restricted_query == Some(true),
        _ => false,
    };
    Ok(PreservationReport {
        interpreter: c.interpreter.name.clone(),
        query: format_query(&c.query),
        meta_query: c.meta_query.goal.to_string(),
        object_floundered: c.object.floundered(),
        meta_floundered: c.meta.floundered(),
        answers: answer_check(c)?,
        calls,
        object_status,
        meta_status,
        non_violation,
        non_improvement,
        verdict,
        restricted_query,
        preservation_expected,
        budget: c.budget,
    })
}
