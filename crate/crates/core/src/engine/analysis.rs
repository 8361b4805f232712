//! Everything read off a finished forest: answers, call sets, loop
//! detection and the termination verdict.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{builtin, run_builtin, Forest, LdTree, NodeId, NodeStatus, Step, TreeId};
use crate::program::{Literal, PredKey, Program};
use crate::syntax::format_query;
use crate::term::{canonical, canonical_seq, is_variant, unify, Term, VarSupply};

#[derive(Clone, Debug, Serialize)]
pub struct Answers {
    /// Instances of the tracked template, one per success leaf, in tree order.
    pub instances: Vec<Vec<Term>>,
    /// False when the main tree was truncated, so answers may be missing.
    pub complete: bool,
}

impl Answers {
    /// Answers with duplicates up to variance removed, first occurrence kept.
    pub fn distinct(&self) -> Vec<Vec<Term>> {
        let mut seen = std::collections::HashSet::new();
        self.instances
            .iter()
            .filter(|a| seen.insert(canonical_seq(a)))
            .cloned()
            .collect()
    }
}

pub fn computed_answers(f: &Forest) -> Answers {
    let t = f.main();
    Answers {
        instances: t
            .nodes
            .iter()
            .filter(|n| n.status == NodeStatus::Success)
            .map(|n| n.answer.clone())
            .collect(),
        complete: !t.truncated,
    }
}

/// A set of atoms kept up to variance, in first-occurrence order.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AtomSet {
    pub atoms: Vec<Term>,
    #[serde(skip)]
    keys: HashMap<Term, usize>,
}

impl AtomSet {
    pub fn insert(&mut self, t: &Term) -> bool {
        let k = canonical(t);
        if self.keys.contains_key(&k) {
            return false;
        }
        self.keys.insert(k, self.atoms.len());
        self.atoms.push(t.clone());
        true
    }

    pub fn contains_variant(&self, t: &Term) -> bool {
        self.keys.contains_key(&canonical(t))
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.atoms.iter()
    }

    pub fn from_atoms<'a>(ts: impl IntoIterator<Item = &'a Term>) -> AtomSet {
        let mut s = AtomSet::default();
        ts.into_iter().for_each(|t| {
            s.insert(t);
        });
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CallSet {
    pub calls: AtomSet,
    /// A truncated call set is a lower approximation.
    pub truncated: bool,
}

/// Every selected positive literal of every tree of the forest, up to variance.
pub fn call_set(f: &Forest) -> CallSet {
    let mut calls = AtomSet::default();
    for t in &f.trees {
        for n in &t.nodes {
            if let Some(l) = n.selected().filter(|l| l.positive) {
                calls.insert(&l.atom);
            }
        }
    }
    CallSet {
        calls,
        truncated: f.truncated(),
    }
}

/// Calls as a meta-interpreter sees them: built-in calls are dropped and a
/// call to the clause-encoding predicate is recorded once per encoded fact
/// it resolves with, as instantiated by that fact.
pub fn meta_call_view(f: &Forest, clause_pred: &str) -> CallSet {
    let mut calls = AtomSet::default();
    for t in &f.trees {
        for n in &t.nodes {
            let Some(l) = n.selected().filter(|l| l.positive) else {
                continue;
            };
            if super::is_builtin(&l.atom) {
                continue;
            }
            if l.atom.functor().map(|(name, _)| name) == Some(clause_pred) {
                for &c in &n.children {
                    if let Some(r) = &t.nodes[c].resolved {
                        calls.insert(r);
                    }
                }
            } else {
                calls.insert(&l.atom);
            }
        }
    }
    CallSet {
        calls,
        truncated: f.truncated(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopWitness {
    pub tree: TreeId,
    pub ancestor: NodeId,
    pub descendant: NodeId,
    /// Selected atom at the ancestor and the variant selected at the descendant.
    pub atom: Term,
    pub repeat: Term,
    /// Selected atoms along the direct-descendant chain, ancestor first.
    pub chain: Vec<Term>,
    /// Resolution steps on the tree path from the ancestor to the descendant.
    pub steps: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TerminationStatus {
    Terminates { nodes: usize },
    LoopDetected { witness: Box<LoopWitness> },
    BudgetExhausted,
}

impl TerminationStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TerminationStatus::Terminates { .. } => "terminates",
            TerminationStatus::LoopDetected { .. } => "loop_detected",
            TerminationStatus::BudgetExhausted => "budget_exhausted",
        }
    }

    pub fn terminates(&self) -> bool {
        matches!(self, TerminationStatus::Terminates { .. })
    }

    pub fn loops(&self) -> bool {
        matches!(self, TerminationStatus::LoopDetected { .. })
    }

    pub fn witness(&self) -> Option<&LoopWitness> {
        match self {
            TerminationStatus::LoopDetected { witness } => Some(witness),
            _ => None,
        }
    }
}

/// `Terminates` if every tree is complete; otherwise a loop if some selected
/// atom is a variant of an atom it directly descends from; otherwise the
/// budget ran out without evidence either way.
pub fn termination_status(f: &Forest) -> TerminationStatus {
    if f.complete() {
        return TerminationStatus::Terminates {
            nodes: f.node_count(),
        };
    }
    // Prefer loops in the main tree, then in subsidiary trees.
    for (tid, t) in f.trees.iter().enumerate() {
        if let Some(w) = find_loop(tid, t) {
            return TerminationStatus::LoopDetected {
                witness: Box::new(w),
            };
        }
    }
    TerminationStatus::BudgetExhausted
}

fn find_loop(tid: TreeId, t: &LdTree) -> Option<LoopWitness> {
    let mut keys: Vec<Option<Term>> = vec![None; t.nodes.len()];
    let key = |i: NodeId, keys: &mut Vec<Option<Term>>| -> Option<Term> {
        if keys[i].is_none() {
            keys[i] = t.nodes[i]
                .selected()
                .filter(|l| l.positive)
                .map(|l| canonical(&l.atom));
        }
        keys[i].clone()
    };
    for k in 0..t.nodes.len() {
        let Some(kk) = key(k, &mut keys) else {
            continue;
        };
        let mut origin = t.nodes[k].goals[0].origin;
        let mut chain = vec![k];
        while let Some(o) = origin {
            chain.push(o);
            if key(o, &mut keys).as_ref() == Some(&kk) {
                chain.reverse();
                let mut steps = Vec::new();
                let mut cur = k;
                while cur != o {
                    steps.push(t.nodes[cur].step.expect("non-root node has a step"));
                    cur = t.nodes[cur].parent.expect("ancestor on path");
                }
                steps.reverse();
                let atom_at = |i: NodeId| t.nodes[i].goals[0].literal.atom.clone();
                return Some(LoopWitness {
                    tree: tid,
                    ancestor: o,
                    descendant: k,
                    atom: atom_at(o),
                    repeat: atom_at(k),
                    chain: chain.iter().map(|&i| atom_at(i)).collect(),
                    steps,
                });
            }
            origin = t.nodes[o].goals.first().and_then(|g| g.origin);
        }
    }
    None
}

/// Re-runs the recorded steps from the looping atom alone and checks that
/// the variant shows up again as the selected atom.
pub fn replay_witness(p: &Program, w: &LoopWitness) -> bool {
    let mut supply = VarSupply::new();
    p.clauses()
        .iter()
        .flat_map(|c| c.terms())
        .for_each(|t| supply.reserve(t));
    supply.reserve(&w.atom);
    let start = crate::term::rename_with(&w.atom, &mut HashMap::new(), &mut supply);
    let mut goals: Vec<Literal> = vec![Literal::pos(start.clone())];
    for step in &w.steps {
        let Some((first, rest)) = goals.split_first() else {
            return false;
        };
        let (theta, body) = match step {
            Step::Clause(ci) => {
                let c = p.clause(*ci).rename(&mut supply);
                match unify(&first.atom, &c.head) {
                    Some(th) if first.positive => (th, c.body),
                    _ => return false,
                }
            }
            Step::Builtin => {
                let Some(b) = PredKey::of(&first.atom).as_ref().and_then(builtin) else {
                    return false;
                };
                match run_builtin(b, &first.atom) {
                    Some(th) => (th, vec![]),
                    None => return false,
                }
            }
            Step::Negation => {
                if first.positive || !first.atom.is_ground() {
                    return false;
                }
                (Default::default(), vec![])
            }
        };
        goals = body
            .into_iter()
            .chain(rest.iter().cloned())
            .map(|l| l.map_atom(|a| theta.apply(a)))
            .collect();
    }
    goals
        .first()
        .is_some_and(|l| l.positive && is_variant(&l.atom, &start))
}

/// One line per node: `<depth> <status> <query>`, indented by depth.
pub fn dump_tree(t: &LdTree) -> String {
    let mut out = String::new();
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let n = &t.nodes[i];
        let q = if n.goals.is_empty() {
            "□".to_string()
        } else {
            format_query(&n.query())
        };
        let _ = writeln!(
            out,
            "{}{} {} {}",
            "  ".repeat(n.depth),
            n.depth,
            n.status.label(),
            q
        );
        stack.extend(n.children.iter().rev());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::syntax::{parse_program, parse_query_for};

    fn run(src: &str, q: &str) -> (Program, Forest) {
        let p = parse_program(src).unwrap();
        let q = parse_query_for(&p, q).unwrap();
        let f = build_ldnf_forest(&p, &q, Budget::default()).unwrap();
        (p, f)
    }

    #[test]
    fn answers_in_prolog_order() {
        let (_, f) = run("p(a). p(b). q(X) :- p(X).", "q(Y)");
        let a = computed_answers(&f);
        assert!(a.complete);
        let shown: Vec<String> = a.instances.iter().map(|i| i[0].to_string()).collect();
        assert_eq!(shown, ["q(a)", "q(b)"]);
        assert!(termination_status(&f).terminates());
    }

    #[test]
    fn detects_variant_loop_and_replays() {
        let (p, f) = run("p(X) :- q(X, Y), p(Y). q(f(Z), Z). p(0).", "p(X)");
        let s = termination_status(&f);
        let w = s.witness().expect("loop");
        assert!(replay_witness(&p, w));
        assert_eq!(w.chain.len(), 2);
    }

    #[test]
    fn budget_without_variant_is_inconclusive() {
        let (_, f) = run("n(0). n(s(X)) :- n(X).", "n(X), fail");
        assert!(termination_status(&f).loops());
        let (_, f) = run("grow(X) :- grow(f(X)).", "grow(a)");
        assert_eq!(termination_status(&f), TerminationStatus::BudgetExhausted);
    }

    #[test]
    fn negation_as_failure() {
        let (_, f) = run("p(a). q(b). r(X) :- q(X), \\+ p(X).", "r(X)");
        assert_eq!(computed_answers(&f).instances[0][0].to_string(), "r(b)");
        assert!(!f.floundered());
        let (_, f) = run("p(a). s :- \\+ p(X).", "s");
        assert!(f.floundered());
        assert!(computed_answers(&f).instances.is_empty());
    }

    #[test]
    fn ld_mode_rejects_negation() {
        let p = parse_program("s :- \\+ t.").unwrap();
        let q = parse_query_for(&p, "s").unwrap();
        assert!(build_ld_tree(&p, &q, Budget::default()).is_err());
    }

    #[test]
    fn depth_budget_truncates() {
        let (_, f) = run("q :- q.", "q");
        assert!(f.truncated());
        assert_eq!(f.main().nodes.len(), 201);
        assert!(termination_status(&f).loops());
    }

    #[test]
    fn builtins() {
        let (_, f) = run("p(X) :- X = f(Y), write(X), nl, true, Y = a.", "p(Z)");
        assert_eq!(computed_answers(&f).instances[0][0].to_string(), "p(f(a))");
        let (_, f) = run("p :- fail.", "p");
        assert!(computed_answers(&f).instances.is_empty());
    }

    #[test]
    fn tree_dump_lines() {
        let (_, f) = run("p :- q. q.", "p");
        let d = dump_tree(f.main());
        assert_eq!(d.lines().count(), 3);
        assert!(d.lines().next().unwrap().starts_with("0 internal p"));
        assert!(d
            .lines()
            .last()
            .unwrap()
            .trim_start()
            .starts_with("2 success"));
    }
}
