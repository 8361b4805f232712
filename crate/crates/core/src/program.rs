//! Clauses, programs, queries and the predicate dependency graph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::term::{rename_with, Term, VarId, VarSupply};

/// A predicate symbol with its arity, written `name/arity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredKey {
    pub name: Arc<str>,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> PredKey {
        PredKey {
            name: Arc::from(name),
            arity,
        }
    }

    pub fn of(t: &Term) -> Option<PredKey> {
        match t {
            Term::App(f, args) => Some(PredKey {
                name: f.clone(),
                arity: args.len(),
            }),
            Term::Var(_) => None,
        }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl Serialize for PredKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl std::str::FromStr for PredKey {
    type Err = String;

    fn from_str(s: &str) -> Result<PredKey, String> {
        let (name, arity) = s
            .rsplit_once('/')
            .ok_or_else(|| format!("expected name/arity, got {s:?}"))?;
        let arity = arity.parse().map_err(|_| format!("bad arity in {s:?}"))?;
        if name.is_empty() {
            return Err(format!("empty symbol name in {s:?}"));
        }
        Ok(PredKey::new(name, arity))
    }
}

impl<'de> serde::Deserialize<'de> for PredKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<PredKey, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Term,
}

impl Literal {
    pub fn pos(atom: Term) -> Literal {
        Literal {
            positive: true,
            atom,
        }
    }

    pub fn neg(atom: Term) -> Literal {
        Literal {
            positive: false,
            atom,
        }
    }

    pub fn map_atom(&self, f: impl FnOnce(&Term) -> Term) -> Literal {
        Literal {
            positive: self.positive,
            atom: f(&self.atom),
        }
    }

    /// The literal as a term: negative literals become `\+(A)`.
    pub fn to_term(&self) -> Term {
        if self.positive {
            self.atom.clone()
        } else {
            Term::app(NEG, vec![self.atom.clone()])
        }
    }

    pub fn from_term(t: &Term) -> Literal {
        match t {
            Term::App(f, args) if args.len() == 1 && (&**f == NEG || &**f == "not") => {
                Literal::neg(args[0].clone())
            }
            _ => Literal::pos(t.clone()),
        }
    }
}

pub const NEG: &str = "\\+";
pub const CONJ: &str = ",";
pub const TRUE: &str = "true";

pub type Query = Vec<Literal>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Literal>,
}

impl Clause {
    pub fn fact(head: Term) -> Clause {
        Clause { head, body: vec![] }
    }

    pub fn key(&self) -> PredKey {
        PredKey::of(&self.head).expect("clause head is not a variable")
    }

    pub fn rename(&self, supply: &mut VarSupply) -> Clause {
        let mut map = HashMap::new();
        let head = rename_with(&self.head, &mut map, supply);
        let body = self
            .body
            .iter()
            .map(|l| l.map_atom(|a| rename_with(a, &mut map, supply)))
            .collect();
        Clause { head, body }
    }

    /// All terms of the clause, head first.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        std::iter::once(&self.head).chain(self.body.iter().map(|l| &l.atom))
    }

    pub fn max_var_id(&self) -> Option<VarId> {
        self.terms().filter_map(Term::max_var_id).max()
    }

    pub fn is_definite(&self) -> bool {
        self.body.iter().all(|l| l.positive)
    }

    /// The clause as a sequence of terms, usable for variance checks.
    pub fn as_terms(&self) -> Vec<Term> {
        std::iter::once(self.head.clone())
            .chain(self.body.iter().map(Literal::to_term))
            .collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Program {
    clauses: Vec<Clause>,
    index: HashMap<PredKey, Vec<usize>>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.clauses == other.clauses
    }
}

impl Program {
    pub fn new(clauses: Vec<Clause>) -> Program {
        let mut index: HashMap<PredKey, Vec<usize>> = HashMap::new();
        for (i, c) in clauses.iter().enumerate() {
            index.entry(c.key()).or_default().push(i);
        }
        Program { clauses, index }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, i: usize) -> &Clause {
        &self.clauses[i]
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Indices of the clauses defining `key`, in source order.
    pub fn clauses_for(&self, key: &PredKey) -> &[usize] {
        self.index.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn defines(&self, key: &PredKey) -> bool {
        self.index.contains_key(key)
    }

    /// Defined predicates in order of their first clause.
    pub fn predicates(&self) -> Vec<PredKey> {
        let mut out: Vec<PredKey> = Vec::new();
        for c in &self.clauses {
            let k = c.key();
            if !out.contains(&k) {
                out.push(k);
            }
        }
        out
    }

    /// Every predicate occurring in a head or body literal.
    pub fn all_predicates(&self) -> BTreeSet<PredKey> {
        self.clauses
            .iter()
            .flat_map(|c| c.terms())
            .filter_map(PredKey::of)
            .collect()
    }

    /// Every function symbol occurring in an argument position (constants
    /// included), in first-occurrence order.
    pub fn functors(&self) -> Vec<(Arc<str>, usize)> {
        let mut out = Vec::new();
        for t in self.clauses.iter().flat_map(|c| c.terms()) {
            for a in t.args() {
                a.symbols(&mut out);
            }
        }
        out
    }

    pub fn max_var_id(&self) -> Option<VarId> {
        self.clauses.iter().filter_map(Clause::max_var_id).max()
    }

    pub fn is_definite(&self) -> bool {
        self.clauses.iter().all(Clause::is_definite)
    }

    /// Concatenation; `self`'s clauses come first.
    pub fn union(&self, other: &Program) -> Program {
        let mut cs = self.clauses.clone();
        cs.extend(other.clauses.iter().cloned());
        Program::new(cs)
    }

    pub fn without_clause(&self, i: usize) -> Program {
        let mut cs = self.clauses.clone();
        cs.remove(i);
        Program::new(cs)
    }

    pub fn dependency_graph(&self) -> DependencyGraph {
        DependencyGraph::of(self)
    }

    /// True iff the two programs have the same clauses in the same order up
    /// to renaming of each clause.
    pub fn variant_eq(&self, other: &Program) -> bool {
        self.clauses.len() == other.clauses.len()
            && self
                .clauses
                .iter()
                .zip(&other.clauses)
                .all(|(a, b)| crate::term::is_variant_seq(&a.as_terms(), &b.as_terms()))
    }
}

/// The refers-to relation between predicates and its transitive closure.
#[derive(Clone, Debug)]
pub struct DependencyGraph {
    refers: BTreeMap<PredKey, BTreeSet<PredKey>>,
    reach: BTreeMap<PredKey, BTreeSet<PredKey>>,
}

impl DependencyGraph {
    pub fn of(p: &Program) -> DependencyGraph {
        let mut refers: BTreeMap<PredKey, BTreeSet<PredKey>> = BTreeMap::new();
        for k in p.all_predicates() {
            refers.entry(k).or_default();
        }
        for c in p.clauses() {
            let entry = refers.entry(c.key()).or_default();
            for l in &c.body {
                if let Some(k) = PredKey::of(&l.atom) {
                    entry.insert(k);
                }
            }
        }
        let mut reach = BTreeMap::new();
        for k in refers.keys() {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&PredKey> = refers[k].iter().collect();
            while let Some(q) = stack.pop() {
                if seen.insert(q.clone()) {
                    if let Some(next) = refers.get(q) {
                        stack.extend(next.iter());
                    }
                }
            }
            reach.insert(k.clone(), seen);
        }
        DependencyGraph { refers, reach }
    }

    pub fn refers_to(&self, p: &PredKey, q: &PredKey) -> bool {
        self.refers.get(p).is_some_and(|s| s.contains(q))
    }

    /// `p ⊒ q`: there is a non-empty refers-to path from p to q.
    pub fn depends_on(&self, p: &PredKey, q: &PredKey) -> bool {
        self.reach.get(p).is_some_and(|s| s.contains(q))
    }

    pub fn mutually_recursive(&self, p: &PredKey, q: &PredKey) -> bool {
        self.depends_on(p, q) && self.depends_on(q, p)
    }

    pub fn is_recursive(&self, p: &PredKey) -> bool {
        self.depends_on(p, p)
    }

    pub fn reachable(&self, p: &PredKey) -> BTreeSet<PredKey> {
        self.reach.get(p).cloned().unwrap_or_default()
    }
}

/// Right-nested conjunction; the empty list is `true`.
pub fn list_to_conjunction(ts: &[Term]) -> Term {
    match ts {
        [] => Term::constant(TRUE),
        [t] => t.clone(),
        [t, rest @ ..] => Term::app(CONJ, vec![t.clone(), list_to_conjunction(rest)]),
    }
}

/// Splits along the right spine of `,`; `true` alone is the empty list.
pub fn conjunction_to_list(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::App(f, args) if &**f == CONJ && args.len() == 2 => {
                out.push(args[0].clone());
                cur = &args[1];
            }
            _ => {
                if !(out.is_empty() && cur.is_functor(TRUE, 0)) {
                    out.push(cur.clone());
                }
                return out;
            }
        }
    }
}

/// Fully flattens nested conjunctions and drops `true`.
pub fn flatten_conjunction(t: &Term, out: &mut Vec<Term>) {
    match t {
        Term::App(f, args) if &**f == CONJ && args.len() == 2 => {
            flatten_conjunction(&args[0], out);
            flatten_conjunction(&args[1], out);
        }
        _ if t.is_functor(TRUE, 0) => {}
        _ => out.push(t.clone()),
    }
}

/// True iff `parts` are non-empty and their concatenation is `whole`.
pub fn forms_partition(parts: &[Vec<Term>], whole: &[Term]) -> bool {
    if parts.iter().any(Vec::is_empty) {
        return false;
    }
    let total: usize = parts.iter().map(Vec::len).sum();
    total == whole.len() && parts.iter().flatten().zip(whole).all(|(a, b)| a == b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    #[test]
    fn conjunctions_round_trip() {
        let xs = vec![c("a"), c("b"), c("c")];
        let t = list_to_conjunction(&xs);
        assert_eq!(conjunction_to_list(&t), xs);
        assert_eq!(list_to_conjunction(&[]), c("true"));
        assert!(conjunction_to_list(&c("true")).is_empty());
        assert_eq!(conjunction_to_list(&c("a")), vec![c("a")]);
    }

    #[test]
    fn partitions() {
        let w = vec![c("a"), c("b"), c("c")];
        assert!(forms_partition(&[vec![c("a")], vec![c("b"), c("c")]], &w));
        assert!(!forms_partition(&[vec![c("b")], vec![c("a"), c("c")]], &w));
        assert!(!forms_partition(
            &[vec![c("a")], vec![], vec![c("b"), c("c")]],
            &w
        ));
        assert!(forms_partition(&[], &[]));
    }
}
