//! First-order terms, substitutions and unification.
//!
//! Variables are identified by a numeric id; the name is only kept for
//! printing. Unification always performs the occurs check and yields an
//! idempotent most general unifier.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

pub type VarId = u64;

#[derive(Clone, Debug)]
pub struct Var {
    pub id: VarId,
    pub name: Arc<str>,
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    /// A function symbol applied to arguments; constants have no arguments.
    App(Arc<str>, Arc<[Term]>),
}

pub const NIL: &str = "[]";
pub const CONS: &str = ".";

impl Term {
    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn constant(name: &str) -> Term {
        Term::App(Arc::from(name), Arc::from(Vec::new()))
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(Arc::from(name), Arc::from(args))
    }

    /// Builds a list term `[items | tail]`; `tail = None` closes it with `[]`.
    pub fn list(items: Vec<Term>, tail: Option<Term>) -> Term {
        let mut acc = tail.unwrap_or_else(|| Term::constant(NIL));
        for item in items.into_iter().rev() {
            acc = Term::app(CONS, vec![item, acc]);
        }
        acc
    }

    /// Reads a proper list back into its elements.
    pub fn as_list(&self) -> Option<Vec<Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::App(f, args) if &**f == CONS && args.len() == 2 => {
                    out.push(args[0].clone());
                    cur = &args[1];
                }
                Term::App(f, args) if &**f == NIL && args.is_empty() => return Some(out),
                _ => return None,
            }
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::App(f, args) => Some((f, args.len())),
            Term::Var(_) => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App(_, args) => args,
            Term::Var(_) => &[],
        }
    }

    pub fn is_functor(&self, name: &str, arity: usize) -> bool {
        matches!(self, Term::App(f, a) if &**f == name && a.len() == arity)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Distinct variables in first-occurrence (left-to-right) order.
    pub fn vars(&self) -> Vec<Var> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.collect_vars(&mut seen, &mut out);
        out
    }

    pub fn collect_vars(&self, seen: &mut HashSet<VarId>, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if seen.insert(v.id) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(seen, out)),
        }
    }

    pub fn contains_var(&self, id: VarId) -> bool {
        match self {
            Term::Var(v) => v.id == id,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(id)),
        }
    }

    pub fn max_var_id(&self) -> Option<VarId> {
        match self {
            Term::Var(v) => Some(v.id),
            Term::App(_, args) => args.iter().filter_map(Term::max_var_id).max(),
        }
    }

    /// Number of symbol occurrences (variables count 1 as well).
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// Every (symbol, arity) pair occurring in the term, in first-occurrence order.
    pub fn symbols(&self, out: &mut Vec<(Arc<str>, usize)>) {
        if let Term::App(f, args) = self {
            if !out.iter().any(|(g, n)| g == f && *n == args.len()) {
                out.push((f.clone(), args.len()));
            }
            args.iter().for_each(|a| a.symbols(out));
        }
    }

    /// Rebuilds the term with `f` applied to every variable.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::App(name, args) => {
                if args.is_empty() {
                    return self.clone();
                }
                let new: Vec<Term> = args.iter().map(|a| a.map_vars(f)).collect();
                Term::App(name.clone(), Arc::from(new))
            }
        }
    }
}

/// Hands out variable ids that have not been issued before.
#[derive(Clone, Debug, Default)]
pub struct VarSupply {
    next: VarId,
}

impl VarSupply {
    pub fn new() -> VarSupply {
        VarSupply { next: 0 }
    }

    /// Makes sure no id occurring in `t` is handed out later.
    pub fn reserve(&mut self, t: &Term) {
        if let Some(m) = t.max_var_id() {
            self.next = self.next.max(m + 1);
        }
    }

    pub fn next_id(&self) -> VarId {
        self.next
    }

    pub fn fresh_named(&mut self, name: &str) -> Var {
        let id = self.next;
        self.next += 1;
        Var {
            id,
            name: Arc::from(name),
        }
    }

    /// A fresh variable whose printed name is derived from `base`.
    pub fn fresh_like(&mut self, base: &str) -> Var {
        let id = self.next;
        let stem = strip_suffix(base);
        let name = if stem.is_empty() || stem == "_" {
            format!("_G{id}")
        } else {
            format!("{stem}_{id}")
        };
        self.fresh_named(&name)
    }

    pub fn fresh_term(&mut self, base: &str) -> Term {
        Term::Var(self.fresh_like(base))
    }
}

fn strip_suffix(name: &str) -> &str {
    if let Some(pos) = name.rfind('_') {
        let tail = &name[pos + 1..];
        if pos > 0 && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            return &name[..pos];
        }
    }
    name
}

/// Renames every variable of `t` to a fresh one, sharing `map` across calls
/// so that several terms can be renamed consistently.
pub fn rename_with(t: &Term, map: &mut HashMap<VarId, Term>, supply: &mut VarSupply) -> Term {
    t.map_vars(&mut |v| {
        map.entry(v.id)
            .or_insert_with(|| supply.fresh_term(&v.name))
            .clone()
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubstError {
    #[error("binding for {0} is cyclic")]
    Cyclic(String),
}

/// An idempotent substitution: no variable of the domain occurs in the range.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<VarId, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    /// Normalises an arbitrary binding map by applying it to itself until
    /// nothing changes. Cyclic maps are rejected.
    pub fn from_bindings(
        bindings: impl IntoIterator<Item = (Var, Term)>,
    ) -> Result<Substitution, SubstError> {
        let raw: HashMap<VarId, (Var, Term)> =
            bindings.into_iter().map(|(v, t)| (v.id, (v, t))).collect();
        let mut done: HashMap<VarId, Term> = HashMap::new();
        fn resolve(
            t: &Term,
            raw: &HashMap<VarId, (Var, Term)>,
            done: &mut HashMap<VarId, Term>,
            active: &mut Vec<VarId>,
        ) -> Result<Term, SubstError> {
            match t {
                Term::Var(v) => {
                    if let Some(r) = done.get(&v.id) {
                        return Ok(r.clone());
                    }
                    let Some((_, bound)) = raw.get(&v.id) else {
                        return Ok(t.clone());
                    };
                    if bound == t {
                        return Ok(t.clone());
                    }
                    if active.contains(&v.id) {
                        return Err(SubstError::Cyclic(v.name.to_string()));
                    }
                    active.push(v.id);
                    let r = resolve(bound, raw, done, active)?;
                    active.pop();
                    if r.contains_var(v.id) {
                        return Err(SubstError::Cyclic(v.name.to_string()));
                    }
                    done.insert(v.id, r.clone());
                    Ok(r)
                }
                Term::App(f, args) => {
                    let mut new = Vec::with_capacity(args.len());
                    for a in args.iter() {
                        new.push(resolve(a, raw, done, active)?);
                    }
                    Ok(Term::App(f.clone(), Arc::from(new)))
                }
            }
        }
        let mut map = BTreeMap::new();
        for (id, (v, _)) in &raw {
            let r = resolve(&Term::Var(v.clone()), &raw, &mut done, &mut Vec::new())?;
            if r != Term::Var(v.clone()) {
                map.insert(*id, r);
            }
        }
        Ok(Substitution { map })
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, id: VarId) -> Option<&Term> {
        self.map.get(&id)
    }

    pub fn bindings(&self) -> impl Iterator<Item = (VarId, &Term)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| {
            self.map
                .get(&v.id)
                .cloned()
                .unwrap_or_else(|| Term::Var(v.clone()))
        })
    }

    /// Sequential composition: applying the result equals applying `self`
    /// and then `other`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut map: BTreeMap<VarId, Term> = BTreeMap::new();
        for (id, t) in &self.map {
            let r = other.apply(t);
            if r.as_var().map(|v| v.id) != Some(*id) {
                map.insert(*id, r);
            }
        }
        for (id, t) in &other.map {
            map.entry(*id).or_insert_with(|| t.clone());
        }
        Substitution { map }
    }

    pub fn restrict(&self, vars: &[Var]) -> Substitution {
        let keep: HashSet<VarId> = vars.iter().map(|v| v.id).collect();
        Substitution {
            map: self
                .map
                .iter()
                .filter(|(k, _)| keep.contains(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn is_idempotent(&self) -> bool {
        self.map
            .values()
            .all(|t| t.vars().iter().all(|v| !self.map.contains_key(&v.id)))
    }
}

/// Triangular unifier state; `finish` produces the idempotent mgu.
#[derive(Default)]
struct Unifier {
    bindings: HashMap<VarId, Term>,
}

impl Unifier {
    fn walk(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Term::Var(v) = &cur {
            match self.bindings.get(&v.id) {
                Some(next) => cur = next.clone(),
                None => break,
            }
        }
        cur
    }

    fn occurs(&self, id: VarId, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(v) => v.id == id,
            Term::App(_, args) => args.iter().any(|a| self.occurs(id, a)),
        }
    }

    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a);
        let b = self.walk(b);
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x.id == y.id => true,
            (Term::Var(x), _) => {
                if self.occurs(x.id, &b) {
                    return false;
                }
                self.bindings.insert(x.id, b);
                true
            }
            (_, Term::Var(y)) => {
                if self.occurs(y.id, &a) {
                    return false;
                }
                self.bindings.insert(y.id, a);
                true
            }
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y))
            }
        }
    }

    fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Var(v) => Term::Var(v),
            Term::App(f, args) => {
                if args.is_empty() {
                    return Term::App(f, args);
                }
                Term::App(
                    f,
                    args.iter()
                        .map(|a| self.resolve(a))
                        .collect::<Vec<_>>()
                        .into(),
                )
            }
        }
    }

    fn finish(self) -> Substitution {
        let map = self
            .bindings
            .keys()
            .map(|id| (*id, self.resolve(&self.bindings[id])))
            .collect();
        Substitution { map }
    }
}

/// Most general unifier of `a` and `b`, with occurs check.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    unify_pairs([(a, b)])
}

/// Simultaneous unifier of every pair.
pub fn unify_pairs<'a>(
    pairs: impl IntoIterator<Item = (&'a Term, &'a Term)>,
) -> Option<Substitution> {
    let mut u = Unifier::default();
    for (a, b) in pairs {
        if !u.unify(a, b) {
            return None;
        }
    }
    Some(u.finish())
}

/// Renames variables to `_0, _1, ...` by first occurrence across `ts`.
/// Two sequences are variants iff their canonical forms are equal.
pub fn canonical_seq(ts: &[Term]) -> Vec<Term> {
    let mut map: HashMap<VarId, Term> = HashMap::new();
    ts.iter()
        .map(|t| {
            t.map_vars(&mut |v| {
                let n = map.len() as VarId;
                map.entry(v.id)
                    .or_insert_with(|| {
                        Term::Var(Var {
                            id: n,
                            name: Arc::from(format!("_{n}")),
                        })
                    })
                    .clone()
            })
        })
        .collect()
}

pub fn canonical(t: &Term) -> Term {
    canonical_seq(std::slice::from_ref(t)).pop().unwrap()
}

pub fn is_variant(a: &Term, b: &Term) -> bool {
    canonical(a) == canonical(b)
}

pub fn is_variant_seq(a: &[Term], b: &[Term]) -> bool {
    a.len() == b.len() && canonical_seq(a) == canonical_seq(b)
}

/// One-way matching: a substitution `s` over the variables of `general`
/// with `s(general) == specific`.
pub fn match_term(general: &Term, specific: &Term) -> Option<Substitution> {
    fn go(g: &Term, s: &Term, acc: &mut BTreeMap<VarId, Term>) -> bool {
        match g {
            Term::Var(v) => match acc.get(&v.id) {
                Some(bound) => bound == s,
                None => {
                    acc.insert(v.id, s.clone());
                    true
                }
            },
            Term::App(f, xs) => match s {
                Term::App(h, ys) => {
                    f == h
                        && xs.len() == ys.len()
                        && xs.iter().zip(ys.iter()).all(|(x, y)| go(x, y, acc))
                }
                Term::Var(_) => false,
            },
        }
    }
    let mut acc = BTreeMap::new();
    if go(general, specific, &mut acc) {
        acc.retain(|k, v| v.as_var().map(|x| x.id) != Some(*k));
        Some(Substitution { map: acc })
    } else {
        None
    }
}

/// True iff `specific` is an instance of `general`.
pub fn is_instance(specific: &Term, general: &Term) -> bool {
    match_term(general, specific).is_some()
}

/// True iff every term is a variable, they are pairwise distinct and none
/// of them occurs in `context`.
pub fn is_linear_fresh_sequence(ts: &[Term], context: &HashSet<VarId>) -> bool {
    let mut seen = HashSet::new();
    ts.iter().all(|t| match t {
        Term::Var(v) => !context.contains(&v.id) && seen.insert(v.id),
        Term::App(..) => false,
    })
}
