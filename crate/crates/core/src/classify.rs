//! Syntactic classification of meta-interpreters.
//!
//! A double extended interpreter has exactly three `solve/(n+1)` clauses:
//!
//! ```text
//! solve(true, t1) :- C1.
//! solve((A, B), t2) :- D1, solve(A, t3), D2, solve(B, t4), C2.
//! solve(A, t5) :- D3, clause(A, B, s), D4, solve(B, t6), C3.
//! ```
//!
//! where the `C`/`D` conjunctions use predicates independent of `solve` and
//! `clause`. The restricted test then checks the extra arguments, that the
//! extra atoms cannot fail, and that the atoms before a `solve` call cannot
//! bind the meta-variables `A` and `B`.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::encode::CLAUSE;
use crate::program::{Clause, Literal, PredKey, Program, CONJ, NEG, TRUE};
use crate::term::{Term, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpreterClass {
    Vanilla,
    /// Double extended but not shown restricted.
    DoubleExtended,
    /// Double extended and restricted.
    Restricted,
    /// Vanilla extended with a negation clause.
    Normal,
    GroundRep,
    Other,
}

impl InterpreterClass {
    pub fn label(self) -> &'static str {
        match self {
            InterpreterClass::Vanilla => "vanilla",
            InterpreterClass::DoubleExtended => "double_extended",
            InterpreterClass::Restricted => "restricted",
            InterpreterClass::Normal => "normal",
            InterpreterClass::GroundRep => "ground_rep",
            InterpreterClass::Other => "other",
        }
    }

    /// Vanilla and restricted interpreters are double extended too.
    pub fn is_double_extended(self) -> bool {
        matches!(
            self,
            InterpreterClass::Vanilla
                | InterpreterClass::DoubleExtended
                | InterpreterClass::Restricted
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RestrictedCondition {
    LinearArguments,
    NonFailure,
    MetaBinding,
}

impl RestrictedCondition {
    pub fn label(self) -> &'static str {
        match self {
            RestrictedCondition::LinearArguments => "linear_arguments",
            RestrictedCondition::NonFailure => "non_failure",
            RestrictedCondition::MetaBinding => "meta_binding",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RestrictedVerdict {
    Yes,
    No {
        condition: RestrictedCondition,
        detail: String,
    },
    Unknown {
        reason: String,
    },
}

impl RestrictedVerdict {
    pub fn label(&self) -> String {
        match self {
            RestrictedVerdict::Yes => "yes".into(),
            RestrictedVerdict::No { condition, .. } => format!("no({})", condition.label()),
            RestrictedVerdict::Unknown { .. } => "unknown".into(),
        }
    }
}

/// Where the three solve clauses are and what surrounds the recursive calls.
#[derive(Clone, Debug, Serialize)]
pub struct DeShape {
    pub solve: PredKey,
    /// Extra arguments of `solve`.
    pub n: usize,
    /// Extra arguments of `clause`.
    pub k: usize,
    pub true_clause: usize,
    pub conj_clause: usize,
    pub atom_clause: usize,
    /// Index of the `\+` clause of a normal interpreter.
    pub neg_clause: Option<usize>,
    #[serde(skip)]
    conj_calls: (usize, usize),
    #[serde(skip)]
    atom_calls: (usize, usize),
}

impl DeShape {
    /// `t1`, `t2` and `t5` are each linear sequences of variables.
    pub fn head_args_linear(&self, p: &Program) -> bool {
        [self.true_clause, self.conj_clause, self.atom_clause]
            .iter()
            .all(|&i| linear_vars(&p.clause(i).head.args()[1..]))
    }

    fn extra_atom_count(&self, p: &Program) -> usize {
        let t = p.clause(self.true_clause).body.len();
        let c = p.clause(self.conj_clause).body.len() - 2;
        let a = p.clause(self.atom_clause).body.len() - 2;
        t + c + a
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub class: InterpreterClass,
    pub shape: Option<DeShape>,
    pub restricted: Option<RestrictedVerdict>,
    /// Human-readable reasons behind the verdict.
    pub findings: Vec<String>,
}

impl Classification {
    pub fn double_extended(&self) -> bool {
        self.class.is_double_extended()
    }
}

fn linear_vars(ts: &[Term]) -> bool {
    let mut seen = HashSet::new();
    ts.iter()
        .all(|t| t.as_var().is_some_and(|v| seen.insert(v.id)))
}

fn var_id(t: &Term) -> Option<VarId> {
    t.as_var().map(|v| v.id)
}

fn is_solve(l: &Literal, solve: &PredKey) -> bool {
    PredKey::of(&l.atom).as_ref() == Some(solve)
}

fn is_clause_atom(l: &Literal) -> bool {
    l.atom.functor().is_some_and(|(f, n)| f == CLAUSE && n >= 2)
}

fn shape_of(p: &Program) -> Result<DeShape, String> {
    let solves: Vec<PredKey> = p
        .predicates()
        .into_iter()
        .filter(|k| &*k.name == "solve")
        .collect();
    let solve = match solves.as_slice() {
        [] => return Err("no solve predicate".into()),
        [k] if k.arity >= 1 => k.clone(),
        [_] => return Err("solve/0".into()),
        _ => return Err("solve is defined with several arities".into()),
    };
    let n = solve.arity - 1;
    let mut idx: Vec<usize> = p.clauses_for(&solve).to_vec();

    let mut neg_clause = None;
    if let Some(pos) = idx
        .iter()
        .position(|&i| is_negation_clause(p.clause(i), &solve))
    {
        neg_clause = Some(idx.remove(pos));
    }
    if idx.len() != 3 {
        return Err(format!("{} solve clauses instead of 3", idx.len()));
    }

    let (mut t, mut c, mut a) = (None, None, None);
    for &i in &idx {
        let first = &p.clause(i).head.args()[0];
        let slot = if first.is_functor(TRUE, 0) {
            &mut t
        } else if first.is_functor(CONJ, 2) {
            &mut c
        } else if first.is_var() {
            &mut a
        } else {
            return Err(format!("clause {} has head argument {first}", i + 1));
        };
        if slot.replace(i).is_some() {
            return Err(format!(
                "two solve clauses of the same kind (clause {})",
                i + 1
            ));
        }
    }
    let (Some(t), Some(c), Some(a)) = (t, c, a) else {
        return Err("missing true, conjunction or atom clause".into());
    };

    let tc = p.clause(t);
    if tc
        .body
        .iter()
        .any(|l| is_solve(l, &solve) || is_clause_atom(l))
    {
        return Err("the true clause calls solve or clause".into());
    }

    // solve((A, B), t2) :- D1, solve(A, t3), D2, solve(B, t4), C2.
    let cc = p.clause(c);
    let head = &cc.head.args()[0];
    let (va, vb) = (var_id(&head.args()[0]), var_id(&head.args()[1]));
    let (Some(va), Some(vb)) = (va, vb) else {
        return Err("conjunction clause head is not solve((A, B), ...)".into());
    };
    if va == vb {
        return Err("conjunction clause head repeats its variable".into());
    }
    if cc.body.iter().any(is_clause_atom) {
        return Err("the conjunction clause calls clause".into());
    }
    let calls: Vec<usize> = (0..cc.body.len())
        .filter(|&j| is_solve(&cc.body[j], &solve))
        .collect();
    let conj_calls = match calls.as_slice() {
        [i1, i2]
            if cc.body[*i1].positive
                && cc.body[*i2].positive
                && var_id(&cc.body[*i1].atom.args()[0]) == Some(va)
                && var_id(&cc.body[*i2].atom.args()[0]) == Some(vb) =>
        {
            (*i1, *i2)
        }
        _ => {
            return Err("conjunction clause does not call solve(A, ...) then solve(B, ...)".into())
        }
    };

    // solve(A, t5) :- D3, clause(A, B, s), D4, solve(B, t6), C3.
    let ac = p.clause(a);
    let va = var_id(&ac.head.args()[0]).unwrap();
    let cls: Vec<usize> = (0..ac.body.len())
        .filter(|&j| is_clause_atom(&ac.body[j]))
        .collect();
    let [ci] = cls.as_slice() else {
        return Err("atom clause does not call clause exactly once".into());
    };
    let cl = &ac.body[*ci];
    let vb = var_id(&cl.atom.args()[1]);
    if !cl.positive || var_id(&cl.atom.args()[0]) != Some(va) || vb.is_none() || vb == Some(va) {
        return Err("atom clause does not call clause(A, B, ...)".into());
    }
    let k = cl.atom.args().len() - 2;
    let sc: Vec<usize> = (0..ac.body.len())
        .filter(|&j| is_solve(&ac.body[j], &solve))
        .collect();
    let atom_calls = match sc.as_slice() {
        [si] if *si > *ci
            && ac.body[*si].positive
            && var_id(&ac.body[*si].atom.args()[0]) == vb =>
        {
            (*ci, *si)
        }
        _ => return Err("atom clause does not call solve(B, ...) after clause(A, B, ...)".into()),
    };

    // The extra atoms must not reach solve or clause.
    let dg = p.dependency_graph();
    let extra = tc
        .body
        .iter()
        .chain(
            cc.body
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != conj_calls.0 && *j != conj_calls.1)
                .map(|x| x.1),
        )
        .chain(
            ac.body
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != atom_calls.0 && *j != atom_calls.1)
                .map(|x| x.1),
        );
    for l in extra {
        let Some(key) = PredKey::of(&l.atom) else {
            continue;
        };
        let reach = dg.reachable(&key);
        if key == solve || reach.iter().any(|r| *r == solve || &*r.name == CLAUSE) {
            return Err(format!("extra atom {} depends on solve or clause", l.atom));
        }
    }

    Ok(DeShape {
        solve,
        n,
        k,
        true_clause: t,
        conj_clause: c,
        atom_clause: a,
        neg_clause,
        conj_calls,
        atom_calls,
    })
}

/// `solve(\+ A, t) :- \+ solve(A, ...)`.
fn is_negation_clause(c: &Clause, solve: &PredKey) -> bool {
    let first = &c.head.args()[0];
    if !first.is_functor(NEG, 1) || !first.args()[0].is_var() {
        return false;
    }
    let a = &first.args()[0];
    c.body
        .iter()
        .any(|l| !l.positive && is_solve(l, solve) && l.atom.args()[0] == *a)
}

fn looks_ground_rep(p: &Program) -> bool {
    let mut shapes = HashSet::new();
    for c in p.clauses() {
        for t in c.head.args() {
            if let Some((f, n)) = t.functor() {
                if matches!((f, n), ("and", 2) | ("not", 1) | ("atom", 2) | ("if", 2)) {
                    shapes.insert(f.to_string());
                }
            }
        }
    }
    shapes.contains("and")
        && shapes.contains("atom")
        && p.predicates().iter().any(|k| &*k.name != "solve")
}

pub fn classify(p: &Program, non_failing: &[PredKey]) -> Classification {
    let mut findings = Vec::new();
    let shape = match shape_of(p) {
        Ok(s) => s,
        Err(e) => {
            let class = if looks_ground_rep(p) {
                findings.push("formulas are matched as and/not/atom terms".into());
                InterpreterClass::GroundRep
            } else {
                findings.push(e);
                InterpreterClass::Other
            };
            return Classification {
                class,
                shape: None,
                restricted: None,
                findings,
            };
        }
    };
    if shape.neg_clause.is_some() {
        let class = if shape.n == 0 && shape.k == 0 && shape.extra_atom_count(p) == 0 {
            InterpreterClass::Normal
        } else {
            findings.push("negation clause on a non-vanilla interpreter".into());
            InterpreterClass::Other
        };
        return Classification {
            class,
            shape: Some(shape),
            restricted: None,
            findings,
        };
    }
    let verdict = restricted_verdict(p, &shape, non_failing, &mut findings);
    let class = if shape.n == 0 && shape.k == 0 && shape.extra_atom_count(p) == 0 {
        InterpreterClass::Vanilla
    } else if verdict == RestrictedVerdict::Yes {
        InterpreterClass::Restricted
    } else {
        InterpreterClass::DoubleExtended
    };
    Classification {
        class,
        shape: Some(shape),
        restricted: Some(verdict),
        findings,
    }
}

enum ArgCheck {
    Ok,
    /// Linear and fresh, but shared with an earlier subgoal.
    Shared(String),
    Bad(String),
}

fn check_call_args(args: &[Term], meta: &[VarId], before: &[Literal]) -> ArgCheck {
    let shown = || {
        args.iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    if !linear_vars(args) {
        return ArgCheck::Bad(format!(
            "({}) is not a linear sequence of variables",
            shown()
        ));
    }
    if args.iter().any(|t| meta.contains(&var_id(t).unwrap())) {
        return ArgCheck::Bad(format!("({}) contains a meta-variable", shown()));
    }
    for t in args {
        let id = var_id(t).unwrap();
        if let Some(l) = before.iter().find(|l| l.atom.contains_var(id)) {
            return ArgCheck::Shared(format!("{t} already occurs in {}", l.atom));
        }
    }
    ArgCheck::Ok
}

fn restricted_verdict(
    p: &Program,
    shape: &DeShape,
    non_failing: &[PredKey],
    findings: &mut Vec<String>,
) -> RestrictedVerdict {
    let cc = p.clause(shape.conj_clause);
    let ac = p.clause(shape.atom_clause);
    let conj_head = &cc.head.args()[0];
    let conj_meta = [
        var_id(&conj_head.args()[0]).unwrap(),
        var_id(&conj_head.args()[1]).unwrap(),
    ];
    let (ci, si) = shape.atom_calls;
    let atom_meta = [
        var_id(&ac.head.args()[0]).unwrap(),
        var_id(&ac.body[ci].atom.args()[1]).unwrap(),
    ];

    // Condition 1, first alternative: t3, t4, t6 and s are fresh linear
    // variables.
    let (c1, c2) = shape.conj_calls;
    let checks = [
        (
            &cc.body[c1].atom.args()[1..],
            &conj_meta[..],
            &cc.body[..c1],
        ),
        (
            &cc.body[c2].atom.args()[1..],
            &conj_meta[..],
            &cc.body[..c2],
        ),
        (
            &ac.body[ci].atom.args()[2..],
            &atom_meta[..],
            &ac.body[..ci],
        ),
        (
            &ac.body[si].atom.args()[1..],
            &atom_meta[..],
            &ac.body[..si],
        ),
    ];
    let mut shared = None;
    let mut bad = None;
    for (args, meta, before) in checks {
        match check_call_args(args, meta, before) {
            ArgCheck::Ok => {}
            ArgCheck::Shared(s) => {
                shared.get_or_insert(s);
            }
            ArgCheck::Bad(s) => {
                bad.get_or_insert(s);
            }
        }
    }
    let alt1 = shared.is_none() && bad.is_none();
    // Second alternative: t1, t2, t5 are linear variables (the encoding
    // always fills clause/(2+k) with fresh variables).
    let alt2 = shape.head_args_linear(p);
    let mut cond1 = None;
    if !alt1 && !alt2 {
        if let Some(b) = bad {
            cond1 = Some(RestrictedVerdict::No {
                condition: RestrictedCondition::LinearArguments,
                detail: b,
            });
        } else {
            cond1 = Some(RestrictedVerdict::Unknown {
                reason: shared.unwrap_or_default(),
            });
        }
    }

    // Conditions 2 and 3, over every extra atom.
    let mut approx = Approx::new(p, non_failing);
    let tc = p.clause(shape.true_clause);
    let mut groups: Vec<(&Clause, Vec<(usize, bool)>, &[VarId])> = vec![];
    groups.push((tc, (0..tc.body.len()).map(|j| (j, false)).collect(), &[]));
    groups.push((
        cc,
        (0..cc.body.len())
            .filter(|&j| j != c1 && j != c2)
            .map(|j| (j, j < c2))
            .collect(),
        &conj_meta,
    ));
    groups.push((
        ac,
        (0..ac.body.len())
            .filter(|&j| j != ci && j != si)
            .map(|j| (j, j < si))
            .collect(),
        &atom_meta,
    ));
    for (clause, atoms, meta) in groups {
        for (j, is_d) in atoms {
            if let Err((condition, detail)) = approx.extra_atom_ok(clause, j, is_d, meta) {
                // Report in clause order, condition 1 first.
                let v = RestrictedVerdict::No { condition, detail };
                return match cond1 {
                    Some(c @ RestrictedVerdict::No { .. }) => c,
                    _ => v,
                };
            }
        }
    }
    match cond1 {
        Some(v) => {
            if let RestrictedVerdict::Unknown { reason } = &v {
                findings.push(format!("linear-argument test inconclusive: {reason}"));
            }
            v
        }
        None => RestrictedVerdict::Yes,
    }
}

/// Syntactic approximation of "never fails" and "never binds its arguments".
struct Approx<'a> {
    p: &'a Program,
    non_failing: &'a [PredKey],
    total: HashMap<PredKey, bool>,
    inert: HashMap<PredKey, bool>,
}

impl<'a> Approx<'a> {
    fn new(p: &'a Program, non_failing: &'a [PredKey]) -> Approx<'a> {
        Approx {
            p,
            non_failing,
            total: HashMap::new(),
            inert: HashMap::new(),
        }
    }

    /// Checks the `j`-th body literal of `c`. `is_d` marks atoms run before a
    /// recursive `solve` call, which must also leave `meta` unbound.
    fn extra_atom_ok(
        &mut self,
        c: &Clause,
        j: usize,
        is_d: bool,
        meta: &[VarId],
    ) -> Result<(), (RestrictedCondition, String)> {
        let l = &c.body[j];
        let a = &l.atom;
        let fail = |d: String| Err((RestrictedCondition::NonFailure, d));
        let binds = |d: String| Err((RestrictedCondition::MetaBinding, d));
        if !l.positive {
            return fail(format!("{l} may fail"));
        }
        let touches_meta = meta.iter().any(|m| a.contains_var(*m));
        if a.is_functor("=", 2) {
            if fresh_eq(c, j) {
                return Ok(());
            }
            if is_d && touches_meta {
                return binds(format!("{a} may bind a meta-variable"));
            }
            return fail(format!("{a} may fail"));
        }
        let Some(key) = PredKey::of(a) else {
            return fail(format!("{a}"));
        };
        if !self.total(&key, &mut HashSet::new()) {
            return fail(format!("{a} may fail"));
        }
        if is_d && touches_meta && !self.inert(&key, &mut HashSet::new()) {
            return binds(format!("{a} may bind a meta-variable"));
        }
        Ok(())
    }

    fn total(&mut self, key: &PredKey, visiting: &mut HashSet<PredKey>) -> bool {
        if let Some(&b) = self.total.get(key) {
            return b;
        }
        if self.non_failing.contains(key) {
            return true;
        }
        match (&*key.name, key.arity) {
            ("true", 0) | ("write", 1) | ("nl", 0) => return true,
            ("fail", 0) | ("=", 2) => return false,
            _ => {}
        }
        if !visiting.insert(key.clone()) {
            return false;
        }
        let p = self.p;
        let r = p.clauses_for(key).iter().any(|&i| {
            let c = p.clause(i);
            linear_vars(c.head.args())
                && (0..c.body.len()).all(|j| {
                    let l = &c.body[j];
                    if !l.positive {
                        return false;
                    }
                    if l.atom.is_functor("=", 2) {
                        return fresh_eq(c, j);
                    }
                    PredKey::of(&l.atom).is_some_and(|k| self.total(&k, visiting))
                })
        });
        visiting.remove(key);
        self.total.insert(key.clone(), r);
        r
    }

    /// Every success leaves the call's arguments unbound.
    fn inert(&mut self, key: &PredKey, visiting: &mut HashSet<PredKey>) -> bool {
        if let Some(&b) = self.inert.get(key) {
            return b;
        }
        match (&*key.name, key.arity) {
            ("true", 0) | ("write", 1) | ("nl", 0) | ("fail", 0) => return true,
            ("=", 2) => return false,
            _ => {}
        }
        if !visiting.insert(key.clone()) {
            // Only reachable through a cycle: any success finishes elsewhere.
            return true;
        }
        let p = self.p;
        let r = p.clauses_for(key).iter().all(|&i| {
            let c = p.clause(i);
            if c.body
                .iter()
                .any(|l| l.positive && l.atom.is_functor("fail", 0))
            {
                return true;
            }
            linear_vars(c.head.args())
                && (0..c.body.len()).all(|j| {
                    let l = &c.body[j];
                    if !l.positive {
                        return true;
                    }
                    if l.atom.is_functor("=", 2) {
                        return fresh_eq(c, j);
                    }
                    PredKey::of(&l.atom).is_some_and(|k| self.inert(&k, visiting))
                })
        });
        visiting.remove(key);
        self.inert.insert(key.clone(), r);
        r
    }
}

/// `U = t` (or `t = U`) where `U` first occurs here and not inside `t`.
fn fresh_eq(c: &Clause, j: usize) -> bool {
    let a = &c.body[j].atom;
    let earlier =
        |id: VarId| c.head.contains_var(id) || c.body[..j].iter().any(|l| l.atom.contains_var(id));
    let (l, r) = (&a.args()[0], &a.args()[1]);
    [(l, r), (r, l)].iter().any(|(u, t)| {
        u.as_var()
            .is_some_and(|v| !earlier(v.id) && !t.contains_var(v.id))
    })
}
