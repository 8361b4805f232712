//! Recursive path ordering with lex/mul status, and a constraint-directed
//! search for a precedence orienting a set of obligations.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::{check_obligations, Comparison, OrderingSpec, SearchResult, Status, Verdict};
use crate::engine::ObligationSet;
use crate::program::PredKey;
use crate::term::Term;

struct Rpo<'a> {
    rank: HashMap<PredKey, usize>,
    status: &'a BTreeMap<PredKey, Status>,
}

impl Rpo<'_> {
    fn prec(&self, f: &PredKey, g: &PredKey) -> bool {
        matches!((self.rank.get(f), self.rank.get(g)), (Some(a), Some(b)) if a < b)
    }

    fn status(&self, f: &PredKey) -> Status {
        self.status.get(f).copied().unwrap_or(Status::Lex)
    }

    fn equiv(&self, s: &Term, t: &Term) -> bool {
        match (s, t) {
            (Term::Var(a), Term::Var(b)) => a.id == b.id,
            (Term::App(f, xs), Term::App(g, ys)) if f == g && xs.len() == ys.len() => {
                let k = PredKey::new(f, xs.len());
                match self.status(&k) {
                    Status::Lex => xs.iter().zip(ys.iter()).all(|(x, y)| self.equiv(x, y)),
                    Status::Mul => {
                        let mut rest: Vec<&Term> = ys.iter().collect();
                        xs.iter()
                            .all(|x| match rest.iter().position(|y| self.equiv(x, y)) {
                                Some(i) => {
                                    rest.swap_remove(i);
                                    true
                                }
                                None => false,
                            })
                    }
                }
            }
            _ => false,
        }
    }

    fn geq(&self, s: &Term, t: &Term) -> bool {
        self.equiv(s, t) || self.gt(s, t)
    }

    fn gt(&self, s: &Term, t: &Term) -> bool {
        let Term::App(f, xs) = s else { return false };
        let Term::App(g, ys) = t else { return true };
        if xs.iter().any(|x| self.geq(x, t)) {
            return true;
        }
        let (kf, kg) = (PredKey::new(f, xs.len()), PredKey::new(g, ys.len()));
        if self.prec(&kf, &kg) {
            return ys.iter().all(|y| self.gt(s, y));
        }
        if kf != kg {
            return false;
        }
        match self.status(&kf) {
            Status::Lex => {
                let lex = xs
                    .iter()
                    .zip(ys.iter())
                    .find(|(x, y)| !self.equiv(x, y))
                    .is_some_and(|(x, y)| self.gt(x, y));
                lex && ys.iter().all(|y| self.gt(s, y))
            }
            Status::Mul => self.mul_gt(xs, ys),
        }
    }

    fn mul_gt(&self, xs: &[Term], ys: &[Term]) -> bool {
        let mut ms: Vec<&Term> = xs.iter().collect();
        let mut ns: Vec<&Term> = Vec::new();
        for y in ys {
            match ms.iter().position(|x| self.equiv(x, y)) {
                Some(i) => {
                    ms.remove(i);
                }
                None => ns.push(y),
            }
        }
        !ms.is_empty() && ns.iter().all(|n| ms.iter().any(|m| self.gt(m, n)))
    }
}

fn rpo<'a>(precedence: &[PredKey], status: &'a BTreeMap<PredKey, Status>) -> Rpo<'a> {
    Rpo {
        rank: precedence
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect(),
        status,
    }
}

pub fn rpo_greater(
    precedence: &[PredKey],
    status: &BTreeMap<PredKey, Status>,
    s: &Term,
    t: &Term,
) -> bool {
    rpo(precedence, status).gt(s, t)
}

pub(super) fn compare_rpo(
    precedence: &[PredKey],
    status: &BTreeMap<PredKey, Status>,
    s: &Term,
    t: &Term,
) -> Comparison {
    let r = rpo(precedence, status);
    if r.equiv(s, t) {
        Comparison::EqualOrEquiv
    } else if r.gt(s, t) {
        Comparison::Greater
    } else {
        Comparison::NotGreater
    }
}

// ---------------------------------------------------------------------------
// Search

#[derive(Debug)]
enum F {
    True,
    False,
    Prec(usize, usize),
    Stat(usize, Status),
    And(Vec<Rc<F>>),
    Or(Vec<Rc<F>>),
}

fn and(v: Vec<Rc<F>>) -> Rc<F> {
    let mut out = Vec::new();
    for f in v {
        match &*f {
            F::True => {}
            F::False => return Rc::new(F::False),
            _ => out.push(f),
        }
    }
    match out.len() {
        0 => Rc::new(F::True),
        1 => out.pop().unwrap(),
        _ => Rc::new(F::And(out)),
    }
}

fn or(v: Vec<Rc<F>>) -> Rc<F> {
    let mut out = Vec::new();
    for f in v {
        match &*f {
            F::False => {}
            F::True => return Rc::new(F::True),
            _ => out.push(f),
        }
    }
    match out.len() {
        0 => Rc::new(F::False),
        1 => out.pop().unwrap(),
        _ => Rc::new(F::Or(out)),
    }
}

/// Compiles `s > t` into conditions on precedence and status. Only
/// syntactic identity is used for equivalence, which makes the formula
/// sufficient (not necessary) for the ordering to hold.
struct Compiler {
    symbols: Vec<PredKey>,
    index: HashMap<PredKey, usize>,
    memo: HashMap<(Term, Term), Rc<F>>,
}

impl Compiler {
    fn sym(&mut self, f: &str, n: usize) -> usize {
        let k = PredKey::new(f, n);
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        self.symbols.push(k.clone());
        self.index.insert(k, self.symbols.len() - 1);
        self.symbols.len() - 1
    }

    fn gt(&mut self, s: &Term, t: &Term) -> Rc<F> {
        let Term::App(f, xs) = s else {
            return Rc::new(F::False);
        };
        let Term::App(g, ys) = t else {
            return Rc::new(F::True);
        };
        let key = (s.clone(), t.clone());
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let mut alts = Vec::new();
        for x in xs.iter() {
            if x == t {
                alts.push(Rc::new(F::True));
                break;
            }
            alts.push(self.gt(x, t));
        }
        let (fi, gi) = (self.sym(f, xs.len()), self.sym(g, ys.len()));
        if fi != gi {
            let mut conj = vec![Rc::new(F::Prec(fi, gi))];
            conj.extend(ys.iter().map(|y| self.gt(s, y)));
            alts.push(and(conj));
        } else {
            let below: Vec<Rc<F>> = ys.iter().map(|y| self.gt(s, y)).collect();
            if let Some((x, y)) = xs.iter().zip(ys.iter()).find(|(x, y)| x != y) {
                let mut lex = vec![Rc::new(F::Stat(fi, Status::Lex)), self.gt(x, y)];
                lex.extend(below);
                alts.push(and(lex));
            }
            let mut ms: Vec<&Term> = xs.iter().collect();
            let mut ns: Vec<&Term> = Vec::new();
            for y in ys.iter() {
                match ms.iter().position(|x| *x == y) {
                    Some(i) => {
                        ms.remove(i);
                    }
                    None => ns.push(y),
                }
            }
            if !ms.is_empty() {
                let mut mul = vec![Rc::new(F::Stat(fi, Status::Mul))];
                for n in ns {
                    let cover: Vec<Rc<F>> = ms.iter().map(|m| self.gt(m, n)).collect();
                    mul.push(or(cover));
                }
                alts.push(and(mul));
            }
        }
        let r = or(alts);
        self.memo.insert(key, r.clone());
        r
    }
}

#[derive(Clone)]
struct State {
    /// `above[f][g]`: f > g in the transitive closure.
    above: Vec<Vec<bool>>,
    status: Vec<Option<Status>>,
}

#[derive(Clone, Copy, PartialEq)]
enum Tri {
    Yes,
    No,
    Open,
}

impl State {
    fn eval(&self, f: &F) -> Tri {
        match f {
            F::True => Tri::Yes,
            F::False => Tri::No,
            F::Prec(a, b) => {
                if self.above[*a][*b] {
                    Tri::Yes
                } else if a == b || self.above[*b][*a] {
                    Tri::No
                } else {
                    Tri::Open
                }
            }
            F::Stat(a, s) => match self.status[*a] {
                Some(x) if x == *s => Tri::Yes,
                Some(_) => Tri::No,
                None => Tri::Open,
            },
            F::And(v) => {
                let mut r = Tri::Yes;
                for g in v {
                    match self.eval(g) {
                        Tri::No => return Tri::No,
                        Tri::Open => r = Tri::Open,
                        Tri::Yes => {}
                    }
                }
                r
            }
            F::Or(v) => {
                let mut r = Tri::No;
                for g in v {
                    match self.eval(g) {
                        Tri::Yes => return Tri::Yes,
                        Tri::Open => r = Tri::Open,
                        Tri::No => {}
                    }
                }
                r
            }
        }
    }

    fn add_prec(&mut self, a: usize, b: usize) {
        let n = self.above.len();
        let ups: Vec<usize> = (0..n).filter(|&x| x == a || self.above[x][a]).collect();
        let downs: Vec<usize> = (0..n).filter(|&y| y == b || self.above[b][y]).collect();
        for &x in &ups {
            for &y in &downs {
                self.above[x][y] = true;
            }
        }
    }
}

struct Solver {
    nodes: u64,
    limit: u64,
}

impl Solver {
    fn solve(&mut self, mut goals: Vec<Rc<F>>, mut st: State) -> Option<State> {
        loop {
            self.nodes += 1;
            if self.nodes > self.limit {
                return None;
            }
            let Some(g) = goals.pop() else {
                return Some(st);
            };
            match st.eval(&g) {
                Tri::Yes => continue,
                Tri::No => return None,
                Tri::Open => {}
            }
            match &*g {
                F::Prec(a, b) => st.add_prec(*a, *b),
                F::Stat(a, s) => st.status[*a] = Some(*s),
                F::And(v) => goals.extend(v.iter().rev().cloned()),
                F::Or(v) => {
                    for alt in v {
                        if st.eval(alt) == Tri::No {
                            continue;
                        }
                        let mut next = goals.clone();
                        next.push(alt.clone());
                        if let Some(done) = self.solve(next, st.clone()) {
                            return Some(done);
                        }
                        if self.nodes > self.limit {
                            return None;
                        }
                    }
                    return None;
                }
                F::True | F::False => unreachable!(),
            }
        }
    }
}

const NODE_LIMIT: u64 = 2_000_000;

/// Searches precedences and statuses over the symbols of the obligations.
pub fn search_rpo(obs: &ObligationSet) -> SearchResult {
    let mut c = Compiler {
        symbols: Vec::new(),
        index: HashMap::new(),
        memo: HashMap::new(),
    };
    for ob in &obs.obligations {
        for t in [&ob.caller, &ob.callee] {
            let mut syms = Vec::new();
            t.symbols(&mut syms);
            for (f, n) in syms {
                c.sym(&f, n);
            }
        }
    }
    // Goals are popped from the back: keep obligation order.
    let goals: Vec<Rc<F>> = obs
        .obligations
        .iter()
        .rev()
        .map(|ob| c.gt(&ob.caller, &ob.callee))
        .collect();
    let n = c.symbols.len();
    let start = State {
        above: vec![vec![false; n]; n],
        status: vec![None; n],
    };
    let mut solver = Solver {
        nodes: 0,
        limit: NODE_LIMIT,
    };
    let Some(st) = solver.solve(goals, start) else {
        return SearchResult::NoneWithinBound {
            nodes: solver.nodes,
            exhausted: solver.nodes <= NODE_LIMIT,
            note: "no precedence and status assignment found; this is a bounded search result, not a proof that none exists".into(),
        };
    };

    // Extend the partial precedence to a total one, greatest first.
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !placed[i] && (0..n).all(|j| placed[j] || !st.above[j][i]))
            .min_by(|&a, &b| c.symbols[a].cmp(&c.symbols[b]))
            .expect("closure is acyclic");
        placed[next] = true;
        order.push(c.symbols[next].clone());
    }
    let status = (0..n)
        .filter_map(|i| match st.status[i] {
            Some(Status::Mul) => Some((c.symbols[i].clone(), Status::Mul)),
            _ => None,
        })
        .collect();
    let ordering = OrderingSpec::Rpo {
        precedence: order,
        status,
    };
    let check = check_obligations(&ordering, obs);
    if check.verdict == Verdict::Counterexample {
        return SearchResult::NoneWithinBound {
            nodes: solver.nodes,
            exhausted: false,
            note: "candidate precedence failed re-checking".into(),
        };
    }
    SearchResult::Found {
        ordering,
        nodes: solver.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn prec(ks: &[&str]) -> Vec<PredKey> {
        ks.iter().map(|k| k.parse().unwrap()).collect()
    }

    #[test]
    fn subterm_and_precedence() {
        let none = BTreeMap::new();
        let p = prec(&["f/1", "g/1"]);
        assert!(rpo_greater(&p, &none, &t("r(f(X))"), &t("r(X)")));
        assert!(rpo_greater(&p, &none, &t("f(a)"), &t("g(g(a))")));
        assert!(!rpo_greater(&p, &none, &t("g(a)"), &t("f(a)")));
        assert!(rpo_greater(&[], &none, &t("a"), &t("X")));
        let xy = t("pair(X, Y)");
        assert!(!rpo_greater(&[], &none, &xy.args()[0], &xy.args()[1]));
    }

    #[test]
    fn multiset_status() {
        let st = BTreeMap::from([("h/2".parse().unwrap(), Status::Mul)]);
        let p = prec(&["s/1", "z/0"]);
        assert_eq!(
            compare_rpo(&p, &st, &t("h(a, b)"), &t("h(b, a)")),
            Comparison::EqualOrEquiv
        );
        assert!(!rpo_greater(&p, &st, &t("h(s(z), z)"), &t("h(z, s(z))")));
        assert!(rpo_greater(&p, &st, &t("h(s(z), z)"), &t("h(z, z)")));
    }
}
