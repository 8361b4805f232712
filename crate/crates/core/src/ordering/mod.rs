//! Orderings on atoms: linear level mappings over linear norms, fixed norms,
//! and the recursive path ordering; checking decrease obligations against
//! them and searching for one that satisfies a given set.
//!
//! Level mappings compare atoms symbolically: a variable stands for an
//! arbitrary non-negative norm, so `A > B` holds when the constant part of
//! `|A|` exceeds that of `|B|` and no variable weighs more in `|B|` than in
//! `|A|`. Under RPO a variable is a constant below every function symbol.

mod linear_search;
mod rpo;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::ObligationSet;
use crate::program::PredKey;
use crate::term::{Term, VarId};

pub use linear_search::search_linear;
pub use rpo::{rpo_greater, search_rpo};

/// Constant and per-argument coefficients of a symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coeffs {
    pub c: u64,
    pub a: Vec<u64>,
}

impl Coeffs {
    pub fn new(c: u64, a: Vec<u64>) -> Coeffs {
        Coeffs { c, a }
    }
}

/// `‖f(t1..tn)‖ = c^f + Σ a^f_i ‖ti‖`; unlisted functors count as in
/// term size (c = 1, every a = 1).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearNorm {
    #[serde(default)]
    pub functors: BTreeMap<PredKey, Coeffs>,
}

/// `|p(t1..tn)| = c^p + Σ a^p_i ‖ti‖`; unlisted predicates map to 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearLevelMapping {
    #[serde(default)]
    pub predicates: BTreeMap<PredKey, Coeffs>,
    #[serde(default)]
    pub norm: LinearNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedNormKind {
    TermSize,
    ListLength,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    Linear(LinearNorm),
    Fixed(FixedNormKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Lex,
    Mul,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderingSpec {
    Linear(LinearLevelMapping),
    /// Sum of the norms of the selected argument positions (1-based); all
    /// arguments when a predicate has no entry.
    FixedNorm {
        norm: FixedNormKind,
        #[serde(default)]
        selector: BTreeMap<PredKey, Vec<usize>>,
    },
    /// `precedence` lists symbols from greatest to least; unlisted symbols
    /// are incomparable with everything. Status defaults to lex.
    Rpo {
        precedence: Vec<PredKey>,
        #[serde(default)]
        status: BTreeMap<PredKey, Status>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Greater,
    EqualOrEquiv,
    NotGreater,
}

/// Constant part plus a non-negative weight per variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinForm {
    pub constant: u128,
    pub vars: BTreeMap<VarId, u128>,
}

impl LinForm {
    fn constant(c: u128) -> LinForm {
        LinForm {
            constant: c,
            vars: BTreeMap::new(),
        }
    }

    fn var(id: VarId) -> LinForm {
        LinForm {
            constant: 0,
            vars: BTreeMap::from([(id, 1)]),
        }
    }

    fn add_scaled(&mut self, k: u128, other: &LinForm) {
        if k == 0 {
            return;
        }
        self.constant = self
            .constant
            .saturating_add(k.saturating_mul(other.constant));
        for (&v, &w) in &other.vars {
            let e = self.vars.entry(v).or_insert(0);
            *e = e.saturating_add(k.saturating_mul(w));
        }
    }

    /// Greater for every non-negative value of the variables.
    pub fn dominates(&self, other: &LinForm) -> bool {
        self.constant > other.constant
            && other
                .vars
                .iter()
                .all(|(v, w)| self.vars.get(v).copied().unwrap_or(0) >= *w)
    }

    fn normalized(mut self) -> LinForm {
        self.vars.retain(|_, w| *w > 0);
        self
    }

    fn show(&self) -> String {
        let mut s = self.constant.to_string();
        for (v, w) in &self.vars {
            s.push_str(&format!(" + {w}·‖_{v}‖"));
        }
        s
    }
}

fn key_of(f: &str, n: usize) -> PredKey {
    PredKey::new(f, n)
}

impl LinearNorm {
    pub fn form(&self, t: &Term) -> LinForm {
        match t {
            Term::Var(v) => LinForm::var(v.id),
            Term::App(f, args) => {
                let co = self.functors.get(&key_of(f, args.len()));
                let mut out = LinForm::constant(co.map_or(1, |c| c.c) as u128);
                for (i, a) in args.iter().enumerate() {
                    let k = co.map_or(1, |c| c.a.get(i).copied().unwrap_or(0));
                    if k > 0 {
                        out.add_scaled(k as u128, &self.form(a));
                    }
                }
                out
            }
        }
    }
}

impl FixedNormKind {
    pub fn form(self, t: &Term) -> LinForm {
        match (self, t) {
            (_, Term::Var(v)) => LinForm::var(v.id),
            (FixedNormKind::TermSize, Term::App(_, args)) => {
                let mut out = LinForm::constant(1);
                args.iter().for_each(|a| out.add_scaled(1, &self.form(a)));
                out
            }
            (FixedNormKind::ListLength, t) if t.is_functor(crate::term::CONS, 2) => {
                let mut out = LinForm::constant(1);
                out.add_scaled(1, &self.form(&t.args()[1]));
                out
            }
            (FixedNormKind::ListLength, _) => LinForm::constant(0),
        }
    }
}

impl Norm {
    pub fn form(&self, t: &Term) -> LinForm {
        match self {
            Norm::Linear(n) => n.form(t),
            Norm::Fixed(k) => k.form(t),
        }
    }
}

/// Norm of `t`, variables counting 0.
pub fn norm_value(n: &Norm, t: &Term) -> u128 {
    n.form(t).constant
}

impl LinearLevelMapping {
    pub fn form(&self, a: &Term) -> LinForm {
        let Term::App(p, args) = a else {
            return LinForm::default();
        };
        let Some(co) = self.predicates.get(&key_of(p, args.len())) else {
            return LinForm::default();
        };
        let mut out = LinForm::constant(co.c as u128);
        for (i, t) in args.iter().enumerate() {
            let k = co.a.get(i).copied().unwrap_or(0);
            out.add_scaled(k as u128, &self.norm.form(t));
        }
        out.normalized()
    }
}

/// Level of an atom, variables counting 0.
pub fn level_value(lm: &LinearLevelMapping, a: &Term) -> u128 {
    lm.form(a).constant
}

impl OrderingSpec {
    /// The symbolic level of an atom, for the level-based orderings.
    pub fn level_form(&self, a: &Term) -> Option<LinForm> {
        match self {
            OrderingSpec::Linear(lm) => Some(lm.form(a)),
            OrderingSpec::FixedNorm { norm, selector } => {
                let args = a.args();
                let mut out = LinForm::default();
                let sel = PredKey::of(a).and_then(|k| selector.get(&k));
                match sel {
                    Some(pos) => pos
                        .iter()
                        .filter_map(|&i| args.get(i.wrapping_sub(1)))
                        .for_each(|t| out.add_scaled(1, &norm.form(t))),
                    None => args.iter().for_each(|t| out.add_scaled(1, &norm.form(t))),
                }
                Some(out.normalized())
            }
            OrderingSpec::Rpo { .. } => None,
        }
    }
}

pub fn compare(o: &OrderingSpec, a: &Term, b: &Term) -> Comparison {
    match o {
        OrderingSpec::Rpo { precedence, status } => rpo::compare_rpo(precedence, status, a, b),
        _ => {
            let (fa, fb) = (o.level_form(a).unwrap(), o.level_form(b).unwrap());
            if fa == fb {
                Comparison::EqualOrEquiv
            } else if fa.dominates(&fb) {
                Comparison::Greater
            } else {
                Comparison::NotGreater
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AcceptableOnSample,
    Counterexample,
    InconclusiveTruncated,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::AcceptableOnSample => "acceptable_on_sample",
            Verdict::Counterexample => "counterexample",
            Verdict::InconclusiveTruncated => "inconclusive_truncated",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub caller: Term,
    pub callee: Term,
    pub explanation: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObligationReport {
    pub total: usize,
    pub satisfied: usize,
    pub violations: Vec<Violation>,
    pub verdict: Verdict,
}

pub fn check_obligations(o: &OrderingSpec, obs: &ObligationSet) -> ObligationReport {
    let mut violations = Vec::new();
    for ob in &obs.obligations {
        if compare(o, &ob.caller, &ob.callee) != Comparison::Greater {
            let explanation = match (o.level_form(&ob.caller), o.level_form(&ob.callee)) {
                (Some(l), Some(r)) => format!("|caller| = {}, |callee| = {}", l.show(), r.show()),
                _ => "caller is not greater under the path ordering".to_string(),
            };
            violations.push(Violation {
                caller: ob.caller.clone(),
                callee: ob.callee.clone(),
                explanation,
            });
        }
    }
    let verdict = if !violations.is_empty() {
        Verdict::Counterexample
    } else if obs.complete {
        Verdict::AcceptableOnSample
    } else {
        Verdict::InconclusiveTruncated
    };
    ObligationReport {
        total: obs.obligations.len(),
        satisfied: obs.obligations.len() - violations.len(),
        violations,
        verdict,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Linear { bound: u64 },
    Rpo,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchResult {
    Found {
        ordering: OrderingSpec,
        nodes: u64,
    },
    /// Nothing was found among the candidates explored. This is a bounded
    /// result, not a proof that no ordering of the kind exists.
    NoneWithinBound {
        nodes: u64,
        /// False when the search stopped at its node limit.
        exhausted: bool,
        note: String,
    },
}

impl SearchResult {
    pub fn found(&self) -> Option<&OrderingSpec> {
        match self {
            SearchResult::Found { ordering, .. } => Some(ordering),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SearchResult::Found { .. } => "found",
            SearchResult::NoneWithinBound { .. } => "none_within_bound",
        }
    }
}

pub fn search_ordering(obs: &ObligationSet, strategy: &Strategy) -> SearchResult {
    match strategy {
        Strategy::Linear { bound } => search_linear(obs, *bound),
        Strategy::Rpo => search_rpo(obs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn ex12_mapping() -> OrderingSpec {
        let one = || Coeffs::new(0, vec![1]);
        OrderingSpec::Linear(LinearLevelMapping {
            predicates: BTreeMap::from([
                (key_of("l", 1), one()),
                (key_of("p", 1), one()),
                (key_of("r", 1), one()),
                (key_of("s", 1), Coeffs::new(0, vec![0])),
                (key_of("q", 2), Coeffs::new(0, vec![0, 0])),
            ]),
            norm: LinearNorm::default(),
        })
    }

    #[test]
    fn fixed_norms() {
        let ts = Norm::Fixed(FixedNormKind::TermSize);
        let ll = Norm::Fixed(FixedNormKind::ListLength);
        assert_eq!(norm_value(&ts, &t("f(f(0))")), 3);
        assert_eq!(norm_value(&ll, &t("[a, b]")), 2);
        assert_eq!(norm_value(&ll, &t("0")), 0);
    }

    #[test]
    fn levels() {
        let OrderingSpec::Linear(lm) = ex12_mapping() else {
            unreachable!()
        };
        assert_eq!(level_value(&lm, &t("l(f(0))")), 2);
        assert_eq!(level_value(&lm, &t("q(f(0), 0)")), 0);
        assert_eq!(
            level_value(&LinearLevelMapping::default(), &t("p(f(a))")),
            0
        );
    }

    /// Both sides parsed together so that variables are shared.
    fn cmp(o: &OrderingSpec, a: &str, b: &str) -> Comparison {
        let pair = t(&format!("pair({a}, {b})"));
        compare(o, &pair.args()[0], &pair.args()[1])
    }

    #[test]
    fn symbolic_comparison() {
        let o = ex12_mapping();
        assert_eq!(cmp(&o, "p(f(X))", "p(X)"), Comparison::Greater);
        assert_eq!(cmp(&o, "p(f(X))", "p(Y)"), Comparison::NotGreater);
        assert_eq!(cmp(&o, "p(X)", "p(X)"), Comparison::EqualOrEquiv);
    }

    #[test]
    fn spec_json_round_trip() {
        let o = ex12_mapping();
        let js = serde_json::to_string(&o).unwrap();
        assert!(js.contains("\"l/1\""), "{js}");
        let back: OrderingSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, o);
        let rpo: OrderingSpec =
            serde_json::from_str(r#"{"kind":"rpo","precedence":["f/1","g/1"]}"#).unwrap();
        assert_eq!(compare(&rpo, &t("f(a)"), &t("g(a)")), Comparison::Greater);
    }

    #[test]
    fn empty_obligation_set_is_acceptable() {
        let obs = ObligationSet {
            obligations: vec![],
            calls: vec![],
            complete: true,
        };
        let r = check_obligations(&ex12_mapping(), &obs);
        assert_eq!(r.verdict, Verdict::AcceptableOnSample);
    }
}
