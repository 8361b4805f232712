//! Named meta-interpreters, their expected classification, and the
//! construction of meta-programs and meta-queries from object programs.

use std::collections::HashSet;

use serde::Serialize;

use crate::classify::{classify, InterpreterClass, RestrictedCondition, RestrictedVerdict};
use crate::encode::{
    clause_encode, clause_encode_extended, ground_encode_query, ground_program_term, Filler,
    SymbolTable, CLAUSE,
};
use crate::error::{Error, Result};
use crate::program::{list_to_conjunction, Literal, PredKey, Program, Query};
use crate::syntax::parse_program;
use crate::term::{is_linear_fresh_sequence, Term, VarId, VarSupply};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    /// `clause/2` facts.
    Ce,
    /// `clause/(2+k)` facts with fresh extra arguments.
    CeExtended(usize),
    /// The ground representation, passed as a term in the query.
    Ground,
}

/// What the classifier is expected to say about an interpreter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Expected {
    pub class: InterpreterClass,
    /// `None` when the restricted test does not apply.
    pub restricted: Option<ExpectedRestricted>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedRestricted {
    Yes,
    No(RestrictedCondition),
    Unknown,
}

impl ExpectedRestricted {
    pub fn matches(self, v: &RestrictedVerdict) -> bool {
        match (self, v) {
            (ExpectedRestricted::Yes, RestrictedVerdict::Yes) => true,
            (ExpectedRestricted::No(c), RestrictedVerdict::No { condition, .. }) => c == *condition,
            (ExpectedRestricted::Unknown, RestrictedVerdict::Unknown { .. }) => true,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpreterSpec {
    pub name: String,
    #[serde(skip)]
    pub source: String,
    #[serde(skip)]
    pub program: Program,
    /// Name and arity of the entry predicate (`solve`, or `idemo` for the
    /// ground interpreter).
    pub entry: PredKey,
    pub encoding: EncodingKind,
    pub expected: Option<Expected>,
    /// Predicates accepted as non-failing without syntactic evidence.
    pub non_failing: Vec<PredKey>,
}

const SOURCES: &[(&str, &str)] = &[
    ("m0", include_str!("../interpreters/m0.pl")),
    ("m1", include_str!("../interpreters/m1.pl")),
    ("m2", include_str!("../interpreters/m2.pl")),
    ("m3", include_str!("../interpreters/m3.pl")),
    ("m4", include_str!("../interpreters/m4.pl")),
    ("four_port", include_str!("../interpreters/four_port.pl")),
    ("proof_tree", include_str!("../interpreters/proof_tree.pl")),
    ("ex43", include_str!("../interpreters/ex43.pl")),
    ("meta_ab", include_str!("../interpreters/meta_ab.pl")),
    ("fail_body", include_str!("../interpreters/fail_body.pl")),
    ("fail_true", include_str!("../interpreters/fail_true.pl")),
    ("ap0", include_str!("../interpreters/ap0.pl")),
    ("loop_guard", include_str!("../interpreters/loop_guard.pl")),
    (
        "foo_variant",
        include_str!("../interpreters/foo_variant.pl"),
    ),
    ("idemo", include_str!("../interpreters/idemo.pl")),
];

pub fn catalog_names() -> Vec<&'static str> {
    SOURCES.iter().map(|(n, _)| *n).collect()
}

fn expected_for(name: &str) -> Option<Expected> {
    use ExpectedRestricted as R;
    use InterpreterClass as C;
    use RestrictedCondition as Cond;
    let (class, restricted) = match name {
        "m0" => (C::Vanilla, Some(R::Yes)),
        "m1" | "m3" => (C::Other, None),
        "m2" | "four_port" | "proof_tree" => (C::Restricted, Some(R::Yes)),
        "m4" => (C::Normal, None),
        "ex43" | "ap0" => (C::DoubleExtended, Some(R::No(Cond::MetaBinding))),
        "meta_ab" => (C::DoubleExtended, Some(R::No(Cond::LinearArguments))),
        "fail_body" | "fail_true" | "loop_guard" => {
            (C::DoubleExtended, Some(R::No(Cond::NonFailure)))
        }
        "foo_variant" => (C::DoubleExtended, Some(R::Unknown)),
        "idemo" => (C::GroundRep, None),
        _ => return None,
    };
    Some(Expected { class, restricted })
}

pub fn get_interpreter(name: &str) -> Result<InterpreterSpec> {
    let (_, src) = SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownInterpreter(name.to_string()))?;
    let mut spec = InterpreterSpec::from_source(name, src)?;
    spec.expected = expected_for(name);
    if name == "m2" {
        // max/3 is total on the depths it is called with.
        spec.non_failing.push(PredKey::new("max", 3));
    }
    Ok(spec)
}

impl InterpreterSpec {
    /// A user-supplied interpreter: the entry predicate is `solve/n`, or
    /// `idemo/3` when there is no `solve`.
    pub fn from_source(name: &str, src: &str) -> Result<InterpreterSpec> {
        let program = parse_program(src)?;
        Self::from_program(name, src, program)
    }

    pub fn from_program(name: &str, src: &str, program: Program) -> Result<InterpreterSpec> {
        let preds = program.predicates();
        let entry = preds
            .iter()
            .find(|k| &*k.name == "solve")
            .or_else(|| preds.iter().find(|k| &*k.name == "idemo" && k.arity == 3))
            .cloned()
            .ok_or_else(|| {
                Error::Precondition(format!("{name}: defines neither solve/n nor idemo/3"))
            })?;
        let encoding = if &*entry.name == "idemo" {
            EncodingKind::Ground
        } else {
            let mut arities: Vec<usize> = program
                .clauses()
                .iter()
                .flat_map(|c| c.body.iter())
                .filter_map(|l| l.atom.functor())
                .filter(|(f, n)| *f == CLAUSE && *n >= 2)
                .map(|(_, n)| n)
                .collect();
            arities.sort();
            arities.dedup();
            match arities.as_slice() {
                [] | [2] => EncodingKind::Ce,
                [n] => EncodingKind::CeExtended(n - 2),
                _ => {
                    return Err(Error::Precondition(format!(
                        "{name}: calls clause with several arities"
                    )))
                }
            }
        };
        Ok(InterpreterSpec {
            name: name.to_string(),
            source: src.to_string(),
            program,
            entry,
            encoding,
            expected: None,
            non_failing: vec![],
        })
    }

    /// Number of extra arguments of the entry predicate.
    pub fn extra_arity(&self) -> usize {
        match self.encoding {
            EncodingKind::Ground => 0,
            _ => self.entry.arity - 1,
        }
    }

    pub fn classify(&self) -> crate::classify::Classification {
        classify(&self.program, &self.non_failing)
    }

    /// The same interpreter with clause `i` removed.
    pub fn without_clause(&self, i: usize) -> InterpreterSpec {
        let mut s = self.clone();
        s.program = self.program.without_clause(i);
        s.source = s.program.to_string();
        s.expected = None;
        s
    }
}

/// An interpreter joined with an encoded object program.
#[derive(Clone, Debug)]
pub struct MetaProgram {
    pub program: Program,
    /// For the ground encoding: the program term and its symbol table.
    pub ground: Option<(Term, SymbolTable)>,
}

pub fn compose_meta_program(i: &InterpreterSpec, p: &Program) -> Result<MetaProgram> {
    let object_preds: HashSet<PredKey> = p.all_predicates().into_iter().collect();
    if object_preds.iter().any(|k| k.name == i.entry.name) {
        return Err(Error::Precondition(format!(
            "object program uses {}",
            i.entry.name
        )));
    }
    if let Some(k) = i
        .program
        .predicates()
        .iter()
        .find(|k| object_preds.contains(*k))
    {
        return Err(Error::Precondition(format!(
            "object program and interpreter both use {k}"
        )));
    }
    match i.encoding {
        EncodingKind::Ce => Ok(MetaProgram {
            program: i.program.union(&clause_encode(p)?),
            ground: None,
        }),
        EncodingKind::CeExtended(k) => Ok(MetaProgram {
            program: i
                .program
                .union(&clause_encode_extended(p, k, &Filler::FreshVars)?),
            ground: None,
        }),
        EncodingKind::Ground => Ok(MetaProgram {
            program: i.program.clone(),
            ground: Some(ground_program_term(p)),
        }),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExtraArgs {
    Fresh,
    Given(Vec<Term>),
}

#[derive(Clone, Debug)]
pub struct MetaQuery {
    pub goal: Term,
    /// For the ground encoding: the variable receiving the instantiated goal.
    pub answer_var: Option<Term>,
    /// The extra arguments used (empty for vanilla-style interpreters).
    pub extras: Vec<Term>,
    /// Whether the meta-query is restricted; `None` when not applicable.
    pub restricted: Option<bool>,
}

impl MetaQuery {
    pub fn query(&self) -> Query {
        vec![Literal::pos(self.goal.clone())]
    }
}

/// `solve(Q, extras...)` for an object goal `q`, or `idemo(P, Q, Y)` for the
/// ground interpreter.
pub fn make_meta_query(
    i: &InterpreterSpec,
    mp: &MetaProgram,
    q: &[Literal],
    extra: &ExtraArgs,
    supply: &mut VarSupply,
) -> Result<MetaQuery> {
    q.iter().for_each(|l| supply.reserve(&l.atom));
    if i.encoding == EncodingKind::Ground {
        let (pterm, table) = mp.ground.as_ref().ok_or_else(|| {
            Error::Precondition("ground interpreter without an encoded program".into())
        })?;
        let mut table = table.clone();
        let (qenc, _) = ground_encode_query(q, &mut table);
        if table.predicates.len() != mp.ground.as_ref().unwrap().1.predicates.len()
            || table.functors.len() != mp.ground.as_ref().unwrap().1.functors.len()
            || table.constants.len() != mp.ground.as_ref().unwrap().1.constants.len()
        {
            return Err(Error::Precondition(
                "query uses symbols not occurring in the program".into(),
            ));
        }
        let y = supply.fresh_term("Y");
        return Ok(MetaQuery {
            goal: Term::app(&i.entry.name, vec![pterm.clone(), qenc, y.clone()]),
            answer_var: Some(y),
            extras: vec![],
            restricted: None,
        });
    }
    let n = i.extra_arity();
    let extras = match extra {
        ExtraArgs::Fresh => (0..n)
            .map(|j| supply.fresh_term(&format!("E{j}")))
            .collect::<Vec<_>>(),
        ExtraArgs::Given(ts) => {
            if ts.len() != n {
                return Err(Error::Precondition(format!(
                    "{} needs {n} extra arguments, got {}",
                    i.name,
                    ts.len()
                )));
            }
            ts.iter().for_each(|t| supply.reserve(t));
            ts.clone()
        }
    };
    let body: Vec<Term> = q.iter().map(Literal::to_term).collect();
    let mut args = vec![list_to_conjunction(&body)];
    args.extend(extras.iter().cloned());
    let qvars: HashSet<VarId> = q.iter().flat_map(|l| l.atom.vars()).map(|v| v.id).collect();
    let restricted = i.classify().shape.map(|shape| {
        n == 0 || is_linear_fresh_sequence(&extras, &qvars) || shape.head_args_linear(&i.program)
    });
    Ok(MetaQuery {
        goal: Term::app(&i.entry.name, args),
        answer_var: None,
        extras,
        restricted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_loads_and_classifies_as_expected() {
        for name in catalog_names() {
            let spec = get_interpreter(name).unwrap();
            let c = spec.classify();
            let exp = spec
                .expected
                .clone()
                .expect("catalog entries carry expectations");
            assert_eq!(c.class, exp.class, "{name}: {:?}", c.findings);
            if let Some(r) = exp.restricted {
                let got = c.restricted.as_ref().expect("restricted verdict");
                assert!(r.matches(got), "{name}: expected {r:?}, got {got:?}");
            }
        }
    }

    #[test]
    fn printed_entries_reparse() {
        for name in catalog_names() {
            let spec = get_interpreter(name).unwrap();
            let again = parse_program(&spec.program.to_string()).unwrap();
            assert!(again.variant_eq(&spec.program), "{name}");
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            get_interpreter("m9"),
            Err(Error::UnknownInterpreter(_))
        ));
    }

    #[test]
    fn meta_queries() {
        let pt = get_interpreter("proof_tree").unwrap();
        let p = parse_program("p(X) :- q(X). q(b).").unwrap();
        let mp = compose_meta_program(&pt, &p).unwrap();
        let q = crate::syntax::parse_query_for(&p, "p(X)").unwrap();
        let mut s = VarSupply::new();
        let fresh = make_meta_query(&pt, &mp, &q, &ExtraArgs::Fresh, &mut s).unwrap();
        assert_eq!(fresh.restricted, Some(true));
        let ground = make_meta_query(
            &pt,
            &mp,
            &q,
            &ExtraArgs::Given(vec![Term::constant("true")]),
            &mut s,
        )
        .unwrap();
        assert_eq!(ground.restricted, Some(false));
        assert_eq!(ground.goal.to_string(), "solve(p(X), true)");
    }

    #[test]
    fn composition_preconditions() {
        let m0 = get_interpreter("m0").unwrap();
        let bad = parse_program("solve(x).").unwrap();
        assert!(compose_meta_program(&m0, &bad).is_err());
        let m2 = get_interpreter("m2").unwrap();
        let clash = parse_program("max(a, b, c).").unwrap();
        assert!(compose_meta_program(&m2, &clash).is_err());
    }
}
