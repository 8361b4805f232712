//! Program encodings: the `clause/2` facts read by vanilla-style
//! interpreters, the extended `clause/(2+k)` variant, and the ground
//! representation used by ground meta-interpreters.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::program::{list_to_conjunction, Clause, Literal, PredKey, Program, CONJ};
use crate::term::{Term, VarSupply};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed ground representation: {0}")]
    Malformed(String),
}

pub const CLAUSE: &str = "clause";

/// Rejects programs that use `clause` as a predicate or `,`/2 anywhere.
pub fn check_encodable(p: &Program) -> Result<(), EncodeError> {
    for k in p.all_predicates() {
        if &*k.name == CLAUSE {
            return Err(EncodeError::Precondition(format!(
                "program uses the predicate {k}"
            )));
        }
        if &*k.name == CONJ && k.arity == 2 {
            return Err(EncodeError::Precondition("program defines ,/2".into()));
        }
    }
    if p.functors().iter().any(|(f, n)| &**f == CONJ && *n == 2) {
        return Err(EncodeError::Precondition(
            "program uses ,/2 as a function symbol".into(),
        ));
    }
    Ok(())
}

fn body_term(body: &[Literal]) -> Term {
    let ts: Vec<Term> = body.iter().map(Literal::to_term).collect();
    list_to_conjunction(&ts)
}

/// `clause(H, B)` for every clause `H :- B`, with `true` for facts.
pub fn clause_encode(p: &Program) -> Result<Program, EncodeError> {
    check_encodable(p)?;
    Ok(Program::new(
        p.clauses()
            .iter()
            .map(|c| Clause::fact(Term::app(CLAUSE, vec![c.head.clone(), body_term(&c.body)])))
            .collect(),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Filler {
    /// Distinct fresh variables in every extra position.
    FreshVars,
    /// Explicit extra arguments, one sequence of length k per clause.
    PerClause(Vec<Vec<Term>>),
}

/// `clause(H, B, s1, ..., sk)` facts.
pub fn clause_encode_extended(
    p: &Program,
    k: usize,
    filler: &Filler,
) -> Result<Program, EncodeError> {
    check_encodable(p)?;
    if let Filler::PerClause(rows) = filler {
        if rows.len() != p.len() {
            return Err(EncodeError::Precondition(format!(
                "{} filler rows for {} clauses",
                rows.len(),
                p.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(EncodeError::Precondition(format!(
                "filler row of length {} for k = {k}",
                r.len()
            )));
        }
    }
    let mut supply = VarSupply::new();
    p.clauses()
        .iter()
        .flat_map(|c| c.terms())
        .for_each(|t| supply.reserve(t));
    let facts = p
        .clauses()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut args = vec![c.head.clone(), body_term(&c.body)];
            match filler {
                Filler::FreshVars => {
                    args.extend((0..k).map(|j| supply.fresh_term(&format!("S{j}"))))
                }
                Filler::PerClause(rows) => args.extend(rows[i].iter().cloned()),
            }
            Clause::fact(Term::app(CLAUSE, args))
        })
        .collect();
    Ok(Program::new(facts))
}

// ------------------------------------------------- ground representation

/// First-occurrence numbering of the symbols of a program.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SymbolTable {
    pub predicates: Vec<PredKey>,
    pub functors: Vec<(Arc<str>, usize)>,
    pub constants: Vec<Arc<str>>,
    #[serde(skip)]
    pred_ix: HashMap<PredKey, usize>,
    #[serde(skip)]
    fun_ix: HashMap<(Arc<str>, usize), usize>,
    #[serde(skip)]
    const_ix: HashMap<Arc<str>, usize>,
}

fn index_term(i: usize) -> Term {
    Term::constant(&i.to_string())
}

impl SymbolTable {
    fn pred(&mut self, k: PredKey) -> usize {
        if let Some(i) = self.pred_ix.get(&k) {
            return *i;
        }
        let i = self.predicates.len();
        self.pred_ix.insert(k.clone(), i);
        self.predicates.push(k);
        i
    }

    fn functor(&mut self, f: &Arc<str>, n: usize) -> usize {
        if let Some(i) = self.fun_ix.get(&(f.clone(), n)) {
            return *i;
        }
        let i = self.functors.len();
        self.fun_ix.insert((f.clone(), n), i);
        self.functors.push((f.clone(), n));
        i
    }

    fn constant(&mut self, f: &Arc<str>) -> usize {
        if let Some(i) = self.const_ix.get(f) {
            return *i;
        }
        let i = self.constants.len();
        self.const_ix.insert(f.clone(), i);
        self.constants.push(f.clone());
        i
    }
}

struct GroundEncoder<'t> {
    table: &'t mut SymbolTable,
    vars: HashMap<u64, usize>,
}

impl GroundEncoder<'_> {
    fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::Var(v) => {
                let n = self.vars.len();
                let i = *self.vars.entry(v.id).or_insert(n);
                Term::app("v", vec![index_term(i)])
            }
            Term::App(f, args) if args.is_empty() => {
                Term::app("c", vec![index_term(self.table.constant(f))])
            }
            Term::App(f, args) => {
                let i = self.table.functor(f, args.len());
                let enc = args.iter().map(|a| self.term(a)).collect();
                Term::app(
                    "term",
                    vec![Term::app("f", vec![index_term(i)]), Term::list(enc, None)],
                )
            }
        }
    }

    fn atom(&mut self, a: &Term) -> Term {
        let i = self.table.pred(PredKey::of(a).expect("atom"));
        let enc = a.args().iter().map(|x| self.term(x)).collect();
        Term::app(
            "atom",
            vec![Term::app("p", vec![index_term(i)]), Term::list(enc, None)],
        )
    }

    fn literal(&mut self, l: &Literal) -> Term {
        let a = self.atom(&l.atom);
        if l.positive {
            a
        } else {
            Term::app("not", vec![a])
        }
    }

    fn formula(&mut self, lits: &[Literal]) -> Term {
        match lits {
            [] => Term::constant("true"),
            [l] => self.literal(l),
            [l, rest @ ..] => {
                let a = self.literal(l);
                Term::app("and", vec![a, self.formula(rest)])
            }
        }
    }
}

/// `if(Head, Body)` terms, one per clause, and the symbol numbering used.
/// Variable numbers restart in every clause.
pub fn ground_encode(p: &Program) -> (Vec<Term>, SymbolTable) {
    let mut table = SymbolTable::default();
    let clauses = p
        .clauses()
        .iter()
        .map(|c| ground_encode_clause(c, &mut table))
        .collect();
    (clauses, table)
}

pub fn ground_encode_clause(c: &Clause, table: &mut SymbolTable) -> Term {
    let mut e = GroundEncoder {
        table,
        vars: HashMap::new(),
    };
    let h = e.atom(&c.head);
    let b = e.formula(&c.body);
    Term::app("if", vec![h, b])
}

/// Encodes a goal, extending the table with any new symbols. Returns the
/// ground formula and the query variables in the order of their numbers.
pub fn ground_encode_query(q: &[Literal], table: &mut SymbolTable) -> (Term, Vec<Term>) {
    let mut e = GroundEncoder {
        table,
        vars: HashMap::new(),
    };
    let f = e.formula(q);
    let mut vars: Vec<Term> = q
        .iter()
        .flat_map(|l| l.atom.vars())
        .map(Term::Var)
        .collect();
    let mut seen = std::collections::HashSet::new();
    vars.retain(|v| seen.insert(v.clone()));
    (f, vars)
}

/// The whole program as a list term, the form ground interpreters expect.
pub fn ground_program_term(p: &Program) -> (Term, SymbolTable) {
    let (cs, t) = ground_encode(p);
    (Term::list(cs, None), t)
}

fn index_of(t: &Term, tag: &str) -> Result<usize, EncodeError> {
    match t {
        Term::App(f, args) if &**f == tag && args.len() == 1 => args[0]
            .functor()
            .filter(|(_, n)| *n == 0)
            .and_then(|(s, _)| s.parse().ok())
            .ok_or_else(|| EncodeError::Malformed(format!("bad index in {t}"))),
        _ => Err(EncodeError::Malformed(format!(
            "expected {tag}(N), found {t}"
        ))),
    }
}

/// Reads ground (or, with `lenient`, partially instantiated) representations
/// back into object syntax.
pub struct GroundDecoder<'t> {
    pub table: &'t SymbolTable,
    pub supply: &'t mut VarSupply,
    /// Accept real variables in term positions and pass them through.
    pub lenient: bool,
    vars: HashMap<usize, Term>,
}

impl<'t> GroundDecoder<'t> {
    pub fn new(table: &'t SymbolTable, supply: &'t mut VarSupply, lenient: bool) -> Self {
        GroundDecoder {
            table,
            supply,
            lenient,
            vars: HashMap::new(),
        }
    }

    pub fn term(&mut self, t: &Term) -> Result<Term, EncodeError> {
        match t {
            Term::Var(_) if self.lenient => Ok(t.clone()),
            Term::App(f, args) if &**f == "v" && args.len() == 1 => {
                let i = index_of(t, "v")?;
                let supply = &mut *self.supply;
                Ok(self
                    .vars
                    .entry(i)
                    .or_insert_with(|| Term::Var(supply.fresh_named(&format!("V{i}"))))
                    .clone())
            }
            Term::App(f, args) if &**f == "c" && args.len() == 1 => {
                let i = index_of(t, "c")?;
                let name =
                    self.table.constants.get(i).ok_or_else(|| {
                        EncodeError::Malformed(format!("unknown constant c({i})"))
                    })?;
                Ok(Term::constant(name))
            }
            Term::App(f, args) if &**f == "term" && args.len() == 2 => {
                let i = index_of(&args[0], "f")?;
                let (name, n) = self
                    .table
                    .functors
                    .get(i)
                    .ok_or_else(|| EncodeError::Malformed(format!("unknown functor f({i})")))?
                    .clone();
                let xs = self.list(&args[1])?;
                if xs.len() != n {
                    return Err(EncodeError::Malformed(format!(
                        "{name}/{n} applied to {} arguments",
                        xs.len()
                    )));
                }
                Ok(Term::app(&name, xs))
            }
            _ => Err(EncodeError::Malformed(format!(
                "not a term representation: {t}"
            ))),
        }
    }

    fn list(&mut self, t: &Term) -> Result<Vec<Term>, EncodeError> {
        let items = t.as_list().ok_or_else(|| {
            EncodeError::Malformed(format!("expected an argument list, found {t}"))
        })?;
        items.iter().map(|x| self.term(x)).collect()
    }

    pub fn atom(&mut self, t: &Term) -> Result<Term, EncodeError> {
        match t {
            Term::App(f, args) if &**f == "atom" && args.len() == 2 => {
                let i = index_of(&args[0], "p")?;
                let k = self
                    .table
                    .predicates
                    .get(i)
                    .ok_or_else(|| EncodeError::Malformed(format!("unknown predicate p({i})")))?
                    .clone();
                let xs = self.list(&args[1])?;
                if xs.len() != k.arity {
                    return Err(EncodeError::Malformed(format!(
                        "{k} applied to {} arguments",
                        xs.len()
                    )));
                }
                Ok(Term::app(&k.name, xs))
            }
            _ => Err(EncodeError::Malformed(format!(
                "not an atom representation: {t}"
            ))),
        }
    }

    pub fn formula(&mut self, t: &Term) -> Result<Vec<Literal>, EncodeError> {
        match t {
            Term::App(f, args) if &**f == "true" && args.is_empty() => Ok(vec![]),
            Term::App(f, args) if &**f == "and" && args.len() == 2 => {
                let mut l = self.formula(&args[0])?;
                l.extend(self.formula(&args[1])?);
                Ok(l)
            }
            Term::App(f, args) if &**f == "not" && args.len() == 1 => {
                Ok(vec![Literal::neg(self.atom(&args[0])?)])
            }
            _ => Ok(vec![Literal::pos(self.atom(t)?)]),
        }
    }

    pub fn clause(&mut self, t: &Term) -> Result<Clause, EncodeError> {
        self.vars.clear();
        match t {
            Term::App(f, args) if &**f == "if" && args.len() == 2 => Ok(Clause {
                head: self.atom(&args[0])?,
                body: self.formula(&args[1])?,
            }),
            _ => Err(EncodeError::Malformed(format!(
                "not a clause representation: {t}"
            ))),
        }
    }
}

pub fn ground_decode(clauses: &[Term], table: &SymbolTable) -> Result<Program, EncodeError> {
    let mut supply = VarSupply::new();
    let mut d = GroundDecoder::new(table, &mut supply, false);
    Ok(Program::new(
        clauses
            .iter()
            .map(|c| d.clause(c))
            .collect::<Result<_, _>>()?,
    ))
}
