use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use metaterm::catalog::{get_interpreter, ExtraArgs, InterpreterSpec};
use metaterm::encode::{clause_encode, clause_encode_extended, ground_encode, Filler};
use metaterm::engine::{
    build_ldnf_forest, computed_answers, decrease_obligations, dump_tree, termination_status,
    Budget,
};
use metaterm::harness::{meta_answers, report_for, run_case, PreservationVerdict};
use metaterm::ordering::{check_obligations, search_ordering, OrderingSpec, Strategy, Verdict};
use metaterm::program::{Program, Query};
use metaterm::semantics::{same_atoms, tpi_step, PiInterpretation};
use metaterm::syntax::{format_query, parse_program, parse_query_for};
use metaterm::term::VarSupply;
use metaterm::Error;

const USAGE: u8 = 1;
const PARSE: u8 = 2;
const PRECONDITION: u8 = 3;
const COUNTEREXAMPLE: u8 = 4;

/// Answers printed per query; the JSON report has all of them.
const SHOWN: usize = 20;

#[derive(Parser)]
#[command(
    name = "metaterm",
    version,
    about = "Termination analysis of logic programs and meta-interpreters"
)]
struct Cli {
    /// Write a machine-readable report to PATH.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Maximum number of derivation-tree nodes per run.
    #[arg(long, global = true, default_value_t = 10_000)]
    budget: usize,
    /// Maximum derivation depth.
    #[arg(long, global = true, default_value_t = 200)]
    depth: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Queries {
    /// Query; repeat the flag or separate queries with ';'.
    #[arg(short = 'q', long = "query", required = true)]
    query: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program.
    Check { file: PathBuf },
    /// Run queries and report answers and termination status.
    Run {
        file: PathBuf,
        #[command(flatten)]
        q: Queries,
    },
    /// Print the derivation tree of a query.
    Tree {
        file: PathBuf,
        #[command(flatten)]
        q: Queries,
    },
    /// Encode a program as clause/2 facts (ce), clause/(2+K) facts (ced:K) or ground terms.
    Encode {
        file: PathBuf,
        #[arg(long, default_value = "ce")]
        kind: String,
    },
    /// Run a query through a meta-interpreter.
    Meta {
        file: PathBuf,
        #[arg(long)]
        interp: String,
        #[command(flatten)]
        q: Queries,
        /// `fresh` or a comma-separated list of terms for the extra solve arguments.
        #[arg(long, default_value = "fresh")]
        extra: String,
    },
    /// Classify an interpreter, given as a file or a catalog name.
    Classify {
        file: Option<PathBuf>,
        #[arg(long)]
        interp: Option<String>,
    },
    /// Harvest decrease obligations from seed queries and check or search an ordering.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        q: Queries,
        /// `linear:BOUND` or `rpo`.
        #[arg(long, default_value = "linear:10")]
        strategy: String,
        /// JSON ordering to check instead of searching.
        #[arg(long, value_name = "FILE")]
        given_mapping: Option<PathBuf>,
    },
    /// Compare object-level and meta-level runs of a query.
    Compare {
        file: PathBuf,
        #[arg(long)]
        interp: String,
        #[command(flatten)]
        q: Queries,
        #[arg(long, default_value = "fresh")]
        extra: String,
    },
    /// Print powers of the immediate consequence operator.
    Semantics {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        powers: usize,
    },
}

enum Failure {
    Usage(String),
    Parse(String),
    Precondition(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) => Failure::Parse(e.to_string()),
            Error::UnknownInterpreter(_) => Failure::Usage(e.to_string()),
            _ => Failure::Precondition(e.to_string()),
        }
    }
}

impl From<metaterm::engine::EngineError> for Failure {
    fn from(e: metaterm::engine::EngineError) -> Self {
        Error::from(e).into()
    }
}

struct Outcome {
    text: String,
    inputs: Value,
    result: Value,
    truncated: bool,
    code: u8,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let budget = Budget {
        max_nodes: cli.budget,
        max_depth: cli.depth,
    };
    let name = command_name(&cli.command);
    match dispatch(cli.command, budget) {
        Ok(out) => {
            print!("{}", out.text);
            if let Some(path) = &cli.json {
                let report = json!({
                    "command": name,
                    "inputs": out.inputs,
                    "budgets": budget,
                    "result": out.result,
                    "truncated": out.truncated,
                });
                let body = serde_json::to_string_pretty(&report).expect("report serializes");
                if let Err(e) = std::fs::write(path, body + "\n") {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(USAGE);
                }
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (USAGE, m),
                Failure::Parse(m) => (PARSE, m),
                Failure::Precondition(m) => (PRECONDITION, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check { .. } => "check",
        Command::Run { .. } => "run",
        Command::Tree { .. } => "tree",
        Command::Encode { .. } => "encode",
        Command::Meta { .. } => "meta",
        Command::Classify { .. } => "classify",
        Command::Analyze { .. } => "analyze",
        Command::Compare { .. } => "compare",
        Command::Semantics { .. } => "semantics",
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Program, Failure> {
    let src = read(path)?;
    parse_program(&src).map_err(|e| Failure::Parse(format!("{}:{e}", path.display())))
}

fn queries(p: &Program, q: &Queries) -> Result<Vec<(String, Query)>, Failure> {
    q.query
        .iter()
        .flat_map(|s| s.split(';'))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            parse_query_for(p, s)
                .map(|q| (s.to_string(), q))
                .map_err(|e| Failure::Parse(format!("query {s:?}: {e}")))
        })
        .collect()
}

fn single(p: &Program, q: &Queries) -> Result<(String, Query), Failure> {
    let mut qs = queries(p, q)?;
    if qs.len() != 1 {
        return Err(Failure::Usage("exactly one query expected".into()));
    }
    Ok(qs.remove(0))
}

/// A catalog name, or a path to an interpreter source file.
fn interpreter(name: &str) -> Result<InterpreterSpec, Failure> {
    let path = Path::new(name);
    if !path.is_file() {
        return Ok(get_interpreter(name)?);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
    Ok(InterpreterSpec::from_source(stem, &read(path)?)?)
}

/// Extra arguments share variable names with the query.
fn extra_args(p: &Program, query: &str, extra: &str) -> Result<(Query, ExtraArgs), Failure> {
    if extra.trim() == "fresh" {
        let q = parse_query_for(p, query)
            .map_err(|e| Failure::Parse(format!("query {query:?}: {e}")))?;
        return Ok((q, ExtraArgs::Fresh));
    }
    let joined = format!("{query}, '$extra'({extra})");
    let mut q = parse_query_for(p, &joined)
        .map_err(|e| Failure::Parse(format!("extra arguments {extra:?}: {e}")))?;
    let last = q.pop().expect("marker literal");
    Ok((q, ExtraArgs::Given(last.atom.args().to_vec())))
}

fn lines<T: std::fmt::Display>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| format!("{x}\n")).collect()
}

fn dispatch(cmd: Command, budget: Budget) -> Result<Outcome, Failure> {
    match cmd {
        Command::Check { file } => {
            let p = load(&file)?;
            let preds: Vec<String> = p.predicates().iter().map(|k| k.to_string()).collect();
            let text = format!(
                "{} clauses, {} predicates ({}), {} program\n",
                p.len(),
                preds.len(),
                preds.join(", "),
                if p.is_definite() {
                    "definite"
                } else {
                    "normal"
                }
            );
            Ok(Outcome {
                text,
                inputs: json!({ "file": file }),
                result: json!({ "clauses": p.len(), "predicates": preds, "definite": p.is_definite() }),
                truncated: false,
                code: 0,
            })
        }
        Command::Run { file, q } => {
            let p = load(&file)?;
            let mut text = String::new();
            let mut results = Vec::new();
            let mut truncated = false;
            for (src, q) in queries(&p, &q)? {
                let f = build_ldnf_forest(&p, &q, budget)?;
                let status = termination_status(&f);
                let answers: Vec<String> = computed_answers(&f)
                    .distinct()
                    .into_iter()
                    .map(|atoms| {
                        let lits: Query = q
                            .iter()
                            .zip(atoms)
                            .map(|(l, a)| l.map_atom(|_| a))
                            .collect();
                        format_query(&lits)
                    })
                    .collect();
                truncated |= f.truncated();
                text += &format!("?- {src}\n");
                text += &lines(answers.iter().take(SHOWN).map(|a| format!("  {a}")));
                if answers.len() > SHOWN {
                    text += &format!("  ... {} more\n", answers.len() - SHOWN);
                }
                text += &format!(
                    "  {} answer(s){}, status {}{}\n",
                    answers.len(),
                    if f.complete() { "" } else { " (incomplete)" },
                    status.label(),
                    if f.floundered() { ", floundered" } else { "" }
                );
                results.push(json!({
                    "query": src,
                    "answers": answers,
                    "complete": f.complete(),
                    "status": status,
                    "floundered": f.floundered(),
                    "nodes": f.node_count(),
                }));
            }
            Ok(Outcome {
                text,
                inputs: json!({ "file": file, "queries": q.query }),
                result: Value::Array(results),
                truncated,
                code: 0,
            })
        }
        Command::Tree { file, q } => {
            let p = load(&file)?;
            let (src, query) = single(&p, &q)?;
            let f = build_ldnf_forest(&p, &query, budget)?;
            let dumps: Vec<String> = f.trees.iter().map(dump_tree).collect();
            let mut text = dumps[0].clone();
            for (i, d) in dumps.iter().enumerate().skip(1) {
                text += &format!("-- subsidiary tree {i}\n{d}");
            }
            Ok(Outcome {
                text,
                inputs: json!({ "file": file, "query": src }),
                result: json!({ "trees": dumps, "nodes": f.node_count(), "status": termination_status(&f) }),
                truncated: f.truncated(),
                code: 0,
            })
        }
        Command::Encode { file, kind } => {
            let p = load(&file)?;
            let (text, result) = match kind.as_str() {
                "ce" => {
                    let e = clause_encode(&p).map_err(Error::from)?;
                    (
                        e.to_string(),
                        json!({ "clauses": e.clauses().iter().map(|c| c.to_string()).collect::<Vec<_>>() }),
                    )
                }
                "ground" => {
                    let (cs, table) = ground_encode(&p);
                    (
                        lines(cs.iter().map(|c| format!("{c}."))),
                        json!({ "clauses": cs, "symbols": table }),
                    )
                }
                k => {
                    let n: usize = k
                        .strip_prefix("ced:")
                        .and_then(|n| n.parse().ok())
                        .ok_or_else(|| {
                            Failure::Usage(format!(
                                "unknown encoding {k:?}; use ce, ced:K or ground"
                            ))
                        })?;
                    let e =
                        clause_encode_extended(&p, n, &Filler::FreshVars).map_err(Error::from)?;
                    (
                        e.to_string(),
                        json!({ "clauses": e.clauses().iter().map(|c| c.to_string()).collect::<Vec<_>>() }),
                    )
                }
            };
            Ok(Outcome {
                text,
                inputs: json!({ "file": file, "kind": kind }),
                result,
                truncated: false,
                code: 0,
            })
        }
        Command::Meta {
            file,
            interp,
            q,
            extra,
        } => {
            let p = load(&file)?;
            let i = interpreter(&interp)?;
            let (src, _) = single(&p, &q)?;
            let (query, extras) = extra_args(&p, &src, &extra)?;
            let c = run_case(&i, &p, &query, &extras, budget)?;
            let status = termination_status(&c.meta);
            let answers: Vec<String> = meta_answers(&c)?.iter().map(|t| t.to_string()).collect();
            let goal = c.meta_query.goal.to_string();
            let mut text = format!("?- {goal}\n");
            text += &lines(answers.iter().map(|a| format!("  {a}")));
            text += &format!(
                "  {} answer(s){}, status {}\n",
                answers.len(),
                if c.meta.complete() {
                    ""
                } else {
                    " (incomplete)"
                },
                status.label()
            );
            if let Some(r) = c.meta_query.restricted {
                text += &format!("  restricted query: {}\n", if r { "yes" } else { "no" });
            }
            Ok(Outcome {
                text,
                inputs: json!({ "file": file, "interp": interp, "query": src, "extra": extra }),
                result: json!({
                    "meta_query": goal,
                    "answers": answers,
                    "complete": c.meta.complete(),
                    "status": status,
                    "floundered": c.meta.floundered(),
                    "restricted_query": c.meta_query.restricted,
                }),
                truncated: c.meta.truncated(),
                code: 0,
            })
        }
        Command::Classify { file, interp } => {
            let i = match (file, &interp) {
                (Some(f), None) => {
                    let src = read(&f)?;
                    let stem = f
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or("interpreter")
                        .to_string();
                    InterpreterSpec::from_source(&stem, &src)?
                }
                (None, Some(n)) => interpreter(n)?,
                _ => return Err(Failure::Usage("give either FILE or --interp NAME".into())),
            };
            let c = i.classify();
            let mut text = format!("{}: {}\n", i.name, c.class.label());
            if let Some(r) = &c.restricted {
                text += &format!("restricted: {}\n", r.label());
            }
            text += &lines(c.findings.iter().map(|f| format!("  {f}")));
            Ok(Outcome {
                text,
                inputs: json!({ "interp": i.name }),
                result: serde_json::to_value(&c).expect("serializes"),
                truncated: false,
                code: 0,
            })
        }
        Command::Analyze {
            file,
            q,
            strategy,
            given_mapping,
        } => {
            let p = load(&file)?;
            let seeds: Vec<Query> = queries(&p, &q)?.into_iter().map(|(_, q)| q).collect();
            let obs = decrease_obligations(&p, &seeds, budget)?;
            let mut text = format!(
                "{} calls, {} obligations{}\n",
                obs.calls.len(),
                obs.obligations.len(),
                if obs.complete {
                    ""
                } else {
                    " (incomplete sample)"
                }
            );
            let (result, code) = if let Some(path) = &given_mapping {
                let spec: OrderingSpec = serde_json::from_str(&read(path)?)
                    .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
                let rep = check_obligations(&spec, &obs);
                text += &format!(
                    "{}/{} satisfied: {}\n",
                    rep.satisfied,
                    rep.total,
                    rep.verdict.label()
                );
                text += &lines(
                    rep.violations
                        .iter()
                        .map(|v| format!("  {} -> {}: {}", v.caller, v.callee, v.explanation)),
                );
                let code = if rep.verdict == Verdict::Counterexample {
                    COUNTEREXAMPLE
                } else {
                    0
                };
                (json!({ "check": rep }), code)
            } else {
                let s = parse_strategy(&strategy)?;
                let r = search_ordering(&obs, &s);
                text += &format!("{}\n", r.label());
                if let Some(o) = r.found() {
                    text += &format!("{}\n", serde_json::to_string(o).expect("serializes"));
                }
                (json!({ "strategy": s, "search": r }), 0)
            };
            Ok(Outcome {
                text,
                inputs: json!({ "file": file, "seeds": q.query, "strategy": strategy, "given_mapping": given_mapping }),
                result: json!({ "obligations": obs.obligations.len(), "complete": obs.complete, "outcome": result }),
                truncated: !obs.complete,
                code,
            })
        }
        Command::Compare {
            file,
            interp,
            q,
            extra,
        } => {
            let p = load(&file)?;
            let i = interpreter(&interp)?;
            let (src, _) = single(&p, &q)?;
            let (query, extras) = extra_args(&p, &src, &extra)?;
            let c = run_case(&i, &p, &query, &extras, budget)?;
            let r = report_for(&c)?;
            let mut text = format!("object  ?- {}: {}\n", r.query, r.object_status.label());
            text += &format!("meta    ?- {}: {}\n", r.meta_query, r.meta_status.label());
            text += &format!(
                "answers: {} object, {} meta; sound {}, complete {}\n",
                r.answers.object_answers.len(),
                r.answers.meta_answers.len(),
                r.answers.sound.label(),
                r.answers.complete.label()
            );
            if let Some(cc) = &r.calls {
                text += &format!("calls ({:?}): {}\n", cc.mode, cc.holds.label());
            }
            if let Some(rq) = r.restricted_query {
                text += &format!("restricted query: {}\n", if rq { "yes" } else { "no" });
            }
            text += &format!(
                "non-violation {}, non-improvement {}: {}\n",
                r.non_violation.label(),
                r.non_improvement.label(),
                r.verdict.label()
            );
            let code = match r.verdict {
                PreservationVerdict::Counterexample(_) => COUNTEREXAMPLE,
                _ => 0,
            };
            Ok(Outcome {
                text,
                inputs: json!({ "file": file, "interp": interp, "query": src, "extra": extra }),
                truncated: c.object.truncated() || c.meta.truncated(),
                result: to_value(&r),
                code,
            })
        }
        Command::Semantics { file, powers } => {
            let p = load(&file)?;
            let mut supply = VarSupply::new();
            let mut cur = PiInterpretation::default();
            let mut text = String::new();
            let mut out = Vec::new();
            let mut stable = None;
            for n in 1..=powers {
                let next = tpi_step(&p, &cur, &mut supply)?;
                if stable.is_none() && same_atoms(&next, &cur) {
                    stable = Some(n - 1);
                }
                cur = next;
                let atoms: Vec<String> = cur.iter().map(|a| a.to_string()).collect();
                text += &format!("power {n}: {} atom(s)\n", atoms.len());
                text += &lines(atoms.iter().map(|a| format!("  {a}")));
                out.push(json!({ "power": n, "atoms": atoms }));
            }
            if let Some(s) = stable {
                text += &format!("stable from power {s}\n");
            }
            Ok(Outcome {
                text,
                inputs: json!({ "file": file, "powers": powers }),
                result: json!({ "powers": out, "stable_at": stable }),
                truncated: false,
                code: 0,
            })
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn parse_strategy(s: &str) -> Result<Strategy, Failure> {
    if s == "rpo" {
        return Ok(Strategy::Rpo);
    }
    s.strip_prefix("linear:")
        .and_then(|b| b.parse().ok())
        .map(|bound| Strategy::Linear { bound })
        .ok_or_else(|| Failure::Usage(format!("unknown strategy {s:?}; use linear:BOUND or rpo")))
}
