//! Small object programs used by the tests and the CLI.

use crate::error::{Error, Result};
use crate::program::Program;
use crate::syntax::parse_program;

const PROGRAMS: &[(&str, &str)] = &[
    ("ex12", include_str!("../corpus/ex12.pl")),
    ("ex13", include_str!("../corpus/ex13.pl")),
    ("ex31", include_str!("../corpus/ex31.pl")),
    ("ex32", include_str!("../corpus/ex32.pl")),
    ("ex43_object", include_str!("../corpus/ex43_object.pl")),
    ("ap0_object", include_str!("../corpus/ap0_object.pl")),
    (
        "fail_true_object",
        include_str!("../corpus/fail_true_object.pl"),
    ),
    ("append", include_str!("../corpus/append.pl")),
    ("nat", include_str!("../corpus/nat.pl")),
    ("permute", include_str!("../corpus/permute.pl")),
    ("normal", include_str!("../corpus/normal.pl")),
];

/// Queries exercised per program: terminating ones first, then looping ones.
const QUERIES: &[(&str, &[&str])] = &[
    ("ex12", &["l(0)", "l(f(0))", "l(f(f(0)))", "p(X)"]),
    ("ex13", &["p([a, b, c])", "p([a, b, c, d])"]),
    ("ex31", &["p(X)", "q(X)", "s"]),
    ("ex32", &["q", "p"]),
    ("ex43_object", &["p(X)"]),
    ("ap0_object", &["q"]),
    ("fail_true_object", &["r"]),
    (
        "append",
        &[
            "app([a, b], [c], X)",
            "app(X, Y, [a, b, c])",
            "app(X, [b], Y)",
        ],
    ),
    ("nat", &["nat(s(s(0)))", "nat(X)"]),
    ("permute", &["permute([a, b, c], X)"]),
    ("normal", &["r(X)", "s", "even(s(s(0)))", "w"]),
];

pub fn corpus_names() -> Vec<&'static str> {
    PROGRAMS.iter().map(|(n, _)| *n).collect()
}

pub fn corpus_source(name: &str) -> Option<&'static str> {
    PROGRAMS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn corpus_queries(name: &str) -> &'static [&'static str] {
    QUERIES
        .iter()
        .find(|(n, _)| *n == name)
        .map_or(&[], |(_, q)| *q)
}

pub fn corpus_program(name: &str) -> Result<Program> {
    let src = corpus_source(name)
        .ok_or_else(|| Error::Precondition(format!("no corpus program {name:?}")))?;
    Ok(parse_program(src)?)
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_parse() {
        for n in super::corpus_names() {
            let p = super::corpus_program(n).unwrap();
            for q in super::corpus_queries(n) {
                crate::syntax::parse_query_for(&p, q).unwrap();
            }
            assert!(!super::corpus_queries(n).is_empty(), "{n}");
        }
    }
}
