//! Reader and printer for the pure Prolog subset used throughout.
//!
//! Supported: atoms (plain, symbolic, quoted), numbers as constants,
//! variables, lists, the operators `:-`, `,`, `=` and `\+`, and `not/1` as
//! body negation. Cut, disjunction and arithmetic are rejected with a
//! located error.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::program::{Clause, Literal, Program, Query, CONJ, NEG};
use crate::term::{Term, VarSupply, CONS, NIL};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Atom(String),
    Quoted(String),
    Var(String),
    Num(String),
    Open,
    OpenCt,
    Close,
    LBrack,
    RBrack,
    Bar,
    Comma,
    End,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

const ARITHMETIC: &[&str] = &[
    "is", "+", "-", "*", "/", "//", "<", ">", "=<", ">=", "=:=", "=\\=", "mod", "**", "^",
];

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, line: usize, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            message: msg.into(),
        }
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_layout(&mut self) -> Result<bool, ParseError> {
        let start = self.pos;
        loop {
            match self.peek(0) {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    while let Some(c) = self.bump() {
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                Some(b'/') if self.peek(1) == Some(b'*') => {
                    let (l, c) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            Some(b'*') if self.peek(0) == Some(b'/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                            None => return Err(self.err(l, c, "unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(self.pos > start),
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            let spaced = self.skip_layout()?;
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek(0) else {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = match c {
                b'(' => {
                    self.bump();
                    let glued = !spaced
                        && matches!(
                            out.last(),
                            Some(Token {
                                tok: Tok::Atom(_) | Tok::Quoted(_),
                                ..
                            })
                        );
                    if glued {
                        Tok::OpenCt
                    } else {
                        Tok::Open
                    }
                }
                b')' => {
                    self.bump();
                    Tok::Close
                }
                b'[' => {
                    self.bump();
                    Tok::LBrack
                }
                b']' => {
                    self.bump();
                    Tok::RBrack
                }
                b'|' => {
                    self.bump();
                    Tok::Bar
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b'!' => return Err(self.err(line, col, "cut (!) is not supported")),
                b';' => return Err(self.err(line, col, "disjunction (;) is not supported")),
                b'{' | b'}' => return Err(self.err(line, col, "curly terms are not supported")),
                b'"' => return Err(self.err(line, col, "double-quoted strings are not supported")),
                b'\'' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            Some(b'\'') if self.peek(0) == Some(b'\'') => {
                                self.bump();
                                s.push('\'');
                            }
                            Some(b'\'') => break,
                            Some(b'\\') => match self.bump() {
                                Some(b'n') => s.push('\n'),
                                Some(b't') => s.push('\t'),
                                Some(b'\\') => s.push('\\'),
                                Some(b'\'') => s.push('\''),
                                _ => return Err(self.err(line, col, "bad escape in quoted atom")),
                            },
                            Some(c) => s.push(c as char),
                            None => return Err(self.err(line, col, "unterminated quoted atom")),
                        }
                    }
                    Tok::Quoted(s)
                }
                b'0'..=b'9' => {
                    let mut s = String::new();
                    while let Some(d) = self.peek(0).filter(u8::is_ascii_digit) {
                        s.push(d as char);
                        self.bump();
                    }
                    if self.peek(0) == Some(b'.')
                        && self.peek(1).is_some_and(|d| d.is_ascii_digit())
                    {
                        s.push('.');
                        self.bump();
                        while let Some(d) = self.peek(0).filter(u8::is_ascii_digit) {
                            s.push(d as char);
                            self.bump();
                        }
                    }
                    Tok::Num(s)
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut s = String::new();
                    while let Some(d) = self
                        .peek(0)
                        .filter(|d| d.is_ascii_alphanumeric() || *d == b'_')
                    {
                        s.push(d as char);
                        self.bump();
                    }
                    if c.is_ascii_uppercase() || c == b'_' {
                        Tok::Var(s)
                    } else {
                        Tok::Atom(s)
                    }
                }
                b'.' if self
                    .peek(1)
                    .is_none_or(|d| d.is_ascii_whitespace() || d == b'%') =>
                {
                    self.bump();
                    Tok::End
                }
                c if SYMBOL_CHARS.as_bytes().contains(&c) => {
                    let mut s = String::new();
                    while let Some(d) = self.peek(0).filter(|d| SYMBOL_CHARS.as_bytes().contains(d))
                    {
                        s.push(d as char);
                        self.bump();
                    }
                    Tok::Atom(s)
                }
                other => {
                    return Err(self.err(
                        line,
                        col,
                        format!("unexpected character {:?}", other as char),
                    ))
                }
            };
            out.push(Token { tok, line, col });
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer {
        src: src.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    }
    .tokens()
}

fn infix_op(name: &str) -> Option<(u32, u32, u32)> {
    // (priority, left max, right max)
    match name {
        ":-" => Some((1200, 1199, 1199)),
        "=" => Some((700, 699, 699)),
        _ => None,
    }
}

struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    names: HashMap<String, Term>,
    supply: &'s mut VarSupply,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, t: &Token, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: t.line,
            col: t.col,
            message: msg.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let t = self.next();
        if t.tok == want {
            Ok(())
        } else {
            Err(self.err_at(&t, format!("expected {what}, found {}", describe(&t.tok))))
        }
    }

    fn starts_term(tok: &Tok) -> bool {
        matches!(
            tok,
            Tok::Atom(_) | Tok::Quoted(_) | Tok::Var(_) | Tok::Num(_) | Tok::Open | Tok::LBrack
        )
    }

    fn parse(&mut self, max: u32) -> Result<Term, ParseError> {
        let (mut left, mut left_prec) = self.primary()?;
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Comma if max >= 1000 => {
                    if left_prec > 999 {
                        return Err(self.err_at(&t, "operator priority clash"));
                    }
                    self.next();
                    let right = self.parse(1000)?;
                    left = Term::app(CONJ, vec![left, right]);
                    left_prec = 1000;
                }
                Tok::Atom(name) => {
                    if ARITHMETIC.contains(&name.as_str()) {
                        return Err(
                            self.err_at(&t, format!("arithmetic ({name}) is not supported"))
                        );
                    }
                    if name == "->" {
                        return Err(self.err_at(&t, "if-then-else is not supported"));
                    }
                    let Some((prec, lmax, rmax)) = infix_op(name) else {
                        return Ok(left);
                    };
                    if prec > max {
                        return Ok(left);
                    }
                    if left_prec > lmax {
                        return Err(self.err_at(&t, "operator priority clash"));
                    }
                    let name = name.clone();
                    self.next();
                    let right = self.parse(rmax)?;
                    left = Term::app(&name, vec![left, right]);
                    left_prec = prec;
                }
                _ => return Ok(left),
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = vec![self.parse(999)?];
        loop {
            let t = self.next();
            match &t.tok {
                Tok::Comma => args.push(self.parse(999)?),
                Tok::Close => return Ok(args),
                other => {
                    return Err(
                        self.err_at(&t, format!("expected , or ), found {}", describe(other)))
                    )
                }
            }
        }
    }

    fn primary(&mut self) -> Result<(Term, u32), ParseError> {
        let t = self.next();
        match t.tok.clone() {
            Tok::Var(name) => {
                if name == "_" {
                    return Ok((Term::Var(self.supply.fresh_named("_")), 0));
                }
                let supply = &mut *self.supply;
                let v = self
                    .names
                    .entry(name.clone())
                    .or_insert_with(|| Term::Var(supply.fresh_named(&name)))
                    .clone();
                Ok((v, 0))
            }
            Tok::Num(n) => Ok((Term::constant(&n), 0)),
            Tok::Open => {
                let inner = self.parse(1200)?;
                self.expect(Tok::Close, ")")?;
                Ok((inner, 0))
            }
            Tok::LBrack => {
                if self.peek().tok == Tok::RBrack {
                    self.next();
                    return self.after_name(NIL.to_string());
                }
                let mut items = vec![self.parse(999)?];
                let mut tail = None;
                loop {
                    let s = self.next();
                    match &s.tok {
                        Tok::Comma => items.push(self.parse(999)?),
                        Tok::Bar => {
                            tail = Some(self.parse(999)?);
                            self.expect(Tok::RBrack, "]")?;
                            break;
                        }
                        Tok::RBrack => break,
                        other => {
                            return Err(self.err_at(
                                &s,
                                format!("expected , | or ], found {}", describe(other)),
                            ))
                        }
                    }
                }
                Ok((Term::list(items, tail), 0))
            }
            Tok::Atom(name) | Tok::Quoted(name) => {
                let quoted = matches!(t.tok, Tok::Quoted(_));
                if !quoted && ARITHMETIC.contains(&name.as_str()) && self.peek().tok != Tok::OpenCt
                {
                    return Err(self.err_at(&t, format!("arithmetic ({name}) is not supported")));
                }
                if !quoted
                    && name == NEG
                    && self.peek().tok != Tok::OpenCt
                    && Self::starts_term(&self.peek().tok)
                {
                    let arg = self.parse(900)?;
                    return Ok((Term::app(NEG, vec![arg]), 900));
                }
                self.after_name(name)
            }
            other => Err(self.err_at(&t, format!("unexpected {}", describe(&other)))),
        }
    }

    fn after_name(&mut self, name: String) -> Result<(Term, u32), ParseError> {
        if self.peek().tok == Tok::OpenCt {
            self.next();
            let args = self.args()?;
            return Ok((Term::app(&name, args), 0));
        }
        Ok((Term::constant(&name), 0))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Atom(s) | Tok::Quoted(s) => format!("atom {s:?}"),
        Tok::Var(s) => format!("variable {s}"),
        Tok::Num(s) => format!("number {s}"),
        Tok::Open | Tok::OpenCt => "(".into(),
        Tok::Close => ")".into(),
        Tok::LBrack => "[".into(),
        Tok::RBrack => "]".into(),
        Tok::Bar => "|".into(),
        Tok::Comma => ",".into(),
        Tok::End => "end of clause".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn body_literals(t: &Term, at: &Token, out: &mut Vec<Literal>) -> Result<(), ParseError> {
    match t {
        Term::App(f, args) if &**f == CONJ && args.len() == 2 => {
            body_literals(&args[0], at, out)?;
            body_literals(&args[1], at, out)
        }
        Term::Var(v) => Err(ParseError {
            line: at.line,
            col: at.col,
            message: format!("variable {} used as a goal", v.name),
        }),
        _ => {
            let lit = Literal::from_term(t);
            if lit.atom.is_var() {
                return Err(ParseError {
                    line: at.line,
                    col: at.col,
                    message: "negation of a variable goal".into(),
                });
            }
            out.push(lit);
            Ok(())
        }
    }
}

/// Parses a program. Variables are numbered from `supply`.
pub fn parse_program_with(src: &str, supply: &mut VarSupply) -> Result<Program, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names: HashMap::new(),
        supply,
    };
    let mut clauses = Vec::new();
    while p.peek().tok != Tok::Eof {
        p.names.clear();
        let start = p.peek().clone();
        if start.tok == Tok::Atom(":-".into()) {
            return Err(p.err_at(&start, "directives are not supported"));
        }
        let t = p.parse(1200)?;
        let end = p.next();
        if end.tok != Tok::End {
            return Err(p.err_at(
                &end,
                format!("expected end of clause, found {}", describe(&end.tok)),
            ));
        }
        let (head, body) = match &t {
            Term::App(f, args) if &**f == ":-" && args.len() == 2 => {
                let mut lits = Vec::new();
                body_literals(&args[1], &start, &mut lits)?;
                (args[0].clone(), lits)
            }
            _ => (t.clone(), vec![]),
        };
        if head.is_var() {
            return Err(p.err_at(&start, "clause head is a variable"));
        }
        if head.is_functor(NEG, 1) || head.is_functor(CONJ, 2) {
            return Err(p.err_at(
                &start,
                format!(
                    "cannot define {}",
                    crate::program::PredKey::of(&head).unwrap()
                ),
            ));
        }
        clauses.push(Clause { head, body });
    }
    Ok(Program::new(clauses))
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    parse_program_with(src, &mut VarSupply::new())
}

/// Parses a single term (no trailing `.` required).
pub fn parse_term_with(src: &str, supply: &mut VarSupply) -> Result<Term, ParseError> {
    parse_terms_with(src, supply).map(|(t, _)| t)
}

fn parse_terms_with(src: &str, supply: &mut VarSupply) -> Result<(Term, Token), ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names: HashMap::new(),
        supply,
    };
    let start = p.peek().clone();
    let t = p.parse(1200)?;
    let mut end = p.next();
    if end.tok == Tok::End {
        end = p.next();
    }
    if end.tok != Tok::Eof {
        return Err(p.err_at(&end, format!("unexpected {}", describe(&end.tok))));
    }
    Ok((t, start))
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut s = VarSupply::new();
    parse_term_with(src, &mut s)
}

/// Parses a goal such as `p(X), \+ q(X)`; variables are drawn from `supply`.
pub fn parse_query_with(src: &str, supply: &mut VarSupply) -> Result<Query, ParseError> {
    let (t, start) = parse_terms_with(src, supply)?;
    let mut lits = Vec::new();
    body_literals(&t, &start, &mut lits)?;
    Ok(lits)
}

/// Parses a query whose variables are guaranteed not to clash with `program`.
pub fn parse_query_for(program: &Program, src: &str) -> Result<Query, ParseError> {
    let mut s = VarSupply::new();
    program
        .clauses()
        .iter()
        .flat_map(|c| c.terms())
        .for_each(|t| s.reserve(t));
    parse_query_with(src, &mut s)
}

// ---------------------------------------------------------------- printing

fn needs_quote(name: &str) -> bool {
    if name.is_empty() {
        return true;
    }
    if name == NIL {
        return false;
    }
    let b = name.as_bytes();
    if b[0].is_ascii_lowercase() {
        return !b.iter().all(|c| c.is_ascii_alphanumeric() || *c == b'_');
    }
    if b[0].is_ascii_digit() {
        let mut seen_dot = false;
        for (i, c) in b.iter().enumerate() {
            if *c == b'.' && !seen_dot && i > 0 && i + 1 < b.len() {
                seen_dot = true;
            } else if !c.is_ascii_digit() {
                return true;
            }
        }
        return false;
    }
    !b.iter().all(|c| SYMBOL_CHARS.as_bytes().contains(c))
}

pub fn quote_atom(name: &str) -> String {
    if needs_quote(name) {
        let mut s = String::from("'");
        for ch in name.chars() {
            match ch {
                '\'' => s.push_str("\\'"),
                '\\' => s.push_str("\\\\"),
                '\n' => s.push_str("\\n"),
                '\t' => s.push_str("\\t"),
                c => s.push(c),
            }
        }
        s.push('\'');
        s
    } else {
        name.to_string()
    }
}

fn op_info(t: &Term) -> Option<(u32, u32, u32)> {
    match t {
        Term::App(f, args) if args.len() == 2 => match &**f {
            "," => Some((1000, 999, 1000)),
            ":-" => Some((1200, 1199, 1199)),
            "=" => Some((700, 699, 699)),
            _ => None,
        },
        _ => None,
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, max: u32) -> fmt::Result {
    match t {
        Term::Var(v) => {
            if &*v.name == "_" {
                write!(f, "_G{}", v.id)
            } else {
                write!(f, "{}", v.name)
            }
        }
        Term::App(name, args) => {
            if let Some((prec, l, r)) = op_info(t) {
                let paren = prec > max;
                if paren {
                    f.write_str("(")?;
                }
                write_term(f, &args[0], l)?;
                if &**name == "," {
                    f.write_str(", ")?;
                } else {
                    write!(f, " {name} ")?;
                }
                write_term(f, &args[1], r)?;
                if paren {
                    f.write_str(")")?;
                }
                return Ok(());
            }
            if &**name == NEG && args.len() == 1 {
                let paren = 900 > max;
                if paren {
                    f.write_str("(")?;
                }
                f.write_str("\\+ ")?;
                write_term(f, &args[0], 900)?;
                if paren {
                    f.write_str(")")?;
                }
                return Ok(());
            }
            if &**name == CONS && args.len() == 2 {
                f.write_str("[")?;
                write_term(f, &args[0], 999)?;
                let mut tail = &args[1];
                loop {
                    match tail {
                        Term::App(g, xs) if &**g == CONS && xs.len() == 2 => {
                            f.write_str(", ")?;
                            write_term(f, &xs[0], 999)?;
                            tail = &xs[1];
                        }
                        Term::App(g, xs) if &**g == NIL && xs.is_empty() => break,
                        other => {
                            f.write_str("|")?;
                            write_term(f, other, 999)?;
                            break;
                        }
                    }
                }
                return f.write_str("]");
            }
            let q = quote_atom(name);
            if args.is_empty() {
                let is_op = matches!(&**name, ":-" | "," | "=" | "\\+");
                if is_op && max < 1201 {
                    return write!(f, "({q})");
                }
                return f.write_str(&q);
            }
            write!(f, "{q}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_term(f, a, 999)?;
            }
            f.write_str(")")
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, 999)
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write_term(f, &self.atom, 999)
        } else {
            f.write_str("\\+ ")?;
            write_term(f, &self.atom, 900)
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.head, 1199)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        f.write_str(".")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.clauses() {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

pub fn format_query(q: &[Literal]) -> String {
    q.iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
