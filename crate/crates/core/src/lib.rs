//! Termination analysis of logic programs and of meta-interpreters run over
//! encoded programs.

pub mod catalog;
pub mod classify;
pub mod corpus;
pub mod encode;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ordering;
pub mod program;
pub mod semantics;
pub mod syntax;
pub mod term;

pub use error::{Error, Result};
