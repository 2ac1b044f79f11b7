//! Bounded model checking for HORef, a higher-order call-by-value language
//! with global references.
//!
//! Programs are parsed ([`parser`]), translated into formulas in SSA form
//! ([`translate`], [`pointsto`]), emitted as SMT-LIB 2 ([`formula`]) and
//! discharged by an external solver ([`checker`]). [`interp`] holds the
//! reference semantics used as a test oracle.

pub mod bench;
pub mod checker;
pub mod formula;
pub mod interp;
pub mod parser;
pub mod pointsto;
pub mod syntax;
pub mod translate;
