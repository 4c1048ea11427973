//! Terms, schema types, ABoxes and the KB file format.

mod abox;
mod parse;
mod schema;
mod term;

pub use abox::{adom, alph, ABox, Assertion};
pub use parse::{parse_document, parse_kb, parse_query, KbDocument, KbError, ParseError, ProblemSpec, ValidationError};
pub use schema::{validate_tbox, Axiom, BasicConcept, MalformedAxiom, RawAxiom, RoleExpr, SimpleJoinAxiom, TBox};
pub use term::{Symbol, Term};
