//! Detection of previously fact-checked claims in social media posts.
//!
//! The pipeline lexes a noisy post ([`lexer`]), normalizes it with one of
//! the [`preprocess`] strategies, condenses it into a short query
//! ([`summarize`]), runs the query against a fact-check retriever
//! ([`retrieve`]) and scores the outcome ([`eval`]). [`dataset`] handles the
//! claim/summary pair corpus and [`pipeline`] wires everything together.

pub mod dataset;
pub mod eval;
pub mod lexer;
pub mod pipeline;
pub mod preprocess;
pub mod retrieve;
pub mod summarize;

pub use lexer::{detokenize, tokenize, Token, TokenKind, TokenStream};
pub use preprocess::{HandleMap, Strategy};
